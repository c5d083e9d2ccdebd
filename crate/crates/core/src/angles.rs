//! Angle statistics of the four order-k structures.
//!
//! Every angle of Del, Vor, Bri and Igl tilings is an inscribed angle of some
//! circle event or its supplement. The depth tables collect, per depth `ℓ`,
//! the smallest inscribed angle (`alpha`) and the smallest supplement
//! (`beta`); extreme angles of each structure then follow from a few table
//! entries. Brillouin tessellations of non-generic sets are handled by
//! listing the sector angles at each vertex directly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::events::{CircleEvent, EventSet};
use crate::exactgeom::{angle_at, point_sum, rat, ExactPoint};

/// Slack for comparisons between computed angles.
pub const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnglesError {
    #[error("depth {0} has no contributing angle in the window")]
    DepthUnpopulated(usize),
    #[error("{structure} at order {k} is undefined for events with four or more cocircular sites")]
    NonGenericUnsupported { structure: Structure, k: usize },
    #[error("order {k} outside the usable range 1..={max}")]
    OrderOutOfRange { k: usize, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Structure {
    Del,
    Vor,
    Bri,
    Igl,
}

impl Structure {
    pub const ALL: [Structure; 4] = [Structure::Del, Structure::Vor, Structure::Bri, Structure::Igl];
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Del => "del",
            Structure::Vor => "vor",
            Structure::Bri => "bri",
            Structure::Igl => "igl",
        })
    }
}

impl FromStr for Structure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "del" => Ok(Structure::Del),
            "vor" => Ok(Structure::Vor),
            "bri" => Ok(Structure::Bri),
            "igl" => Ok(Structure::Igl),
            other => Err(format!("unknown structure {other:?} (expected del, vor, bri or igl)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum AngleKind {
    Direct,
    Supplementary,
}

impl fmt::Display for AngleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AngleKind::Direct => "direct",
            AngleKind::Supplementary => "supplementary",
        })
    }
}

/// One angle occurrence in a structure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleSample {
    pub value: f64,
    pub depth: usize,
    pub kind: AngleKind,
    pub structure: Structure,
    pub order: usize,
    /// Index into `EventSet::events`.
    pub event: usize,
}

/// Minimal inscribed angles and supplements per depth.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthTables {
    pub alpha: Vec<Option<f64>>,
    pub beta: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub l_max: usize,
}

impl DepthTables {
    pub fn alpha(&self, l: usize) -> Result<f64, AnglesError> {
        self.alpha.get(l).copied().flatten().ok_or(AnglesError::DepthUnpopulated(l))
    }

    pub fn beta(&self, l: usize) -> Result<f64, AnglesError> {
        self.beta.get(l).copied().flatten().ok_or(AnglesError::DepthUnpopulated(l))
    }
}

/// All inscribed angles of an event: for every triangle of on-sites, its
/// three angles.
pub fn inscribed_angles(es: &EventSet, e: &CircleEvent) -> Vec<f64> {
    let on = &e.on;
    let mut out = Vec::with_capacity(on.len() * on.len() * on.len() / 2);
    for i in 0..on.len() {
        for j in i + 1..on.len() {
            for m in j + 1..on.len() {
                let (a, b, c) = (on[i], on[j], on[m]);
                for (x, apex, y) in [(b, a, c), (a, b, c), (a, c, b)] {
                    out.push(es.site_angle(x, apex, y).expect("on-circle sites are never collinear"));
                }
            }
        }
    }
    out
}

fn check_order(es: &EventSet, k: usize) -> Result<(), AnglesError> {
    if k == 0 || k > es.k_max_usable {
        return Err(AnglesError::OrderOutOfRange { k, max: es.k_max_usable });
    }
    Ok(())
}

/// Depth tables for `ℓ = 0..=l_max`.
///
/// An event of depth `p` with `n + 1` sites on its circle contributes to every
/// depth in `p..=p + n - 2`.
pub fn depth_tables(es: &EventSet, l_max: usize) -> Result<DepthTables, AnglesError> {
    if l_max + 1 > es.k_max_usable {
        return Err(AnglesError::OrderOutOfRange { k: l_max + 1, max: es.k_max_usable });
    }
    let len = l_max + 1;
    let empty = || (vec![f64::INFINITY; len], vec![f64::INFINITY; len], vec![0usize; len]);
    let (alpha, beta, counts) = es
        .events
        .par_iter()
        .filter(|e| e.depth_p <= l_max)
        .fold(empty, |(mut a, mut b, mut c), e| {
            let angles = inscribed_angles(es, e);
            let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = angles.iter().copied().fold(0.0, f64::max);
            let top = (e.depth_p + e.n() - 2).min(l_max);
            for l in e.depth_p..=top {
                a[l] = a[l].min(lo);
                b[l] = b[l].min(PI - hi);
                c[l] += angles.len();
            }
            (a, b, c)
        })
        .reduce(empty, |(mut a, mut b, mut c), (a2, b2, c2)| {
            for l in 0..len {
                a[l] = a[l].min(a2[l]);
                b[l] = b[l].min(b2[l]);
                c[l] += c2[l];
            }
            (a, b, c)
        });
    let opt = |v: Vec<f64>| -> Vec<Option<f64>> { v.into_iter().map(|x| x.is_finite().then_some(x)).collect() };
    let tables = DepthTables { alpha: opt(alpha), beta: opt(beta), counts, l_max };
    if let Some(l) = tables.alpha.iter().position(Option::is_none) {
        return Err(AnglesError::DepthUnpopulated(l));
    }
    Ok(tables)
}

/// Placement of a generic event's angles: `(structure, order offset, kind,
/// multiplicity)` relative to the event depth `ℓ`.
const PLACEMENT: [(Structure, usize, AngleKind, usize); 10] = [
    (Structure::Del, 1, AngleKind::Direct, 1),
    (Structure::Del, 2, AngleKind::Direct, 1),
    (Structure::Igl, 1, AngleKind::Direct, 1),
    (Structure::Igl, 3, AngleKind::Direct, 1),
    (Structure::Bri, 2, AngleKind::Direct, 2),
    (Structure::Vor, 1, AngleKind::Supplementary, 1),
    (Structure::Vor, 2, AngleKind::Supplementary, 1),
    (Structure::Bri, 1, AngleKind::Supplementary, 1),
    (Structure::Bri, 3, AngleKind::Supplementary, 1),
    (Structure::Igl, 2, AngleKind::Supplementary, 2),
];

/// Whether an event's center or dual tile appears in some order-`k`
/// structure: `p + 1 <= k <= p + n + 1` where `n + 1 = |on|`.
fn touches(e: &CircleEvent, k: usize) -> bool {
    e.depth_p < k && k <= e.depth_p + e.n() + 1
}

/// Whether every event relevant to order `k` is generic.
pub fn order_is_generic(es: &EventSet, k: usize) -> bool {
    es.events.iter().filter(|e| touches(e, k)).all(CircleEvent::is_generic)
}

/// All angles of structure `m` at order `k`.
///
/// Generic events use the fixed placement; Brillouin tessellations with
/// degenerate events use the sector listing of [`brillouin_vertex_angles`].
pub fn structure_angles(es: &EventSet, m: Structure, k: usize) -> Result<Vec<AngleSample>, AnglesError> {
    check_order(es, k)?;
    if !order_is_generic(es, k) {
        if m != Structure::Bri {
            return Err(AnglesError::NonGenericUnsupported { structure: m, k });
        }
        return brillouin_samples(es, k);
    }
    let mut out = Vec::new();
    for (idx, e) in es.events.iter().enumerate() {
        for &(s, off, kind, mult) in &PLACEMENT {
            if s != m || e.depth_p + off != k {
                continue;
            }
            for v in inscribed_angles(es, e) {
                let value = match kind {
                    AngleKind::Direct => v,
                    AngleKind::Supplementary => PI - v,
                };
                for _ in 0..mult {
                    out.push(AngleSample { value, depth: e.depth_p, kind, structure: m, order: k, event: idx });
                }
            }
        }
    }
    Ok(out)
}

fn brillouin_samples(es: &EventSet, k: usize) -> Result<Vec<AngleSample>, AnglesError> {
    let mut out = Vec::new();
    for (idx, e) in es.events.iter().enumerate() {
        if e.depth_p + 1 > k || k > e.depth_p + e.n() + 1 {
            continue;
        }
        for (value, _) in brillouin_vertex_angles(es, e, k)? {
            let kind = if k == e.depth_p + 1 || k == e.depth_p + e.n() + 1 {
                AngleKind::Supplementary
            } else {
                AngleKind::Direct
            };
            out.push(AngleSample { value, depth: e.depth_p, kind, structure: Structure::Bri, order: k, event: idx });
        }
    }
    Ok(out)
}

/// Sector angles of the order-`k` Brillouin zones meeting at an event's
/// center, with the site owning each zone.
///
/// Relabel the on-sites counterclockwise as `a = a_0, a_1, …, a_n`. The zone
/// of `a` of order `p + 1` or `p + n + 1` has angle `π − ∠a_n a a_1`; for
/// `p + 2 <= k <= p + n` the zones of `a` are the two sectors
/// `∠a_i a a_{i+1}` with `i = k − p − 1` and `i = p + n + 1 − k`.
pub fn brillouin_vertex_angles(es: &EventSet, e: &CircleEvent, k: usize) -> Result<Vec<(f64, usize)>, AnglesError> {
    let (p, n) = (e.depth_p, e.n());
    if k < p + 1 || k > p + n + 1 {
        return Err(AnglesError::OrderOutOfRange { k, max: p + n + 1 });
    }
    let len = e.on.len();
    let mut out = Vec::new();
    for pos in 0..len {
        let a = e.on[pos];
        let at = |i: usize| e.on[(pos + i) % len];
        let sector = |i: usize| es.site_angle(at(i), a, at(i + 1)).expect("on-circle sites are never collinear");
        if k == p + 1 || k == p + n + 1 {
            out.push((PI - es.site_angle(at(n), a, at(1)).expect("on-circle sites are never collinear"), a));
        } else {
            out.push((sector(k - p - 1), a));
            out.push((sector(p + n + 1 - k), a));
        }
    }
    Ok(out)
}

/// Angles of the `k`-th Brillouin zone of `site`, over the events of `es`
/// that have the site on their circle.
pub fn zone_angles(es: &EventSet, site: usize, k: usize) -> Result<Vec<f64>, AnglesError> {
    check_order(es, k)?;
    let mut out = Vec::new();
    for e in es.events.iter().filter(|e| e.on.contains(&site)) {
        if k < e.depth_p + 1 || k > e.depth_p + e.n() + 1 {
            continue;
        }
        out.extend(brillouin_vertex_angles(es, e, k)?.into_iter().filter(|&(_, o)| o == site).map(|(v, _)| v));
    }
    Ok(out)
}

/// Window extremes of one structure at one order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extremes {
    pub alpha_min: Option<f64>,
    pub omega_max: Option<f64>,
}

fn min_of(tables: &DepthTables, terms: &[(isize, bool)]) -> Result<f64, AnglesError> {
    let mut v = f64::INFINITY;
    for &(l, use_beta) in terms {
        if l < 0 {
            continue;
        }
        let l = l as usize;
        v = v.min(if use_beta { tables.beta(l)? } else { tables.alpha(l)? });
    }
    Ok(v)
}

/// Smallest and largest angle of structure `m` at order `k`.
///
/// Generic orders read the depth tables; degenerate orders are supported for
/// Brillouin tessellations (both extremes) and for the largest Iglesias
/// angle, which is the supplement of the smallest Brillouin angle.
pub fn extreme_angles(tables: &DepthTables, es: &EventSet, m: Structure, k: usize) -> Result<Extremes, AnglesError> {
    check_order(es, k)?;
    let k = k as isize;
    if order_is_generic(es, k as usize) {
        let a = |l: isize| (l, false);
        let b = |l: isize| (l, true);
        let alpha_del = min_of(tables, &[a(k - 2), a(k - 1)])?;
        let alpha_igl = min_of(tables, &[a(k - 3), b(k - 2), a(k - 1)])?;
        let alpha_bri = min_of(tables, &[b(k - 3), a(k - 2), b(k - 1)])?;
        let beta_del = min_of(tables, &[b(k - 2), b(k - 1)])?;
        let (alpha, omega) = match m {
            Structure::Del => (alpha_del, PI - beta_del),
            Structure::Vor => (beta_del, PI - alpha_del),
            Structure::Igl => (alpha_igl, PI - alpha_bri),
            Structure::Bri => (alpha_bri, PI - alpha_igl),
        };
        return Ok(Extremes { alpha_min: Some(alpha), omega_max: Some(omega) });
    }
    let k = k as usize;
    match m {
        Structure::Del | Structure::Vor => Err(AnglesError::NonGenericUnsupported { structure: m, k }),
        Structure::Bri | Structure::Igl => {
            let samples = brillouin_samples(es, k)?;
            if samples.is_empty() {
                return Err(AnglesError::DepthUnpopulated(k - 1));
            }
            let lo = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|s| s.value).fold(0.0, f64::max);
            Ok(if m == Structure::Bri {
                Extremes { alpha_min: Some(lo), omega_max: Some(hi) }
            } else {
                Extremes { alpha_min: None, omega_max: Some(PI - lo) }
            })
        }
    }
}

/// One row of an extreme-angle table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremeRow {
    pub structure: Structure,
    pub k: usize,
    pub alpha_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub status: String,
}

/// Outcome of one monotonicity family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub generic: bool,
    pub rows: Vec<ExtremeRow>,
    /// Guaranteed inequalities; a failure means a bug.
    pub checks: Vec<CheckResult>,
    /// Changes in directions the theory does not constrain.
    pub observations: Vec<String>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, m: Structure, k: usize) -> Option<&ExtremeRow> {
        self.rows.iter().find(|r| r.structure == m && r.k == k)
    }

    /// CSV with columns `structure,k,alpha_min,omega_max,status`.
    pub fn to_csv(&self, structures: &[Structure]) -> String {
        let mut s = String::from("structure,k,alpha_min,omega_max,status\n");
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
        for r in self.rows.iter().filter(|r| structures.contains(&r.structure)) {
            s.push_str(&format!("{},{},{},{},{}\n", r.structure, r.k, fmt(r.alpha_min), fmt(r.omega_max), r.status));
        }
        s
    }
}

/// Extreme angles over `k_range` and the monotonicity checks they imply.
///
/// Generic sets: smallest angles of Del, Igl, Bri never increase and largest
/// angles of Vor, Bri, Igl never decrease. Degenerate sets: only the Bri
/// minimum and Igl maximum are checked.
pub fn monotonicity_report(es: &EventSet, k_range: std::ops::RangeInclusive<usize>) -> Result<MonotonicityReport, AnglesError> {
    let k_hi = *k_range.end();
    let tables = depth_tables(es, k_hi - 1)?;
    let generic = k_range.clone().all(|k| order_is_generic(es, k));
    let mut rows = Vec::new();
    for k in k_range.clone() {
        for m in Structure::ALL {
            let (ext, status) = match extreme_angles(&tables, es, m, k) {
                Ok(x) => (x, "window"),
                Err(AnglesError::NonGenericUnsupported { .. }) => (Extremes { alpha_min: None, omega_max: None }, "unsupported"),
                Err(e) => return Err(e),
            };
            rows.push(ExtremeRow { structure: m, k, alpha_min: ext.alpha_min, omega_max: ext.omega_max, status: status.into() });
        }
    }
    let mut checks = Vec::new();
    let mut flagged: Vec<(Structure, usize, bool)> = Vec::new();
    let mut family = |m: Structure, alpha: bool| {
        let s = series(&rows, m, alpha);
        let mut bad = Vec::new();
        for w in s.windows(2) {
            if let ((k0, Some(v0)), (_, Some(v1))) = (w[0], w[1]) {
                let ok = if alpha { v1 <= v0 + ANGLE_SLACK } else { v1 >= v0 - ANGLE_SLACK };
                if !ok {
                    bad.push(format!("k={k0}->{}: {v0:.15} then {v1:.15}", k0 + 1));
                    flagged.push((m, k0 + 1, alpha));
                }
            }
        }
        let name = format!("{} of {m} {}", if alpha { "min" } else { "max" }, if alpha { "non-increasing" } else { "non-decreasing" });
        checks.push(CheckResult { name, passed: bad.is_empty(), detail: bad.join("; ") });
    };
    if generic {
        for m in [Structure::Del, Structure::Igl, Structure::Bri] {
            family(m, true);
        }
        for m in [Structure::Vor, Structure::Bri, Structure::Igl] {
            family(m, false);
        }
    } else {
        family(Structure::Bri, true);
        family(Structure::Igl, false);
    }
    for (m, k, _) in &flagged {
        if let Some(r) = rows.iter_mut().find(|r| r.structure == *m && r.k == *k) {
            r.status = "violation".into();
        }
    }
    let mut observations = Vec::new();
    for (m, alpha, what) in [(Structure::Vor, true, "min of vor increases"), (Structure::Del, false, "max of del decreases")] {
        for w in series(&rows, m, alpha).windows(2) {
            if let ((k0, Some(v0)), (_, Some(v1))) = (w[0], w[1]) {
                let moved = if alpha { v1 > v0 + ANGLE_SLACK } else { v1 < v0 - ANGLE_SLACK };
                if moved {
                    observations.push(format!("{what} at k={k0}->{}: {v0:.15} then {v1:.15}", k0 + 1));
                }
            }
        }
    }
    Ok(MonotonicityReport { generic, rows, checks, observations })
}

fn series(rows: &[ExtremeRow], m: Structure, alpha: bool) -> Vec<(usize, Option<f64>)> {
    rows.iter()
        .filter(|r| r.structure == m)
        .map(|r| (r.k, if alpha { r.alpha_min } else { r.omega_max }))
        .collect()
}

/// Smallest corner angle of the order-`k` Delaunay tiles of a possibly
/// degenerate set.
///
/// The tile dual to an event center with `p + 1 <= k <= p + n` has vertices
/// `(u + a_i + … + a_{i+m-1}) / k` over cyclic runs of `m = k − p`
/// consecutive on-sites, `u` being the sum of the sites inside.
pub fn degenerate_delaunay_min_angle(es: &EventSet, k: usize) -> Result<f64, AnglesError> {
    check_order(es, k)?;
    let min = es
        .events
        .par_iter()
        .filter(|e| e.depth_p < k && k <= e.depth_p + e.n())
        .map(|e| {
            let len = e.on.len();
            let m = k - e.depth_p;
            let u = point_sum(e.inside.iter().map(|&i| es.site(i)));
            let inv = rat(1, k as i64);
            let verts: Vec<ExactPoint> = (0..len)
                .map(|i| {
                    let run = point_sum((0..m).map(|t| es.site(e.on[(i + t) % len])));
                    (&u + &run).scale(&inv)
                })
                .collect();
            (0..len)
                .map(|i| {
                    let prev = &verts[(i + len - 1) % len];
                    let next = &verts[(i + 1) % len];
                    angle_at(prev, &verts[i], next).expect("tile corners are never collinear")
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if min.is_finite() {
        Ok(min)
    } else {
        Err(AnglesError::DepthUnpopulated(k - 1))
    }
}

/// Angle samples as CSV with columns `structure,k,depth,kind,value`.
pub fn samples_to_csv(samples: &[AngleSample]) -> String {
    let mut s = String::from("structure,k,depth,kind,value\n");
    for a in samples {
        s.push_str(&format!("{},{},{},{},{:.17e}\n", a.structure, a.order, a.depth, a.kind, a.value));
    }
    s
}
