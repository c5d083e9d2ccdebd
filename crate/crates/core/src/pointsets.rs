//! Input point sets with windowing metadata.
//!
//! An infinite set is represented by a finite patch: `outer_window` is the
//! region where the patch agrees with the infinite set, and `inner_window` is
//! the region whose circle events are trusted. Random generators are seeded
//! `ChaCha8Rng` streams, so a (generator, parameters, seed) triple always
//! reproduces the same set.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{self, CircleEvent, EnumerateOptions, EventsError};
use crate::exactgeom::{rat, ExactPoint};

/// Regeneration attempts before a generator gives up on genericity.
pub const RETRY_BUDGET: usize = 16;

/// Depth up to which generators scan for cocircular events.
pub const GENERICITY_DEPTH: usize = 31;

/// Random coordinates live on the grid `2^-GRID_BITS · ℤ`.
pub const GRID_BITS: u32 = 32;

#[derive(Debug, Error)]
pub enum PointSetError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no generic set found after {attempts} attempts")]
    GenericityFailure { attempts: usize },
    #[error("malformed point-set file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Events(#[from] EventsError),
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]` with rational corners.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: BigRational,
    pub y0: BigRational,
    pub x1: BigRational,
    pub y1: BigRational,
}

impl Rect {
    pub fn new(x0: BigRational, y0: BigRational, x1: BigRational, y1: BigRational) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn from_ints(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Rect::new(rat(x0, 1), rat(y0, 1), rat(x1, 1), rat(y1, 1))
    }

    pub fn unit() -> Self {
        Rect::from_ints(0, 0, 1, 1)
    }

    pub fn contains_closed(&self, p: &ExactPoint) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }

    /// Membership in `[x0, x1) × [y0, y1)`.
    pub fn contains_half_open(&self, p: &ExactPoint) -> bool {
        self.x0 <= p.x && p.x < self.x1 && self.y0 <= p.y && p.y < self.y1
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.x0 <= o.x0 && o.x1 <= self.x1 && self.y0 <= o.y0 && o.y1 <= self.y1
    }

    pub fn width(&self) -> BigRational {
        &self.x1 - &self.x0
    }

    pub fn height(&self) -> BigRational {
        &self.y1 - &self.y0
    }

    pub fn area(&self) -> BigRational {
        self.width() * self.height()
    }

    pub fn corners(&self) -> [&BigRational; 4] {
        [&self.x0, &self.y0, &self.x1, &self.y1]
    }

    pub fn to_f64(&self) -> [f64; 4] {
        let c = self.corners();
        [0, 1, 2, 3].map(|i| crate::exactgeom::rat_to_f64(c[i]))
    }
}

/// A finite point patch with its trusted regions.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedSet {
    pub points: Vec<ExactPoint>,
    pub inner_window: Rect,
    pub outer_window: Rect,
    pub tag: String,
    pub seed: Option<u64>,
    /// A genuinely finite set: events are not restricted by the windows.
    pub finite: bool,
}

impl WindowedSet {
    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), PointSetError> {
        if !self.outer_window.contains_rect(&self.inner_window) {
            return Err(PointSetError::Format(
                "inner window is not inside the outer window".into(),
            ));
        }
        if self.inner_window.x0 >= self.inner_window.x1 || self.inner_window.y0 >= self.inner_window.y1 {
            return Err(PointSetError::Format("empty inner window".into()));
        }
        let mut seen = HashSet::with_capacity(self.points.len());
        for p in &self.points {
            if !self.finite && !self.outer_window.contains_closed(p) {
                return Err(PointSetError::Format(format!("point {p} outside the outer window")));
            }
            if !seen.insert(p) {
                return Err(PointSetError::Format(format!("duplicate point {p}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> Result<String, PointSetError> {
        let file = PointSetFile {
            tag: self.tag.clone(),
            seed: self.seed,
            inner_window: rect_to_ints(&self.inner_window)?,
            outer_window: rect_to_ints(&self.outer_window)?,
            points: self
                .points
                .iter()
                .map(|p| {
                    let [xn, xd] = rat_to_pair(&p.x)?;
                    let [yn, yd] = rat_to_pair(&p.y)?;
                    Ok([xn, xd, yn, yd])
                })
                .collect::<Result<_, PointSetError>>()?,
            finite: self.finite,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self, PointSetError> {
        let file: PointSetFile = serde_json::from_str(s)?;
        let points = file
            .points
            .iter()
            .map(|&[xn, xd, yn, yd]| {
                Ok(ExactPoint::new(pair_to_rat(xn, xd)?, pair_to_rat(yn, yd)?))
            })
            .collect::<Result<Vec<_>, PointSetError>>()?;
        let set = WindowedSet {
            points,
            inner_window: ints_to_rect(&file.inner_window)?,
            outer_window: ints_to_rect(&file.outer_window)?,
            tag: file.tag,
            seed: file.seed,
            finite: file.finite,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<(), PointSetError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PointSetError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct PointSetFile {
    tag: String,
    seed: Option<u64>,
    inner_window: [i64; 8],
    outer_window: [i64; 8],
    points: Vec<[i64; 4]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    finite: bool,
}

fn rat_to_pair(r: &BigRational) -> Result<[i64; 2], PointSetError> {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => Ok([n, d]),
        _ => Err(PointSetError::Format(format!("rational {r} does not fit 64-bit pairs"))),
    }
}

fn pair_to_rat(n: i64, d: i64) -> Result<BigRational, PointSetError> {
    if d == 0 {
        return Err(PointSetError::Format("zero denominator".into()));
    }
    Ok(BigRational::new(n.into(), d.into()))
}

fn rect_to_ints(r: &Rect) -> Result<[i64; 8], PointSetError> {
    let mut out = [0i64; 8];
    for (i, c) in r.corners().iter().enumerate() {
        let [n, d] = rat_to_pair(c)?;
        out[2 * i] = n;
        out[2 * i + 1] = d;
    }
    Ok(out)
}

fn ints_to_rect(v: &[i64; 8]) -> Result<Rect, PointSetError> {
    Ok(Rect::new(
        pair_to_rat(v[0], v[1])?,
        pair_to_rat(v[2], v[3])?,
        pair_to_rat(v[4], v[5])?,
        pair_to_rat(v[6], v[7])?,
    ))
}

/// Result of a cocircularity scan.
#[derive(Clone, Debug)]
pub struct GenericityReport {
    pub is_generic: bool,
    /// Events with four or more sites on the circle.
    pub violations: Vec<CircleEvent>,
}

/// Scans the events with depth at most `depth_cap` for cocircular quadruples.
pub fn genericity_report(set: &WindowedSet, depth_cap: usize) -> Result<GenericityReport, EventsError> {
    if set.is_empty() {
        return Ok(GenericityReport { is_generic: true, violations: vec![] });
    }
    let es = events::enumerate_with(
        set,
        &EnumerateOptions { depth_cap, ..EnumerateOptions::default() },
    )?;
    let violations: Vec<CircleEvent> = es.events.into_iter().filter(|e| e.on.len() >= 4).collect();
    Ok(GenericityReport { is_generic: violations.is_empty(), violations })
}

/// Scan depth used by the generators: as deep as the window allows, up to
/// [`GENERICITY_DEPTH`].
fn scan_is_generic(set: &WindowedSet) -> Result<bool, EventsError> {
    let usable = events::k_max_usable(set, GENERICITY_DEPTH + 1)?;
    if usable == 0 {
        return Ok(true);
    }
    let cap = (usable - 1).min(GENERICITY_DEPTH);
    Ok(genericity_report(set, cap)?.is_generic)
}

fn centered_range(copies: usize) -> (i64, i64) {
    let lo = -(((copies as i64) - 1) / 2);
    (lo, lo + copies as i64)
}

fn check_copies(copies: usize, odd: bool) -> Result<(), PointSetError> {
    if copies < 3 {
        return Err(PointSetError::InvalidParams(format!("copies must be at least 3, got {copies}")));
    }
    if odd && copies.is_multiple_of(2) {
        return Err(PointSetError::InvalidParams(format!("copies must be odd, got {copies}")));
    }
    Ok(())
}

/// All integer points of a `copies × copies` block of unit squares.
///
/// The block is `[lo, lo + copies]²` with `lo = -⌊(copies − 1)/2⌋`, so the
/// central unit square `[0, 1]²` is the inner window.
pub fn integer_lattice(copies: usize) -> Result<WindowedSet, PointSetError> {
    check_copies(copies, false)?;
    let (lo, hi) = centered_range(copies);
    let mut points = Vec::with_capacity((copies + 1) * (copies + 1));
    for i in lo..=hi {
        for j in lo..=hi {
            points.push(ExactPoint::from_ints(i, j));
        }
    }
    Ok(WindowedSet {
        points,
        inner_window: Rect::unit(),
        outer_window: Rect::from_ints(lo, lo, hi, hi),
        tag: format!("zsquare copies={copies}"),
        seed: None,
        finite: false,
    })
}

/// Lattice with basis `(1, 0)` and `(q1, 1 + q2)`, clipped to the largest
/// axis-aligned rectangle it fully populates.
pub fn lattice_with_basis(copies: usize, q1: &BigRational, q2: &BigRational) -> Result<WindowedSet, PointSetError> {
    check_copies(copies, false)?;
    let one = BigRational::one();
    let h = &one + q2;
    if !h.is_positive() {
        return Err(PointSetError::InvalidParams("second basis vector must point upward".into()));
    }
    let (lo, hi) = centered_range(copies);
    let (lo_r, hi_r) = (rat(lo, 1), rat(hi, 1));
    let shear_lo = &lo_r * q1;
    let shear_hi = &hi_r * q1;
    let (smin, smax) = if shear_lo <= shear_hi { (shear_lo, shear_hi) } else { (shear_hi, shear_lo) };
    let outer = Rect::new(&lo_r + &smax, &lo_r * &h, &hi_r + &smin, &hi_r * &h);
    let inner = Rect::new(BigRational::zero(), BigRational::zero(), one.clone(), h.clone());
    let mut points = Vec::new();
    // Rows j in [lo, hi] cover the outer window; columns need a margin for the shear.
    let pad = q1.abs().ceil().to_integer().to_i64().unwrap_or(0) * (hi - lo) + 1;
    for j in lo..=hi {
        for i in (lo - pad)..=(hi + pad) {
            let jr = rat(j, 1);
            let p = ExactPoint::new(rat(i, 1) + &jr * q1, &jr * &h);
            if outer.contains_closed(&p) {
                points.push(p);
            }
        }
    }
    Ok(WindowedSet {
        points,
        inner_window: inner,
        outer_window: outer,
        tag: format!("lattice copies={copies} q1={q1} q2={q2}"),
        seed: None,
        finite: false,
    })
}

/// A sheared lattice whose basis is regenerated until no cocircular event
/// appears up to the scan depth.
///
/// The shear parameters are dyadic rationals with denominator 2^20 and
/// magnitude at most 1/8.
pub fn non_cocircular_lattice(copies: usize, seed: u64) -> Result<WindowedSet, PointSetError> {
    check_copies(copies, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1i64 << 20;
    let bound = scale / 8;
    for _ in 0..RETRY_BUDGET {
        let mut draw = || loop {
            let v = rng.gen_range(-bound..=bound);
            if v != 0 {
                return rat(v, scale);
            }
        };
        let q1 = draw();
        let q2 = draw();
        let mut set = lattice_with_basis(copies, &q1, &q2)?;
        if scan_is_generic(&set)? {
            set.tag = format!("noncocircular copies={copies} q1={q1} q2={q2}");
            set.seed = Some(seed);
            return Ok(set);
        }
    }
    Err(PointSetError::GenericityFailure { attempts: RETRY_BUDGET })
}

/// Random integer offset on the 2^-32 grid with `dx² + dy² ≤ τ²`, exactly.
fn disk_offset(rng: &mut ChaCha8Rng, tau: &BigRational) -> (BigInt, BigInt) {
    let grid = BigInt::one() << GRID_BITS;
    let t = tau * BigRational::from_integer(grid.clone());
    let bound = t.floor().to_integer().to_i64().expect("tau too large");
    let t2 = &t * &t;
    loop {
        let dx = rng.gen_range(-bound..=bound);
        let dy = rng.gen_range(-bound..=bound);
        let n2 = BigRational::from_integer(BigInt::from(dx) * dx + BigInt::from(dy) * dy);
        if n2 <= t2 {
            return (BigInt::from(dx), BigInt::from(dy));
        }
    }
}

/// Lattice points displaced by independent uniform offsets of length ≤ `tau`.
///
/// The outer window shrinks by `tau` on each side so that it is fully
/// populated. `tau = 0` returns the integer lattice itself.
pub fn perturbed_lattice(copies: usize, tau: &BigRational, seed: u64) -> Result<WindowedSet, PointSetError> {
    check_copies(copies, false)?;
    if tau.is_negative() || *tau >= rat(1, 4) {
        return Err(PointSetError::InvalidParams(format!("tau must lie in [0, 1/4), got {tau}")));
    }
    if tau.is_zero() {
        return integer_lattice(copies);
    }
    let (lo, hi) = centered_range(copies);
    let outer = Rect::new(
        rat(lo, 1) + tau,
        rat(lo, 1) + tau,
        rat(hi, 1) - tau,
        rat(hi, 1) - tau,
    );
    let grid = BigInt::one() << GRID_BITS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RETRY_BUDGET {
        let mut points = Vec::new();
        for i in lo..=hi {
            for j in lo..=hi {
                let (dx, dy) = disk_offset(&mut rng, tau);
                let p = ExactPoint::new(
                    BigRational::new(BigInt::from(i) * &grid + dx, grid.clone()),
                    BigRational::new(BigInt::from(j) * &grid + dy, grid.clone()),
                );
                if outer.contains_closed(&p) {
                    points.push(p);
                }
            }
        }
        let set = WindowedSet {
            points,
            inner_window: Rect::unit(),
            outer_window: outer.clone(),
            tag: format!("perturbed copies={copies} tau={tau}"),
            seed: Some(seed),
            finite: false,
        };
        if scan_is_generic(&set)? {
            return Ok(set);
        }
    }
    Err(PointSetError::GenericityFailure { attempts: RETRY_BUDGET })
}

/// `n` distinct uniform points of `[0, 1)²` on the 2^-32 grid.
fn unit_square_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<ExactPoint> {
    let grid = BigInt::one() << GRID_BITS;
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (u, v): (u32, u32) = (rng.gen(), rng.gen());
        if seen.insert((u, v)) {
            out.push(ExactPoint::new(
                BigRational::new(BigInt::from(u), grid.clone()),
                BigRational::new(BigInt::from(v), grid.clone()),
            ));
        }
    }
    out
}

/// Replicates a unit-square pattern into a centered `copies × copies` block.
fn replicate(base: &[ExactPoint], copies: usize, tag: String, seed: u64) -> WindowedSet {
    let m = (copies as i64 - 1) / 2;
    let mut points = Vec::with_capacity(base.len() * copies * copies);
    for tx in -m..=m {
        for ty in -m..=m {
            let t = ExactPoint::from_ints(tx, ty);
            points.extend(base.iter().map(|p| p + &t));
        }
    }
    WindowedSet {
        points,
        inner_window: Rect::unit(),
        outer_window: Rect::from_ints(-m, -m, m + 1, m + 1),
        tag,
        seed: Some(seed),
        finite: false,
    }
}

/// `n0` uniform points in the unit square, made periodic under `ℤ²`.
pub fn random_periodic(n0: usize, copies: usize, seed: u64) -> Result<WindowedSet, PointSetError> {
    check_copies(copies, true)?;
    if n0 == 0 {
        return Err(PointSetError::InvalidParams("n0 must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = unit_square_sample(&mut rng, n0);
    Ok(replicate(&base, copies, format!("periodic n0={n0} copies={copies}"), seed))
}

/// A Poisson process of intensity `rho` on the unit torus, unrolled into a
/// centered `copies × copies` block.
pub fn poisson_torus(rho: f64, copies: usize, seed: u64) -> Result<WindowedSet, PointSetError> {
    check_copies(copies, true)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(PointSetError::InvalidParams(format!("rho must be positive, got {rho}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let law = Poisson::new(rho).map_err(|e| PointSetError::InvalidParams(e.to_string()))?;
    let n = law.sample(&mut rng) as usize;
    let base = unit_square_sample(&mut rng, n);
    Ok(replicate(&base, copies, format!("poisson rho={rho} copies={copies}"), seed))
}

/// `n` uniform points in the unit square, treated as a finite set.
pub fn uniform_finite(n: usize, seed: u64) -> WindowedSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WindowedSet {
        points: unit_square_sample(&mut rng, n),
        inner_window: Rect::unit(),
        outer_window: Rect::unit(),
        tag: format!("uniform n={n}"),
        seed: Some(seed),
        finite: true,
    }
}

/// A rational near-equilateral triangle `a, b, c` and its barycenter `d`.
///
/// `c = (1/2, h)` where `h` is `√3/2` rounded to the 2^-32 grid.
pub fn finite_example_triangle_barycenter() -> WindowedSet {
    let grid = 1i64 << GRID_BITS;
    let h = ((3f64).sqrt() / 2.0 * grid as f64).round() as i64;
    let a = ExactPoint::from_ints(0, 0);
    let b = ExactPoint::from_ints(1, 0);
    let c = ExactPoint::new(rat(1, 2), rat(h, grid));
    let d = crate::exactgeom::point_sum([&a, &b, &c]).scale(&rat(1, 3));
    WindowedSet {
        points: vec![a, b, c, d],
        inner_window: Rect::new(rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 1)),
        outer_window: Rect::new(rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 1)),
        tag: "triangle-barycenter".into(),
        seed: None,
        finite: true,
    }
}
