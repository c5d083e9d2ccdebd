//! Closed-form angle densities for Poisson mosaics, empirical histograms and
//! goodness of fit.
//!
//! `f` is the density of angles in Poisson–Delaunay triangles, `g(t) = f(π − t)`
//! the density of their supplements and `h = (f + g)/2` the pooled density.
//! The familiar closed forms `4/3 [(π − t) cos t + sin t] sin t` and
//! `2/3 [(π − 2t) cos t + 2 sin t] sin t` integrate to `π` over `[0, π]`; the
//! densities here carry the extra factor `1/π` so that they integrate to one.
//! All integrals use composite Simpson with [`PANELS`] panels.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::angles::{structure_angles, AnglesError, Structure};
use crate::events::EventSet;

/// Simpson panels over `[0, π]`.
pub const PANELS: usize = 10_000;
pub const DEFAULT_BINS: usize = 64;
/// Factor applied to the self-consistency L1 distance to get a threshold.
pub const THRESHOLD_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("t = {0} outside [0, π]")]
    Domain(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("sample value {0} outside (0, π)")]
    SampleOutOfRange(f64),
    #[error("bin count must be positive")]
    NoBins,
    #[error("bin counts differ: {0} vs {1}")]
    BinMismatch(usize, usize),
    #[error(transparent)]
    Angles(#[from] AnglesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum DensityKind {
    MilesF,
    MilesG,
    MilesH,
}

impl DensityKind {
    pub const ALL: [DensityKind; 3] = [DensityKind::MilesF, DensityKind::MilesG, DensityKind::MilesH];

    /// Density of the angles of `m` in a Poisson mosaic of any order.
    pub fn for_structure(m: Structure) -> Self {
        match m {
            Structure::Del => DensityKind::MilesF,
            Structure::Vor => DensityKind::MilesG,
            Structure::Bri | Structure::Igl => DensityKind::MilesH,
        }
    }

    fn eval(self, t: f64) -> f64 {
        let f = |t: f64| 4.0 / (3.0 * PI) * ((PI - t) * t.cos() + t.sin()) * t.sin();
        match self {
            DensityKind::MilesF => f(t),
            DensityKind::MilesG => f(PI - t),
            DensityKind::MilesH => 2.0 / (3.0 * PI) * ((PI - 2.0 * t) * t.cos() + 2.0 * t.sin()) * t.sin(),
        }
    }
}

impl fmt::Display for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityKind::MilesF => "f",
            DensityKind::MilesG => "g",
            DensityKind::MilesH => "h",
        })
    }
}

impl FromStr for DensityKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "milesf" => Ok(DensityKind::MilesF),
            "g" | "milesg" => Ok(DensityKind::MilesG),
            "h" | "milesh" => Ok(DensityKind::MilesH),
            _ => Err(format!("unknown density {s:?}")),
        }
    }
}

fn check_domain(t: f64) -> Result<(), DistError> {
    if (0.0..=PI).contains(&t) {
        Ok(())
    } else {
        Err(DistError::Domain(t))
    }
}

pub fn miles_density(kind: DensityKind, t: f64) -> Result<f64, DistError> {
    check_domain(t)?;
    Ok(kind.eval(t))
}

/// `h″(t) = −8/(3π) (π − 2t) sin t cos t`, for the normalized `h`.
pub fn h_second_derivative(t: f64) -> Result<f64, DistError> {
    check_domain(t)?;
    Ok(-8.0 / (3.0 * PI) * (PI - 2.0 * t) * t.sin() * t.cos())
}

/// Composite Simpson over `[a, b]` with `panels` (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_a^b` of the density.
pub fn integral(kind: DensityKind, a: f64, b: f64) -> Result<f64, DistError> {
    check_domain(a)?;
    check_domain(b)?;
    Ok(simpson(|t| kind.eval(t), a, b, PANELS))
}

/// Cumulative distribution tabulated by Simpson on pairs of panels, with
/// linear interpolation in between.
#[derive(Clone, Debug)]
pub struct CdfTable {
    kind: DensityKind,
    step: f64,
    values: Vec<f64>,
}

impl CdfTable {
    pub fn new(kind: DensityKind) -> Self {
        let nodes = PANELS / 2;
        let step = PI / nodes as f64;
        let mut values = Vec::with_capacity(nodes + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..nodes {
            let a = i as f64 * step;
            let b = a + step;
            acc += step / 6.0 * (kind.eval(a) + 4.0 * kind.eval((a + b) / 2.0) + kind.eval(b));
            values.push(acc);
        }
        CdfTable { kind, step, values }
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let x = (t / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Inverse of [`CdfTable::cdf`] by bisection on the table.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u * self.values[self.values.len() - 1];
        let i = self.values.partition_point(|&v| v < u).clamp(1, self.values.len() - 1);
        let (lo, hi) = (self.values[i - 1], self.values[i]);
        let w = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        ((i - 1) as f64 + w) * self.step
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.quantile(rng.gen::<f64>()).clamp(1e-12, PI - 1e-12)).collect()
    }
}

/// Equal-width histogram over `(0, π)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Self, DistError> {
        if bins == 0 {
            return Err(DistError::NoBins);
        }
        Ok(Histogram { counts: vec![0; bins], total: 0 })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        PI / self.bins() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (i as f64 * w, (i + 1) as f64 * w)
    }

    pub fn add(&mut self, t: f64) -> Result<(), DistError> {
        if !(t > 0.0 && t < PI) {
            return Err(DistError::SampleOutOfRange(t));
        }
        let i = ((t / self.width()) as usize).min(self.bins() - 1);
        self.counts[i] += 1;
        self.total += 1;
        Ok(())
    }

    /// Sum of per-shard histograms.
    pub fn merge(mut self, other: &Histogram) -> Result<Self, DistError> {
        if self.bins() != other.bins() {
            return Err(DistError::BinMismatch(self.bins(), other.bins()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(self)
    }

    /// Normalized densities, integrating to one.
    pub fn densities(&self) -> Vec<f64> {
        let scale = if self.total == 0 { 0.0 } else { 1.0 / (self.total as f64 * self.width()) };
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    pub fn to_csv(&self, kind: Option<DensityKind>) -> String {
        let mut s = String::from("bin_left,bin_right,count,density,closed_form_density\n");
        let table = kind.map(CdfTable::new);
        for (i, d) in self.densities().iter().enumerate() {
            let (a, b) = self.edges(i);
            let cf = table.as_ref().map(|t| format!("{}", (t.cdf(b) - t.cdf(a)) / (b - a))).unwrap_or_default();
            s.push_str(&format!("{a},{b},{},{d},{cf}\n", self.counts[i]));
        }
        s
    }
}

pub fn empirical_density(samples: &[f64], bins: usize) -> Result<Histogram, DistError> {
    if samples.is_empty() {
        return Err(DistError::EmptySample);
    }
    let empty = Histogram::new(bins)?;
    samples
        .par_chunks(4096)
        .map(|chunk| {
            let mut h = empty.clone();
            chunk.iter().try_for_each(|&t| h.add(t))?;
            Ok(h)
        })
        .try_reduce(|| empty.clone(), |a, b| a.merge(&b))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub kind: DensityKind,
    /// `Σ |density_i − closed-form bin average_i| · width`.
    pub l1: f64,
    /// Kolmogorov–Smirnov distance evaluated at the bin edges.
    pub ks: f64,
    pub n: u64,
}

pub fn fit_report(hist: &Histogram, kind: DensityKind) -> FitReport {
    fit_with(hist, &CdfTable::new(kind))
}

fn fit_with(hist: &Histogram, table: &CdfTable) -> FitReport {
    let w = hist.width();
    let dens = hist.densities();
    let mut l1 = 0.0;
    let mut ks: f64 = 0.0;
    let mut cum = 0u64;
    for (i, d) in dens.iter().enumerate() {
        let (a, b) = hist.edges(i);
        let mass = table.cdf(b) - table.cdf(a);
        l1 += (d * w - mass).abs();
        cum += hist.counts[i];
        if hist.total > 0 {
            ks = ks.max((cum as f64 / hist.total as f64 - table.cdf(b)).abs());
        }
    }
    FitReport { kind: table.kind(), l1, ks, n: hist.total }
}

/// Mean L1 distance of histograms of `n` draws from the closed form itself,
/// over `reps` replicates.
pub fn self_consistency_l1(kind: DensityKind, n: usize, bins: usize, reps: usize, seed: u64) -> Result<f64, DistError> {
    use rand::SeedableRng;
    let table = CdfTable::new(kind);
    let l1s: Result<Vec<f64>, DistError> = (0..reps.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let h = empirical_density(&table.sample(n, &mut rng), bins)?;
            Ok(fit_with(&h, &table).l1)
        })
        .collect();
    let l1s = l1s?;
    Ok(l1s.iter().sum::<f64>() / l1s.len() as f64)
}

/// Histogram of all angles of `m` at order `k`.
pub fn structure_histogram(es: &EventSet, m: Structure, k: usize, bins: usize) -> Result<Histogram, DistError> {
    let samples: Vec<f64> = structure_angles(es, m, k)?.into_iter().map(|s| s.value).collect();
    empirical_density(&samples, bins)
}

/// Observed and expected vertex densities of the order-`k` Voronoi
/// tessellation of a Poisson sample, per unit area of the center region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexDensityReport {
    pub k: usize,
    pub rho: f64,
    pub area: f64,
    pub new_count: usize,
    /// `None` at `k = 1`, where old vertices do not exist.
    pub old_count: Option<usize>,
    pub new_observed: f64,
    pub old_observed: Option<f64>,
    /// `2kρ`.
    pub new_expected: f64,
    /// `(2k − 1)ρ`.
    pub old_expected: Option<f64>,
    /// Angles around degree-3 and degree-6 vertices of the order-`k`
    /// Brillouin tessellation.
    pub bri_deg3_angles: usize,
    pub bri_deg6_angles: usize,
}

pub fn vertex_density_report(es: &EventSet, k: usize, rho: f64) -> VertexDensityReport {
    let area = crate::exactgeom::rat_to_f64(&es.center_region.area());
    let count = |p: Option<usize>| p.map(|p| es.at_depth(p).count()).unwrap_or(0);
    let new_count = count(k.checked_sub(1));
    let old_count = (k >= 2).then(|| count(k.checked_sub(2)));
    VertexDensityReport {
        k,
        rho,
        area,
        new_count,
        old_count,
        new_observed: new_count as f64 / area,
        old_observed: old_count.map(|c| c as f64 / area),
        new_expected: 2.0 * k as f64 * rho,
        old_expected: (k >= 2).then_some((2.0 * k as f64 - 1.0) * rho),
        bri_deg3_angles: 3 * (count(k.checked_sub(1)) + count(k.checked_sub(3))),
        bri_deg6_angles: 6 * count(k.checked_sub(2)),
    }
}
