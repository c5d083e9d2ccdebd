//! A generic set whose largest Delaunay angle drops from order `k` to `k + 1`.
//!
//! Start from a perturbed lattice `P` and add two satellites `a′, a″` close to
//! a site `a`, placed so that the circle through `a′, a, a″` encloses exactly
//! `k − 2` sites and `a` sits on the short arc between them. That circle
//! carries an angle close to `π` at `a`, present in the order-`k` Delaunay
//! mosaic but not in order `k + 1`, where all angles stay below a bound
//! derived from the minimum spacing of `P`.
//!
//! The satellites are `a ± s·t + e·d` for a unit direction `d` and tangent `t`.
//! All such circles are tangent at `a` to the same line, so their disks are
//! nested and the depth is monotone in `e`; bisection over `e` on the
//! `2^-32` grid finds the depth exactly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;
use thiserror::Error;

use crate::angles::{depth_tables, extreme_angles, AnglesError, Structure};
use crate::events::{depth, enumerate_with, EnumerateOptions, EventSet, EventsError};
use crate::exactgeom::{angle_at, circumcircle, rat, rat_to_f64, ExactCircle, ExactPoint};
use crate::pointsets::{perturbed_lattice, PointSetError, Rect, WindowedSet, GRID_BITS};

#[derive(Debug, Error)]
pub enum CounterexampleError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("construction failed: {0}")]
    ConstructionFailure(String),
    #[error(transparent)]
    PointSet(#[from] PointSetError),
    #[error(transparent)]
    Events(#[from] EventsError),
    #[error(transparent)]
    Angles(#[from] AnglesError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexampleParams {
    pub k: usize,
    pub tau: BigRational,
    pub eps: BigRational,
    pub seed: u64,
}

impl CounterexampleParams {
    /// `τ = 1/5`, `ε = 1/100`.
    pub fn new(k: usize, seed: u64) -> Self {
        CounterexampleParams { k, tau: rat(1, 5), eps: rat(1, 100), seed }
    }

    pub fn validate(&self) -> Result<(), CounterexampleError> {
        if self.k < 6 {
            return Err(CounterexampleError::InvalidParams(format!("k must be at least 6, got {}", self.k)));
        }
        if !self.tau.is_positive() || self.tau >= rat(1, 4) {
            return Err(CounterexampleError::InvalidParams(format!("tau must lie in (0, 1/4), got {}", self.tau)));
        }
        if !self.eps.is_positive() {
            return Err(CounterexampleError::InvalidParams(format!("eps must be positive, got {}", self.eps)));
        }
        let b = bounds_f64(self.k, rat_to_f64(&self.tau), rat_to_f64(&self.eps));
        if b.bound_14 <= b.bound_15 {
            return Err(CounterexampleError::InvalidParams(format!(
                "eps = {} too large: lower bound {:.6} does not exceed upper bound {:.6}",
                self.eps, b.bound_14, b.bound_15
            )));
        }
        Ok(())
    }
}

/// The three angle bounds of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounds {
    /// Upper bound on the largest angle of `Del_{k+1}(P)`.
    pub bound_13: f64,
    /// Lower bound on the largest angle of `Del_k(A)`.
    pub bound_14: f64,
    /// Upper bound on the largest angle of `Del_{k+1}(A)`.
    pub bound_15: f64,
}

fn bounds_f64(k: usize, tau: f64, eps: f64) -> Bounds {
    let k = k as f64;
    let r_hi = (k / PI).sqrt() + FRAC_1_SQRT_2 + tau;
    let r_lo = ((k - 2.0) / PI).sqrt() - FRAC_1_SQRT_2 - tau;
    Bounds {
        bound_13: PI - (1.0 - 2.0 * tau) / r_hi,
        bound_14: PI - 2.0 * eps / r_lo,
        bound_15: PI - ((1.0 - 2.0 * tau - eps) / 2.0) / r_hi,
    }
}

pub fn bound_values(params: &CounterexampleParams) -> Result<Bounds, CounterexampleError> {
    if params.k < 6 || !params.tau.is_positive() || params.tau >= rat(1, 4) {
        return Err(CounterexampleError::InvalidParams(format!("need k >= 6 and 0 < tau < 1/4, got k={} tau={}", params.k, params.tau)));
    }
    Ok(bounds_f64(params.k, rat_to_f64(&params.tau), rat_to_f64(&params.eps)))
}

/// A constructed set together with what verification needs.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub params: CounterexampleParams,
    /// `P` plus the two satellites, which are the last two points.
    pub set: WindowedSet,
    /// Index of `a` in `set.points`.
    pub anchor: usize,
    pub satellite_circle: ExactCircle,
    pub satellite_circle_depth: usize,
    /// Center region containing every event the satellites can affect.
    pub region: Rect,
}

impl Counterexample {
    pub fn base_points(&self) -> WindowedSet {
        let mut s = self.set.clone();
        s.points.truncate(s.points.len() - 2);
        s
    }

    pub fn satellites(&self) -> [&ExactPoint; 2] {
        let n = self.set.points.len();
        [&self.set.points[n - 2], &self.set.points[n - 1]]
    }

    /// `∠a′ a a″`.
    pub fn satellite_angle(&self) -> f64 {
        let [s1, s2] = self.satellites();
        angle_at(s1, &self.set.points[self.anchor], s2).unwrap_or(f64::NAN)
    }

    fn options(&self, depth_cap: usize) -> EnumerateOptions {
        EnumerateOptions { depth_min: 0, depth_cap, through_site: None, center_region: Some(self.region.clone()) }
    }

    /// Events of the full set in the verification region.
    pub fn events(&self, depth_cap: usize) -> Result<EventSet, CounterexampleError> {
        Ok(enumerate_with(&self.set, &self.options(depth_cap))?)
    }

    /// Events of `P` alone in the same region.
    pub fn base_events(&self, depth_cap: usize) -> Result<EventSet, CounterexampleError> {
        Ok(enumerate_with(&self.base_points(), &self.options(depth_cap))?)
    }
}

/// Unit directions tried for the satellite offset, with their tangents.
const DIRECTIONS: [((i64, i64), (i64, i64)); 4] = [((0, 1), (1, 0)), ((1, 0), (0, -1)), ((0, -1), (-1, 0)), ((-1, 0), (0, 1))];

/// Radius bound for circles enclosing `m` points of a `τ`-perturbed lattice.
fn radius_hi(m: usize, tau: f64) -> f64 {
    (m as f64 / PI).sqrt() + FRAC_1_SQRT_2 + tau
}

pub fn build_counterexample(params: &CounterexampleParams) -> Result<Counterexample, CounterexampleError> {
    params.validate()?;
    let k = params.k;
    let tau = rat_to_f64(&params.tau);
    // Circles of depth up to k must have centers in the region whenever they
    // come near a; the outer window must contain their disks.
    let reach = radius_hi(k + 1, tau);
    let half = reach.ceil() as i64 + 1;
    let mut copies = 2 * (half as f64 + reach + 2.0).ceil() as usize + 1;
    let mut last_err = String::new();
    for attempt in 0..4 {
        let seed = params.seed.wrapping_add(attempt * 0x9e37_79b9);
        match try_build(params, seed, copies, half) {
            Ok(c) => return Ok(c),
            Err(CounterexampleError::Events(EventsError::WindowTooSmall { .. })) => {
                copies += 4;
                last_err = "window too small".into();
            }
            Err(CounterexampleError::ConstructionFailure(msg)) => last_err = msg,
            Err(e) => return Err(e),
        }
    }
    Err(CounterexampleError::ConstructionFailure(last_err))
}

fn try_build(params: &CounterexampleParams, seed: u64, copies: usize, half: i64) -> Result<Counterexample, CounterexampleError> {
    let k = params.k;
    let base = perturbed_lattice(copies, &params.tau, seed)?;
    let origin = ExactPoint::origin();
    let anchor = (0..base.points.len())
        .min_by(|&i, &j| base.points[i].dist2(&origin).cmp(&base.points[j].dist2(&origin)))
        .ok_or_else(|| CounterexampleError::ConstructionFailure("empty lattice".into()))?;
    let a = base.points[anchor].clone();
    let region = Rect::from_ints(-half, -half, half, half);

    // Largest power of two s with s² (1 + 2^-10) ≤ ε², leaving room for e.
    let mut s = BigRational::one();
    while &s * &s * rat(1025, 1024) > &params.eps * &params.eps {
        s /= BigRational::from_integer(BigInt::from(2));
    }
    let unit = BigRational::new(BigInt::one(), BigInt::one() << GRID_BITS);
    let steps_max = (&s / &unit).to_integer();

    let mut failures = Vec::new();
    for ((dx, dy), (tx, ty)) in DIRECTIONS {
        let d = ExactPoint::from_ints(dx, dy);
        let t = ExactPoint::from_ints(tx, ty);
        let place = |steps: &BigInt| {
            let e = &unit * BigRational::from_integer(steps.clone());
            let off = d.scale(&e);
            let side = t.scale(&s);
            [&(&a - &side) + &off, &(&a + &side) + &off]
        };
        let with = |sats: [ExactPoint; 2]| {
            let mut set = base.clone();
            set.points.extend(sats);
            set
        };
        // depth of the satellite circle; None when its disk leaves the window
        let probe = |steps: &BigInt| -> Result<Option<(usize, ExactCircle)>, CounterexampleError> {
            let [p1, p2] = place(steps);
            let c = circumcircle(&p1, &a, &p2).map_err(|e| CounterexampleError::ConstructionFailure(e.to_string()))?;
            let set = with([p1, p2]);
            match depth(&set, &c) {
                Ok((p, _)) => Ok(Some((p, c))),
                Err(EventsError::DiskOutsideWindow) => Ok(None),
                Err(e) => Err(e.into()),
            }
        };
        // Smallest step count whose circle has depth ≤ k − 2; larger steps
        // mean smaller circles.
        let too_deep = |steps: &BigInt| -> Result<bool, CounterexampleError> {
            Ok(match probe(steps)? {
                None => true,
                Some((p, _)) => p > k - 2,
            })
        };
        let (mut lo, mut hi) = (BigInt::one(), steps_max.clone());
        if !too_deep(&lo)? || too_deep(&hi)? {
            failures.push(format!("direction ({dx},{dy}): depth k-2 not bracketed"));
            continue;
        }
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) / 2;
            if too_deep(&mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let Some((p, circle)) = probe(&hi)? else { unreachable!("bracket end fits the window") };
        if p != k - 2 {
            failures.push(format!("direction ({dx},{dy}): depth jumps past k-2 to {p}"));
            continue;
        }
        let sats = place(&hi);
        if sats.iter().any(|q| q.dist2(&a) > &params.eps * &params.eps) {
            failures.push(format!("direction ({dx},{dy}): satellites farther than eps"));
            continue;
        }
        let mut set = with(sats);
        let n = set.points.len();
        set.tag = format!(
            "counterexample k={k} tau={} eps={} anchor={anchor} satellites={},{}",
            params.tau,
            params.eps,
            n - 2,
            n - 1
        );
        set.seed = Some(params.seed);
        let cx = Counterexample {
            params: params.clone(),
            anchor,
            satellite_circle: circle,
            satellite_circle_depth: p,
            region: region.clone(),
            set,
        };
        let es = cx.events(k)?;
        if !es.is_generic() {
            failures.push(format!("direction ({dx},{dy}): cocircular sites in the region"));
            continue;
        }
        return Ok(cx);
    }
    Err(CounterexampleError::ConstructionFailure(failures.join("; ")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub k: usize,
    pub seed: u64,
    pub omega_del_k: f64,
    pub omega_del_k1: f64,
    pub bound_13: f64,
    pub bound_14: f64,
    pub bound_15: f64,
    pub satellite_circle_depth: usize,
    pub satellite_angle: f64,
    pub satellite_radius: f64,
    /// Smallest Voronoi angles at orders `k` and `k + 1`.
    pub alpha_vor_k: f64,
    pub alpha_vor_k1: f64,
    pub pass: bool,
}

impl CounterexampleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Largest Delaunay angles at orders `k` and `k + 1` over the region,
/// checked against the bounds. Outside the region the set coincides with
/// the perturbed lattice.
pub fn verify_counterexample(cx: &Counterexample) -> Result<CounterexampleReport, CounterexampleError> {
    let params = &cx.params;
    let k = params.k;
    let bounds = bound_values(params)?;
    let es = cx.events(k)?;
    let tables = depth_tables(&es, k)?;
    let del_k = extreme_angles(&tables, &es, Structure::Del, k)?;
    let del_k1 = extreme_angles(&tables, &es, Structure::Del, k + 1)?;
    let vor_k = extreme_angles(&tables, &es, Structure::Vor, k)?;
    let vor_k1 = extreme_angles(&tables, &es, Structure::Vor, k + 1)?;
    let omega_k = del_k.omega_max.unwrap_or(f64::NAN);
    let omega_k1 = del_k1.omega_max.unwrap_or(f64::NAN);
    let pass = omega_k > omega_k1 && omega_k > bounds.bound_14 && omega_k1 < bounds.bound_15;
    Ok(CounterexampleReport {
        k,
        seed: params.seed,
        omega_del_k: omega_k,
        omega_del_k1: omega_k1,
        bound_13: bounds.bound_13,
        bound_14: bounds.bound_14,
        bound_15: bounds.bound_15,
        satellite_circle_depth: cx.satellite_circle_depth,
        satellite_angle: cx.satellite_angle(),
        satellite_radius: cx.satellite_circle.radius_f64(),
        alpha_vor_k: vor_k.alpha_min.unwrap_or(f64::NAN),
        alpha_vor_k1: vor_k1.alpha_min.unwrap_or(f64::NAN),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let b = bound_values(&CounterexampleParams::new(10, 0)).unwrap();
        let r_hi = (10.0 / PI).sqrt() + FRAC_1_SQRT_2 + 0.2;
        let r_lo = (8.0 / PI).sqrt() - FRAC_1_SQRT_2 - 0.2;
        assert!((r_hi - 2.6912).abs() < 1e-4 && (r_lo - 0.6887).abs() < 1e-4);
        assert!((b.bound_13 - 2.9186).abs() < 1e-4, "{b:?}");
        assert!((b.bound_14 - 3.1125).abs() < 1e-4, "{b:?}");
        assert!(b.bound_14 > b.bound_15 && b.bound_15 > b.bound_13);
        let tiny = CounterexampleParams { eps: rat(1, 1_000_000), ..CounterexampleParams::new(10, 0) };
        let b = bound_values(&tiny).unwrap();
        assert!(PI - b.bound_14 < 1e-5 && b.bound_14 > b.bound_15);
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(CounterexampleParams::new(5, 0).validate(), Err(CounterexampleError::InvalidParams(_))));
        let p = CounterexampleParams { tau: rat(1, 4), ..CounterexampleParams::new(10, 0) };
        assert!(bound_values(&p).is_err());
        let p = CounterexampleParams { eps: rat(1, 2), ..CounterexampleParams::new(10, 0) };
        assert!(matches!(p.validate(), Err(CounterexampleError::InvalidParams(_))));
    }

    #[test]
    fn construction_postconditions_k10() {
        let params = CounterexampleParams::new(10, 5);
        let cx = build_counterexample(&params).unwrap();
        assert_eq!(cx.set.points.len(), cx.base_points().points.len() + 2);
        let (p, on) = depth(&cx.set, &cx.satellite_circle).unwrap();
        assert_eq!(p, 8);
        assert_eq!(on.len(), 3);
        let a = &cx.set.points[cx.anchor];
        for s in cx.satellites() {
            assert!(s.dist2(a) <= &params.eps * &params.eps);
        }
        let r = cx.satellite_circle.radius_f64();
        assert!(cx.satellite_angle() > PI - 2.0 * 0.01 / r);
        assert!(r >= (8.0 / PI).sqrt() - FRAC_1_SQRT_2 - 0.2);

        let report = verify_counterexample(&cx).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.alpha_vor_k < report.alpha_vor_k1);

        let base = cx.base_events(10).unwrap();
        let t = depth_tables(&base, 10).unwrap();
        let w = extreme_angles(&t, &base, Structure::Del, 10).unwrap().omega_max.unwrap();
        assert!(w < report.bound_13, "{w} vs {}", report.bound_13);
    }
}
