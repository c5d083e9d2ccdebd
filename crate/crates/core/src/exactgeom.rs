//! Exact rational planar primitives.
//!
//! Every site is an [`ExactPoint`] with arbitrary-precision rational
//! coordinates. Predicates (orientation, side of circle) are exact; angles are
//! irrational in general and are produced as `f64` from exact coordinate
//! differences, rounding only once before the final `atan2`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Errors raised by the exact kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("points are collinear and admit no circumcircle")]
    Collinear,
    #[error("degenerate angle: the three points are collinear")]
    DegenerateAngle,
    #[error("cannot parse rational literal {0:?}")]
    BadRational(String),
}

/// A point of the plane with exact rational coordinates.
///
/// `BigRational` keeps values in lowest terms with a positive denominator, so
/// derived equality and hashing are exact value comparisons.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactPoint {
    pub x: BigRational,
    pub y: BigRational,
}

impl fmt::Debug for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Display for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl ExactPoint {
    pub fn new(x: BigRational, y: BigRational) -> Self {
        ExactPoint { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        ExactPoint {
            x: BigRational::from_integer(x.into()),
            y: BigRational::from_integer(y.into()),
        }
    }

    /// `(xn/xd, yn/yd)`. Panics on a zero denominator.
    pub fn from_fracs(xn: i64, xd: i64, yn: i64, yd: i64) -> Self {
        ExactPoint {
            x: BigRational::new(xn.into(), xd.into()),
            y: BigRational::new(yn.into(), yd.into()),
        }
    }

    pub fn origin() -> Self {
        ExactPoint {
            x: BigRational::zero(),
            y: BigRational::zero(),
        }
    }

    pub fn norm2(&self) -> BigRational {
        &self.x * &self.x + &self.y * &self.y
    }

    pub fn dist2(&self, other: &ExactPoint) -> BigRational {
        let dx = &self.x - &other.x;
        let dy = &self.y - &other.y;
        &dx * &dx + &dy * &dy
    }

    pub fn dot(&self, other: &ExactPoint) -> BigRational {
        &self.x * &other.x + &self.y * &other.y
    }

    pub fn cross(&self, other: &ExactPoint) -> BigRational {
        &self.x * &other.y - &self.y * &other.x
    }

    pub fn scale(&self, s: &BigRational) -> ExactPoint {
        ExactPoint {
            x: &self.x * s,
            y: &self.y * s,
        }
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [rat_to_f64(&self.x), rat_to_f64(&self.y)]
    }
}

impl Add for &ExactPoint {
    type Output = ExactPoint;
    fn add(self, o: &ExactPoint) -> ExactPoint {
        ExactPoint {
            x: &self.x + &o.x,
            y: &self.y + &o.y,
        }
    }
}

impl Sub for &ExactPoint {
    type Output = ExactPoint;
    fn sub(self, o: &ExactPoint) -> ExactPoint {
        ExactPoint {
            x: &self.x - &o.x,
            y: &self.y - &o.y,
        }
    }
}

impl Mul<&BigRational> for &ExactPoint {
    type Output = ExactPoint;
    fn mul(self, s: &BigRational) -> ExactPoint {
        self.scale(s)
    }
}

/// Sum of a collection of points (the origin when empty).
pub fn point_sum<'a, I: IntoIterator<Item = &'a ExactPoint>>(pts: I) -> ExactPoint {
    pts.into_iter()
        .fold(ExactPoint::origin(), |acc, p| &acc + p)
}

/// A circle given by its exact center and squared radius.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactCircle {
    pub center: ExactPoint,
    pub r2: BigRational,
}

/// Position of a point relative to a circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Inside,
    On,
    Outside,
}

impl ExactCircle {
    pub fn new(center: ExactPoint, r2: BigRational) -> Self {
        debug_assert!(r2.is_positive());
        ExactCircle { center, r2 }
    }

    pub fn radius_f64(&self) -> f64 {
        rat_to_f64(&self.r2).sqrt()
    }
}

/// Sign of the orientation determinant of `a, b, c` (`Greater` = counterclockwise).
pub fn orient(a: &ExactPoint, b: &ExactPoint, c: &ExactPoint) -> Ordering {
    (b - a).cross(&(c - a)).cmp(&BigRational::zero())
}

/// The unique circle through three non-collinear points.
pub fn circumcircle(
    a: &ExactPoint,
    b: &ExactPoint,
    c: &ExactPoint,
) -> Result<ExactCircle, GeomError> {
    let b1 = b - a;
    let c1 = c - a;
    let d = b1.cross(&c1);
    if d.is_zero() {
        return Err(GeomError::Collinear);
    }
    let two_d = &d + &d;
    let nb = b1.norm2();
    let nc = c1.norm2();
    // Intersection of the two perpendicular bisectors, relative to `a`.
    let ox = (&c1.y * &nb - &b1.y * &nc) / &two_d;
    let oy = (&b1.x * &nc - &c1.x * &nb) / &two_d;
    let r2 = &ox * &ox + &oy * &oy;
    let center = ExactPoint {
        x: &a.x + ox,
        y: &a.y + oy,
    };
    Ok(ExactCircle { center, r2 })
}

/// Exact classification of `p` against `circle`.
pub fn side_of(circle: &ExactCircle, p: &ExactPoint) -> Side {
    match p.dist2(&circle.center).cmp(&circle.r2) {
        Ordering::Less => Side::Inside,
        Ordering::Equal => Side::On,
        Ordering::Greater => Side::Outside,
    }
}

/// Interior angle at `apex` of the triangle `a, apex, b`, in `(0, π)`.
pub fn angle_at(a: &ExactPoint, apex: &ExactPoint, b: &ExactPoint) -> Result<f64, GeomError> {
    let u = a - apex;
    let v = b - apex;
    let cross = u.cross(&v);
    if cross.is_zero() {
        return Err(GeomError::DegenerateAngle);
    }
    let dot = u.dot(&v);
    Ok(angle_from_parts(rat_to_f64(&cross.abs()), rat_to_f64(&dot)))
}

/// The angle whose sine and cosine are proportional to `abs_cross` and `dot`.
#[inline]
pub(crate) fn angle_from_parts(abs_cross: f64, dot: f64) -> f64 {
    abs_cross.atan2(dot)
}

/// Correctly rounded conversion of a rational to `f64`.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        // Exact when both fit in 53 bits.
        if n.unsigned_abs() < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, `"p"` or a finite decimal like `"0.2"` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational, GeomError> {
    let bad = || GeomError::BadRational(s.to_string());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mut v = BigRational::from_integer(int_part.abs())
            + BigRational::new(frac_part, scale);
        if neg {
            v = -v;
        }
        return Ok(v);
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Shorthand for building rationals in code and tests.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}
