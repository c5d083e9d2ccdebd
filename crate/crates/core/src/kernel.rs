//! Integer frames for the hot predicates.
//!
//! A set of rational points is rescaled by the least common multiple of all
//! denominators, giving integer coordinates. When every scaled coordinate is
//! at most 2^38 in magnitude, all determinants used by event enumeration fit
//! in 256 bits and are evaluated in `I256`; otherwise the same generic code
//! runs on `BigInt`. Both paths are exact.

use std::cmp::Ordering;
use std::fmt::Debug;

use ethnum::I256;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exactgeom::angle_from_parts;

/// Minimal exact ring interface shared by `I256` and `BigInt`.
pub(crate) trait Ring: Clone + Ord + Send + Sync + Debug {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_big(v: &BigInt) -> Self;
    fn to_big(&self) -> BigInt;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn to_f64(&self) -> f64;

    fn sign(&self) -> Ordering {
        self.cmp(&Self::zero())
    }
    fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }
}

impl Ring for I256 {
    fn zero() -> Self {
        I256::ZERO
    }
    fn from_i64(v: i64) -> Self {
        I256::from(v)
    }
    fn from_big(v: &BigInt) -> Self {
        I256::from(v.to_i128().expect("frame coordinate exceeds i128"))
    }
    fn to_big(&self) -> BigInt {
        let (hi, lo) = self.into_words();
        (BigInt::from(hi) << 128) + BigInt::from(lo as u128)
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        *self + *o
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        *self - *o
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    #[inline]
    fn neg(&self) -> Self {
        -*self
    }
    fn to_f64(&self) -> f64 {
        self.as_f64()
    }
}

impl Ring for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn from_big(v: &BigInt) -> Self {
        v.clone()
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

pub(crate) type Vec2<R> = [R; 2];

#[inline]
pub(crate) fn sub2<R: Ring>(a: &Vec2<R>, b: &Vec2<R>) -> Vec2<R> {
    [a[0].sub(&b[0]), a[1].sub(&b[1])]
}

#[inline]
pub(crate) fn cross2<R: Ring>(a: &Vec2<R>, b: &Vec2<R>) -> R {
    a[0].mul(&b[1]).sub(&a[1].mul(&b[0]))
}

#[inline]
pub(crate) fn dot2<R: Ring>(a: &Vec2<R>, b: &Vec2<R>) -> R {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1]))
}

#[inline]
pub(crate) fn norm2<R: Ring>(a: &Vec2<R>) -> R {
    dot2(a, a)
}

/// Incircle determinant of `b, c, p` taken relative to a common origin `a`
/// (all three arguments are already translated). Positive iff `p` is inside
/// the circle through `a, b, c` when `a, b, c` is counterclockwise.
#[inline]
pub(crate) fn incircle_rel<R: Ring>(b: &Vec2<R>, c: &Vec2<R>, p: &Vec2<R>) -> R {
    let nb = norm2(b);
    let nc = norm2(c);
    let np = norm2(p);
    let t1 = nb.mul(&cross2(p, c));
    let t2 = nc.mul(&cross2(b, p));
    let t3 = np.mul(&cross2(c, b));
    t1.add(&t2).add(&t3)
}

/// Angle at `apex` between `a` and `b`; `None` when collinear.
#[inline]
pub(crate) fn angle<R: Ring>(a: &Vec2<R>, apex: &Vec2<R>, b: &Vec2<R>) -> Option<f64> {
    let u = sub2(a, apex);
    let v = sub2(b, apex);
    let cr = cross2(&u, &v);
    if cr.sign() == Ordering::Equal {
        return None;
    }
    Some(angle_from_parts(cr.abs().to_f64(), dot2(&u, &v).to_f64()))
}

/// Least common multiple of the denominators of `values`.
pub(crate) fn common_denominator<'a, I: IntoIterator<Item = &'a BigRational>>(values: I) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// `r * den`, which must be an integer.
pub(crate) fn scale_to_int(r: &BigRational, den: &BigInt) -> BigInt {
    let v = r * BigRational::from_integer(den.clone());
    debug_assert!(v.is_integer());
    v.to_integer()
}

/// Bit length of the largest magnitude among `values`.
pub(crate) fn max_bits<'a, I: IntoIterator<Item = &'a BigInt>>(values: I) -> u64 {
    values.into_iter().map(|v| Signed::abs(v).bits()).max().unwrap_or(0)
}

/// Points rescaled to integers by a common denominator.
#[derive(Clone, Debug)]
pub(crate) struct Frame<R> {
    pub den: BigInt,
    pub pts: Vec<Vec2<R>>,
}

impl<R: Ring> Frame<R> {
    pub fn from_scaled(den: BigInt, scaled: &[[BigInt; 2]]) -> Self {
        let pts = scaled
            .iter()
            .map(|[x, y]| [R::from_big(x), R::from_big(y)])
            .collect();
        Frame { den, pts }
    }

    /// Rational value of a frame-unit quantity `num / div`.
    pub fn to_rational(&self, num: &R, div: &R) -> BigRational {
        BigRational::new(num.to_big(), div.to_big() * &self.den)
    }
}
