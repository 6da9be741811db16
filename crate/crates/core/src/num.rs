//! Scalar abstraction shared by the numeric parts of the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Floating point type usable for scores, similarities and rates.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in a float")
    }

    fn of_i128(n: i128) -> Self {
        <Self as FromPrimitive>::from_i128(n).expect("i128 fits in a float")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// `num / den`, or `None` when the denominator is zero.
pub fn ratio<T: Scalar>(num: usize, den: usize) -> Option<T> {
    (den > 0).then(|| T::of_usize(num) / T::of_usize(den))
}

/// Cosine similarity. Zero vectors have similarity zero with everything.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

pub fn l2_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// A percentage rounded half-up to two decimals.
///
/// Rounding happens in integer arithmetic on the underlying counts, so
/// `8 / 96` is exactly `8.33` and `1 / 8` is exactly `12.50` regardless of
/// the float type.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Percentage<T>(pub T);

impl<T: Scalar> Percentage<T> {
    /// `100 * part / whole`, or `None` for an empty whole.
    pub fn of(part: usize, whole: usize) -> Option<Self> {
        if whole == 0 {
            return None;
        }
        Some(Self(T::of_i128(hundredths(part, whole)) / T::of_usize(100)))
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Scalar> Display for Percentage<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}%", self.0.to_f64().unwrap_or(f64::NAN))
    }
}

/// `round_half_up(10000 * part / whole)`, i.e. the percentage in hundredths.
pub fn hundredths(part: usize, whole: usize) -> i128 {
    let (p, w) = (part as i128, whole as i128);
    (20_000 * p + w) / (2 * w)
}

/// Formats a rate in `[0,1]` as a percentage with two decimals (`0.8` -> `80.00%`).
pub fn format_rate<T: Scalar>(rate: T) -> String {
    format!("{:.2}%", rate.to_f64().unwrap_or(f64::NAN) * 100.0)
}
