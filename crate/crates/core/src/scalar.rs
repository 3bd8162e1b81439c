//! Scalar abstraction shared by the chain, linear-algebra and hitting code.
//!
//! Everything that computes with transition probabilities is generic over
//! [`Scalar`]. The result of record is always computed with the exact
//! [`Rational`](crate::Rational) instantiation; `f64` and `f32` are supported
//! for quick approximate runs and for the sampler.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A field element usable as a transition probability or expected time.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Signed + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic on this type never rounds.
    const EXACT: bool;

    /// Rescale an equation row by a nonzero factor chosen from its first
    /// `coeffs` entries, so that elimination works on smaller entries. Later
    /// entries (the right-hand side) are scaled by the same factor.
    ///
    /// Exact rationals get coprime integer coefficients; floats are untouched.
    fn normalize_row(_row: &mut [Self], _coeffs: usize) {}

    /// Whether `sum` should count as a probability mass of exactly one.
    fn is_unit_mass(sum: &Self) -> bool;

    fn from_ratio(numer: u64, denom: u64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn normalize_row(row: &mut [Self], coeffs: usize) {
        let mut lcm = BigInt::one();
        let mut gcd = BigInt::zero();
        for v in row[..coeffs].iter().filter(|v| !v.is_zero()) {
            lcm = lcm.lcm(v.denom());
        }
        for v in row[..coeffs].iter().filter(|v| !v.is_zero()) {
            gcd = gcd.gcd(&(v.numer() * (&lcm / v.denom())));
        }
        if gcd.is_zero() {
            return;
        }
        let factor = BigRational::new(lcm, gcd);
        if factor.is_one() {
            return;
        }
        for v in row.iter_mut().filter(|v| !v.is_zero()) {
            *v = &*v * &factor;
        }
    }

    fn is_unit_mass(sum: &Self) -> bool {
        sum.is_one()
    }

    fn from_ratio(numer: u64, denom: u64) -> Self {
        BigRational::new(numer.into(), denom.into())
    }
}

macro_rules! float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn is_unit_mass(sum: &Self) -> bool {
                (sum - 1.0).abs() <= $eps
            }

            fn from_ratio(numer: u64, denom: u64) -> Self {
                (numer as f64 / denom as f64) as $t
            }
        }
    };
}

float_scalar!(f64, 1e-12);
float_scalar!(f32, 1e-6);
