//! Scalar types the decoding-probability formulas are evaluated in.
//!
//! Floating point types go through the log domain for binomial weights, so
//! `C(N, r)` for `N` in the thousands never overflows. [`Rational`] evaluates
//! the same expressions exactly and backs the enumeration oracles in tests.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Exact rational probability.
pub type Rational = BigRational;

/// Exact `C(n, k)`; zero when `k > n`.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Natural log of `C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

/// Arithmetic needed by the decoding-probability formulas.
pub trait Probability: Num + Clone + PartialOrd + Debug + Send + Sync {
    fn from_count(n: u64) -> Self;

    /// `q^{-e}`.
    fn inv_pow(q: u64, e: u64) -> Self;

    /// `∏ C(a_i, b_i) / C(n, k)`. Any factor with `b_i > a_i` makes it zero.
    fn binomial_ratio(num: &[(u64, u64)], den: (u64, u64)) -> Self;

    /// `C(n, r) · success^r · failure^{n-r}`.
    fn binomial_pmf(n: u64, r: u64, success: &Self, failure: &Self) -> Self;

    fn to_f64(&self) -> f64;

    fn powu(&self, e: u64) -> Self {
        let mut base = self.clone();
        let mut e = e;
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    /// `0 ≤ self ≤ 1`.
    fn is_probability(&self) -> bool {
        *self >= Self::zero() && *self <= Self::one()
    }
}

macro_rules! float_probability {
    ($t:ty) => {
        impl Probability for $t {
            fn from_count(n: u64) -> Self {
                n as $t
            }

            fn inv_pow(q: u64, e: u64) -> Self {
                (q as f64).powi(-(e.min(i32::MAX as u64) as i32)) as $t
            }

            fn binomial_ratio(num: &[(u64, u64)], den: (u64, u64)) -> Self {
                if num.iter().any(|&(a, b)| b > a) {
                    return 0.0;
                }
                let ln: f64 = num.iter().map(|&(a, b)| ln_binomial(a, b)).sum::<f64>()
                    - ln_binomial(den.0, den.1);
                ln.exp() as $t
            }

            fn binomial_pmf(n: u64, r: u64, success: &Self, failure: &Self) -> Self {
                if r > n {
                    return 0.0;
                }
                let (s, f) = (*success as f64, *failure as f64);
                let ln_s = if r == 0 { 0.0 } else { s.ln() };
                let ln_f = if r == n { 0.0 } else { f.ln() };
                (ln_binomial(n, r) + r as f64 * ln_s + (n - r) as f64 * ln_f).exp() as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_probability!(f32);
float_probability!(f64);

impl Probability for Rational {
    fn from_count(n: u64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn inv_pow(q: u64, e: u64) -> Self {
        Rational::new(BigInt::one(), BigInt::from(q).pow(e as u32))
    }

    fn binomial_ratio(num: &[(u64, u64)], den: (u64, u64)) -> Self {
        let top = num
            .iter()
            .fold(BigUint::one(), |acc, &(a, b)| acc * binomial_exact(a, b));
        Rational::new(top.into(), binomial_exact(den.0, den.1).into())
    }

    fn binomial_pmf(n: u64, r: u64, success: &Self, failure: &Self) -> Self {
        if r > n {
            return Rational::zero();
        }
        Rational::from_integer(binomial_exact(n, r).into()) * success.powu(r) * failure.powu(n - r)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational `num / den`.
pub fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
