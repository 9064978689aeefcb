//! Scalar abstractions.
//!
//! Graph bookkeeping, the limit endpoints `A_j` and the design weights are
//! plain field arithmetic, so they run on any [`Scalar`] including exact
//! rationals. Everything that needs square roots, eigenvalues or bisection
//! requires [`Real`] (`f32` or `f64`).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, RemAssign, SubAssign};

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Field-like scalar: exact or floating point.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + Debug + Send + Sync + FromPrimitive + ToPrimitive + 'static
{
    /// Comparison tolerance for a nominal relative tolerance `rel`.
    ///
    /// Floats clamp `rel` from below by a few machine epsilons; exact types
    /// return zero.
    fn tolerance(rel: f64) -> Self;

    /// Parse a decimal literal such as `"-1.25e-3"` or a fraction `"1/3"`.
    /// Exact types keep every digit.
    fn parse_decimal(s: &str) -> Option<Self>;

    fn is_finite_value(&self) -> bool;

    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

/// Floating-point scalar used by every spectral computation.
pub trait Real:
    Scalar
    + Float
    + FloatConst
    + Display
    + LowerExp
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
{
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }
}

macro_rules! impl_float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn tolerance(rel: f64) -> Self {
                let floor = 16.0 * (<$t>::EPSILON as f64);
                rel.max(floor) as $t
            }

            fn parse_decimal(s: &str) -> Option<Self> {
                match s.split_once('/') {
                    Some((num, den)) => Some(num.trim().parse::<$t>().ok()? / den.trim().parse::<$t>().ok()?),
                    None => s.trim().parse::<$t>().ok(),
                }
            }

            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }
        }

        impl Real for $t {}
    )*};
}

impl_float_scalar!(f32, f64);

impl Scalar for Rational64 {
    fn tolerance(_rel: f64) -> Self {
        Rational64::from_integer(0)
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        parse_rational(s.trim())
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

fn parse_rational(s: &str) -> Option<Rational64> {
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Rational64::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: i64 = if all_digits.is_empty() { 0 } else { all_digits.parse().ok()? };
    let scale = exponent - frac_part.len() as i32;
    let mut denom: i64 = 1;
    if scale >= 0 {
        numer = numer.checked_mul(10i64.checked_pow(scale as u32)?)?;
    } else {
        denom = 10i64.checked_pow((-scale) as u32)?;
    }
    if negative {
        numer = -numer;
    }
    Some(Rational64::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_decimal_parsing_is_exact() {
        assert_eq!(Rational64::parse_decimal("0.5"), Some(Rational64::new(1, 2)));
        assert_eq!(Rational64::parse_decimal("-1.25"), Some(Rational64::new(-5, 4)));
        assert_eq!(Rational64::parse_decimal("3"), Some(Rational64::from_integer(3)));
        assert_eq!(Rational64::parse_decimal("1e-2"), Some(Rational64::new(1, 100)));
        assert_eq!(Rational64::parse_decimal("2/6"), Some(Rational64::new(1, 3)));
        assert_eq!(Rational64::parse_decimal("abc"), None);
        assert_eq!(Rational64::parse_decimal("1/0"), None);
    }

    #[test]
    fn float_tolerance_has_a_floor() {
        assert_eq!(<f64 as Scalar>::tolerance(1e-3), 1e-3);
        assert!(<f32 as Scalar>::tolerance(1e-12) > 1e-7);
        assert_eq!(<Rational64 as Scalar>::tolerance(1e-12), Rational64::from_integer(0));
    }
}
