//! Scalar types shared across the crate.
//!
//! Feasibility math (utilization, density, success rate) is exact over
//! [`Rational`]. Floating point only appears in reporting and in the
//! polynomial tools, which are generic over [`Real`].

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Exact non-negative rational used for every feasibility decision.
pub type Rational = Ratio<u64>;

/// Floating-point scalar accepted by the polynomial tools.
pub trait Real: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {
    /// Lossy conversion used when reporting exact values.
    fn from_rational(r: &Rational) -> Self {
        let n = Self::from_u64(*r.numer()).unwrap_or_else(Self::nan);
        let d = Self::from_u64(*r.denom()).unwrap_or_else(Self::nan);
        n / d
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an exact rational to `f64` for display.
pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Parse `"3/4"`, `"0.75"` or `"1"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().ok()?;
        let d: u64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let den = 10u64.checked_pow(frac.len() as u32)?;
        let num = int.checked_mul(den)?.checked_add(frac.parse::<u64>().ok()?)?;
        return Some(Rational::new(num, den));
    }
    s.parse::<u64>().ok().map(Rational::from_integer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_and_decimal_forms() {
        assert_eq!(parse_rational("3/4"), Some(Rational::new(3, 4)));
        assert_eq!(parse_rational("0.75"), Some(Rational::new(3, 4)));
        assert_eq!(parse_rational(".5"), Some(Rational::new(1, 2)));
        assert_eq!(parse_rational("1"), Some(Rational::from_integer(1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("-0.5"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn rational_to_real() {
        let r = Rational::new(9, 11);
        assert!((f64::from_rational(&r) - 9.0 / 11.0).abs() < 1e-15);
        assert!((f32::from_rational(&r) - 9.0f32 / 11.0).abs() < 1e-6);
        assert_eq!(to_f64(&Rational::new(4, 5)), 0.8);
    }
}
