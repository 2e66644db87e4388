//! Scalar types usable for the noise timestamp scaling factor.
//!
//! Timestamps are integers, but the dilation `t * (1 + sigma * d)` needs a
//! fractional factor. Floats (`f32`, `f64`) and an exact rational are
//! supported; the exact type makes half-way cases round deterministically.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, ToPrimitive, Zero};

/// Exact non-negative rational scalar.
pub type Exact = Ratio<u64>;

pub trait Scalar: Copy + Debug + PartialOrd + Zero + Send + Sync + 'static {
    /// `round_half_up(t * (1 + self * distance))`, saturating at `u64::MAX`.
    fn dilate(self, t: u64, distance: u32) -> u64;

    /// Parse a decimal literal such as `0.05` or `1e-2`.
    fn parse_decimal(s: &str) -> Option<Self>;

    fn to_f64(self) -> f64;

    fn is_finite_non_negative(self) -> bool {
        self >= Self::zero() && self.to_f64().is_finite()
    }
}

fn dilate_float<F: Float>(sigma: F, t: u64, distance: u32) -> u64 {
    let (Some(tf), Some(df)) = (F::from(t), F::from(distance)) else {
        return u64::MAX;
    };
    let half = F::from(0.5).unwrap();
    let v = (tf * (F::one() + sigma * df) + half).floor();
    // `to_u64` refuses values past the range; NaN cannot occur for finite sigma.
    v.to_u64().unwrap_or(if v > F::zero() { u64::MAX } else { 0 })
}

impl Scalar for f64 {
    fn dilate(self, t: u64, distance: u32) -> u64 {
        dilate_float(self, t, distance)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn dilate(self, t: u64, distance: u32) -> u64 {
        dilate_float(self, t, distance)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Exact {
    fn dilate(self, t: u64, distance: u32) -> u64 {
        let (n, m) = (*self.numer() as u128, *self.denom() as u128);
        // t * (m + n d) / m, rounded half up: floor((2 t (m + n d) + m) / 2m)
        let scaled = n
            .checked_mul(distance as u128)
            .and_then(|nd| nd.checked_add(m))
            .and_then(|f| f.checked_mul(t as u128))
            .and_then(|p| p.checked_mul(2))
            .and_then(|p| p.checked_add(m));
        match scaled {
            Some(num) => u64::try_from(num / (2 * m)).unwrap_or(u64::MAX),
            None => u64::MAX,
        }
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        parse_exact_decimal(s.trim())
    }

    fn to_f64(self) -> f64 {
        self.numer().to_f64().unwrap_or(f64::INFINITY) / *self.denom() as f64
    }
}

/// Decimal literal (`12`, `0.05`, `.5`, `2.5e-3`) to an exact ratio.
fn parse_exact_decimal(s: &str) -> Option<Exact> {
    let s = s.strip_prefix('+').unwrap_or(s);
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: u64 = digits.parse().ok()?;
    let mut denom: u64 = 1;
    let scale = exp - frac_part.len() as i32;
    if scale >= 0 {
        numer = numer.checked_mul(10u64.checked_pow(scale as u32)?)?;
    } else {
        denom = 10u64.checked_pow((-scale) as u32)?;
    }
    Some(Ratio::new(numer, denom))
}
