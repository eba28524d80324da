//! Scalar abstraction shared by every numeric routine in the crate.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the filtering pipeline can run in: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Number of mantissa bits (including the implicit one).
    const MANTISSA_BITS: u32;

    /// Maps 64 random bits to a value strictly inside `(0, 1)`.
    ///
    /// Uses the top `MANTISSA_BITS - 1` bits plus a half-step offset so that
    /// both endpoints are unreachable after rounding.
    fn open_unit(bits: u64) -> Self;

    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Lossy conversion from `f64`; panics only for values the target type cannot hold at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const MANTISSA_BITS: u32 = 24;

    #[inline]
    fn open_unit(bits: u64) -> Self {
        // max = (2^23 - 1/2) 2^-23 = 1 - 2^-24, exactly representable.
        ((bits >> 41) as f32 + 0.5) * (1.0 / (1u64 << 23) as f32)
    }

    #[inline]
    fn total_cmp(&self, other: &Self) -> Ordering {
        f32::total_cmp(self, other)
    }
}

impl Real for f64 {
    const MANTISSA_BITS: u32 = 53;

    #[inline]
    fn open_unit(bits: u64) -> Self {
        ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    #[inline]
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }
}

/// Working precision selected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "sp" | "f32" => Ok(Precision::Single),
            "double" | "dp" | "f64" => Ok(Precision::Double),
            other => Err(format!(
                "unknown precision `{other}` (expected single|double)"
            )),
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
