//! Scalar abstraction for the numeric engines.
//!
//! The statistical machinery (special functions, contingency statistics, the
//! penalized logistic fitter and its linear algebra) is generic over [`Float`],
//! a thin capability trait on top of `num_traits`, so the same engines run in
//! `f64` (the default everywhere) or `f32`. Concrete `f64` aliases for the
//! user-facing result types live at the crate root.

use num_traits::{Float as NumFloat, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the statistical engines.
///
/// Implemented for `f32` and `f64`. The two conversion helpers exist because
/// the discrete layers of the crate (logs, items, counts) speak `f64`/integers
/// and the engines need cheap, explicit bridges at their boundaries.
pub trait Float:
    NumFloat + FromPrimitive + ToPrimitive + core::fmt::Debug + core::fmt::Display + core::iter::Sum + 'static
{
    /// Convert from `f64`, the crate's lingua franca for domain data.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> scalar conversion")
    }

    /// Convert to `f64` for reporting and serialization.
    #[inline]
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar -> f64 conversion")
    }

    /// Convert from a count.
    #[inline]
    fn of_count(n: u64) -> Self {
        Self::of(n as f64)
    }
}

impl Float for f32 {}
impl Float for f64 {}
