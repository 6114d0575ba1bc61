//! Scalar abstraction for the numerical core.
//!
//! Everything numeric in this crate is generic over [`Real`], which is just
//! `num_traits::Float` plus conversion and threading bounds. `f64` is the
//! default throughout (see the aliases in the crate root); `f32` works for
//! the same code at reduced tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + Sum<Self>
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` constant. Infallible for `f32`/`f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant converts to scalar")
    }

    /// Lossy widening back to `f64` for reporting and serialization.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
