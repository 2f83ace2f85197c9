//! Floating point abstraction shared by every solver and kernel.

use ndarray::NdFloat;
use num_traits::FromPrimitive;
use std::iter::Sum;

/// Real scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar: NdFloat + FromPrimitive + Default + Sum {
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in the
    /// implementing types, so this never fails.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|w|^alpha` with `0^0 = 1`, so `alpha = 0` always yields a unit multiplier.
#[inline]
pub fn weight_pow<F: Scalar>(w: F, alpha: F) -> F {
    if alpha == F::zero() {
        F::one()
    } else {
        w.abs().powf(alpha)
    }
}
