//! Scalar abstraction shared by every numerical routine in the crate.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating point scalar: `f32` or `f64`.
///
/// All geometry, spectral and PDE code is written against this trait. Tolerances quoted
/// in the documentation assume `f64`; `f32` runs are useful as a smoke test of the
/// numerical stack but will not meet the tighter bounds.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Area of the unit sphere `S^{k-1}` in `R^k`.
pub fn unit_sphere_area<T: Real>(k: usize) -> T {
    // 2 pi^{k/2} / Gamma(k/2), with Gamma at half-integers by recursion.
    let mut gamma = if k.is_multiple_of(2) { T::one() } else { T::PI().sqrt() };
    let mut a = if k.is_multiple_of(2) { T::one() } else { T::lit(0.5) };
    let target = T::lit(k as f64 / 2.0);
    while a < target {
        gamma *= a;
        a += T::one();
    }
    T::lit(2.0) * T::PI().powf(target) / gamma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area::<f64>(1) - 2.0).abs() < 1e-15);
        assert!((unit_sphere_area::<f64>(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area::<f64>(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((unit_sphere_area::<f64>(4) - 2.0 * pi2).abs() < 1e-13);
        assert!((unit_sphere_area::<f64>(5) - 8.0 * pi2 / 3.0).abs() < 1e-12);
    }
}
