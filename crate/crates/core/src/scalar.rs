//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real scalar type. Implemented for `f32` and `f64`.
///
/// Random draws are always produced in `f64` and narrowed with [`Real::lit`],
/// so a given seed yields the same event structure for both widths.
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Sum + Debug + Display + LowerExp + Default
{
    /// Converts an `f64` literal or draw.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Converts a count or index.
    fn of_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Least-squares slope of `ln y` against `ln x`.
///
/// Returns `None` for fewer than two points or any non-positive value.
pub fn loglog_slope<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return None;
    }
    let n = T::of_usize(xs.len());
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (x, y) in lx.iter().zip(&ly) {
        sxy = sxy + (*x - mx) * (*y - my);
        sxx = sxx + (*x - mx) * (*x - mx);
    }
    if sxx == T::zero() {
        return None;
    }
    Some(sxy / sxx)
}
