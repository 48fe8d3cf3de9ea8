//! Two-sample statistics on path functionals.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

fn euclid<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>().sqrt()
}

/// Mean of `‖x_i − y_j‖` over all `n·m` pairs, summed row by row in index order.
fn mean_pairwise<T: Real, V: AsRef<[T]>>(xs: &[V], ys: &[V]) -> T {
    let total: T = xs
        .iter()
        .map(|x| ys.iter().map(|y| euclid(x.as_ref(), y.as_ref())).sum::<T>())
        .sum();
    total / (T::of_usize(xs.len()) * T::of_usize(ys.len()))
}

fn cmp_samples<T: Real, V: AsRef<[T]>>(a: &[V], b: &[V]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            for (p, q) in x.as_ref().iter().zip(y.as_ref()) {
                match p.partial_cmp(q) {
                    Some(Ordering::Equal) | None => continue,
                    Some(o) => return o,
                }
            }
        }
        Ordering::Equal
    })
}

/// Energy distance `2 E‖a − b‖ − E‖a − a′‖ − E‖b − b′‖` between the
/// empirical distributions of two samples (V-statistic, all pairs).
///
/// The arguments are put into a canonical order first, so the value is
/// bitwise symmetric, and `energy_distance(A, A)` is exactly zero.
pub fn energy_distance<T: Real, V: AsRef<[T]>>(a: &[V], b: &[V]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (x, y) = if cmp_samples(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let xy = mean_pairwise(x, y);
    let xx = mean_pairwise(x, x);
    let yy = mean_pairwise(y, y);
    Ok((xy + xy - xx - yy).max(T::zero()))
}

/// Kolmogorov–Smirnov statistic `sup_t |F_a(t) − F_b(t)|`.
pub fn ks_statistic<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap_or(Ordering::Equal));
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap_or(Ordering::Equal));
    let (n, m) = (T::of_usize(xs.len()), T::of_usize(ys.len()));
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = T::zero();
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        worst = worst.max((T::of_usize(i) / n - T::of_usize(j) / m).abs());
    }
    Ok(worst)
}

/// Sample mean with its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub stderr: T,
}

impl<T: Real> Estimate<T> {
    /// Fixed-order mean and standard error; zero error for a single value.
    pub fn of(values: &[T]) -> Self {
        if values.is_empty() {
            return Self { mean: T::nan(), stderr: T::nan() };
        }
        let n = T::of_usize(values.len());
        let mean = values.iter().copied().sum::<T>() / n;
        if values.len() < 2 {
            return Self { mean, stderr: T::zero() };
        }
        let var = values.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / (n - T::one());
        Self { mean, stderr: (var / n).sqrt() }
    }

    pub fn relative_stderr(&self) -> T {
        self.stderr / self.mean.abs()
    }
}
