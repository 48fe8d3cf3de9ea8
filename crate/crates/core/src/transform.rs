//! Discrete sine/cosine sums on the interior collocation grid
//! `ξ_j = j / (M + 1)`, `j = 1..=M`.
//!
//! With the trapezoid weight `1/(M+1)` these sums integrate every
//! `cos(mπξ)` with `m < 2(M+1)` exactly, which is what makes the
//! pseudospectral Burgers pairing quadrature-exact when `M ≥ 3N + 1`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Above this many modes the sums are evaluated with an FFT of length
/// `2(M+1)` instead of the dense tables.
pub const FFT_MODE_THRESHOLD: usize = 64;

#[derive(Clone)]
enum Backend<T: Real> {
    /// Row-major `N × M` tables of `√2 sin(kπξ_j)` and `√2 kπ cos(kπξ_j)`.
    Table { sin: Vec<T>, dcos: Vec<T> },
    Fft(Arc<dyn Fft<T>>),
}

/// Transform pair between `N` sine coefficients and `M = 3N + 1` grid values.
#[derive(Clone)]
pub struct SineTransform<T: Real> {
    modes: usize,
    points: usize,
    backend: Backend<T>,
}

impl<T: Real> std::fmt::Debug for SineTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Table { .. } => "table",
            Backend::Fft(_) => "fft",
        };
        f.debug_struct("SineTransform")
            .field("modes", &self.modes)
            .field("points", &self.points)
            .field("backend", &kind)
            .finish()
    }
}

impl<T: Real> SineTransform<T> {
    pub fn new(modes: usize) -> Self {
        Self::with_backend(modes, modes > FFT_MODE_THRESHOLD)
    }

    pub fn with_backend(modes: usize, use_fft: bool) -> Self {
        let points = 3 * modes + 1;
        let backend = if use_fft {
            let mut planner = FftPlanner::new();
            Backend::Fft(planner.plan_fft_forward(2 * (points + 1)))
        } else {
            let h = T::PI() / T::of_usize(points + 1);
            let root2 = T::SQRT_2();
            let mut sin = Vec::with_capacity(modes * points);
            let mut dcos = Vec::with_capacity(modes * points);
            for k in 1..=modes {
                let kk = T::of_usize(k);
                for j in 1..=points {
                    let phase = kk * T::of_usize(j) * h;
                    sin.push(root2 * phase.sin());
                    dcos.push(root2 * kk * T::PI() * phase.cos());
                }
            }
            Backend::Table { sin, dcos }
        };
        Self { modes, points, backend }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn uses_fft(&self) -> bool {
        matches!(self.backend, Backend::Fft(_))
    }

    /// Grid abscissae `ξ_j`.
    pub fn nodes(&self) -> Vec<T> {
        let h = T::one() / T::of_usize(self.points + 1);
        (1..=self.points).map(|j| T::of_usize(j) * h).collect()
    }

    /// `u(ξ_j) = Σ_k a_k √2 sin(kπξ_j)`.
    pub fn synthesize(&self, coeffs: &[T]) -> Vec<T> {
        debug_assert_eq!(coeffs.len(), self.modes);
        match &self.backend {
            Backend::Table { sin, .. } => {
                let mut out = vec![T::zero(); self.points];
                for (k, &a) in coeffs.iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    let row = &sin[k * self.points..(k + 1) * self.points];
                    for (o, s) in out.iter_mut().zip(row) {
                        *o = *o + a * *s;
                    }
                }
                out
            }
            Backend::Fft(fft) => {
                let sums = odd_sums(fft.as_ref(), coeffs, self.points, self.points);
                sums.into_iter().map(|s| s * T::SQRT_2()).collect()
            }
        }
    }

    /// Discrete projection `a_k = (M+1)^{-1} Σ_j v_j √2 sin(kπξ_j)`.
    pub fn analyze(&self, values: &[T]) -> Vec<T> {
        debug_assert_eq!(values.len(), self.points);
        let w = T::one() / T::of_usize(self.points + 1);
        match &self.backend {
            Backend::Table { sin, .. } => (0..self.modes)
                .map(|k| {
                    let row = &sin[k * self.points..(k + 1) * self.points];
                    row.iter().zip(values).map(|(s, v)| *s * *v).sum::<T>() * w
                })
                .collect(),
            Backend::Fft(fft) => odd_sums(fft.as_ref(), values, self.points, self.modes)
                .into_iter()
                .map(|s| s * T::SQRT_2() * w)
                .collect(),
        }
    }

    /// Discrete pairing `(M+1)^{-1} Σ_j v_j e_k'(ξ_j)` with
    /// `e_k'(ξ) = √2 kπ cos(kπξ)`; the endpoint nodes are omitted, so `v`
    /// must vanish at ξ = 0 and ξ = 1.
    pub fn pair_with_derivative(&self, values: &[T]) -> Vec<T> {
        debug_assert_eq!(values.len(), self.points);
        let w = T::one() / T::of_usize(self.points + 1);
        match &self.backend {
            Backend::Table { dcos, .. } => (0..self.modes)
                .map(|k| {
                    let row = &dcos[k * self.points..(k + 1) * self.points];
                    row.iter().zip(values).map(|(c, v)| *c * *v).sum::<T>() * w
                })
                .collect(),
            Backend::Fft(fft) => even_sums(fft.as_ref(), values, self.points, self.modes)
                .into_iter()
                .enumerate()
                .map(|(k, c)| c * T::SQRT_2() * T::of_usize(k + 1) * T::PI() * w)
                .collect(),
        }
    }
}

/// `S_k = Σ_{j=1}^{len} x_j sin(πkj/(M+1))` for `k = 1..=count`, via the odd
/// extension: the DFT of the extension equals `-2i S_k`.
fn odd_sums<T: Real>(fft: &dyn Fft<T>, input: &[T], points: usize, count: usize) -> Vec<T> {
    let len = 2 * (points + 1);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for (j, &x) in input.iter().enumerate() {
        buf[j + 1] = Complex::new(x, T::zero());
        buf[len - j - 1] = Complex::new(-x, T::zero());
    }
    fft.process(&mut buf);
    let half = T::lit(0.5);
    (1..=count).map(|k| -buf[k].im * half).collect()
}

/// `C_k = Σ_{j=1}^{len} x_j cos(πkj/(M+1))` for `k = 1..=count`, via the
/// even extension: the DFT of the extension equals `2 C_k`.
fn even_sums<T: Real>(fft: &dyn Fft<T>, input: &[T], points: usize, count: usize) -> Vec<T> {
    let len = 2 * (points + 1);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for (j, &x) in input.iter().enumerate() {
        buf[j + 1] = Complex::new(x, T::zero());
        buf[len - j - 1] = Complex::new(x, T::zero());
    }
    fft.process(&mut buf);
    let half = T::lit(0.5);
    (1..=count).map(|k| buf[k].re * half).collect()
}
