//! Dirichlet sine eigenbasis on `[0, 1]` and coefficient-space states.
//!
//! `e_k(ξ) = √2 sin(kπξ)`, `A e_k = λ_k e_k` with `λ_k = (π²k²)^s`. A state is
//! the coefficient vector `a_k = ⟨u, e_k⟩`, so `|u|_H² = Σ a_k²` and
//! `‖u‖_V² = Σ λ_k a_k²`. With these norms `2⟨Au, u⟩ = 2‖u‖_V²` holds
//! identically, i.e. the coercivity constants are `(2, 2, 0)`.

use std::ops::{Add, Sub};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::transform::SineTransform;

/// Coercivity constants `(α₀, α₁, λ₀)` realized by the diagonal model.
pub const COERCIVITY: (f64, f64, f64) = (2.0, 2.0, 0.0);

#[derive(Debug, Clone)]
pub struct SpectralBasis<T: Real> {
    power: T,
    eigenvalues: Vec<T>,
    transform: SineTransform<T>,
}

impl<T: Real> SpectralBasis<T> {
    /// Laplacian basis (`s = 1`).
    pub fn new(modes: usize) -> Result<Self> {
        Self::fractional(modes, T::one())
    }

    /// Spectral fractional power `s ∈ (0, 1]` of the Dirichlet Laplacian.
    pub fn fractional(modes: usize, power: T) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("basis needs at least one mode"));
        }
        if !(power > T::zero() && power <= T::one()) {
            return Err(invalid("fractional power must lie in (0, 1]"));
        }
        let pi2 = T::PI() * T::PI();
        let eigenvalues = (1..=modes)
            .map(|k| {
                let kk = T::of_usize(k);
                let lap = pi2 * kk * kk;
                if power == T::one() {
                    lap
                } else {
                    lap.powf(power)
                }
            })
            .collect();
        Ok(Self {
            power,
            eigenvalues,
            transform: SineTransform::new(modes),
        })
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn transform(&self) -> &SineTransform<T> {
        &self.transform
    }

    pub fn zero(&self) -> SpectralState<T> {
        SpectralState::zeros(self.modes())
    }

    /// The basis vector `e_k` (1-based).
    pub fn unit(&self, k: usize) -> SpectralState<T> {
        let mut s = self.zero();
        s.coeffs[k - 1] = T::one();
        s
    }

    pub fn h_norm(&self, u: &SpectralState<T>) -> T {
        u.h_norm()
    }

    pub fn v_norm(&self, u: &SpectralState<T>) -> T {
        self.v_norm_sq(u).sqrt()
    }

    pub fn v_norm_sq(&self, u: &SpectralState<T>) -> T {
        u.coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(a, l)| *l * *a * *a)
            .sum()
    }

    pub fn apply_a(&self, u: &SpectralState<T>) -> SpectralState<T> {
        SpectralState {
            coeffs: u.coeffs.iter().zip(&self.eigenvalues).map(|(a, l)| *a * *l).collect(),
        }
    }

    /// Values of `u` on the collocation grid.
    pub fn evaluate(&self, u: &SpectralState<T>) -> Vec<T> {
        self.transform.synthesize(&u.coeffs)
    }

    /// Discrete projection of grid values back onto the basis.
    pub fn project_grid(&self, values: &[T]) -> SpectralState<T> {
        SpectralState { coeffs: self.transform.analyze(values) }
    }

    /// Orthogonal projection onto the first `n` modes.
    pub fn project(&self, n: usize, w: &SpectralState<T>) -> Result<SpectralState<T>> {
        if n == 0 || n > self.modes() {
            return Err(invalid(format!("projection size {n} outside [1, {}]", self.modes())));
        }
        let mut out = w.clone();
        for c in out.coeffs.iter_mut().skip(n) {
            *c = T::zero();
        }
        Ok(out)
    }

    /// Largest deviation of the discrete Gram matrix `(M+1)^{-1} Σ_j e_a(ξ_j) e_b(ξ_j)`
    /// from the identity.
    pub fn gram_defect(&self) -> T {
        let n = self.modes();
        let rows: Vec<Vec<T>> = (1..=n).map(|k| self.evaluate(&self.unit(k))).collect();
        let w = T::one() / T::of_usize(self.transform.points() + 1);
        let mut worst = T::zero();
        for a in 0..n {
            for b in a..n {
                let g = rows[a].iter().zip(&rows[b]).map(|(x, y)| *x * *y).sum::<T>() * w;
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Solution snapshot as sine coefficients `a_1..a_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> SpectralState<T> {
    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![T::zero(); n] }
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn inner(&self, other: &Self) -> T {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a * *b).sum()
    }

    pub fn h_norm_sq(&self) -> T {
        self.inner(self)
    }

    pub fn h_norm(&self) -> T {
        self.h_norm_sq().sqrt()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| *c * factor).collect() }
    }
}

impl<T: Real> Add for &SpectralState<T> {
    type Output = SpectralState<T>;
    fn add(self, rhs: Self) -> SpectralState<T> {
        SpectralState {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &SpectralState<T> {
    type Output = SpectralState<T>;
    fn sub(self, rhs: Self) -> SpectralState<T> {
        SpectralState {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| *a - *b).collect(),
        }
    }
}
