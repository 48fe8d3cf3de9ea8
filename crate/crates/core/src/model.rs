//! Galerkin model: drift `b₁`, Burgers nonlinearity `b₂ = ½ ∂ξ(u²)`, and
//! diffusion `σ`, with the pointwise-operator and Burgers condition checks.

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::spectral::{SpectralBasis, SpectralState};

/// Pointwise map `s: ℝ → ℝ` with `s(0) = 0`, acting as `u(ξ) ↦ s(u(ξ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NemytskiiFn<T> {
    Linear { kappa: T },
    /// `s(x) = amplitude · sin(frequency · x)`.
    ScaledSine { amplitude: T, frequency: T },
}

impl<T: Real> NemytskiiFn<T> {
    pub fn eval(&self, x: T) -> T {
        match *self {
            Self::Linear { kappa } => kappa * x,
            Self::ScaledSine { amplitude, frequency } => amplitude * (frequency * x).sin(),
        }
    }

    pub fn lipschitz_constant(&self) -> T {
        match *self {
            Self::Linear { kappa } => kappa.abs(),
            Self::ScaledSine { amplitude, frequency } => (amplitude * frequency).abs(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }

    /// Grid route: evaluate on the collocation grid, map pointwise, project back.
    pub fn apply_on_grid(&self, basis: &SpectralBasis<T>, u: &SpectralState<T>) -> SpectralState<T> {
        let mut values = basis.evaluate(u);
        for v in values.iter_mut() {
            *v = self.eval(*v);
        }
        basis.project_grid(&values)
    }

    /// `s(u)` projected onto the basis; exact scaling for the linear kind.
    pub fn apply(&self, basis: &SpectralBasis<T>, u: &SpectralState<T>) -> SpectralState<T> {
        match *self {
            Self::Linear { kappa } => u.scaled(kappa),
            Self::ScaledSine { .. } => self.apply_on_grid(basis, u),
        }
    }
}

/// Full specification of the Galerkin system.
#[derive(Debug, Clone)]
pub struct ModelSpec<T: Real> {
    basis: SpectralBasis<T>,
    b1: Option<NemytskiiFn<T>>,
    burgers: bool,
    sigma: NemytskiiFn<T>,
    initial: SpectralState<T>,
    sigma_projection: Option<usize>,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(
        basis: SpectralBasis<T>,
        b1: Option<NemytskiiFn<T>>,
        burgers: bool,
        sigma: NemytskiiFn<T>,
        initial: SpectralState<T>,
        sigma_projection: Option<usize>,
    ) -> Result<Self> {
        let n = basis.modes();
        if burgers && basis.power() != T::one() {
            return Err(invalid("the Burgers term requires fractional power 1"));
        }
        if initial.len() != n {
            return Err(invalid(format!(
                "initial condition has {} coefficients, basis has {n}",
                initial.len()
            )));
        }
        if !initial.is_finite() {
            return Err(invalid("initial condition must be finite"));
        }
        if let Some(p) = sigma_projection {
            if p == 0 || p > n {
                return Err(invalid(format!("sigma projection {p} outside [1, {n}]")));
            }
        }
        Ok(Self { basis, b1, burgers, sigma, initial, sigma_projection })
    }

    pub fn basis(&self) -> &SpectralBasis<T> {
        &self.basis
    }
    pub fn b1(&self) -> Option<&NemytskiiFn<T>> {
        self.b1.as_ref()
    }
    pub fn burgers(&self) -> bool {
        self.burgers
    }
    pub fn sigma(&self) -> &NemytskiiFn<T> {
        &self.sigma
    }
    pub fn initial(&self) -> &SpectralState<T> {
        &self.initial
    }
    pub fn sigma_projection(&self) -> Option<usize> {
        self.sigma_projection
    }

    /// Same model with `σ` replaced by `P_n σ` (or the full `σ` for `None`).
    pub fn with_sigma_projection(&self, n: Option<usize>) -> Result<Self> {
        Self::new(self.basis.clone(), self.b1, self.burgers, self.sigma, self.initial.clone(), n)
    }

    pub fn with_initial(&self, initial: SpectralState<T>) -> Result<Self> {
        Self::new(self.basis.clone(), self.b1, self.burgers, self.sigma, initial, self.sigma_projection)
    }

    /// `σ(u)`, composed with `P_n` when a projection is configured.
    pub fn sigma_of(&self, u: &SpectralState<T>) -> SpectralState<T> {
        let s = self.sigma.apply(&self.basis, u);
        match self.sigma_projection {
            Some(n) => project_prefix(n, s),
            None => s,
        }
    }

    /// `b₁(u)`, or zero when absent.
    pub fn b1_of(&self, u: &SpectralState<T>) -> SpectralState<T> {
        match &self.b1 {
            Some(f) => f.apply(&self.basis, u),
            None => self.basis.zero(),
        }
    }

    /// `⟨b₂(u), e_k⟩`, or zero when the Burgers term is off.
    pub fn b2_of(&self, u: &SpectralState<T>) -> Vec<T> {
        if self.burgers {
            burgers_b2(&self.basis, u)
        } else {
            vec![T::zero(); self.basis.modes()]
        }
    }

    /// Lipschitz constant of `σ`; projection does not increase it.
    pub fn sigma_lipschitz(&self) -> T {
        self.sigma.lipschitz_constant()
    }
}

fn project_prefix<T: Real>(n: usize, mut s: SpectralState<T>) -> SpectralState<T> {
    for c in s.coeffs.iter_mut().skip(n) {
        *c = T::zero();
    }
    s
}

/// Dual coefficients `d_k = ⟨B(u), e_k⟩ = −½ ∫ u² e_k′ dξ` of the Burgers
/// term `B(u) = ½ ∂ξ(u²)`.
///
/// `u²` is squared on the `3N+1`-point grid and paired with
/// `e_k′ = √2 kπ cos(kπξ)`; the integrand is a trigonometric polynomial of
/// degree at most `3N`, so the discrete sum is exact.
pub fn burgers_b2<T: Real>(basis: &SpectralBasis<T>, u: &SpectralState<T>) -> Vec<T> {
    let mut values = basis.evaluate(u);
    for v in values.iter_mut() {
        *v = *v * *v;
    }
    let minus_half = T::lit(-0.5);
    basis
        .transform()
        .pair_with_derivative(&values)
        .into_iter()
        .map(|p| minus_half * p)
        .collect()
}

/// `⟨B(u), u⟩`; zero up to roundoff.
pub fn skew_pairing<T: Real>(basis: &SpectralBasis<T>, u: &SpectralState<T>) -> T {
    burgers_b2(basis, u).iter().zip(&u.coeffs).map(|(d, a)| *d * *a).sum()
}

/// `‖B(u)‖_{V*} = (Σ_k d_k² / λ_k)^{1/2}`.
pub fn dual_norm<T: Real>(basis: &SpectralBasis<T>, dual: &[T]) -> T {
    dual.iter()
        .zip(basis.eigenvalues())
        .map(|(d, l)| *d * *d / *l)
        .sum::<T>()
        .sqrt()
}

/// `‖B(u)‖_{V*} / (|u|_H^{3/2} ‖u‖_V^{1/2})`, which is at most `1/√2`
/// (from `‖B(u)‖²_{V*} ≤ ¼|u|⁴_{L⁴}` and `|u|⁴_{L⁴} ≤ 2|u|³_H ‖u‖_V`).
/// Returns `None` for `u = 0`.
pub fn dual_norm_ratio<T: Real>(basis: &SpectralBasis<T>, u: &SpectralState<T>) -> Option<T> {
    let h = u.h_norm();
    if h == T::zero() {
        return None;
    }
    let v = basis.v_norm(u);
    let d = dual_norm(basis, &burgers_b2(basis, u));
    Some(d / (h.powf(T::lit(1.5)) * v.sqrt()))
}

/// `⟨B(u) − B(v), u − v⟩ − ½‖u − v‖²_V − ½ max_j (u + v)²(ξ_j) |u − v|²_H`,
/// which is non-positive by Young's inequality.
pub fn h2ii_residual<T: Real>(basis: &SpectralBasis<T>, u: &SpectralState<T>, v: &SpectralState<T>) -> T {
    let bu = burgers_b2(basis, u);
    let bv = burgers_b2(basis, v);
    let w = u - v;
    let pairing: T = bu
        .iter()
        .zip(&bv)
        .zip(&w.coeffs)
        .map(|((a, b), c)| (*a - *b) * *c)
        .sum();
    let sum = u + v;
    let max_sq = basis
        .evaluate(&sum)
        .into_iter()
        .fold(T::zero(), |m, x| m.max(x * x));
    let half = T::lit(0.5);
    pairing - half * basis.v_norm_sq(&w) - half * max_sq * w.h_norm_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn basis(n: usize) -> SpectralBasis<f64> {
        SpectralBasis::new(n).unwrap()
    }

    /// Dense midpoint-rule oracle for `−½ ∫ u² e_k′`.
    fn dense_b2(u: &SpectralState<f64>, k: usize, samples: usize) -> f64 {
        let h = 1.0 / samples as f64;
        (0..samples)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                let ux: f64 = u
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * SQRT_2 * ((j + 1) as f64 * PI * x).sin())
                    .sum();
                let de = SQRT_2 * k as f64 * PI * (k as f64 * PI * x).cos();
                -0.5 * ux * ux * de * h
            })
            .sum()
    }

    #[test]
    fn b2_of_first_mode() {
        let b = basis(8);
        let d = burgers_b2(&b, &b.unit(1));
        assert!((d[1] - PI / SQRT_2).abs() < 1e-13);
        for (k, v) in d.iter().enumerate() {
            if k != 1 {
                assert!(v.abs() < 1e-13, "d_{} = {v}", k + 1);
            }
        }
        assert!((dense_b2(&b.unit(1), 2, 20_000) - PI / SQRT_2).abs() < 1e-7);
    }

    #[test]
    fn b2_matches_dense_quadrature() {
        let b = basis(6);
        let u = SpectralState::from_coeffs(vec![0.7, -0.3, 0.2, 0.1, -0.05, 0.02]);
        let d = burgers_b2(&b, &u);
        for k in 1..=6 {
            assert!((d[k - 1] - dense_b2(&u, k, 20_000)).abs() < 1e-7);
        }
    }

    #[test]
    fn b2_of_zero() {
        let b = basis(5);
        assert!(burgers_b2(&b, &b.zero()).iter().all(|d| *d == 0.0));
        assert_eq!(skew_pairing(&b, &b.zero()), 0.0);
        assert_eq!(dual_norm(&b, &burgers_b2(&b, &b.zero())), 0.0);
    }

    #[test]
    fn dual_norm_of_first_mode() {
        let b = basis(8);
        let e1 = b.unit(1);
        let dn = dual_norm(&b, &burgers_b2(&b, &e1));
        assert!((dn - 1.0 / (2.0 * SQRT_2)).abs() < 1e-13);
        let r = dual_norm_ratio(&b, &e1).unwrap();
        assert!((r - 0.199_47).abs() < 1e-5);
        assert!(r < 1.0 / SQRT_2);
    }

    #[test]
    fn skew_pairing_first_mode() {
        let b = basis(8);
        assert!(skew_pairing(&b, &b.unit(1)).abs() < 1e-14);
    }

    #[test]
    fn residual_special_cases() {
        let b = basis(8);
        let u = SpectralState::from_coeffs(vec![0.5, 0.2, -0.1, 0.0, 0.3, 0.0, 0.0, 0.01]);
        assert_eq!(h2ii_residual(&b, &u, &u), 0.0);
        let r = h2ii_residual(&b, &u, &b.zero());
        let max_sq = b.evaluate(&u).into_iter().fold(0.0f64, |m, x| m.max(x * x));
        let expect = -0.5 * b.v_norm_sq(&u) - 0.5 * max_sq * u.h_norm_sq();
        assert!((r - expect).abs() < 1e-10 * expect.abs());
    }

    #[test]
    fn nemytskii_linear() {
        let b = basis(8);
        let u = SpectralState::from_coeffs(vec![0.5, 0.2, -0.1, 0.0, 0.3, 0.0, 0.0, 0.01]);
        let id = NemytskiiFn::Linear { kappa: 1.0 };
        assert_eq!(id.apply(&b, &u), u);
        let grid = id.apply_on_grid(&b, &u);
        for (x, y) in grid.coeffs.iter().zip(&u.coeffs) {
            assert!((x - y).abs() < 1e-13);
        }
        let s = NemytskiiFn::Linear { kappa: 2.5 }.apply(&b, &b.unit(1));
        assert_eq!(s.coeffs[0], 2.5);
        assert!(s.coeffs[1..].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn nemytskii_sine_matches_dense_projection() {
        let b = basis(12);
        let f = NemytskiiFn::ScaledSine { amplitude: 1.0, frequency: 1.0 };
        let got = f.apply(&b, &b.unit(1));
        let samples = 10_000;
        let h = 1.0 / samples as f64;
        for k in 1..=12 {
            let oracle: f64 = (0..samples)
                .map(|i| {
                    let x = (i as f64 + 0.5) * h;
                    (SQRT_2 * (PI * x).sin()).sin() * SQRT_2 * (k as f64 * PI * x).sin() * h
                })
                .sum();
            assert!((got.coeffs[k - 1] - oracle).abs() < 1e-8, "k={k}");
        }
    }

    #[test]
    fn nemytskii_vanishes_at_zero() {
        let f = NemytskiiFn::ScaledSine { amplitude: 2.0, frequency: 3.0 };
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.lipschitz_constant(), 6.0);
        assert_eq!(NemytskiiFn::Linear { kappa: -0.5 }.lipschitz_constant(), 0.5);
    }

    #[test]
    fn model_validation() {
        let sigma = NemytskiiFn::Linear { kappa: 0.5 };
        let frac = SpectralBasis::fractional(4, 0.5).unwrap();
        assert!(ModelSpec::new(frac.clone(), None, true, sigma, frac.unit(1), None).is_err());
        assert!(ModelSpec::new(frac.clone(), None, false, sigma, frac.unit(1), None).is_ok());
        let b = basis(4);
        assert!(ModelSpec::new(b.clone(), None, true, sigma, b.unit(1), Some(5)).is_err());
        assert!(ModelSpec::new(b.clone(), None, true, sigma, b.unit(1), Some(0)).is_err());
        assert!(ModelSpec::new(b.clone(), None, true, sigma, SpectralState::zeros(3), None).is_err());
    }

    #[test]
    fn projected_sigma_zeroes_tail() {
        let b = basis(6);
        let m = ModelSpec::new(b.clone(), None, true, NemytskiiFn::Linear { kappa: 1.0 }, b.unit(1), Some(2))
            .unwrap();
        let u = SpectralState::from_coeffs(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.sigma_of(&u).coeffs, vec![1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
