//! Jump and diffusion generators on polynomial cylinder functions.
//!
//! For `f(z) = g(⟨z,e_{k_1}⟩, …, ⟨z,e_{k_m}⟩)` with `deg g ≤ 3` the Taylor
//! expansion of `f(z + wx/α) − f(z) − ⟨f′(z), wx/α⟩` terminates, so the jump
//! integral of `L^ε f` collapses to
//! `½ f″(z)(σ,σ) · M₂/α² + (1/6) D³f(z)(σ,σ,σ) · M₃/α³`
//! with `M₂ = ∫_{|x|≤ε} x² ν(dx) = α²` and `M₃ = ∫_{|x|≤ε} x³ ν(dx)`. The
//! diffusion generator keeps only `½ f″(z)(σ,σ)`; the drift parts coincide.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::levy::LevyMeasure;
use crate::model::ModelSpec;
use crate::scalar::{loglog_slope, Real};
use crate::spectral::{SpectralBasis, SpectralState};
use crate::stream::PathStream;

pub const MAX_VARIABLES: usize = 4;
pub const MAX_DEGREE: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T> {
    pub coef: T,
    /// One exponent per variable of the cylinder function.
    pub powers: Vec<u32>,
}

/// Polynomial in the coordinates `⟨z, e_{k_i}⟩`, with its partial
/// derivatives up to third order precomputed.
#[derive(Debug, Clone)]
pub struct CylinderFunction<T> {
    modes: Vec<usize>,
    terms: Vec<Monomial<T>>,
    grad: Vec<Vec<Monomial<T>>>,
    hess: Vec<Vec<Monomial<T>>>,
    third: Vec<Vec<Monomial<T>>>,
}

fn derive<T: Real>(terms: &[Monomial<T>], var: usize) -> Vec<Monomial<T>> {
    terms
        .iter()
        .filter(|t| t.powers[var] > 0)
        .map(|t| {
            let mut powers = t.powers.clone();
            let p = powers[var];
            powers[var] -= 1;
            Monomial { coef: t.coef * T::lit(p as f64), powers }
        })
        .collect()
}

fn eval_poly<T: Real>(terms: &[Monomial<T>], y: &[T]) -> T {
    terms
        .iter()
        .map(|t| {
            t.powers
                .iter()
                .zip(y)
                .fold(t.coef, |acc, (p, v)| acc * v.powi(*p as i32))
        })
        .sum()
}

impl<T: Real> CylinderFunction<T> {
    /// `modes` are 1-based, distinct; every monomial has one exponent per mode.
    pub fn new(modes: Vec<usize>, terms: Vec<Monomial<T>>) -> Result<Self> {
        let m = modes.len();
        if m == 0 || m > MAX_VARIABLES {
            return Err(invalid(format!("cylinder function needs 1..={MAX_VARIABLES} modes")));
        }
        if modes.contains(&0) {
            return Err(invalid("mode indices are 1-based"));
        }
        let mut sorted = modes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != m {
            return Err(invalid("cylinder modes must be distinct"));
        }
        for t in &terms {
            if t.powers.len() != m {
                return Err(invalid("monomial exponent count must match the number of modes"));
            }
            if t.powers.iter().sum::<u32>() > MAX_DEGREE {
                return Err(invalid(format!("total degree must be at most {MAX_DEGREE}")));
            }
            if !t.coef.is_finite() {
                return Err(invalid("monomial coefficients must be finite"));
            }
        }
        let grad: Vec<_> = (0..m).map(|i| derive(&terms, i)).collect();
        let mut hess = Vec::with_capacity(m * m);
        let mut third = Vec::with_capacity(m * m * m);
        for gi in &grad {
            for j in 0..m {
                let hij = derive(gi, j);
                for l in 0..m {
                    third.push(derive(&hij, l));
                }
                hess.push(hij);
            }
        }
        Ok(Self { modes, terms, grad, hess, third })
    }

    /// `⟨z, e_k⟩^power`.
    pub fn coordinate_power(mode: usize, power: u32) -> Result<Self> {
        Self::new(vec![mode], vec![Monomial { coef: T::one(), powers: vec![power] }])
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.powers.iter().sum::<u32>()).max().unwrap_or(0)
    }

    fn coords(&self, z: &SpectralState<T>) -> Vec<T> {
        self.modes.iter().map(|k| z.coeffs[k - 1]).collect()
    }

    pub fn value(&self, z: &SpectralState<T>) -> T {
        eval_poly(&self.terms, &self.coords(z))
    }

    /// Partial derivatives of `g` at the coordinates of `z`.
    pub fn gradient(&self, z: &SpectralState<T>) -> Vec<T> {
        let y = self.coords(z);
        self.grad.iter().map(|p| eval_poly(p, &y)).collect()
    }

    /// `f″(z)(w, w)`.
    pub fn second_along(&self, z: &SpectralState<T>, w: &SpectralState<T>) -> T {
        let y = self.coords(z);
        let wv = self.coords(w);
        let m = self.modes.len();
        let mut acc = T::zero();
        for i in 0..m {
            for j in 0..m {
                acc = acc + eval_poly(&self.hess[i * m + j], &y) * wv[i] * wv[j];
            }
        }
        acc
    }

    /// `D³f(z)(w, w, w)`.
    pub fn third_along(&self, z: &SpectralState<T>, w: &SpectralState<T>) -> T {
        let y = self.coords(z);
        let wv = self.coords(w);
        let m = self.modes.len();
        let mut acc = T::zero();
        for i in 0..m {
            for j in 0..m {
                for l in 0..m {
                    acc = acc + eval_poly(&self.third[(i * m + j) * m + l], &y) * wv[i] * wv[j] * wv[l];
                }
            }
        }
        acc
    }

    fn check_modes(&self, basis: &SpectralBasis<T>) -> Result<()> {
        if self.modes.iter().any(|k| *k > basis.modes()) {
            return Err(invalid("cylinder function references a mode beyond the basis"));
        }
        Ok(())
    }
}

/// Drift part shared by both generators:
/// `−⟨A f′(z), z⟩ + ⟨b₁(z), f′(z)⟩ + ⟨b₂(z), f′(z)⟩`.
fn drift_part<T: Real>(model: &ModelSpec<T>, f: &CylinderFunction<T>, z: &SpectralState<T>) -> T {
    let grad = f.gradient(z);
    let lambda = model.basis().eigenvalues();
    let b1 = model.b1_of(z);
    let b2 = model.b2_of(z);
    f.modes
        .iter()
        .zip(&grad)
        .map(|(k, g)| {
            let i = k - 1;
            *g * (-lambda[i] * z.coeffs[i] + b1.coeffs[i] + b2[i])
        })
        .sum()
}

/// Diffusion generator `L f(z)`.
pub fn eval_l<T: Real>(model: &ModelSpec<T>, f: &CylinderFunction<T>, z: &SpectralState<T>) -> Result<T> {
    f.check_modes(model.basis())?;
    let sigma = model.sigma_of(z);
    Ok(drift_part(model, f, z) + T::lit(0.5) * f.second_along(z, &sigma))
}

/// Jump generator `L^ε f(z)` in closed form.
pub fn eval_l_eps<T: Real>(
    model: &ModelSpec<T>,
    measure: &LevyMeasure<T>,
    eps: T,
    f: &CylinderFunction<T>,
    z: &SpectralState<T>,
) -> Result<T> {
    f.check_modes(model.basis())?;
    let m2 = measure.truncated_second_moment(eps);
    if m2 == T::zero() {
        return Err(Error::SmallJumpMassAbsent { eps: eps.to_f64_lossy() });
    }
    let alpha = m2.sqrt();
    let m3 = measure.truncated_third_moment(eps);
    let sigma = model.sigma_of(z);
    let second = T::lit(0.5) * f.second_along(z, &sigma) * (m2 / (alpha * alpha));
    let third = if m3 == T::zero() {
        T::zero()
    } else {
        f.third_along(z, &sigma) * (m3 / (alpha * alpha * alpha)) / T::lit(6.0)
    };
    Ok(drift_part(model, f, z) + second + third)
}

/// Closed-form prediction of `L^ε f(z) − L f(z)` from the cubic term alone:
/// `(1/6) D³f(σ,σ,σ) · M₃/α³`.
pub fn predicted_gap<T: Real>(
    model: &ModelSpec<T>,
    measure: &LevyMeasure<T>,
    eps: T,
    f: &CylinderFunction<T>,
    z: &SpectralState<T>,
) -> Result<T> {
    let alpha = measure.alpha(eps);
    if alpha == T::zero() {
        return Err(Error::SmallJumpMassAbsent { eps: eps.to_f64_lossy() });
    }
    let sigma = model.sigma_of(z);
    let m3 = measure.truncated_third_moment(eps);
    Ok(f.third_along(z, &sigma) * (m3 / (alpha * alpha * alpha)) / T::lit(6.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow<T> {
    pub eps: T,
    pub alpha: T,
    pub ratio: T,
    /// `sup_z |L^ε f(z) − L f(z)|` over the sampled ball.
    pub sup_gap: T,
    /// `sup_z |(1/6) D³f(σ,σ,σ)| · |M₃|/α³`.
    pub predicted_gap: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSweep<T> {
    pub rows: Vec<GapRow<T>>,
    /// Log-log slope of `sup_gap` against `eps`; `None` when the gaps vanish.
    pub slope: Option<T>,
    /// Every gap is zero up to roundoff (degree ≤ 2, or odd moments cancel).
    pub exact: bool,
}

/// Sup of the generator gap over `z_samples` (all inside the `ball_radius`
/// ball) for each `eps` in the grid.
pub fn generator_gap_sweep<T: Real>(
    model: &ModelSpec<T>,
    measure: &LevyMeasure<T>,
    f: &CylinderFunction<T>,
    ball_radius: T,
    z_samples: &[SpectralState<T>],
    eps_grid: &[T],
) -> Result<GapSweep<T>> {
    if z_samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let slack = T::one() + T::lit(1e-12);
    if z_samples.iter().any(|z| z.h_norm() > ball_radius * slack) {
        return Err(invalid("sample point outside the ball"));
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    let mut all_zero = true;
    for &eps in eps_grid {
        let alpha = measure.alpha(eps);
        if alpha == T::zero() {
            return Err(Error::SmallJumpMassAbsent { eps: eps.to_f64_lossy() });
        }
        let mut sup_gap = T::zero();
        let mut sup_pred = T::zero();
        for z in z_samples {
            let l = eval_l(model, f, z)?;
            let le = eval_l_eps(model, measure, eps, f, z)?;
            let gap = (le - l).abs();
            sup_gap = sup_gap.max(gap);
            sup_pred = sup_pred.max(predicted_gap(model, measure, eps, f, z)?.abs());
            // Zero up to the roundoff of the calibrated second-order term.
            let scale = T::one() + l.abs() + le.abs();
            if gap > T::lit(1e-13) * scale {
                all_zero = false;
            }
        }
        rows.push(GapRow { eps, alpha, ratio: eps / alpha, sup_gap, predicted_gap: sup_pred });
    }
    let slope = if all_zero {
        None
    } else {
        let eps: Vec<T> = rows.iter().map(|r| r.eps).collect();
        let gaps: Vec<T> = rows.iter().map(|r| r.sup_gap).collect();
        loglog_slope(&eps, &gaps)
    };
    Ok(GapSweep { rows, slope, exact: all_zero })
}

/// Deterministic sample of `count` states in the ball `|z|_H ≤ radius`:
/// Gaussian direction, radius scaled by a uniform draw (the last sample
/// sits on the sphere).
pub fn sample_ball<T: Real>(basis: &SpectralBasis<T>, radius: T, count: usize, seed: u64) -> Vec<SpectralState<T>> {
    let mut rng = PathStream::new(seed, 0).brownian;
    (0..count)
        .map(|i| {
            let dir: Vec<f64> = (0..basis.modes()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r: f64 = if i + 1 == count { 1.0 } else { rng.random() };
            let scale = radius.to_f64_lossy() * r / norm;
            let mut s = SpectralState::from_coeffs(dir.iter().map(|x| T::lit(x * scale)).collect());
            let h = s.h_norm();
            if h > radius {
                s = s.scaled(radius / h);
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Sidedness;
    use crate::model::NemytskiiFn;
    use crate::quadrature;
    use std::f64::consts::PI;

    fn burgers_model(n: usize) -> ModelSpec<f64> {
        let b = SpectralBasis::new(n).unwrap();
        let h = b.unit(1);
        ModelSpec::new(b, None, true, NemytskiiFn::Linear { kappa: 1.0 }, h, None).unwrap()
    }

    /// `L f` with `f′`, `f″` from central differences of `f` along coordinates.
    fn fd_l(model: &ModelSpec<f64>, f: &CylinderFunction<f64>, z: &SpectralState<f64>) -> f64 {
        let n = model.basis().modes();
        let h = 1e-4;
        let shift = |i: usize, d: f64| {
            let mut w = z.clone();
            w.coeffs[i] += d;
            w
        };
        let grad: Vec<f64> = (0..n)
            .map(|i| (f.value(&shift(i, h)) - f.value(&shift(i, -h))) / (2.0 * h))
            .collect();
        let sigma = model.sigma_of(z);
        let b2 = model.b2_of(z);
        let lam = model.basis().eigenvalues();
        let drift: f64 = (0..n).map(|i| grad[i] * (-lam[i] * z.coeffs[i] + b2[i])).sum();
        // second directional derivative along σ
        let plus = &z.clone() + &sigma.scaled(h);
        let minus = z - &sigma.scaled(h);
        let second = (f.value(&plus) - 2.0 * f.value(z) + f.value(&minus)) / (h * h);
        drift + 0.5 * second
    }

    #[test]
    fn l_on_square_of_first_coordinate() {
        let m = burgers_model(8);
        let f = CylinderFunction::coordinate_power(1, 2).unwrap();
        let z = m.basis().unit(1);
        let l = eval_l(&m, &f, &z).unwrap();
        assert!((l - (1.0 - 2.0 * PI * PI)).abs() < 1e-12);
        assert!((l - (-18.739_208_9)).abs() < 1e-7);
        assert!((fd_l(&m, &f, &z) - l).abs() < 1e-5);
    }

    #[test]
    fn l_on_constant_and_linear() {
        let m = burgers_model(8);
        let z = m.basis().unit(1);
        let c = CylinderFunction::new(vec![1], vec![Monomial { coef: 3.0, powers: vec![0] }]).unwrap();
        assert_eq!(eval_l(&m, &c, &z).unwrap(), 0.0);
        let f = CylinderFunction::coordinate_power(1, 1).unwrap();
        assert!((eval_l(&m, &f, &z).unwrap() + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn l_matches_finite_differences_on_random_state() {
        let m = burgers_model(6);
        let f = CylinderFunction::new(
            vec![1, 3],
            vec![
                Monomial { coef: 1.0, powers: vec![2, 1] },
                Monomial { coef: -0.5, powers: vec![0, 2] },
                Monomial { coef: 2.0, powers: vec![1, 0] },
            ],
        )
        .unwrap();
        let z = SpectralState::from_coeffs(vec![0.4, -0.2, 0.3, 0.1, 0.0, -0.05]);
        let l = eval_l(&m, &f, &z).unwrap();
        assert!((fd_l(&m, &f, &z) - l).abs() < 1e-5 * (1.0 + l.abs()));
    }

    #[test]
    fn symbolic_derivatives_match_central_differences() {
        let f = CylinderFunction::new(
            vec![1, 2, 4],
            vec![
                Monomial { coef: 1.5, powers: vec![1, 1, 1] },
                Monomial { coef: -2.0, powers: vec![3, 0, 0] },
                Monomial { coef: 0.7, powers: vec![0, 2, 0] },
            ],
        )
        .unwrap();
        let z = SpectralState::from_coeffs(vec![0.3, -0.7, 0.2, 0.9]);
        let w = SpectralState::from_coeffs(vec![0.5, 0.25, -1.0, -0.4]);
        let h = 1e-3;
        let g = |t: f64| f.value(&(&z + &w.scaled(t)));
        let d2 = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
        let d3 = (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h);
        assert!((f.second_along(&z, &w) - d2).abs() < 1e-6);
        assert!((f.third_along(&z, &w) - d3).abs() < 1e-6);
    }

    #[test]
    fn cubic_gap_with_one_sided_measure() {
        let m = burgers_model(8);
        let nu = LevyMeasure::stable(1.0, 1.0, Sidedness::PositiveOnly).unwrap();
        let f = CylinderFunction::coordinate_power(1, 3).unwrap();
        let z = m.basis().unit(1); // σ(z) = e_1 so ⟨σ(z), e_1⟩ = 1
        let gap = eval_l_eps(&m, &nu, 0.04, &f, &z).unwrap() - eval_l(&m, &f, &z).unwrap();
        assert!((gap - 0.1).abs() < 1e-12, "{gap}");
    }

    #[test]
    fn jump_generator_matches_quadrature() {
        let m = burgers_model(6);
        let nu = LevyMeasure::stable(1.0, 1.0, Sidedness::PositiveOnly).unwrap();
        let f = CylinderFunction::new(
            vec![1, 2],
            vec![
                Monomial { coef: 1.0, powers: vec![3, 0] },
                Monomial { coef: 0.5, powers: vec![1, 2] },
            ],
        )
        .unwrap();
        let z = SpectralState::from_coeffs(vec![0.6, -0.3, 0.1, 0.0, 0.05, 0.0]);
        let eps = 0.2;
        let alpha = nu.alpha(eps);
        let sigma = m.sigma_of(&z);
        // R(x) = x² ∫_0^1 (1 − t) f″(z + t x w)(w, w) dt with w = σ(z)/α, so the
        // integrand x² ν(dx) · (…) has no cancellation near x = 0.
        let w = sigma.scaled(1.0 / alpha);
        let integrand = |x: f64| {
            let inner = quadrature::integrate(
                &|t: f64| (1.0 - t) * f.second_along(&(&z + &w.scaled(t * x)), &w),
                0.0,
                1.0,
                1e-15,
            );
            inner * x * x * nu.density(x).unwrap()
        };
        let jump = quadrature::integrate_from_zero(&integrand, eps, 1e-12);
        let oracle = drift_part(&m, &f, &z) + jump;
        let got = eval_l_eps(&m, &nu, eps, &f, &z).unwrap();
        assert!((got - oracle).abs() < 1e-9 * (1.0 + oracle.abs()), "{got} vs {oracle}");
    }

    #[test]
    fn symmetric_measure_cancels_cubic_gap() {
        let m = burgers_model(8);
        let nu = LevyMeasure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap();
        let f = CylinderFunction::coordinate_power(1, 3).unwrap();
        let z = SpectralState::from_coeffs(vec![0.5, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let gap = eval_l_eps(&m, &nu, 0.1, &f, &z).unwrap() - eval_l(&m, &f, &z).unwrap();
        assert!(gap.abs() < 1e-14);
    }

    #[test]
    fn sweep_slopes() {
        let m = burgers_model(8);
        let zs = sample_ball(m.basis(), 1.0, 16, 3);
        assert!(zs.iter().all(|z| z.h_norm() <= 1.0 + 1e-12));
        let grid: Vec<f64> = (2..=9).map(|k| 2f64.powi(-k)).collect();
        let one = LevyMeasure::stable(1.0, 1.0, Sidedness::PositiveOnly).unwrap();
        let cubic = CylinderFunction::coordinate_power(1, 3).unwrap();
        let s = generator_gap_sweep(&m, &one, &cubic, 1.0, &zs, &grid).unwrap();
        assert!(!s.exact);
        assert!((s.slope.unwrap() - 0.5).abs() < 1e-6);
        for r in &s.rows {
            assert!((r.sup_gap - r.predicted_gap).abs() <= 1e-9 * r.predicted_gap);
            assert!(r.predicted_gap <= r.ratio * 1.0); // |D³f σσσ|/6 ≤ 1 on the unit ball
        }
        let sym = LevyMeasure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap();
        let s = generator_gap_sweep(&m, &sym, &cubic, 1.0, &zs, &grid).unwrap();
        assert!(s.exact && s.slope.is_none());
        assert!(s.rows.iter().all(|r| r.sup_gap <= 1e-14));
        let quad = CylinderFunction::coordinate_power(2, 2).unwrap();
        let s = generator_gap_sweep(&m, &one, &quad, 1.0, &zs, &grid).unwrap();
        assert!(s.exact && s.slope.is_none());
    }

    #[test]
    fn rejects_bad_cylinder_functions() {
        assert!(CylinderFunction::<f64>::coordinate_power(1, 4).is_err());
        assert!(CylinderFunction::<f64>::new(vec![1, 1], vec![]).is_err());
        assert!(CylinderFunction::<f64>::new(vec![1, 2, 3, 4, 5], vec![]).is_err());
        assert!(CylinderFunction::<f64>::new(vec![0], vec![]).is_err());
        let m = burgers_model(4);
        let f = CylinderFunction::coordinate_power(5, 2).unwrap();
        assert!(eval_l(&m, &f, &m.basis().unit(1)).is_err());
    }
}
