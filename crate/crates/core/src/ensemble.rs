//! Monte Carlo ensembles under both drivers and the comparisons built on
//! them: energy distance to the Brownian reference, the max-jump statistic,
//! moment tables, and the coupled `σ_n` sweep.
//!
//! Path `i` always uses `PathStream::new(master_seed, i)`; results are
//! collected in path order, so every statistic is independent of the
//! number of worker threads.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::integrator::{run_path, NoiseDriver, TimeGrid};
use crate::levy::{LevyMeasure, RatioTrend, DEFAULT_JUMP_BUDGET, DEFAULT_SLOPE_TOLERANCE};
use crate::model::ModelSpec;
use crate::scalar::Real;
use crate::spectral::SpectralState;
use crate::stats::{energy_distance, Estimate};
use crate::stream::PathStream;

/// Paths may blow up in at most this fraction of an ensemble.
pub const BLOWUP_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSettings {
    pub paths: usize,
    pub master_seed: u64,
    /// Number of leading modes kept as features.
    pub feature_modes: usize,
    pub jump_budget: f64,
}

impl EnsembleSettings {
    pub fn new(paths: usize, master_seed: u64) -> Self {
        Self { paths, master_seed, feature_modes: 3, jump_budget: DEFAULT_JUMP_BUDGET }
    }
}

/// Functionals of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalVector<T> {
    /// `⟨X_T, e_k⟩` for `k = 1..=K`.
    pub modes: Vec<T>,
    /// `|X_T|_H²`.
    pub energy: T,
    /// `sup` over save times of `|X_t|_H`.
    pub sup_norm: T,
    /// `J(X)`.
    pub max_jump: T,
    /// `Σ_{k>N/2} ⟨X_T,e_k⟩² / |X_T|_H²`.
    pub tail_fraction: T,
    /// `max` over steps of `|σ(X_t)|_H`.
    pub sigma_sup: T,
    pub jump_count: usize,
}

impl<T: Real> FunctionalVector<T> {
    /// Feature vector for two-sample distances: leading modes then `|X_T|_H²`.
    pub fn features(&self) -> Vec<T> {
        let mut f = self.modes.clone();
        f.push(self.energy);
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport<T> {
    /// One entry per path, `None` where the path blew up.
    pub paths: Vec<Option<FunctionalVector<T>>>,
    pub blowups: usize,
    /// `E[sup_t |X_t|_H²]`.
    pub moment2: Estimate<T>,
    /// `E[sup_t |X_t|_H⁴]`.
    pub moment4: Estimate<T>,
    pub mean_jump: Estimate<T>,
    pub mean_sup_norm: Estimate<T>,
}

impl<T: Real> EnsembleReport<T> {
    pub fn completed(&self) -> impl Iterator<Item = &FunctionalVector<T>> {
        self.paths.iter().flatten()
    }

    pub fn features(&self) -> Vec<Vec<T>> {
        self.completed().map(|f| f.features()).collect()
    }
}

fn path_functionals<T: Real>(
    model: &ModelSpec<T>,
    driver: &NoiseDriver<T>,
    grid: &TimeGrid<T>,
    settings: &EnsembleSettings,
    index: usize,
) -> Result<Option<FunctionalVector<T>>> {
    let mut stream = PathStream::new(settings.master_seed, index as u64);
    let mut sup_norm = T::zero();
    let mut last: Option<SpectralState<T>> = None;
    let stats = run_path(model, driver, grid, &mut stream, settings.jump_budget, |step, _, u| {
        sup_norm = sup_norm.max(u.h_norm());
        if step == grid.steps() {
            last = Some(u.clone());
        }
    })?;
    if stats.blowup {
        return Ok(None);
    }
    let end = last.unwrap_or_else(|| model.initial().clone());
    let n = end.len();
    let energy = end.h_norm_sq();
    let tail: T = end.coeffs.iter().skip(n / 2).map(|c| *c * *c).sum();
    let tail_fraction = if energy > T::zero() { (tail / energy).min(T::one()) } else { T::zero() };
    let k = settings.feature_modes.min(n);
    Ok(Some(FunctionalVector {
        modes: end.coeffs[..k].to_vec(),
        energy,
        sup_norm,
        max_jump: stats.max_jump,
        tail_fraction,
        sigma_sup: stats.sigma_sup,
        jump_count: stats.jump_count,
    }))
}

/// Simulates `settings.paths` independent paths.
pub fn run_ensemble<T: Real>(
    model: &ModelSpec<T>,
    driver: &NoiseDriver<T>,
    grid: &TimeGrid<T>,
    settings: &EnsembleSettings,
) -> Result<EnsembleReport<T>> {
    if settings.paths == 0 {
        return Err(invalid("ensemble needs at least one path"));
    }
    let paths: Vec<Option<FunctionalVector<T>>> = (0..settings.paths)
        .into_par_iter()
        .map(|i| path_functionals(model, driver, grid, settings, i))
        .collect::<Result<_>>()?;
    let blowups = paths.iter().filter(|p| p.is_none()).count();
    if blowups as f64 > BLOWUP_LIMIT * settings.paths as f64 {
        return Err(Error::BlowupThreshold { blowups, paths: settings.paths, limit_fraction: BLOWUP_LIMIT });
    }
    let done: Vec<&FunctionalVector<T>> = paths.iter().flatten().collect();
    let sup2: Vec<T> = done.iter().map(|f| f.sup_norm * f.sup_norm).collect();
    let sup4: Vec<T> = sup2.iter().map(|s| *s * *s).collect();
    let jumps: Vec<T> = done.iter().map(|f| f.max_jump).collect();
    let sups: Vec<T> = done.iter().map(|f| f.sup_norm).collect();
    Ok(EnsembleReport {
        blowups,
        moment2: Estimate::of(&sup2),
        moment4: Estimate::of(&sup4),
        mean_jump: Estimate::of(&jumps),
        mean_sup_norm: Estimate::of(&sups),
        paths,
    })
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow<T> {
    pub eps: T,
    pub alpha: T,
    pub ratio: T,
    /// Energy distance between the jump ensemble and the Brownian reference.
    pub energy_dist: T,
    /// Energy distance between the two halves of the Brownian reference.
    pub baseline: T,
    pub mean_jump: Estimate<T>,
    /// `(eps/alpha) · L_σ · (1 + E sup_t |X_t|_H)`.
    pub jump_bound: T,
    pub moment2: Estimate<T>,
    pub moment4: Estimate<T>,
    pub blowups: usize,
    /// Paths where `J > (eps/alpha) · max_step |σ(u)|_H`; zero by construction.
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    pub reference_blowups: usize,
    /// Trend of `eps/alpha(eps)` on the sweep grid (undefined for fewer than four points).
    pub ratio_trend: RatioTrend,
}

/// Runs the Brownian reference and one jump ensemble per `eps`.
pub fn convergence_sweep<T: Real>(
    model: &ModelSpec<T>,
    measure: &LevyMeasure<T>,
    eps_list: &[T],
    neglect_tol: T,
    grid: &TimeGrid<T>,
    settings: &EnsembleSettings,
) -> Result<ConvergenceTable<T>> {
    if eps_list.is_empty() {
        return Err(invalid("eps list is empty"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("eps list must be strictly decreasing"));
    }
    let drivers = eps_list
        .iter()
        .map(|&eps| NoiseDriver::small_jump(measure.clone(), eps, neglect_tol))
        .collect::<Result<Vec<_>>>()?;
    let ratio_trend = if eps_list.len() >= 4 {
        measure.ratio_verdict(eps_list, T::lit(DEFAULT_SLOPE_TOLERANCE))?.trend
    } else {
        RatioTrend::Undefined
    };

    let reference = run_ensemble(model, &NoiseDriver::Brownian, grid, settings)?;
    let ref_features = reference.features();
    let half = ref_features.len() / 2;
    let baseline = if half > 0 {
        energy_distance(&ref_features[..half], &ref_features[half..])?
    } else {
        T::zero()
    };
    let lip = model.sigma_lipschitz();

    let mut rows = Vec::with_capacity(eps_list.len());
    for driver in &drivers {
        let NoiseDriver::SmallJump(noise) = driver else { unreachable!() };
        let report = run_ensemble(model, driver, grid, settings)?;
        let features = report.features();
        let energy_dist = energy_distance(&features, &ref_features)?;
        let ratio = noise.ratio();
        let bound_violations = report
            .completed()
            .filter(|f| f.max_jump > f.sigma_sup * ratio)
            .count();
        rows.push(ConvergenceRow {
            eps: noise.epsilon(),
            alpha: noise.alpha,
            ratio,
            energy_dist,
            baseline,
            mean_jump: report.mean_jump,
            jump_bound: ratio * lip * (T::one() + report.mean_sup_norm.mean),
            moment2: report.moment2,
            moment4: report.moment4,
            blowups: report.blowups,
            bound_violations,
        });
    }
    Ok(ConvergenceTable { rows, reference_blowups: reference.blowups, ratio_trend })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSweepRow<T> {
    pub n: usize,
    pub delta: T,
    /// Empirical `P(sup_t |X_t^{n,ε} − X_t^ε|_H > delta)`.
    pub exceed_prob: T,
    /// Binomial standard error `√(p(1−p)/M)`.
    pub stderr: T,
    /// Paths where either run blew up; counted as exceedances.
    pub blowups: usize,
}

/// Couples the projected-`σ` model with the full model through common
/// random numbers and reports the exceedance probability for each `n`.
pub fn sigma_projection_sweep<T: Real>(
    model: &ModelSpec<T>,
    driver: &NoiseDriver<T>,
    n_list: &[usize],
    grid: &TimeGrid<T>,
    settings: &EnsembleSettings,
    delta: T,
) -> Result<Vec<SigmaSweepRow<T>>> {
    if settings.paths == 0 {
        return Err(invalid("ensemble needs at least one path"));
    }
    if !(delta >= T::zero()) {
        return Err(invalid("exceedance threshold must be non-negative"));
    }
    let full = model.with_sigma_projection(None)?;
    let projected = n_list
        .iter()
        .map(|&n| model.with_sigma_projection(Some(n)))
        .collect::<Result<Vec<_>>>()?;

    let run = |m: &ModelSpec<T>, i: usize| -> Result<Option<Vec<SpectralState<T>>>> {
        let mut stream = PathStream::new(settings.master_seed, i as u64);
        let mut saved = Vec::new();
        let stats = run_path(m, driver, grid, &mut stream, settings.jump_budget, |_, _, u| {
            saved.push(u.clone())
        })?;
        Ok(if stats.blowup { None } else { Some(saved) })
    };

    // Per path: for each n, Some(sup difference) or None on blow-up.
    let per_path: Vec<Vec<Option<T>>> = (0..settings.paths)
        .into_par_iter()
        .map(|i| -> Result<Vec<Option<T>>> {
            let reference = run(&full, i)?;
            projected
                .iter()
                .map(|m| {
                    let other = run(m, i)?;
                    Ok(match (&reference, other) {
                        (Some(a), Some(b)) => Some(
                            a.iter()
                                .zip(&b)
                                .map(|(x, y)| (x - y).h_norm())
                                .fold(T::zero(), T::max),
                        ),
                        _ => None,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let m = T::of_usize(settings.paths);
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut exceed = 0usize;
            let mut blowups = 0usize;
            for p in &per_path {
                match p[j] {
                    Some(d) if d > delta => exceed += 1,
                    Some(_) => {}
                    None => {
                        blowups += 1;
                        exceed += 1;
                    }
                }
            }
            let p = T::of_usize(exceed) / m;
            SigmaSweepRow { n, delta, exceed_prob: p, stderr: (p * (T::one() - p) / m).sqrt(), blowups }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, Sidedness};
    use crate::model::NemytskiiFn;
    use crate::spectral::SpectralBasis;
    use std::f64::consts::PI;

    fn model(n: usize, kappa: f64, burgers: bool) -> ModelSpec<f64> {
        let b = SpectralBasis::new(n).unwrap();
        let h = b.unit(1);
        ModelSpec::new(b, None, burgers, NemytskiiFn::Linear { kappa }, h, None).unwrap()
    }

    #[test]
    fn zero_paths_is_an_error() {
        let m = model(4, 0.5, true);
        let g = TimeGrid::new(0.01, 1e-3, 1).unwrap();
        assert!(run_ensemble(&m, &NoiseDriver::Brownian, &g, &EnsembleSettings::new(0, 1)).is_err());
    }

    #[test]
    fn noiseless_ensemble_is_deterministic_decay() {
        let m = model(4, 0.0, false);
        let g = TimeGrid::new(0.1, 1e-3, 10).unwrap();
        let r = run_ensemble(&m, &NoiseDriver::Brownian, &g, &EnsembleSettings::new(16, 3)).unwrap();
        let expect = (1.0 + PI * PI * 1e-3f64).powi(-100);
        for f in r.completed() {
            assert_eq!(f.modes[0], r.paths[0].as_ref().unwrap().modes[0]);
            assert!((f.modes[0] - expect).abs() < 1e-14);
            assert_eq!(f.max_jump, 0.0);
            assert!((0.0..=1.0).contains(&f.tail_fraction));
        }
    }

    #[test]
    fn repeated_runs_agree() {
        let m = model(8, 0.5, true);
        let g = TimeGrid::new(0.02, 1e-3, 5).unwrap();
        let nu = LevyMeasure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap();
        let d = NoiseDriver::small_jump(nu, 0.2, 1e-3).unwrap();
        let s = EnsembleSettings::new(32, 11);
        assert_eq!(run_ensemble(&m, &d, &g, &s).unwrap(), run_ensemble(&m, &d, &g, &s).unwrap());
    }

    #[test]
    fn single_eps_sweep_is_well_formed() {
        let m = model(4, 0.5, true);
        let g = TimeGrid::new(0.01, 1e-3, 5).unwrap();
        let nu = LevyMeasure::atomic(vec![
            Atom { location: 0.05, mass: 1.0 },
            Atom { location: -0.05, mass: 1.0 },
        ])
        .unwrap();
        let t = convergence_sweep(&m, &nu, &[10.0], 1e-3, &g, &EnsembleSettings::new(8, 1)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.ratio_trend, RatioTrend::Undefined);
        assert_eq!(t.rows[0].bound_violations, 0);
    }

    #[test]
    fn full_projection_is_exact_and_infinite_threshold_never_exceeded() {
        let m = model(8, 0.5, true);
        let g = TimeGrid::new(0.02, 1e-3, 2).unwrap();
        let nu = LevyMeasure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap();
        let d = NoiseDriver::small_jump(nu, 0.1, 1e-3).unwrap();
        let s = EnsembleSettings::new(12, 4);
        let rows = sigma_projection_sweep(&m, &d, &[2, 8], &g, &s, 0.0).unwrap();
        assert_eq!(rows[1].exceed_prob, 0.0);
        let rows = sigma_projection_sweep(&m, &d, &[1, 2], &g, &s, f64::INFINITY).unwrap();
        assert!(rows.iter().all(|r| r.exceed_prob == 0.0));
    }
}
