//! Semi-implicit Euler time stepping of the Galerkin system under either
//! noise driver.
//!
//! Per mode `k` one step reads
//! `a_k⁺ = (a_k + dt (b₁(u)_k + d_k(u)) + kick_k) / (1 + λ_k dt)`:
//! implicit in `A`, explicit in the drifts and the noise. For the jump
//! driver the kick over a step is
//! `σ(u) · (Σ_j x_j − dt · m_band) / alpha(eps)`, with `σ(u)` frozen at the
//! start of the step (the left limit) and `m_band` the band mean of ν.
//! Jumps are binned into the fixed grid.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::levy::{CutoffPlan, LevyMeasure, DEFAULT_JUMP_BUDGET};
use crate::model::ModelSpec;
use crate::scalar::Real;
use crate::spectral::SpectralState;
use crate::stream::PathStream;

/// Default share of the band's second moment allowed below the inner cutoff.
pub const DEFAULT_NEGLECT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    dt: T,
    steps: usize,
    save_stride: usize,
}

impl<T: Real> TimeGrid<T> {
    /// `horizon / dt` must be a positive integer (to relative 1e-9).
    pub fn new(horizon: T, dt: T, save_stride: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !(dt > T::zero()) || !horizon.is_finite() {
            return Err(invalid("time grid needs positive horizon and step"));
        }
        if save_stride == 0 {
            return Err(invalid("save stride must be at least 1"));
        }
        let ratio = (horizon / dt).to_f64_lossy();
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid("horizon must be an integer multiple of dt"));
        }
        Ok(Self { horizon, dt, steps: steps as usize, save_stride })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }
    pub fn dt(&self) -> T {
        self.dt
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn save_stride(&self) -> usize {
        self.save_stride
    }

    /// Time after `step` steps.
    pub fn time(&self, step: usize) -> T {
        if step == self.steps {
            self.horizon
        } else {
            T::of_usize(step) * self.dt
        }
    }

    /// Whether the state after `step` steps is recorded.
    pub fn is_saved(&self, step: usize) -> bool {
        step.is_multiple_of(self.save_stride) || step == self.steps
    }

    /// Step containing time `t`, i.e. `t ∈ [i dt, (i+1) dt)`, clamped to the grid.
    fn bin(&self, t: T) -> usize {
        let i = (t / self.dt).floor().to_f64_lossy();
        (i.max(0.0) as usize).min(self.steps - 1)
    }
}

/// The noise term of the equation.
#[derive(Debug, Clone)]
pub enum NoiseDriver<T: Real> {
    Brownian,
    SmallJump(SmallJumpNoise<T>),
}

#[derive(Debug, Clone)]
pub struct SmallJumpNoise<T: Real> {
    pub measure: LevyMeasure<T>,
    pub plan: CutoffPlan<T>,
    pub alpha: T,
    /// `∫_{δ≤|x|≤ε} x ν(dx)`.
    pub band_mean: T,
    pub intensity: T,
}

impl<T: Real> SmallJumpNoise<T> {
    pub fn epsilon(&self) -> T {
        self.plan.epsilon
    }

    /// `eps / alpha(eps)`.
    pub fn ratio(&self) -> T {
        self.plan.epsilon / self.alpha
    }
}

impl<T: Real> NoiseDriver<T> {
    /// Jump driver at truncation `eps` with the inner cutoff chosen for `neglect_tol`.
    pub fn small_jump(measure: LevyMeasure<T>, eps: T, neglect_tol: T) -> Result<Self> {
        let plan = measure.inner_cutoff(eps, neglect_tol)?;
        Self::with_plan(measure, plan)
    }

    pub fn with_plan(measure: LevyMeasure<T>, plan: CutoffPlan<T>) -> Result<Self> {
        let alpha = measure.alpha(plan.epsilon);
        if alpha == T::zero() {
            return Err(Error::SmallJumpMassAbsent { eps: plan.epsilon.to_f64_lossy() });
        }
        let intensity = measure.jump_intensity(plan.delta, plan.epsilon)?;
        if !intensity.is_finite() {
            return Err(Error::InfiniteIntensity {
                delta: plan.delta.to_f64_lossy(),
                eps: plan.epsilon.to_f64_lossy(),
            });
        }
        let band_mean = measure.compensator_mean(plan.delta, plan.epsilon)?;
        Ok(Self::SmallJump(SmallJumpNoise { measure, plan, alpha, band_mean, intensity }))
    }
}

/// Statistics of one simulated path, without the stored states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats<T> {
    /// `J = max_j |σ(u) x_j / alpha|_H` over individual jumps; zero for Brownian noise.
    pub max_jump: T,
    pub jump_count: usize,
    /// `max` over steps of `|σ(u)|_H` at the start of the step.
    pub sigma_sup: T,
    pub blowup: bool,
    /// Steps completed before a blow-up (all steps otherwise).
    pub steps_done: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<T> {
    pub saved: Vec<(T, SpectralState<T>)>,
    pub stats: PathStats<T>,
}

impl<T: Real> PathSample<T> {
    pub fn final_state(&self) -> Option<&SpectralState<T>> {
        self.saved.last().map(|(_, s)| s)
    }
}

/// Brownian increments `ΔB ~ N(0, dt)`, one per step.
pub fn brownian_increments<T: Real, R: Rng + ?Sized>(grid: &TimeGrid<T>, rng: &mut R) -> Vec<T> {
    let sd = grid.dt().to_f64_lossy().sqrt();
    (0..grid.steps())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z * sd)
        })
        .collect()
}

/// One semi-implicit step with a precomputed noise kick. A non-finite result
/// signals blow-up and is left to the caller to detect.
pub fn step<T: Real>(
    model: &ModelSpec<T>,
    state: &SpectralState<T>,
    kick: &SpectralState<T>,
    dt: T,
) -> SpectralState<T> {
    let b1 = model.b1_of(state);
    let b2 = model.b2_of(state);
    let coeffs = state
        .coeffs
        .iter()
        .zip(model.basis().eigenvalues())
        .zip(b1.coeffs.iter().zip(&b2))
        .zip(&kick.coeffs)
        .map(|(((a, l), (f1, f2)), k)| (*a + dt * (*f1 + *f2) + *k) / (T::one() + *l * dt))
        .collect();
    SpectralState { coeffs }
}

/// Runs one path, calling `on_save(step, time, state)` at every saved step
/// (including step 0 and the final step).
pub fn run_path<T: Real, F>(
    model: &ModelSpec<T>,
    driver: &NoiseDriver<T>,
    grid: &TimeGrid<T>,
    stream: &mut PathStream,
    jump_budget: f64,
    mut on_save: F,
) -> Result<PathStats<T>>
where
    F: FnMut(usize, T, &SpectralState<T>),
{
    let steps = grid.steps();
    let dt = grid.dt();

    // Noise is drawn up front and independently of the state, so two models
    // run on the same stream see identical noise.
    let (increments, bins) = match driver {
        NoiseDriver::Brownian => (brownian_increments(grid, &mut stream.brownian), Vec::new()),
        NoiseDriver::SmallJump(noise) => {
            let events =
                noise.measure.sample_jumps(&noise.plan, grid.horizon(), &mut stream.jumps, jump_budget)?;
            let mut bins = vec![(T::zero(), T::zero(), 0usize); steps];
            for e in &events {
                let b = &mut bins[grid.bin(e.time)];
                b.0 = b.0 + e.size;
                b.1 = b.1.max(e.size.abs());
                b.2 += 1;
            }
            (Vec::new(), bins)
        }
    };

    let mut stats = PathStats {
        max_jump: T::zero(),
        jump_count: 0,
        sigma_sup: T::zero(),
        blowup: false,
        steps_done: 0,
    };
    let mut u = model.initial().clone();
    on_save(0, T::zero(), &u);
    for i in 0..steps {
        let sig = model.sigma_of(&u);
        let sig_norm = sig.h_norm();
        stats.sigma_sup = stats.sigma_sup.max(sig_norm);
        let weight = match driver {
            NoiseDriver::Brownian => increments[i],
            NoiseDriver::SmallJump(noise) => {
                let (sum, largest, count) = bins[i];
                if count > 0 {
                    stats.jump_count += count;
                    stats.max_jump = stats.max_jump.max(sig_norm * (largest / noise.alpha));
                }
                (sum - dt * noise.band_mean) / noise.alpha
            }
        };
        let kick = sig.scaled(weight);
        u = step(model, &u, &kick, dt);
        if !u.is_finite() {
            stats.blowup = true;
            stats.steps_done = i;
            return Ok(stats);
        }
        if grid.is_saved(i + 1) {
            on_save(i + 1, grid.time(i + 1), &u);
        }
    }
    stats.steps_done = steps;
    Ok(stats)
}

/// Simulates one path and keeps the saved states.
pub fn simulate_path<T: Real>(
    model: &ModelSpec<T>,
    driver: &NoiseDriver<T>,
    grid: &TimeGrid<T>,
    stream: &mut PathStream,
) -> Result<PathSample<T>> {
    simulate_path_with_budget(model, driver, grid, stream, DEFAULT_JUMP_BUDGET)
}

pub fn simulate_path_with_budget<T: Real>(
    model: &ModelSpec<T>,
    driver: &NoiseDriver<T>,
    grid: &TimeGrid<T>,
    stream: &mut PathStream,
    jump_budget: f64,
) -> Result<PathSample<T>> {
    let mut saved = Vec::new();
    let stats = run_path(model, driver, grid, stream, jump_budget, |_, t, u| {
        saved.push((t, u.clone()))
    })?;
    Ok(PathSample { saved, stats })
}
