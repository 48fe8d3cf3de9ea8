//! Property suite over a configured model and measure, as run by the
//! `invariants` subcommand. Each check reports its worst observed value
//! against a fixed limit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::levy::{Family, LevyMeasure};
use crate::model::{burgers_b2, dual_norm_ratio, h2ii_residual, skew_pairing, ModelSpec, NemytskiiFn};
use crate::quadrature;
use crate::spectral::{SpectralBasis, SpectralState};
use crate::stream::PathStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub samples: usize,
    pub worst: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSize {
    pub states: usize,
    pub dual_states: usize,
    pub pairs: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self { states: 1000, dual_states: 10_000, pairs: 1000 }
    }
}

/// Coefficients i.i.d. uniform on `(−1, 1)` times `k^{-1}`.
pub fn decaying_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpectralState<f64> {
    SpectralState::from_coeffs((1..=n).map(|k| rng.random_range(-1.0..1.0) / k as f64).collect())
}

/// Gaussian coefficients with decay `k^{-p}`, `p` drawn from `{0, 1, 2}`,
/// rescaled to an H-norm uniform on `[0, 3)`.
pub fn mixed_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpectralState<f64> {
    let p = rng.random_range(0..3);
    let coeffs: Vec<f64> = (1..=n)
        .map(|k| {
            let z: f64 = StandardNormal.sample(rng);
            z * (k as f64).powi(-p)
        })
        .collect();
    let u = SpectralState::from_coeffs(coeffs);
    let norm = u.h_norm();
    if norm == 0.0 {
        return u;
    }
    u.scaled(3.0 * rng.random::<f64>() / norm)
}

fn rng(seed: u64, index: u64) -> ChaCha8Rng {
    PathStream::new(seed, index).brownian
}

fn check(name: &'static str, samples: usize, worst: f64, limit: f64) -> Check {
    // NaN never passes.
    Check { name, samples, worst: if worst.is_nan() { f64::INFINITY } else { worst }, limit }
}

fn basis_checks(basis: &SpectralBasis<f64>, size: SuiteSize, seed: u64, out: &mut Vec<Check>) {
    out.push(check("orthonormality", 1, basis.gram_defect(), 1e-12));

    let ev = basis.eigenvalues();
    let mono = ev.windows(2).all(|w| w[0] < w[1]) && ev[0] > 0.0;
    out.push(check("eigenvalues_increasing", ev.len(), if mono { 0.0 } else { 1.0 }, 0.0));

    let mut r = rng(seed, 1);
    let mut worst = 0.0f64;
    let mut roundtrip = 0.0f64;
    for _ in 0..size.states {
        let u = mixed_state(basis.modes(), &mut r);
        let lhs = 2.0 * u.inner(&basis.apply_a(&u));
        let rhs = 2.0 * basis.v_norm_sq(&u);
        if rhs > 0.0 {
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
        let back = basis.project_grid(&basis.evaluate(&u));
        roundtrip = roundtrip.max((&back - &u).h_norm() / (1.0 + u.h_norm()));
    }
    out.push(check("coercivity_identity", size.states, worst, 1e-12));
    out.push(check("transform_roundtrip", size.states, roundtrip, 1e-13));
}

fn burgers_checks(basis: &SpectralBasis<f64>, size: SuiteSize, seed: u64, out: &mut Vec<Check>) {
    let n = basis.modes();
    let mut r = rng(seed, 2);
    let mut worst = 0.0f64;
    for _ in 0..size.states {
        let u = mixed_state(n, &mut r);
        worst = worst.max(skew_pairing(basis, &u).abs() / (1.0 + u.h_norm()).powi(3));
    }
    out.push(check("skew_pairing", size.states, worst, 1e-10));

    let mut r = rng(seed, 3);
    let mut worst = 0.0f64;
    for _ in 0..size.dual_states {
        let u = mixed_state(n, &mut r);
        if let Some(q) = dual_norm_ratio(basis, &u) {
            worst = worst.max(q);
        }
    }
    out.push(check("dual_norm_ratio", size.dual_states, worst, std::f64::consts::FRAC_1_SQRT_2 + 1e-9));

    let mut r = rng(seed, 4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..size.pairs {
        let u = decaying_state(n, &mut r);
        let v = decaying_state(n, &mut r);
        worst = worst.max(h2ii_residual(basis, &u, &v));
    }
    out.push(check("h2ii_residual", size.pairs, worst, 1e-10));

    let zero = burgers_b2(basis, &basis.zero()).iter().fold(0.0f64, |m, d| m.max(d.abs()));
    out.push(check("burgers_at_zero", 1, zero, 0.0));
}

fn pointwise_checks(
    name: (&'static str, &'static str, &'static str),
    f: &NemytskiiFn<f64>,
    model: &ModelSpec<f64>,
    size: SuiteSize,
    seed: u64,
    out: &mut Vec<Check>,
) {
    out.push(check(name.0, 1, f.eval(0.0).abs(), 0.0));
    let lip = f.lipschitz_constant();
    let mut r = rng(seed, 5);
    let mut worst = 0.0f64;
    for _ in 0..size.pairs {
        let x: f64 = r.random_range(-5.0..5.0);
        let y: f64 = r.random_range(-5.0..5.0);
        if x != y {
            worst = worst.max((f.eval(x) - f.eval(y)).abs() / (x - y).abs() - lip);
        }
    }
    out.push(check(name.1, size.pairs, worst, 1e-12 * (1.0 + lip)));

    let basis = model.basis();
    let mut r = rng(seed, 6);
    let mut worst = 0.0f64;
    for _ in 0..size.pairs {
        let u = mixed_state(basis.modes(), &mut r);
        let v = mixed_state(basis.modes(), &mut r);
        let d = (&u - &v).h_norm();
        if d > 0.0 {
            let fu = f.apply(basis, &u);
            let fv = f.apply(basis, &v);
            let pn = |w: &SpectralState<f64>| match model.sigma_projection() {
                Some(n) => basis.project(n, w).expect("projection level validated"),
                None => w.clone(),
            };
            worst = worst.max((&pn(&fu) - &pn(&fv)).h_norm() / d - lip);
        }
    }
    out.push(check(name.2, size.pairs, worst, 1e-12 * (1.0 + lip)));
}

/// Second moment of `ν` on `(0, eps]` by quadrature of the density (finite
/// sum for atoms).
fn quadrature_second_moment(measure: &LevyMeasure<f64>, eps: f64) -> f64 {
    match measure.family() {
        Family::Atomic { atoms } => atoms
            .iter()
            .filter(|a| a.location.abs() <= eps)
            .map(|a| a.mass * a.location * a.location)
            .sum(),
        _ => {
            let d = |x: f64| measure.density(x).unwrap_or(0.0);
            quadrature::integrate_from_zero(&|x| x * x * (d(x) + d(-x)), eps, 1e-13)
        }
    }
}

/// `∫_{δ≤|x|≤ε} x⁴ ν(dx)`.
fn band_fourth_moment(measure: &LevyMeasure<f64>, delta: f64, eps: f64) -> f64 {
    match measure.family() {
        Family::Atomic { atoms } => atoms
            .iter()
            .filter(|a| a.location.abs() >= delta && a.location.abs() <= eps)
            .map(|a| a.mass * a.location.powi(4))
            .sum(),
        _ => {
            let d = |x: f64| measure.density(x).unwrap_or(0.0);
            quadrature::integrate(&|x| x.powi(4) * (d(x) + d(-x)), delta, eps, 1e-20)
        }
    }
}

fn levy_checks(measure: &LevyMeasure<f64>, eps: f64, horizon: f64, seed: u64, out: &mut Vec<Check>) {
    let grid: Vec<f64> = (0..=12).map(|k| 0.5f64.powi(k)).collect();
    let mut worst = 0.0f64;
    for &e in &grid {
        let closed = measure.truncated_second_moment(e);
        let quad = quadrature_second_moment(measure, e);
        let scale = closed.abs().max(quad.abs());
        if scale > 0.0 {
            worst = worst.max((closed - quad).abs() / scale);
        }
    }
    out.push(check("second_moment_quadrature", grid.len(), worst, 1e-9));

    let alphas: Vec<f64> = grid.iter().map(|&e| measure.alpha(e)).collect();
    let mono = alphas.windows(2).all(|w| w[1] <= w[0]);
    out.push(check("alpha_nondecreasing", grid.len(), if mono { 0.0 } else { 1.0 }, 0.0));

    if let Family::StableLike { intensity, index, sided } = measure.family() {
        let w = if *sided == crate::levy::Sidedness::Symmetric { 2.0 } else { 1.0 };
        let mut worst = 0.0f64;
        for &e in &grid {
            let law = ((2.0 - index) / (w * intensity)).sqrt() * e.powf(index / 2.0);
            let r = measure.small_jump_ratio(e).unwrap_or(f64::NAN);
            worst = worst.max((r - law).abs() / law);
        }
        out.push(check("ratio_power_law", grid.len(), worst, 1e-9));
    }

    let plan = match measure.inner_cutoff(eps, 1e-3) {
        Ok(p) => p,
        Err(_) => {
            // no small-jump mass below eps: nothing to sample
            return;
        }
    };
    let f = plan.neglected_fraction;
    let bad_delta = plan.delta == 0.0 && !measure.finite_activity();
    let ok = (0.0..1.0).contains(&f) && !bad_delta;
    out.push(check("cutoff_plan", 1, if ok { 0.0 } else { 1.0 }, 0.0));

    let rate = measure.jump_intensity(plan.delta, plan.epsilon).unwrap_or(f64::INFINITY);
    let span = if rate > 0.0 { horizon.min(2e4 / rate) } else { horizon };
    let mut r = rng(seed, 7);
    let events = match measure.sample_jumps(&plan, span, &mut r, 1e7) {
        Ok(ev) => ev,
        Err(_) => {
            out.push(check("jump_sampling", 0, f64::INFINITY, 0.0));
            return;
        }
    };
    let ordered = events.windows(2).all(|w| w[0].time < w[1].time)
        && events.iter().all(|e| e.time > 0.0 && e.time <= span);
    let in_band = events.iter().all(|e| e.size.abs() >= plan.delta && e.size.abs() <= plan.epsilon);
    out.push(check("jump_times_increasing", events.len(), if ordered { 0.0 } else { 1.0 }, 0.0));
    out.push(check("jump_sizes_in_band", events.len(), if in_band { 0.0 } else { 1.0 }, 0.0));

    // Σ x² over the jumps has mean span·(m₂(ε) − m₂(δ)) and variance span·∫x⁴ν.
    let target = measure.truncated_second_moment(eps) - measure.truncated_second_moment(plan.delta);
    let sd = (span * band_fourth_moment(measure, plan.delta, eps)).sqrt();
    let sum: f64 = events.iter().map(|e| e.size * e.size).sum();
    let z = if sd > 0.0 { (sum - span * target).abs() / sd } else { (sum - span * target).abs() };
    out.push(check("sampled_second_moment_3sd", events.len(), z, 3.0));
}

/// Runs every check for the model (basis, Burgers, pointwise maps) and the
/// measure (moments, power law, cutoff, sampling at scale `eps`).
pub fn property_suite(
    model: &ModelSpec<f64>,
    measure: &LevyMeasure<f64>,
    eps: f64,
    horizon: f64,
    size: SuiteSize,
    seed: u64,
) -> Vec<Check> {
    let mut out = Vec::new();
    basis_checks(model.basis(), size, seed, &mut out);
    if model.burgers() {
        burgers_checks(model.basis(), size, seed, &mut out);
    }
    pointwise_checks(
        ("sigma_at_zero", "sigma_lipschitz", "projected_sigma_lipschitz"),
        model.sigma(),
        model,
        size,
        seed,
        &mut out,
    );
    if let Some(b1) = model.b1() {
        pointwise_checks(("b1_at_zero", "b1_lipschitz", "b1_operator_lipschitz"), b1, model, size, seed, &mut out);
    }
    levy_checks(measure, eps, horizon, seed, &mut out);
    out
}
