//! Acceptance run: one PASS/FAIL line per criterion, then a single assert.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use smalljump::ensemble::{convergence_sweep, sigma_projection_sweep, EnsembleSettings};
use smalljump::generator::{eval_l, eval_l_eps, generator_gap_sweep, sample_ball, CylinderFunction, Monomial};
use smalljump::integrator::{brownian_increments, step, NoiseDriver, TimeGrid};
use smalljump::invariants::{decaying_state, mixed_state};
use smalljump::model::{dual_norm_ratio, h2ii_residual, skew_pairing};
use smalljump::quadrature::integrate_from_zero;
use smalljump::scalar::loglog_slope;
use smalljump::{Atom, Basis, Measure, Model, PathStream, Pointwise, Sidedness, State};

struct Verdict {
    pass: bool,
    detail: String,
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn eps_grid() -> Vec<f64> {
    (0..=12).map(|k| 0.5f64.powi(k)).collect()
}

fn measures() -> Vec<(&'static str, Measure)> {
    vec![
        ("stable(0.5)", Measure::stable(1.0, 0.5, Sidedness::Symmetric).unwrap()),
        ("stable(1)", Measure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap()),
        ("stable(1.5)", Measure::stable(1.0, 1.5, Sidedness::Symmetric).unwrap()),
        ("stable(1,+)", Measure::stable(1.0, 1.0, Sidedness::PositiveOnly).unwrap()),
        ("uniform", Measure::uniform(1.0, 1.0).unwrap()),
        (
            "atomic",
            Measure::atomic(vec![
                Atom { location: 0.5, mass: 1.0 },
                Atom { location: -0.03, mass: 2.0 },
                Atom { location: 0.001, mass: 5.0 },
            ])
            .unwrap(),
        ),
    ]
}

fn alpha_oracle(nu: &Measure, eps: f64) -> f64 {
    match nu.family() {
        smalljump::Family::Atomic { atoms } => atoms
            .iter()
            .filter(|a| a.location.abs() <= eps)
            .map(|a| a.mass * a.location * a.location)
            .sum::<f64>()
            .sqrt(),
        _ => {
            let d = |x: f64| nu.density(x).unwrap();
            integrate_from_zero(&|x| x * x * (d(x) + d(-x)), eps, 1e-13).sqrt()
        }
    }
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for (_, nu) in measures() {
        for e in eps_grid() {
            let (a, q) = (nu.alpha(e), alpha_oracle(&nu, e));
            if a != q {
                worst = worst.max((a - q).abs() / q.abs().max(a.abs()));
            }
        }
    }
    verdict(worst <= 1e-9, format!("worst relative error {worst:.3e} (limit 1e-9)"))
}

fn criterion_2() -> Verdict {
    let grid = eps_grid();
    let slope = |nu: &Measure| {
        let r: Vec<f64> = grid.iter().map(|&e| nu.small_jump_ratio(e).unwrap()).collect();
        loglog_slope(&grid, &r).unwrap()
    };
    let mut worst = 0.0f64;
    for beta in [0.5, 1.0, 1.5] {
        let nu = Measure::stable(1.0, beta, Sidedness::Symmetric).unwrap();
        worst = worst.max((slope(&nu) - beta / 2.0).abs());
    }
    let uni = slope(&Measure::uniform(1.0, 1.0).unwrap());
    worst = worst.max((uni + 0.5).abs());
    verdict(worst <= 1e-6, format!("worst slope deviation {worst:.3e}, uniform slope {uni:.9} (limit 1e-6)"))
}

fn criterion_3() -> Verdict {
    let b64 = Basis::new(64).unwrap();
    let mut rng = PathStream::new(3, 0).brownian;
    let mut skew = 0.0f64;
    for _ in 0..1000 {
        let u = mixed_state(64, &mut rng);
        skew = skew.max(skew_pairing(&b64, &u).abs() / (1.0 + u.h_norm()).powi(3));
    }
    let b16 = Basis::new(16).unwrap();
    let mut dual = 0.0f64;
    for _ in 0..10_000 {
        let u = mixed_state(16, &mut rng);
        dual = dual.max(dual_norm_ratio(&b16, &u).unwrap_or(0.0));
    }
    let b32 = Basis::new(32).unwrap();
    let mut h2 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let u = decaying_state(32, &mut rng);
        let v = decaying_state(32, &mut rng);
        h2 = h2.max(h2ii_residual(&b32, &u, &v));
    }
    let limit = std::f64::consts::FRAC_1_SQRT_2 + 1e-9;
    verdict(
        skew <= 1e-10 && dual <= limit && h2 <= 1e-10,
        format!("skew {skew:.3e} (<=1e-10), dual ratio {dual:.6} (<={limit:.10}), h2ii max {h2:.3e} (<=1e-10)"),
    )
}

fn burgers(n: usize, kappa: f64) -> Model {
    let b = Basis::new(n).unwrap();
    let h = b.unit(1);
    Model::new(b, None, true, Pointwise::Linear { kappa }, h, None).unwrap()
}

fn criterion_4() -> Verdict {
    let model = burgers(8, 1.0);
    let sine = Model::new(
        Basis::new(8).unwrap(),
        None,
        true,
        Pointwise::ScaledSine { amplitude: 0.7, frequency: 1.3 },
        Basis::new(8).unwrap().unit(1),
        None,
    )
    .unwrap();
    let quadratics = vec![
        CylinderFunction::coordinate_power(1, 2).unwrap(),
        CylinderFunction::new(vec![1, 2], vec![Monomial { coef: 1.5, powers: vec![1, 1] }]).unwrap(),
        CylinderFunction::new(
            vec![2, 3],
            vec![
                Monomial { coef: 1.0, powers: vec![1, 0] },
                Monomial { coef: -2.0, powers: vec![0, 2] },
                Monomial { coef: 0.5, powers: vec![0, 0] },
            ],
        )
        .unwrap(),
    ];
    let symmetric = [
        Measure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap(),
        Measure::uniform(2.0, 0.5).unwrap(),
        Measure::atomic(vec![Atom { location: 0.02, mass: 3.0 }, Atom { location: -0.02, mass: 3.0 }]).unwrap(),
    ];
    let zs = sample_ball(model.basis(), 1.0, 200, 4);
    let mut quad_gap = 0.0f64;
    for m in [&model, &sine] {
        for f in &quadratics {
            for nu in &symmetric {
                for eps in [0.4, 0.1, 0.025] {
                    for z in &zs {
                        let gap = eval_l_eps(m, nu, eps, f, z).unwrap() - eval_l(m, f, z).unwrap();
                        quad_gap = quad_gap.max(gap.abs());
                    }
                }
            }
        }
    }

    // Cubic ⟨z,e₁⟩³ with σ = identity: the gap is ⟨z,e₁⟩³·√ε/2.
    let cubic = CylinderFunction::coordinate_power(1, 3).unwrap();
    let one_sided = Measure::stable(1.0, 1.0, Sidedness::PositiveOnly).unwrap();
    let mut cubic_err = 0.0f64;
    for eps in [0.25, 0.04, 0.01, 1e-3] {
        for z in &zs {
            let gap = eval_l_eps(&model, &one_sided, eps, &cubic, z).unwrap() - eval_l(&model, &cubic, z).unwrap();
            let closed = z.coeffs[0].powi(3) * eps.sqrt() / 2.0;
            cubic_err = cubic_err.max((gap - closed).abs());
        }
    }
    let e1 = model.basis().unit(1);
    let example = eval_l_eps(&model, &one_sided, 0.04, &cubic, &e1).unwrap() - eval_l(&model, &cubic, &e1).unwrap();
    cubic_err = cubic_err.max((example - 0.1).abs());

    let grid: Vec<f64> = (2..=9).map(|k| 0.5f64.powi(k)).collect();
    let sweep = generator_gap_sweep(&model, &one_sided, &cubic, 1.0, &zs, &grid).unwrap();
    let slope = sweep.slope.unwrap_or(f64::NAN);
    verdict(
        quad_gap <= 1e-12 && cubic_err <= 1e-9 && (slope - 0.5).abs() <= 1e-3,
        format!(
            "degree<=2 gap {quad_gap:.3e} (<=1e-12), cubic error {cubic_err:.3e} (<=1e-9), gap at eps=0.04 {example:.12}, slope {slope:.9} (0.5±1e-3)"
        ),
    )
}

fn decay_error(dt: f64) -> f64 {
    let b = Basis::new(4).unwrap();
    let model = Model::new(b.clone(), None, false, Pointwise::Linear { kappa: 0.0 }, b.unit(1), None).unwrap();
    let grid = TimeGrid::new(0.1, dt, 1).unwrap();
    let mut stream = PathStream::new(0, 0);
    let path = smalljump::integrator::simulate_path(&model, &NoiseDriver::Brownian, &grid, &mut stream).unwrap();
    let exact = (-std::f64::consts::PI.powi(2) * 0.1).exp();
    (path.final_state().unwrap().coeffs[0] - exact).abs() / exact
}

fn criterion_5() -> Verdict {
    let (e1, e2) = (decay_error(1e-3), decay_error(5e-4));
    let ratio = e1 / e2;

    // Additive-noise OU on mode 1 through the same semi-implicit step.
    let b = Basis::new(1).unwrap();
    let model = Model::new(b.clone(), None, false, Pointwise::Linear { kappa: 0.0 }, b.zero(), None).unwrap();
    let grid = TimeGrid::new(0.25, 1e-3, 1).unwrap();
    let m = 10_000;
    let finals: Vec<f64> = (0..m)
        .map(|i| {
            let mut s = PathStream::new(5, i);
            let mut u = b.zero();
            for db in brownian_increments(&grid, &mut s.brownian) {
                u = step(&model, &u, &State::from_coeffs(vec![db]), grid.dt());
            }
            u.coeffs[0]
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / m as f64;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let target = 0.050296;
    let sd = target * (2.0 / (m as f64 - 1.0)).sqrt();
    let z = (var - target).abs() / sd;
    verdict(
        e1 <= 5e-3 && (1.7..=2.3).contains(&ratio) && z <= 3.0,
        format!("decay error {e1:.4e} (<=5e-3), halving ratio {ratio:.4} ([1.7,2.3]), OU variance {var:.6} ({z:.2} sd from 0.050296)"),
    )
}

struct Run6 {
    c6: Verdict,
    c7: Verdict,
    c8: Verdict,
}

fn criteria_6_to_8() -> Run6 {
    let model = burgers(16, 0.5);
    let nu = Measure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap();
    let eps = [0.4, 0.2, 0.1, 0.05];
    let grid = TimeGrid::new(0.25, 5e-4, 10).unwrap();
    let mut settings = EnsembleSettings::new(2000, 1);
    settings.feature_modes = 2;
    let t = convergence_sweep(&model, &nu, &eps, 1e-3, &grid, &settings).unwrap();

    let base = t.rows[0].baseline;
    let d: Vec<f64> = t.rows.iter().map(|r| r.energy_dist).collect();
    let monotone = d.windows(2).all(|w| w[1] <= w[0] + 1.5 * base);
    let last = d[d.len() - 1] <= 3.0 * base;
    let c6 = verdict(monotone && last, format!("d = {}, baseline {base:.4e}", sci(&d)));

    let violations: usize = t.rows.iter().map(|r| r.bound_violations).sum();
    let mean_j: Vec<f64> = t.rows.iter().map(|r| r.mean_jump.mean).collect();
    let slope = loglog_slope(&eps, &mean_j).unwrap_or(f64::NAN);
    let c7 = verdict(
        violations == 0 && (slope - 0.5).abs() <= 0.15,
        format!("bound violations {violations}, mean J {}, slope {slope:.4} (0.5±0.15)", sci(&mean_j)),
    );

    let m4: Vec<f64> = t.rows.iter().map(|r| r.moment4.mean).collect();
    let mut sorted = m4.clone();
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[1] + sorted[2]) / 2.0;
    let band = m4.iter().all(|m| (m - median).abs() <= 0.25 * median);
    let rse = t.rows.iter().map(|r| r.moment4.relative_stderr()).fold(0.0f64, f64::max);
    let c8 = verdict(band && rse <= 0.1, format!("m4 {m4:.5?}, median {median:.5}, max relative stderr {rse:.2e}"));
    Run6 { c6, c7, c8 }
}

fn criterion_9() -> Verdict {
    let model = burgers(32, 0.5);
    let nu = Measure::stable(1.0, 1.0, Sidedness::Symmetric).unwrap();
    let driver = NoiseDriver::small_jump(nu, 0.1, 1e-3).unwrap();
    let grid = TimeGrid::new(0.25, 5e-4, 10).unwrap();
    let rows = sigma_projection_sweep(&model, &driver, &[4, 8, 16, 32], &grid, &EnsembleSettings::new(500, 1), 0.05)
        .unwrap();
    let p: Vec<f64> = rows.iter().map(|r| r.exceed_prob).collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].exceed_prob <= w[0].exceed_prob + 2.0 * w[0].stderr.hypot(w[1].stderr));
    verdict(monotone && p[3] == 0.0 && p[2] <= 0.05, format!("exceedance {p:?} for n = 4, 8, 16, 32"))
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_smalljump"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_10() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let config = r#"{"model": {"modes": 8, "sigma": {"kind": "sine", "amplitude": 0.5, "frequency": 1.0}},
                     "grid": {"T": 0.05, "dt": 5e-4, "save_stride": 10},
                     "ensemble": {"paths": 200, "seed": 42},
                     "generator": {"measure": {"family": "stable", "intensity": 1, "index": 1, "sided": "positive"}}}"#;
    let commands = ["converge", "sigma-sweep", "generator-check", "simulate"];
    let files = ["converge.csv", "sigma_sweep.csv", "generator_check.csv", "path.csv"];
    let mut runs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "8"), ("c", "8")] {
        let dir = root.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("run.json"), config).unwrap();
        for c in commands {
            if !run_cli(&dir, &[c, "--config", "run.json", "--threads", threads]) {
                return verdict(false, format!("`{c}` failed with --threads {threads}"));
            }
        }
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.join("out").join(f)).unwrap()).collect();
        runs.push(bytes);
    }
    let same = runs[0] == runs[1] && runs[1] == runs[2];
    let total: usize = runs[0].iter().map(Vec::len).sum();
    verdict(same, format!("{} files, {total} bytes, threads 1 vs 8 and repeat run identical: {same}", files.len()))
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(u32, Verdict)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
    ];
    let r = criteria_6_to_8();
    results.extend([(6, r.c6), (7, r.c7), (8, r.c8), (9, criterion_9()), (10, criterion_10())]);

    // Written to the process stdout directly so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    for (n, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "acceptance criterion {n:>2}: {tag} {}", v.detail).unwrap();
    }
    drop(out);
    let failed: Vec<u32> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
