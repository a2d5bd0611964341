//! Desk-scale acceptance suite. Each test prints one PASS/FAIL line to the
//! real stdout so the verdicts survive output capture.
//!
//! The three time-stepping runs take several minutes each on one core.

use std::io::Write;
use std::path::Path;
use std::time::Instant;
use teng_bc::verify;
use teng_bc::{presets, run_experiment, ExperimentConfig, RunOutcome};
use teng_bc_core::geometry::Segment;
use teng_bc_core::metrics::relative_l2;
use teng_bc_core::reference::spectral::sample_grid;
use teng_bc_core::reference::{burgers_initial, burgers_spectral, SpectralConfig};

fn report(name: &str, passed: bool, detail: &str, start: Instant) {
    let line = format!(
        "{} {name}: {detail} ({:.1} s)\n",
        if passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(passed, "{name}: {detail}");
}

fn desk(name: &str, dir: &Path) -> ExperimentConfig {
    let mut cfg = presets::preset(name)
        .unwrap_or_else(|| panic!("no preset {name}"))
        .expect("preset parses");
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn errors(out: &RunOutcome) -> Vec<f64> {
    out.rows.iter().map(|r| r.rel_l2.unwrap_or(f64::NAN)).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn check(c: verify::Check) {
    report(c.name, c.passed, &c.detail, Instant::now() - c.elapsed);
}

#[test]
fn linear_algebra_oracle() {
    let start = Instant::now();
    let a = verify::linear_algebra(50, 11);
    let b = verify::gram_equivalence();
    let secs = start.elapsed().as_secs_f64();
    report(
        "linear algebra oracle",
        a.passed && b.passed && secs < 5.0,
        &format!("{}; {}; runtime limit 5 s", a.detail, b.detail),
        start,
    );
}

#[test]
fn derivative_correctness() {
    let c = verify::derivatives(20, 7);
    let fast = c.elapsed.as_secs_f64() < 10.0;
    check(verify::Check {
        passed: c.passed && fast,
        detail: format!("{}; runtime limit 10 s", c.detail),
        ..c
    });
}

#[test]
fn special_functions() {
    let c = verify::special_functions();
    let fast = c.elapsed.as_secs_f64() < 2.0;
    check(verify::Check {
        passed: c.passed && fast,
        detail: format!("{}; runtime limit 2 s", c.detail),
        ..c
    });
}

#[test]
fn reference_validity() {
    let c = verify::reference_validity();
    let fast = c.elapsed.as_secs_f64() < 30.0;
    check(verify::Check {
        passed: c.passed && fast,
        detail: format!("{}; runtime limit 30 s", c.detail),
        ..c
    });
}

#[test]
fn scheme_order() {
    let c = verify::scheme_order();
    let fast = c.elapsed.as_secs_f64() < 5.0;
    check(verify::Check {
        passed: c.passed && fast,
        detail: format!("{}; runtime limit 5 s", c.detail),
        ..c
    });
}

#[test]
fn desk_heat_dirichlet() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let heun = run_experiment(&desk("heat_dirichlet_desk", &dir.path().join("heun"))).expect("heun run");
    let mut euler_cfg = desk("heat_dirichlet_desk", &dir.path().join("euler"));
    euler_cfg.scheme = teng_bc_core::integrate::Scheme::Euler;
    let euler = run_experiment(&euler_cfg).expect("euler run");
    let e = errors(&heun);
    let worst = max_of(&e);
    let last = *e.last().unwrap();
    let euler_last = *errors(&euler).last().unwrap();
    let passed = e.len() == 100 && worst < 1e-3 && last < 5e-4 && euler_last > last;
    report(
        "desk heat dirichlet",
        passed,
        &format!(
            "{} steps, max per-step error {worst:.3e} (limit 1e-3), final {last:.3e} (limit 5e-4), euler final {euler_last:.3e} (must exceed heun)",
            e.len()
        ),
        start,
    );
}

/// RMS of `a u + b ∂ₙu − v` on each boundary segment at time `t`.
fn segment_rms(cfg: &ExperimentConfig, out: &RunOutcome, t: f64) -> Vec<(Segment, f64)> {
    let problem = teng_bc::build_problem(cfg).expect("problem");
    let rows = problem.bc().boundary_rows(&problem.samples, t).expect("rows");
    let mut acc: Vec<(Segment, f64, usize)> = Vec::new();
    for r in rows {
        let b = problem.net.evaluate(&out.params.0, r.point).expect("evaluate");
        let dn = b.grad[0] * r.normal[0] + b.grad[1] * r.normal[1];
        let res = r.a * b.u + r.b * dn - r.v;
        match acc.iter_mut().find(|(s, _, _)| *s == r.tag) {
            Some(e) => {
                e.1 += res * res;
                e.2 += 1;
            }
            None => acc.push((r.tag, res * res, 1)),
        }
    }
    acc.into_iter().map(|(s, sum, n)| (s, (sum / n as f64).sqrt())).collect()
}

#[test]
fn desk_mixed_boundary() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk("heat_mixed_desk", dir.path());
    let out = run_experiment(&cfg).expect("mixed run");
    let e = errors(&out);
    let worst = max_of(&e);
    let rms = segment_rms(&cfg, &out, cfg.t_final);
    let worst_rms = rms.iter().map(|r| r.1).fold(0.0, f64::max);
    let segs: Vec<String> = rms.iter().map(|(s, v)| format!("{} {v:.2e}", s.as_str())).collect();
    report(
        "desk mixed boundary",
        worst < 2e-3 && rms.len() == 4 && worst_rms < 1e-2,
        &format!(
            "{} steps, max per-step error {worst:.3e} (limit 2e-3); boundary residual RMS {} (limit 1e-2)",
            e.len(),
            segs.join(", ")
        ),
        start,
    );
}

#[test]
fn desk_transport() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&desk("transport_desk", dir.path())).expect("transport run");
    let e = errors(&out);
    let worst = max_of(&e);
    let last = *e.last().unwrap();
    report(
        "desk transport",
        worst.is_finite() && worst < 5e-3 && last < 5e-3,
        &format!("{} steps, max per-step error {worst:.3e}, final {last:.3e} (limit 5e-3)", e.len()),
        start,
    );
}

#[test]
fn spectral_self_convergence() {
    let start = Instant::now();
    let solve = |modes| {
        let cfg = SpectralConfig {
            modes,
            nu: 1e-3,
            dt: 1e-4,
            ..SpectralConfig::default()
        };
        burgers_spectral(&sample_grid(cfg.grid_size(), burgers_initial), cfg, &[1.0]).expect("spectral solve")
    };
    let coarse = solve(128);
    let fine = solve(256);
    // The fine grid has twice the points per axis, so every other point
    // coincides with the coarse grid.
    let ratio = fine.n / coarse.n;
    let sub: Vec<f64> = (0..coarse.n * coarse.n)
        .map(|k| fine.fields[0][(k / coarse.n) * ratio * fine.n + (k % coarse.n) * ratio])
        .collect();
    let diff = relative_l2(&coarse.fields[0], &sub).expect("metric");
    let secs = start.elapsed().as_secs_f64();
    report(
        "spectral self-convergence",
        fine.n == 2 * coarse.n && diff < 1e-6 && secs < 300.0,
        &format!("128 vs 256 modes at T = 1: relative L2 {diff:.3e} (limit 1e-6); runtime limit 300 s"),
        start,
    );
}

#[test]
fn determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let a = desk("heat_mixed_desk", &dir.path().join("a"));
    let b = desk("heat_mixed_desk", &dir.path().join("b"));
    run_experiment(&a).expect("first run");
    run_experiment(&b).expect("second run");
    let read = |c: &ExperimentConfig| std::fs::read(c.output_dir.join("errors.csv")).expect("errors.csv");
    let (x, y) = (read(&a), read(&b));
    report(
        "determinism",
        x == y,
        &format!("repeated heat mixed desk run: errors.csv {} bytes, identical = {}", x.len(), x == y),
        start,
    );
}
