//! Wires a config into samples, operator, boundary data and reference, and
//! drives a full run.

use crate::config::{Equation, ExperimentConfig, ReferenceKind};
use crate::formats::{self, ErrorRow, InitialFitSummary, Summary, Timing};
use crate::{io_failure, Failure};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;
use teng_bc_core::ansatz::{Mlp, ParamVector};
use teng_bc_core::geometry::SampleSet;
use teng_bc_core::integrate::{
    evolve, fit_initial, full_range_relative_l2, BoundaryConditions, InitialFitReport, NoBoundary, StepReport,
};
use teng_bc_core::pde::PdeOperator;
use teng_bc_core::reference::spectral::sample_grid;
use teng_bc_core::reference::{
    burgers_initial, burgers_spectral, BurgersReference, HeatReference, Reference, ReferenceField, SpectralSolution,
    TransportReference,
};

/// Everything a run needs besides its parameters.
pub struct Problem {
    pub net: Mlp,
    pub samples: SampleSet,
    pub op: PdeOperator,
    /// Initial values at the interior samples.
    pub u0: Vec<f64>,
    /// Source of boundary rows; `None` on the periodic domain.
    pub boundary: Option<ReferenceField>,
    /// Field the error is measured against.
    pub reference: Option<ReferenceField>,
}

impl Problem {
    pub fn bc(&self) -> &dyn BoundaryConditions {
        match &self.boundary {
            Some(field) => field,
            None => &NoBoundary,
        }
    }

    pub fn reference(&self) -> Option<&dyn Reference> {
        self.reference.as_ref().map(|r| r as &dyn Reference)
    }
}

/// Steps at which the error is evaluated: every `every`-th and the last.
pub fn logged_steps(n_steps: usize, every: usize) -> Vec<usize> {
    (1..=n_steps).filter(|k| k % every == 0 || *k == n_steps).collect()
}

/// Spectral Burgers fields at every logged time, from the cache when one is
/// configured.
pub fn spectral_reference(cfg: &ExperimentConfig) -> Result<SpectralSolution, Failure> {
    let scheme = cfg.scheme_config();
    let times: Vec<f64> = logged_steps(scheme.n_steps(), cfg.error_every)
        .into_iter()
        .map(|k| scheme.time_at(k))
        .collect();
    let spectral = cfg.spectral_config();
    if let Some(path) = &cfg.reference_cache {
        let sol = formats::parse_spectral(&formats::read_file(path)?)?;
        if sol.config != spectral {
            return Err(Failure::Config(format!(
                "{}: cached modes/nu/dt ({}, {}, {}) differ from the config ({}, {}, {})",
                path.display(),
                sol.config.modes,
                sol.config.nu,
                sol.config.dt,
                spectral.modes,
                spectral.nu,
                spectral.dt
            )));
        }
        if let Some(t) = times.iter().find(|&&t| sol.time_index(t).is_err()) {
            return Err(Failure::Config(format!("{}: no field stored at t = {t}", path.display())));
        }
        return Ok(sol);
    }
    log::info!(
        "computing spectral reference: {} modes, dt {}, {} output times",
        spectral.modes,
        spectral.dt,
        times.len()
    );
    let u0 = sample_grid(spectral.grid_size(), burgers_initial);
    Ok(burgers_spectral(&u0, spectral, &times)?)
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, Failure> {
    let net = Mlp::new(cfg.network_spec())?;
    let samples = SampleSet::new(cfg.domain(), cfg.n_interior, cfg.n_boundary)?;
    let (op, field) = match cfg.equation {
        Equation::Heat => {
            let variant = cfg
                .boundary
                .heat_variant()
                .ok_or_else(|| Failure::Config(format!("heat has no `{}` variant", cfg.boundary)))?;
            (
                PdeOperator::heat(cfg.kappa)?,
                Some(ReferenceField::Heat(HeatReference::new(variant, cfg.kappa)?)),
            )
        }
        Equation::Transport => (
            PdeOperator::transport(cfg.beta)?,
            Some(ReferenceField::Transport(TransportReference::new(cfg.beta, cfg.kappa)?)),
        ),
        Equation::Burgers => (PdeOperator::burgers(cfg.nu)?, None),
    };
    let u0 = match &field {
        Some(f) => f.sample(&samples.interior, 0.0)?,
        None => samples.interior.iter().map(|&x| burgers_initial(x)).collect(),
    };
    let reference = match cfg.reference {
        ReferenceKind::None => None,
        ReferenceKind::Analytic => field.clone(),
        ReferenceKind::Spectral => Some(ReferenceField::Burgers(BurgersReference {
            solution: spectral_reference(cfg)?,
            interpolation: cfg.interpolation,
        })),
    };
    Ok(Problem {
        net,
        samples,
        op,
        u0,
        boundary: field,
        reference,
    })
}

/// What a finished run wrote.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: Summary,
    pub rows: Vec<ErrorRow>,
    pub params: ParamVector,
}

fn error_rows(reports: &[StepReport], wall: bool) -> Vec<ErrorRow> {
    reports
        .iter()
        .map(|r| ErrorRow {
            step: r.step,
            time: r.time,
            ls_residual: r.ls_residual,
            rel_l2: r.rel_l2,
            wall_ms: wall.then(|| r.wall.as_secs_f64() * 1e3),
        })
        .collect()
}

fn summarize(
    cfg: &ExperimentConfig,
    reports: &[StepReport],
    init: &InitialFitReport,
    init_s: f64,
    evolve_s: f64,
) -> Summary {
    let errors: Vec<f64> = reports.iter().filter_map(|r| r.rel_l2).collect();
    let n = reports.len().max(1) as f64;
    let stages = reports.first().map_or(0, |r| r.stage_wall.len());
    let mean_stage_ms = (0..stages)
        .map(|s| reports.iter().map(|r| r.stage_wall[s].as_secs_f64()).sum::<f64>() * 1e3 / n)
        .collect();
    Summary {
        format: formats::SUMMARY_FORMAT.into(),
        version: format!("teng-bc {}", env!("CARGO_PKG_VERSION")),
        equation: cfg.equation.to_string(),
        boundary: cfg.boundary.to_string(),
        scheme: cfg.scheme.to_string(),
        steps: reports.len(),
        t_final: cfg.t_final,
        full_range_rel_l2: full_range_relative_l2(reports),
        final_rel_l2: reports.last().and_then(|r| r.rel_l2),
        max_rel_l2: errors.iter().copied().reduce(f64::max),
        final_ls_residual: reports.last().map_or(f64::NAN, |r| r.ls_residual),
        degenerate_solves: reports.iter().map(|r| r.degenerate_steps).sum(),
        initial_fit: InitialFitSummary {
            residual: init.residual_norm,
            iterations: init.iterations,
            converged: init.converged,
        },
        timing: Timing {
            initial_fit_s: init_s,
            evolve_s,
            mean_step_ms: reports.iter().map(|r| r.wall.as_secs_f64()).sum::<f64>() * 1e3 / n,
            mean_stage_ms,
        },
        config: cfg.to_text(),
    }
}

/// Fits the initial condition, evolves to `t_final` and writes
/// `errors.csv`, `summary.json` and `checkpoint.bin` into the output
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, Failure> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let problem = build_problem(cfg).map_err(|e| phase(e, "setup"))?;
    log::info!(
        "{} / {} / {}: {} interior and {} boundary samples, {} parameters",
        cfg.equation,
        cfg.boundary,
        cfg.scheme,
        problem.samples.interior.len(),
        problem.samples.boundary.len(),
        problem.net.param_count()
    );
    let step_cfg = cfg.step_config();

    let clock = Instant::now();
    let mut params = problem.net.init(cfg.seed);
    let init = fit_initial(
        &problem.net,
        &mut params,
        &problem.samples,
        &problem.u0,
        problem.bc(),
        &step_cfg,
        &cfg.initial_fit_config(),
    )
    .map_err(|e| Failure::from(e.context("initial fit")))?;
    let init_s = clock.elapsed().as_secs_f64();
    log::info!(
        "initial fit: residual {:.3e} after {} iterations ({:.1} s)",
        init.residual_norm,
        init.iterations,
        init_s
    );

    let clock = Instant::now();
    let n_steps = cfg.scheme_config().n_steps();
    let (params, reports) = evolve(
        &problem.net,
        params,
        &problem.op,
        &problem.samples,
        problem.bc(),
        &cfg.scheme_config(),
        &step_cfg,
        problem.reference(),
        cfg.error_every,
        |r| match r.rel_l2 {
            Some(e) => log::info!("step {}/{n_steps}: residual {:.3e}, error {e:.3e}", r.step, r.ls_residual),
            None => log::debug!("step {}/{n_steps}: residual {:.3e}", r.step, r.ls_residual),
        },
    )
    .map_err(|e| Failure::from(e.context("time stepping")))?;
    let evolve_s = clock.elapsed().as_secs_f64();

    let rows = error_rows(&reports, cfg.log_wall_time);
    let summary = summarize(cfg, &reports, &init, init_s, evolve_s);
    formats::write_atomic(&dir.join("errors.csv"), formats::errors_csv(&rows).as_bytes())?;
    formats::write_atomic(&dir.join("summary.json"), summary.to_json().as_bytes())?;
    formats::write_atomic(
        &dir.join("checkpoint.bin"),
        &formats::checkpoint_bytes(&cfg.network_spec(), &params),
    )?;
    Ok(RunOutcome {
        output_dir: dir,
        summary,
        rows,
        params,
    })
}

fn phase(f: Failure, name: &str) -> Failure {
    match f {
        Failure::Config(m) => Failure::Config(format!("{name}: {m}")),
        Failure::Io(m) => Failure::Io(format!("{name}: {m}")),
        Failure::Numeric(m) => Failure::Numeric(format!("{name}: {m}")),
        Failure::Acceptance(m) => Failure::Acceptance(format!("{name}: {m}")),
    }
}
