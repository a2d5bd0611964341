//! Explicit time schemes on top of the stage fitter, the initial fit, and
//! the time-marching driver.
//!
//! A step `t → t+dt` builds a sequence of stage targets. Each target is a
//! field on the interior samples, paired with the time at which boundary
//! data accompanies its fit. Stage `i ≥ 2` reads `kᵢ = L u` from the network
//! refitted to the previous stage, so a target depends on every fit before
//! it.

use crate::ansatz::{Mlp, ParamVector};
use crate::geometry::SampleSet;
use crate::metrics::relative_l2;
use crate::pde::PdeOperator;
use crate::reference::Reference;
use crate::stepper::{assemble_system, fit_target, residual_norm, BoundaryRow, FitReport, LsFactors, StepConfig};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Euler,
    #[default]
    Heun,
    Rk4,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Heun => "heun",
            Scheme::Rk4 => "rk4",
        }
    }

    pub fn stages(self) -> usize {
        match self {
            Scheme::Euler => 1,
            Scheme::Heun => 2,
            Scheme::Rk4 => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "heun" => Ok(Scheme::Heun),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Heun,
            dt: 5e-4,
            t_final: 0.05,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::config(format!(
                "t_final ({}) must be at least dt ({})",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    /// Number of steps, `t_final / dt` rounded to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Time after `step` steps, computed without accumulation drift.
    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// A field the next fit must match, with its boundary-data time.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTarget {
    pub values: Vec<f64>,
    pub stage_time: f64,
    pub is_first_stage: bool,
}

/// Anything a scheme can advance: a vector of values, their rates `L u`,
/// and a way to move the state onto a target.
pub trait StageState {
    fn values(&self) -> Result<Vec<f64>>;
    fn rates(&self) -> Result<Vec<f64>>;
    fn realize(&mut self, target: &StageTarget) -> Result<()>;
}

fn combine(u: &[f64], terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = u.to_vec();
    for &(c, k) in terms {
        for (o, ki) in out.iter_mut().zip(k) {
            *o += c * ki;
        }
    }
    out
}

/// Builds and realizes every stage of one step from `t` to `t + dt`.
///
/// Returns the targets in the order they were fitted; on return `state`
/// holds the final target. The first-stage flag is set only for the
/// predictor of multi-stage schemes.
pub fn build_targets<S: StageState + ?Sized>(scheme: Scheme, state: &mut S, t: f64, dt: f64) -> Result<Vec<StageTarget>> {
    let u = state.values()?;
    let k1 = state.rates()?;
    let mut out = Vec::with_capacity(scheme.stages());
    let mut push = |state: &mut S, values: Vec<f64>, stage_time: f64, is_first_stage: bool| -> Result<()> {
        let target = StageTarget {
            values,
            stage_time,
            is_first_stage,
        };
        state.realize(&target)?;
        out.push(target);
        Ok(())
    };
    match scheme {
        Scheme::Euler => {
            push(state, combine(&u, &[(dt, &k1)]), t + dt, false)?;
        }
        Scheme::Heun => {
            push(state, combine(&u, &[(dt, &k1)]), t + dt, true)?;
            let k2 = state.rates()?;
            push(state, combine(&u, &[(0.5 * dt, &k1), (0.5 * dt, &k2)]), t + dt, false)?;
        }
        Scheme::Rk4 => {
            let half = t + 0.5 * dt;
            push(state, combine(&u, &[(0.5 * dt, &k1)]), half, true)?;
            let k2 = state.rates()?;
            push(state, combine(&u, &[(0.5 * dt, &k2)]), half, false)?;
            let k3 = state.rates()?;
            push(state, combine(&u, &[(dt, &k3)]), t + dt, false)?;
            let k4 = state.rates()?;
            let c = dt / 6.0;
            push(
                state,
                combine(&u, &[(c, &k1), (2.0 * c, &k2), (2.0 * c, &k3), (c, &k4)]),
                t + dt,
                false,
            )?;
        }
    }
    Ok(out)
}

/// Source of boundary rows `(a, b, v)` at a given time.
pub trait BoundaryConditions: Sync {
    fn boundary_rows(&self, samples: &SampleSet, t: f64) -> Result<Vec<BoundaryRow>>;
}

/// No boundary rows (periodic domains).
#[derive(Debug, Clone, Copy, Default)]
pub struct NoBoundary;

impl BoundaryConditions for NoBoundary {
    fn boundary_rows(&self, _samples: &SampleSet, _t: f64) -> Result<Vec<BoundaryRow>> {
        Ok(Vec::new())
    }
}

/// `L u_θ` at every interior sample.
pub fn operator_values(net: &Mlp, params: &[f64], op: &PdeOperator, samples: &SampleSet) -> Vec<f64> {
    samples
        .interior
        .par_iter()
        .map(|&x| op.apply(&net.bundle(params, x), x))
        .collect()
}

/// `u_θ` at every interior sample.
pub fn network_values(net: &Mlp, params: &[f64], samples: &SampleSet) -> Vec<f64> {
    samples.interior.par_iter().map(|&x| net.value(params, x)).collect()
}

/// The network as a scheme state: realizing a target runs the stage fit with
/// boundary rows at the target's stage time.
pub struct NetworkState<'a> {
    pub net: &'a Mlp,
    pub params: ParamVector,
    pub op: &'a PdeOperator,
    pub samples: &'a SampleSet,
    pub bc: &'a dyn BoundaryConditions,
    pub cfg: &'a StepConfig,
    pub rng: ChaCha8Rng,
    /// Reports and wall times of fits since the last reset, in order.
    pub fits: Vec<(FitReport, Duration)>,
}

impl StageState for NetworkState<'_> {
    fn values(&self) -> Result<Vec<f64>> {
        Ok(network_values(self.net, &self.params, self.samples))
    }

    fn rates(&self) -> Result<Vec<f64>> {
        let k = operator_values(self.net, &self.params, self.op, self.samples);
        if let Some(i) = k.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite L u at interior sample {i}")));
        }
        Ok(k)
    }

    fn realize(&mut self, target: &StageTarget) -> Result<()> {
        let start = Instant::now();
        let rows = self.bc.boundary_rows(self.samples, target.stage_time)?;
        let report = fit_target(
            self.net,
            &mut self.params,
            self.samples,
            &target.values,
            &rows,
            self.cfg,
            target.is_first_stage,
            &mut self.rng,
        )?;
        self.fits.push((report, start.elapsed()));
        Ok(())
    }
}

/// Stopping rule and step candidates for [`fit_initial`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialFitConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Stop once this many consecutive iterations fail to lower the
    /// residual by at least 1%. Zero disables the check.
    pub patience: usize,
    /// Gauss-Newton step lengths `2⁻ᵏ`, `k = 0..=max_halvings`.
    pub max_halvings: usize,
    /// Fallback Levenberg-Marquardt dampings `10⁻ʲ σ_max²`,
    /// `j = 0..=damping_decades`.
    pub damping_decades: usize,
    /// Singular-value cutoff for the initial fit. Every candidate is checked
    /// against the true residual, so it can be smaller than the
    /// time-stepping one.
    pub svd_rtol: f64,
}

impl Default for InitialFitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 500,
            patience: 10,
            max_halvings: 12,
            damping_decades: 12,
            svd_rtol: 1e-8,
        }
    }
}

/// Outcome of [`fit_initial`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFitReport {
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits `u0` (values at the interior samples) with boundary rows at `t = 0`
/// over the full trainable mask, iterating until the weighted residual drops
/// below `fit.tol`.
///
/// Far from the solution a full Gauss-Newton step can overshoot by orders of
/// magnitude. Each iteration factors the system once, then takes the longest
/// halving of the Gauss-Newton step that lowers the residual. When none does
/// it falls back to Levenberg-Marquardt steps, lightest damping first. The
/// residual is monotone. Failing to reach the tolerance is not an error; it
/// is logged and reported.
pub fn fit_initial(
    net: &Mlp,
    params: &mut ParamVector,
    samples: &SampleSet,
    u0: &[f64],
    bc: &dyn BoundaryConditions,
    cfg: &StepConfig,
    fit: &InitialFitConfig,
) -> Result<InitialFitReport> {
    let rows = bc.boundary_rows(samples, 0.0)?;
    let mask = net.layout().trainable_indices().to_vec();
    let norm = |p: &ParamVector| residual_norm(net, p, samples, u0, &rows, cfg.row_weighting);
    let mut residual = norm(params);
    if !residual.is_finite() {
        return Err(Error::numeric("non-finite residual before the initial fit"));
    }
    let mut stale = 0;
    let mut iterations = 0;
    while residual >= fit.tol && iterations < fit.max_iterations {
        iterations += 1;
        let system = assemble_system(net, params, samples, u0, &rows, &mask, cfg.row_weighting)
            .map_err(|e| e.context(format!("initial fit iteration {iterations}")))?;
        let (a, b) = system.weighted();
        let factors = LsFactors::new(a.as_ref(), &b)
            .ok_or_else(|| Error::numeric(format!("SVD failed in initial fit iteration {iterations}")))?;
        let gn = factors.damped(0.0, fit.svd_rtol);
        let steps = (0..=fit.max_halvings).map(|k| {
            let alpha = 0.5f64.powi(k as i32);
            (format!("step {alpha}"), gn.iter().map(|d| alpha * d).collect::<Vec<f64>>())
        });
        let damped = (0..=fit.damping_decades).rev().map(|j| {
            let mu = 10f64.powi(-(j as i32));
            (format!("damping {mu:.0e}"), factors.damped(mu, fit.svd_rtol))
        });
        let mut best = None;
        for (label, delta) in steps.chain(damped) {
            let mut trial = params.clone();
            for (&col, d) in mask.iter().zip(&delta) {
                trial[col] += d;
            }
            let r = norm(&trial);
            if r < residual {
                best = Some((trial, r, label));
                break;
            }
        }
        let Some((trial, r, label)) = best else {
            log::debug!("initial fit iteration {iterations}: no candidate lowers the residual");
            break;
        };
        log::debug!("initial fit iteration {iterations}: residual {r:.3e} ({label})");
        stale = if r < 0.99 * residual { 0 } else { stale + 1 };
        *params = trial;
        residual = r;
        if fit.patience > 0 && stale >= fit.patience {
            break;
        }
    }
    let converged = residual < fit.tol;
    if !converged {
        log::warn!(
            "initial fit stopped at residual {residual:.3e} after {iterations} iterations (target {:.1e})",
            fit.tol
        );
    }
    Ok(InitialFitReport {
        residual_norm: residual,
        iterations,
        converged,
    })
}

/// One row of the time-marching log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    /// Weighted residual of the final stage fit.
    pub ls_residual: f64,
    pub rel_l2: Option<f64>,
    /// `Σ (u − u_ref)²` and `Σ u_ref²` over the interior samples, for
    /// space-time aggregates.
    pub sq_error: Option<f64>,
    pub sq_reference: Option<f64>,
    pub degenerate_steps: usize,
    pub wall: Duration,
    pub stage_wall: Vec<Duration>,
}

/// Advances `params` from `t = 0` to `scheme.t_final`.
///
/// When a reference is supplied, the relative L² error on the interior
/// samples is logged every `error_every` steps and always at the last step.
/// `observer` sees each report as soon as it is produced.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    net: &Mlp,
    params: ParamVector,
    op: &PdeOperator,
    samples: &SampleSet,
    bc: &dyn BoundaryConditions,
    scheme: &SchemeConfig,
    cfg: &StepConfig,
    reference: Option<&dyn Reference>,
    error_every: usize,
    mut observer: impl FnMut(&StepReport),
) -> Result<(ParamVector, Vec<StepReport>)> {
    scheme.validate()?;
    cfg.validate()?;
    net.check_params(&params)?;
    let n_steps = scheme.n_steps();
    let error_every = error_every.max(1);
    let mut state = NetworkState {
        net,
        params,
        op,
        samples,
        bc,
        cfg,
        // Distinct stream from the initial fit's.
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(1)),
        fits: Vec::new(),
    };
    let mut reports = Vec::with_capacity(n_steps);
    for step in 1..=n_steps {
        let start = Instant::now();
        let t = scheme.time_at(step - 1);
        state.fits.clear();
        build_targets(scheme.scheme, &mut state, t, scheme.dt).map_err(|e| e.context(format!("step {step}")))?;
        let time = scheme.time_at(step);
        let (last, _) = state
            .fits
            .last()
            .cloned()
            .ok_or_else(|| Error::Internal("step produced no fits".into()))?;
        let mut report = StepReport {
            step,
            time,
            ls_residual: last.residual_norm,
            rel_l2: None,
            sq_error: None,
            sq_reference: None,
            degenerate_steps: state.fits.iter().map(|(r, _)| r.degenerate_steps).sum(),
            wall: Duration::ZERO,
            stage_wall: state.fits.iter().map(|(_, d)| *d).collect(),
        };
        if let Some(reference) = reference {
            if step % error_every == 0 || step == n_steps {
                let exact = reference.sample(&samples.interior, time)?;
                let pred = network_values(net, &state.params, samples);
                report.rel_l2 = Some(relative_l2(&pred, &exact).map_err(|e| e.context(format!("step {step}")))?);
                report.sq_error = Some(pred.iter().zip(&exact).map(|(p, e)| (p - e) * (p - e)).sum());
                report.sq_reference = Some(exact.iter().map(|e| e * e).sum());
            }
        }
        report.wall = start.elapsed();
        log::info!(
            "step {step}/{n_steps} t={time:.6} residual={:.3e} rel_l2={}",
            report.ls_residual,
            report.rel_l2.map_or("-".to_string(), |e| format!("{e:.3e}"))
        );
        observer(&report);
        reports.push(report);
    }
    Ok((state.params, reports))
}

/// Space-time relative L² error over every step that logged an error.
pub fn full_range_relative_l2(reports: &[StepReport]) -> Option<f64> {
    let (num, den) = reports
        .iter()
        .filter_map(|r| Some((r.sq_error?, r.sq_reference?)))
        .fold((0.0, 0.0), |(n, d), (e, r)| (n + e, d + r));
    (den > 0.0).then(|| (num / den).sqrt())
}

#[cfg(test)]
mod tests;
