//! The boundary-aware least-squares stepper.
//!
//! One fit moves the parameters toward a target field while enforcing
//! `a·u + b·∂ₙu = v` on the boundary samples. Each iteration linearizes the
//! network around the current parameters and solves
//!
//! ```text
//! min_Δθ ‖W (𝓡 − 𝓙 Δθ)‖²,   𝓡 = (u_target − u_θ ; v − a u_θ − b ∂ₙu_θ),
//!                            𝓙 = (∂_θ u_θ ; a ∂_θ u_θ + b ∂_θ ∂ₙu_θ)
//! ```
//!
//! restricted to a random subset of parameter columns, then takes the full
//! step `θ ← θ + Δθ`. `W` holds square roots of the quadrature weights, so
//! the interior and boundary blocks are discrete `L²(Ω)` and `L²(∂Ω)` norms.

mod mask;
mod solve;

pub use mask::select_mask;
pub use solve::{natural_gradient_lstsq, truncated_lstsq, LsFactors, LsSolution};

use crate::ansatz::{check_unit, Adjoint, Mlp, ParamRole, ParamVector, Tape};
use crate::geometry::{SampleSet, Segment};
use crate::{Error, Result, Vec2};
use faer::Mat;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Boundary condition data for one boundary sample at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub point: Vec2,
    pub normal: Vec2,
    pub a: f64,
    pub b: f64,
    pub v: f64,
    pub tag: Segment,
}

/// How rows are weighted before the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowWeighting {
    /// `√(|Ω|/N_Ω)` on interior rows, `√(|∂Ω|/N_∂Ω)` on boundary rows.
    #[default]
    Quadrature,
    /// All rows weighted by one.
    Unit,
}

impl RowWeighting {
    pub fn as_str(self) -> &'static str {
        match self {
            RowWeighting::Quadrature => "quadrature",
            RowWeighting::Unit => "unit",
        }
    }

    fn weights(self, samples: &SampleSet) -> (f64, f64) {
        match self {
            RowWeighting::Quadrature => (samples.interior_weight.sqrt(), samples.boundary_weight.sqrt()),
            RowWeighting::Unit => (1.0, 1.0),
        }
    }
}

impl fmt::Display for RowWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RowWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(RowWeighting::Quadrature),
            "unit" => Ok(RowWeighting::Unit),
            other => Err(Error::config(format!("unknown row weighting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    /// Gauss–Newton iterations per fit.
    pub n_ls: usize,
    /// Active parameter columns per iteration.
    pub subset_size: usize,
    /// Iterations for the first stage of a multi-stage scheme.
    pub first_stage_n_ls: usize,
    /// Active columns for the first stage of a multi-stage scheme.
    pub first_stage_subset: usize,
    /// Relative singular-value cutoff. Undamped steps diverge within a few
    /// time steps at 1e-8 on the default network.
    pub svd_rtol: f64,
    pub rng_seed: u64,
    pub row_weighting: RowWeighting,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            n_ls: 5,
            subset_size: 512,
            first_stage_n_ls: 7,
            first_stage_subset: 768,
            svd_rtol: 1e-6,
            rng_seed: 0,
            row_weighting: RowWeighting::Quadrature,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ls == 0 || self.first_stage_n_ls == 0 {
            return Err(Error::config("iteration counts must be at least 1"));
        }
        if self.subset_size == 0 || self.first_stage_subset == 0 {
            return Err(Error::config("parameter subset sizes must be at least 1"));
        }
        if !(self.svd_rtol > 0.0 && self.svd_rtol < 1.0) {
            return Err(Error::config(format!("svd_rtol must lie in (0, 1), got {}", self.svd_rtol)));
        }
        Ok(())
    }

    /// `(iterations, subset size)` for a stage.
    pub fn schedule(&self, first_stage: bool) -> (usize, usize) {
        if first_stage {
            (self.first_stage_n_ls, self.first_stage_subset)
        } else {
            (self.n_ls, self.subset_size)
        }
    }
}

/// Stacked residual and Jacobian over interior then boundary rows.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub residual: Vec<f64>,
    /// Unweighted rows restricted to the active columns.
    pub jacobian: Mat<f64>,
    pub row_weights: Vec<f64>,
    pub n_interior: usize,
}

impl LinearSystem {
    /// `(diag(w) 𝓙, w ⊙ 𝓡)`.
    pub fn weighted(&self) -> (Mat<f64>, Vec<f64>) {
        let a = Mat::<f64>::from_fn(self.jacobian.nrows(), self.jacobian.ncols(), |i, j| {
            self.row_weights[i] * self.jacobian[(i, j)]
        });
        let b = self.residual.iter().zip(&self.row_weights).map(|(r, w)| r * w).collect();
        (a, b)
    }

    /// `‖w ⊙ 𝓡‖₂`.
    pub fn residual_norm(&self) -> f64 {
        weighted_norm(&self.residual, &self.row_weights)
    }
}

fn weighted_norm(r: &[f64], w: &[f64]) -> f64 {
    r.iter().zip(w).map(|(r, w)| (r * w) * (r * w)).sum::<f64>().sqrt()
}

fn check_rows(samples: &SampleSet, targets: &[f64], rows: &[BoundaryRow]) -> Result<()> {
    if targets.len() != samples.interior.len() {
        return Err(Error::Precondition(format!(
            "{} target values for {} interior samples",
            targets.len(),
            samples.interior.len()
        )));
    }
    for (j, row) in rows.iter().enumerate() {
        if row.a == 0.0 && row.b == 0.0 {
            return Err(Error::Precondition(format!("boundary row {j} has (a, b) = (0, 0)")));
        }
        if row.b != 0.0 {
            check_unit(row.normal).map_err(|e| Error::Precondition(format!("boundary row {j}: {e}")))?;
        }
    }
    Ok(())
}

fn row_weights(samples: &SampleSet, n_boundary: usize, weighting: RowWeighting) -> Vec<f64> {
    let (wi, wb) = weighting.weights(samples);
    let mut w = vec![wi; samples.interior.len()];
    w.resize(samples.interior.len() + n_boundary, wb);
    w
}

/// Builds the stacked system with Jacobian columns restricted to `mask`.
///
/// Row `i < N_Ω` is `u_target(x_i) − u_θ(x_i)` with Jacobian `∂_θ u_θ(x_i)`;
/// row `N_Ω + j` is `v_j − (a_j u_θ + b_j ∂ₙu_θ)(x_j)` with Jacobian
/// `a_j ∂_θ u_θ + b_j ∂_θ ∂ₙu_θ`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_system(
    net: &Mlp,
    params: &[f64],
    samples: &SampleSet,
    targets: &[f64],
    rows: &[BoundaryRow],
    mask: &[usize],
    weighting: RowWeighting,
) -> Result<LinearSystem> {
    if mask.is_empty() {
        return Err(Error::config("parameter mask is empty"));
    }
    if let Some(&bad) = mask.iter().find(|&&i| i >= net.param_count()) {
        return Err(Error::Precondition(format!("mask index {bad} out of range")));
    }
    net.check_params(params)?;
    check_rows(samples, targets, rows)?;
    let roles = net.layout().roles(mask);
    let m = mask.len();
    let n_int = samples.interior.len();
    let n_rows = n_int + rows.len();

    let mut buf = vec![0.0; n_rows * m];
    let mut residual = vec![0.0; n_rows];
    buf.par_chunks_mut(m)
        .zip(residual.par_iter_mut())
        .enumerate()
        .for_each_init(
            || (Tape::default(), Adjoint::default()),
            |(tape, adj), (i, (out, res))| {
                *res = fill_row(net, params, samples, targets, rows, &roles, i, tape, adj, out);
            },
        );
    let jacobian = Mat::<f64>::from_fn(n_rows, m, |i, j| buf[i * m + j]);
    Ok(LinearSystem {
        residual,
        jacobian,
        row_weights: row_weights(samples, rows.len(), weighting),
        n_interior: n_int,
    })
}

#[allow(clippy::too_many_arguments)]
fn fill_row(
    net: &Mlp,
    params: &[f64],
    samples: &SampleSet,
    targets: &[f64],
    rows: &[BoundaryRow],
    roles: &[ParamRole],
    i: usize,
    tape: &mut Tape,
    adj: &mut Adjoint,
    out: &mut [f64],
) -> f64 {
    let n_int = samples.interior.len();
    if i < n_int {
        net.record(params, samples.interior[i], None, tape);
        net.backprop(params, tape, 1.0, 0.0, adj);
        net.gather(params, tape, adj, roles, out);
        targets[i] - tape.u
    } else {
        let row = &rows[i - n_int];
        let dir = (row.b != 0.0).then_some(row.normal);
        net.record(params, row.point, dir, tape);
        net.backprop(params, tape, row.a, row.b, adj);
        net.gather(params, tape, adj, roles, out);
        row.v - (row.a * tape.u + row.b * tape.du)
    }
}

/// Unweighted residual vector `𝓡` without any Jacobian work.
pub fn residuals(net: &Mlp, params: &[f64], samples: &SampleSet, targets: &[f64], rows: &[BoundaryRow]) -> Vec<f64> {
    let n_int = samples.interior.len();
    (0..n_int + rows.len())
        .into_par_iter()
        .map_init(Tape::default, |tape, i| {
            if i < n_int {
                net.record(params, samples.interior[i], None, tape);
                targets[i] - tape.u
            } else {
                let row = &rows[i - n_int];
                net.record(params, row.point, (row.b != 0.0).then_some(row.normal), tape);
                row.v - (row.a * tape.u + row.b * tape.du)
            }
        })
        .collect()
}

/// Weighted residual norm of the current parameters against a target.
pub fn residual_norm(
    net: &Mlp,
    params: &[f64],
    samples: &SampleSet,
    targets: &[f64],
    rows: &[BoundaryRow],
    weighting: RowWeighting,
) -> f64 {
    let r = residuals(net, params, samples, targets, rows);
    weighted_norm(&r, &row_weights(samples, rows.len(), weighting))
}

/// Truncated-SVD solve of the weighted system. A fully truncated system
/// yields a zero step, flagged `degenerate`.
pub fn solve_ls(system: &LinearSystem, rtol: f64) -> LsSolution {
    let (a, b) = system.weighted();
    let sol = truncated_lstsq(a.as_ref(), &b, rtol);
    if sol.degenerate {
        log::warn!("least-squares step degenerate (sigma_max = {}); taking a zero step", sol.sigma_max);
    }
    sol
}

/// Natural-gradient step over all parameters: `Δθ = −G⁺∇_θ𝓛` with the Gram
/// matrix `G = 𝓙ᵀ W² 𝓙` of the combined interior and boundary rows.
pub fn natural_gradient_step(
    net: &Mlp,
    params: &[f64],
    samples: &SampleSet,
    targets: &[f64],
    rows: &[BoundaryRow],
    rtol: f64,
    weighting: RowWeighting,
) -> Result<Vec<f64>> {
    let full: Vec<usize> = (0..net.param_count()).collect();
    let system = assemble_system(net, params, samples, targets, rows, &full, weighting)?;
    let (a, b) = system.weighted();
    Ok(natural_gradient_lstsq(a.as_ref(), &b, rtol).delta)
}

/// Outcome of one call to [`fit_target`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Weighted residual norm after the last update.
    pub residual_norm: f64,
    pub iterations: usize,
    pub degenerate_steps: usize,
}

/// Which columns a fit may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPolicy {
    /// Random subsets drawn from the trainable pool; the size comes from the
    /// [`StepConfig`] schedule and is clamped to the pool size.
    Random { first_stage: bool },
    /// Every trainable parameter, every iteration.
    Full,
}

/// Runs `iterations` Gauss–Newton updates toward `targets` with boundary
/// rows `rows`, updating `params` in place.
#[allow(clippy::too_many_arguments)]
pub fn fit_iterations(
    net: &Mlp,
    params: &mut ParamVector,
    samples: &SampleSet,
    targets: &[f64],
    rows: &[BoundaryRow],
    cfg: &StepConfig,
    policy: MaskPolicy,
    iterations: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FitReport> {
    let pool = net.layout().trainable_indices();
    let mut degenerate_steps = 0;
    for k in 0..iterations {
        let mask: Vec<usize> = match policy {
            MaskPolicy::Full => pool.to_vec(),
            MaskPolicy::Random { first_stage } => {
                let size = cfg.schedule(first_stage).1.min(pool.len());
                select_mask(pool.len(), size, rng).into_iter().map(|i| pool[i]).collect()
            }
        };
        let system = assemble_system(net, params, samples, targets, rows, &mask, cfg.row_weighting)?;
        if let Some(i) = system.residual.iter().position(|r| !r.is_finite()) {
            return Err(Error::numeric(format!(
                "non-finite residual in row {i} at least-squares iteration {}",
                k + 1
            )));
        }
        let sol = solve_ls(&system, cfg.svd_rtol);
        if sol.degenerate {
            degenerate_steps += 1;
        }
        for (&col, d) in mask.iter().zip(&sol.delta) {
            params[col] += d;
        }
    }
    let norm = residual_norm(net, params, samples, targets, rows, cfg.row_weighting);
    if !norm.is_finite() {
        return Err(Error::numeric("non-finite residual after least-squares update"));
    }
    Ok(FitReport {
        residual_norm: norm,
        iterations,
        degenerate_steps,
    })
}

/// One stage fit: `n_ls` iterations on random subsets (the first-stage
/// schedule when `is_first_stage`).
#[allow(clippy::too_many_arguments)]
pub fn fit_target(
    net: &Mlp,
    params: &mut ParamVector,
    samples: &SampleSet,
    targets: &[f64],
    rows: &[BoundaryRow],
    cfg: &StepConfig,
    is_first_stage: bool,
    rng: &mut ChaCha8Rng,
) -> Result<FitReport> {
    let iterations = cfg.schedule(is_first_stage).0;
    fit_iterations(
        net,
        params,
        samples,
        targets,
        rows,
        cfg,
        MaskPolicy::Random {
            first_stage: is_first_stage,
        },
        iterations,
        rng,
    )
}
