//! Fourier pseudospectral solver for `u_t = ν∇²u − u(∂₁u + ∂₂u)` on the
//! periodic square `[0, 2π)²`.
//!
//! `modes` counts retained Fourier modes per axis. The collocation grid has
//! `n = 3·modes/2` points per axis, so keeping `|k| ≤ n/3 = modes/2` is the
//! exact 2/3-rule dealiasing of the quadratic term. Time stepping is classical
//! RK4 on the masked coefficients.

use crate::{Error, Result, Vec2};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Retained Fourier modes per axis (a power of two).
    pub modes: usize,
    pub nu: f64,
    pub dt: f64,
    /// When false the solver integrates the heat equation `u_t = ν∇²u`.
    pub advection: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            modes: 256,
            nu: 1e-3,
            dt: 1e-4,
            advection: true,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes < 4 || !self.modes.is_power_of_two() {
            return Err(Error::config(format!("spectral modes must be a power of two >= 4, got {}", self.modes)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::config("spectral viscosity must be non-negative"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("spectral dt must be positive"));
        }
        Ok(())
    }

    /// Collocation points per axis.
    pub fn grid_size(&self) -> usize {
        grid_size(self.modes)
    }
}

pub fn grid_size(modes: usize) -> usize {
    3 * modes / 2
}

/// Wavenumber of FFT index `q` on an `n`-point axis.
fn wavenumber(q: usize, n: usize) -> f64 {
    if q <= n / 2 {
        q as f64
    } else {
        q as f64 - n as f64
    }
}

/// 2-D transforms on row-major `n × n` arrays. Spectral arrays are stored
/// transposed: entry `[a·n + b]` holds the coefficient with `x₂`-index `a`
/// and `x₁`-index `b`.
///
/// Only spectral rows with `|k₂| ≤ cut` are transformed: the inverse assumes
/// the others are zero and the forward leaves them undefined.
struct Transform {
    n: usize,
    cut: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Transform {
    fn new(n: usize, cut: usize) -> Self {
        assert!(2 * cut < n, "retained band must leave the Nyquist row out");
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            cut,
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
        }
    }

    /// In-place square transpose by blocked swaps; small blocks keep both
    /// tiles in L1.
    fn transpose(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        const B: usize = 8;
        for i0 in (0..n).step_by(B) {
            for j0 in (i0..n).step_by(B) {
                for i in i0..(i0 + B).min(n) {
                    let start = if i0 == j0 { i + 1 } else { j0 };
                    for j in start..(j0 + B).min(n) {
                        data.swap(i * n + j, j * n + i);
                    }
                }
            }
        }
    }

    /// Row ranges `0..=cut` and `n−cut..n` of the spectral layout.
    fn band(&self) -> [std::ops::Range<usize>; 2] {
        let (n, c) = (self.n, self.cut);
        [0..(c + 1) * n, (n - c) * n..n * n]
    }

    /// Physical `[i₁][i₂]` to spectral `[k₂][k₁]`.
    fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
        self.transpose(data);
        for r in self.band() {
            self.forward.process_with_scratch(&mut data[r], &mut self.scratch);
        }
    }

    /// Spectral `[k₂][k₁]` to physical `[i₁][i₂]`, normalized.
    fn inverse(&mut self, data: &mut [Complex64]) {
        for r in self.band() {
            self.inverse.process_with_scratch(&mut data[r], &mut self.scratch);
        }
        self.transpose(data);
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

struct Solver {
    cfg: SpectralConfig,
    fft: Transform,
    /// `1 − (k₁ + k₂)` in spectral layout: `û + i·ŝ` with `ŝ = i(k₁ + k₂)û`.
    packed: Vec<f64>,
    /// `−(k₁² + k₂²)`.
    lap: Vec<f64>,
    mask: Vec<bool>,
    work: Vec<Complex64>,
}

impl Solver {
    fn new(cfg: SpectralConfig) -> Self {
        let n = cfg.grid_size();
        let cut = (cfg.modes / 2) as f64;
        let mut packed = vec![0.0; n * n];
        let mut lap = vec![0.0; n * n];
        let mut mask = vec![false; n * n];
        for a in 0..n {
            let k2 = wavenumber(a, n);
            for b in 0..n {
                let k1 = wavenumber(b, n);
                packed[a * n + b] = 1.0 - (k1 + k2);
                lap[a * n + b] = -(k1 * k1 + k2 * k2);
                mask[a * n + b] = k1.abs() <= cut && k2.abs() <= cut;
            }
        }
        Self {
            cfg,
            fft: Transform::new(n, cfg.modes / 2),
            packed,
            lap,
            mask,
            work: vec![Complex64::default(); n * n],
        }
    }

    /// `d û / dt` for masked coefficients `uh`.
    fn rhs(&mut self, uh: &[Complex64], out: &mut [Complex64]) {
        let nu = self.cfg.nu;
        if self.cfg.advection {
            // One inverse transform of û + i·ŝ yields u + i·s with s = ∂₁u + ∂₂u.
            for ((w, &u), &f) in self.work.iter_mut().zip(uh).zip(&self.packed) {
                *w = u * f;
            }
            self.fft.inverse(&mut self.work);
            for w in self.work.iter_mut() {
                *w = Complex64::new(w.re * w.im, 0.0);
            }
            self.fft.forward(&mut self.work);
            for idx in 0..out.len() {
                out[idx] = if self.mask[idx] {
                    nu * self.lap[idx] * uh[idx] - self.work[idx]
                } else {
                    Complex64::default()
                };
            }
        } else {
            for idx in 0..out.len() {
                out[idx] = nu * self.lap[idx] * uh[idx];
            }
        }
    }

    fn rk4(&mut self, uh: &mut [Complex64], k: &mut [Vec<Complex64>; 4], stage: &mut [Complex64]) {
        let dt = self.cfg.dt;
        let [k1, k2, k3, k4] = k;
        self.rhs(uh, k1);
        for i in 0..uh.len() {
            stage[i] = uh[i] + 0.5 * dt * k1[i];
        }
        self.rhs(stage, k2);
        for i in 0..uh.len() {
            stage[i] = uh[i] + 0.5 * dt * k2[i];
        }
        self.rhs(stage, k3);
        for i in 0..uh.len() {
            stage[i] = uh[i] + dt * k3[i];
        }
        self.rhs(stage, k4);
        for i in 0..uh.len() {
            uh[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Grid fields at a list of output times.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub config: SpectralConfig,
    /// Points per axis.
    pub n: usize,
    pub times: Vec<f64>,
    /// Row-major `n × n` fields; entry `[i·n + j]` is `u(i h, j h)`.
    pub fields: Vec<Vec<f64>>,
}

/// `u₀` sampled on the `n × n` grid `x = (i h, j h)`, `h = 2π/n`.
pub fn sample_grid(n: usize, u0: impl Fn(Vec2) -> f64) -> Vec<f64> {
    let h = TAU / n as f64;
    (0..n * n).map(|idx| u0([(idx / n) as f64 * h, (idx % n) as f64 * h])).collect()
}

/// The Burgers initial condition
/// `(e^{3 sin x₁ + sin x₂} + e^{−3 sin x₁ + sin x₂} − e^{3 sin x₁ − sin x₂} − e^{−3 sin x₁ − sin x₂}) / 100`.
pub fn burgers_initial(x: Vec2) -> f64 {
    let (s1, s2) = (x[0].sin(), x[1].sin());
    ((3.0 * s1 + s2).exp() + (-3.0 * s1 + s2).exp() - (3.0 * s1 - s2).exp() - (-3.0 * s1 - s2).exp()) / 100.0
}

/// Integrates from `u0_grid` (on the `grid_size(modes)` grid) and returns the
/// fields at each of `output_times`, which must be non-decreasing multiples
/// of `cfg.dt`.
pub fn burgers_spectral(u0_grid: &[f64], cfg: SpectralConfig, output_times: &[f64]) -> Result<SpectralSolution> {
    cfg.validate()?;
    let n = cfg.grid_size();
    if u0_grid.len() != n * n {
        return Err(Error::config(format!(
            "initial grid has {} values, expected {n}x{n} for {} modes",
            u0_grid.len(),
            cfg.modes
        )));
    }
    let mut targets = Vec::with_capacity(output_times.len());
    let mut last = 0;
    for &t in output_times {
        let steps = (t / cfg.dt).round();
        if !(t >= 0.0) || (steps * cfg.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::config(format!("output time {t} is not a multiple of dt = {}", cfg.dt)));
        }
        let steps = steps as usize;
        if steps < last {
            return Err(Error::config("output times must be non-decreasing"));
        }
        last = steps;
        targets.push(steps);
    }

    let mut solver = Solver::new(cfg);
    let mut uh: Vec<Complex64> = u0_grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    solver.fft.forward(&mut uh);
    for (u, &keep) in uh.iter_mut().zip(&solver.mask) {
        if !keep {
            *u = Complex64::default();
        }
    }
    let mut k: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::default(); n * n]);
    let mut stage = vec![Complex64::default(); n * n];
    let mut physical = vec![Complex64::default(); n * n];

    let mut fields = Vec::with_capacity(targets.len());
    let mut step = 0;
    for &target in &targets {
        while step < target {
            solver.rk4(&mut uh, &mut k, &mut stage);
            step += 1;
            if step % 100 == 0 || step == target {
                if uh.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::numeric(format!(
                        "spectral solution blew up at t = {}",
                        step as f64 * cfg.dt
                    )));
                }
            }
        }
        physical.copy_from_slice(&uh);
        solver.fft.inverse(&mut physical);
        fields.push(physical.iter().map(|c| c.re).collect());
    }
    Ok(SpectralSolution {
        config: cfg,
        n,
        times: output_times.to_vec(),
        fields,
    })
}

impl SpectralSolution {
    /// Index of the stored time closest to `t`, if within `1e-9`.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::Precondition(format!("no spectral field stored at t = {t}")))
    }

    /// Bilinear interpolation of field `k` at a periodic point.
    pub fn bilinear(&self, k: usize, x: Vec2) -> f64 {
        let n = self.n;
        let f = &self.fields[k];
        let h = TAU / n as f64;
        let (p, q) = (x[0].rem_euclid(TAU) / h, x[1].rem_euclid(TAU) / h);
        let (i0, j0) = (p.floor() as usize % n, q.floor() as usize % n);
        let (fx, fy) = (p - p.floor(), q - q.floor());
        let (i1, j1) = ((i0 + 1) % n, (j0 + 1) % n);
        (1.0 - fx) * ((1.0 - fy) * f[i0 * n + j0] + fy * f[i0 * n + j1])
            + fx * ((1.0 - fy) * f[i1 * n + j0] + fy * f[i1 * n + j1])
    }

    /// Exact trigonometric interpolation of field `k` at a periodic point,
    /// using the retained modes.
    pub fn trigonometric(&self, k: usize, x: Vec2) -> f64 {
        let n = self.n;
        let mut data: Vec<Complex64> = self.fields[k].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Transform::new(n, self.config.modes / 2).forward(&mut data);
        let cut = (self.config.modes / 2) as f64;
        let mut sum = 0.0;
        for a in 0..n {
            let k2 = wavenumber(a, n);
            if k2.abs() > cut {
                continue;
            }
            for b in 0..n {
                let k1 = wavenumber(b, n);
                if k1.abs() > cut {
                    continue;
                }
                let phase = k1 * x[0] + k2 * x[1];
                let c = data[a * n + b];
                sum += c.re * phase.cos() - c.im * phase.sin();
            }
        }
        sum / (n * n) as f64
    }

    /// Mean of field `k` over the grid.
    pub fn mean(&self, k: usize) -> f64 {
        self.fields[k].iter().sum::<f64>() / (self.n * self.n) as f64
    }
}
