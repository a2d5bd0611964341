//! Closed-form heat solutions for the five boundary configurations.

use super::bessel::{jn, jn_prime, BesselTable};
use super::AnalyticSolution;
use crate::geometry::{Domain, Segment};
use crate::{Error, Result, Vec2};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatVariant {
    Dirichlet,
    Neumann,
    NeumannNonzero,
    Robin,
    Mixed,
}

impl HeatVariant {
    pub const ALL: [HeatVariant; 5] = [
        HeatVariant::Dirichlet,
        HeatVariant::Neumann,
        HeatVariant::NeumannNonzero,
        HeatVariant::Robin,
        HeatVariant::Mixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HeatVariant::Dirichlet => "dirichlet",
            HeatVariant::Neumann => "neumann",
            HeatVariant::NeumannNonzero => "neumann_nonzero",
            HeatVariant::Robin => "robin",
            HeatVariant::Mixed => "mixed",
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            HeatVariant::Mixed => Domain::quarter_annulus(),
            _ => Domain::unit_disk(),
        }
    }
}

impl fmt::Display for HeatVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeatVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        HeatVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown heat boundary variant `{s}`")))
    }
}

/// Shifted heat kernel `G(x, t; x₀, τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Kernel {
    center: Vec2,
    tau: f64,
}

/// The kernel-and-wave field shared by heat/Dirichlet and the transport
/// initial condition:
///
/// ```text
/// ⅓ (0.9 G₁ − 0.7 G₂ + 0.5 G₃ + 0.2 ∂₁G₄ − 0.24 ∂₂G₄ − 0.16 ∂₁G₅ + 0.12 ∂₂G₅
///    + 0.36 W_(4,3) − 0.24 W_(6,1) + 0.16 W_(2,5))
/// ```
///
/// with `W_k = e^{−κ|k|²t} sin(k·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub kappa: f64,
}

const KERNELS: [Kernel; 5] = [
    Kernel { center: [0.35, -0.15], tau: 1.5 },
    Kernel { center: [-0.25, 0.30], tau: 2.0 },
    Kernel { center: [0.05, 0.05], tau: 1.2 },
    Kernel { center: [0.10, -0.35], tau: 1.8 },
    Kernel { center: [-0.40, -0.05], tau: 1.4 },
];
const KERNEL_COEFS: [f64; 3] = [0.9, -0.7, 0.5];
/// `(kernel, axis, coefficient)` for the derivative terms.
const DERIV_TERMS: [(usize, usize, f64); 4] = [(3, 0, 0.2), (3, 1, -0.24), (4, 0, -0.16), (4, 1, 0.12)];
const WAVES: [(Vec2, f64); 3] = [([4.0, 3.0], 0.36), ([6.0, 1.0], -0.24), ([2.0, 5.0], 0.16)];

impl KernelField {
    /// Value, gradient.
    pub fn eval(&self, x: Vec2, t: f64) -> (f64, Vec2) {
        let k = self.kappa;
        let mut u = 0.0;
        let mut g = [0.0; 2];
        let kernel = |idx: usize| {
            let Kernel { center, tau } = KERNELS[idx];
            let s = 2.0 * k * (t + tau); // 4κ(t+τ) / 2
            let d = [x[0] - center[0], x[1] - center[1]];
            let val = (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * s)).exp() / (2.0 * PI * s);
            (val, d, s)
        };
        for (i, &c) in KERNEL_COEFS.iter().enumerate() {
            let (val, d, s) = kernel(i);
            u += c * val;
            g[0] -= c * val * d[0] / s;
            g[1] -= c * val * d[1] / s;
        }
        for &(i, axis, c) in &DERIV_TERMS {
            // ∂ₐG = −dₐ/s · G; ∂_b∂ₐG = (dₐ d_b / s² − δ_ab / s) G.
            let (val, d, s) = kernel(i);
            u += c * (-d[axis] / s) * val;
            for (b, gb) in g.iter_mut().enumerate() {
                let delta = if b == axis { 1.0 } else { 0.0 };
                *gb += c * (d[axis] * d[b] / (s * s) - delta / s) * val;
            }
        }
        for &(kv, c) in &WAVES {
            let decay = (-k * (kv[0] * kv[0] + kv[1] * kv[1]) * t).exp();
            let phase = kv[0] * x[0] + kv[1] * x[1];
            u += c * decay * phase.sin();
            g[0] += c * decay * kv[0] * phase.cos();
            g[1] += c * decay * kv[1] * phase.cos();
        }
        (u / 3.0, [g[0] / 3.0, g[1] / 3.0])
    }
}

/// `c J_m(λ r) cos(mθ) e^{−κλ²t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselMode {
    pub m: usize,
    pub lambda: f64,
    pub coef: f64,
}

impl BesselMode {
    fn eval(&self, kappa: f64, x: Vec2, t: f64) -> (f64, Vec2) {
        let r = x[0].hypot(x[1]);
        let th = x[1].atan2(x[0]);
        let m = self.m as f64;
        let decay = self.coef * (-kappa * self.lambda * self.lambda * t).exp();
        let (c, s) = ((m * th).cos(), (m * th).sin());
        let jm = jn(self.m, self.lambda * r);
        let u = decay * jm * c;
        let grad = if r == 0.0 {
            // Only J₁ has a nonzero gradient at the origin: J₁(λr)cos θ ≈ λx₁/2.
            if self.m == 1 {
                [decay * self.lambda * 0.5, 0.0]
            } else {
                [0.0, 0.0]
            }
        } else {
            let dr = decay * self.lambda * jn_prime(self.m, self.lambda * r) * c;
            let dth_over_r = -decay * m * jm * s / r;
            let (ct, st) = (x[0] / r, x[1] / r);
            [dr * ct - dth_over_r * st, dr * st + dth_over_r * ct]
        };
        (u, grad)
    }
}

/// Exact heat solution for one boundary configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatReference {
    pub variant: HeatVariant,
    pub kappa: f64,
    kernel: Option<KernelField>,
    /// Modes inside the overall ¼ factor.
    modes: Vec<BesselMode>,
    /// Extra flux-inducing mode of the nonzero-Neumann variant.
    extra: Option<BesselMode>,
    /// Robin coefficient in `u + λ ∂ₙu = 0`.
    pub robin_lambda: f64,
}

/// `λ = J₂(4) / (4 (½ J₂(4) − J₁(4)))`.
pub fn robin_lambda() -> f64 {
    let j2 = jn(2, 4.0);
    j2 / (4.0 * (0.5 * j2 - jn(1, 4.0)))
}

impl HeatReference {
    pub fn new(variant: HeatVariant, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::config(format!("heat diffusivity must be non-negative, got {kappa}")));
        }
        let table = BesselTable::new()?;
        let mode = |m: usize, lambda: f64, coef: f64| BesselMode { m, lambda, coef };
        let mut kernel = None;
        let mut modes = Vec::new();
        let mut extra = None;
        match variant {
            HeatVariant::Dirichlet => kernel = Some(KernelField { kappa }),
            HeatVariant::Neumann | HeatVariant::NeumannNonzero => {
                let radial = [(0, [1.0, 0.25, 1.0 / 16.0, 1.0 / 64.0]), (1, [-1.0, -0.5, -0.25, -0.125])];
                for (m, coefs) in radial {
                    for (n, c) in coefs.into_iter().enumerate() {
                        modes.push(mode(m, table.j_prime(m, n + 1), c));
                    }
                }
                for m in 2..=4 {
                    modes.push(mode(m, table.j_prime(m, 1), 1.0));
                }
                if variant == HeatVariant::NeumannNonzero {
                    extra = Some(mode(1, table.j(1, 1), 1.0));
                }
            }
            HeatVariant::Robin => extra = Some(mode(2, 4.0, 1.0)),
            HeatVariant::Mixed => {
                let alt = [1.0, -0.5, 0.25, -0.125];
                for m in [0, 2] {
                    for (n, c) in alt.into_iter().enumerate() {
                        modes.push(mode(m, table.j(m, n + 1), c));
                    }
                }
                modes.push(mode(4, table.j(4, 2), 1.0));
            }
        }
        Ok(Self {
            variant,
            kappa,
            kernel,
            modes,
            extra,
            robin_lambda: robin_lambda(),
        })
    }

    pub fn modes(&self) -> &[BesselMode] {
        &self.modes
    }

    fn eval(&self, x: Vec2, t: f64) -> (f64, Vec2) {
        if let Some(k) = &self.kernel {
            return k.eval(x, t);
        }
        let mut u = 0.0;
        let mut g = [0.0; 2];
        for m in &self.modes {
            let (v, d) = m.eval(self.kappa, x, t);
            u += 0.25 * v;
            g[0] += 0.25 * d[0];
            g[1] += 0.25 * d[1];
        }
        if let Some(m) = &self.extra {
            let (v, d) = m.eval(self.kappa, x, t);
            u += v;
            g[0] += d[0];
            g[1] += d[1];
        }
        (u, g)
    }
}

impl AnalyticSolution for HeatReference {
    fn value(&self, x: Vec2, t: f64) -> f64 {
        self.eval(x, t).0
    }

    fn gradient(&self, x: Vec2, t: f64) -> Vec2 {
        self.eval(x, t).1
    }

    fn domain(&self) -> Domain {
        self.variant.domain()
    }

    fn boundary_data(&self, tag: Segment, x: Vec2, normal: Vec2, t: f64) -> Result<(f64, f64, f64)> {
        use HeatVariant::*;
        use Segment::*;
        let (a, b, v) = match (self.variant, tag) {
            (Dirichlet, Outer) => (1.0, 0.0, self.value(x, t)),
            (Neumann, Outer) => (0.0, 1.0, 0.0),
            (NeumannNonzero, Outer) => {
                let (_, g) = self.extra.as_ref().expect("extra mode").eval(self.kappa, x, t);
                (0.0, 1.0, g[0] * normal[0] + g[1] * normal[1])
            }
            (Robin, Outer) => (1.0, self.robin_lambda, 0.0),
            (Mixed, Outer) => (1.0, 0.0, 0.0),
            (Mixed, Inner) => (1.0, 0.0, self.value(x, t)),
            (Mixed, Edge0 | Edge90) => (0.0, 1.0, 0.0),
            (variant, tag) => {
                return Err(Error::config(format!("segment `{tag}` does not belong to the {variant} domain")));
            }
        };
        Ok((a, b, v))
    }
}
