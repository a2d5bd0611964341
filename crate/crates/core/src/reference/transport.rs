//! Characteristic solution of `u_t + v·∇u = 0` with the rotating, expanding
//! velocity `v = (βx₁ − x₂, βx₂ + x₁)`.
//!
//! In polar coordinates the characteristics satisfy `ṙ = βr`, `θ̇ = 1`, so
//! `u(r, θ, t) = u₀(r e^{−βt}, θ − t)`: the backtracked point is the current
//! one scaled by `e^{−βt}` and rotated by `−t`.

use super::heat::KernelField;
use super::AnalyticSolution;
use crate::geometry::{Domain, Segment};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct TransportReference {
    pub beta: f64,
    initial: KernelField,
}

impl TransportReference {
    /// `u₀` is the heat/Dirichlet field at `t = 0` with diffusivity `kappa`.
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        if !beta.is_finite() || !(kappa > 0.0) {
            return Err(Error::config("transport reference needs finite beta and positive kappa"));
        }
        Ok(Self {
            beta,
            initial: KernelField { kappa },
        })
    }

    /// The foot of the characteristic through `(x, t)` at time zero.
    pub fn backtrack(&self, x: Vec2, t: f64) -> Vec2 {
        let s = (-self.beta * t).exp();
        let (sn, cs) = t.sin_cos();
        [s * (cs * x[0] + sn * x[1]), s * (-sn * x[0] + cs * x[1])]
    }

    pub fn initial_value(&self, x: Vec2) -> f64 {
        self.initial.eval(x, 0.0).0
    }
}

impl AnalyticSolution for TransportReference {
    fn value(&self, x: Vec2, t: f64) -> f64 {
        self.initial_value(self.backtrack(x, t))
    }

    fn gradient(&self, x: Vec2, t: f64) -> Vec2 {
        // ∇u = Mᵀ ∇u₀(Mx) with M = e^{−βt} R(−t).
        let g0 = self.initial.eval(self.backtrack(x, t), 0.0).1;
        let s = (-self.beta * t).exp();
        let (sn, cs) = t.sin_cos();
        [s * (cs * g0[0] - sn * g0[1]), s * (sn * g0[0] + cs * g0[1])]
    }

    fn domain(&self) -> Domain {
        Domain::unit_disk()
    }

    fn boundary_data(&self, tag: Segment, x: Vec2, _normal: Vec2, t: f64) -> Result<(f64, f64, f64)> {
        match tag {
            Segment::Outer => Ok((1.0, 0.0, self.value(x, t))),
            other => Err(Error::config(format!("segment `{other}` does not belong to the disk"))),
        }
    }
}
