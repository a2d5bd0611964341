//! Right-hand sides `L u` of the benchmark equations `u_t = L u`.

use crate::ansatz::EvalBundle;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeOperator {
    /// `L u = κ ∇²u`.
    Heat { kappa: f64 },
    /// `L u = −v(x)·∇u` with the rotating, expanding field of
    /// [`velocity_field`].
    Transport { beta: f64 },
    /// `L u = ν ∇²u − u (∂₁u + ∂₂u)`.
    Burgers { nu: f64 },
}

impl PdeOperator {
    pub fn heat(kappa: f64) -> Result<Self> {
        // Zero is permitted: it freezes the solution, which tests rely on.
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::config(format!("heat diffusivity must be non-negative, got {kappa}")));
        }
        Ok(PdeOperator::Heat { kappa })
    }

    pub fn transport(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::config("transport beta must be finite"));
        }
        Ok(PdeOperator::Transport { beta })
    }

    pub fn burgers(nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::config(format!("Burgers viscosity must be positive, got {nu}")));
        }
        Ok(PdeOperator::Burgers { nu })
    }

    /// Whether [`apply`](Self::apply) reads the Hessian.
    pub fn needs_hessian(&self) -> bool {
        !matches!(self, PdeOperator::Transport { .. })
    }

    /// `L u` at `x` from the field's derivative bundle at `x`.
    pub fn apply(&self, bundle: &EvalBundle, x: Vec2) -> f64 {
        let g = bundle.grad;
        match *self {
            PdeOperator::Heat { kappa } => kappa * bundle.laplacian(),
            PdeOperator::Transport { beta } => {
                let v = velocity_field(beta, x);
                -(v[0] * g[0] + v[1] * g[1])
            }
            PdeOperator::Burgers { nu } => nu * bundle.laplacian() - bundle.u * (g[0] + g[1]),
        }
    }
}

pub fn apply_operator(op: &PdeOperator, bundle: &EvalBundle, x: Vec2) -> f64 {
    op.apply(bundle, x)
}

/// `v(x) = (β x₁ − x₂, β x₂ + x₁)`.
pub fn velocity_field(beta: f64, x: Vec2) -> Vec2 {
    [beta * x[0] - x[1], beta * x[1] + x[0]]
}
