//! Time evolution of neural fields by boundary-aware least-squares updates.
//!
//! A network `u_θ(x)` represents the solution of `u_t = L u` at one instant.
//! Each time step builds a target field from an explicit Runge–Kutta scheme and
//! moves the parameters onto it by repeated Gauss–Newton solves of a single
//! least-squares system that stacks interior rows (`u_target − u_θ`) and
//! boundary rows (`v − (a u_θ + b ∂ₙu_θ)`). Dirichlet, Neumann, Robin and mixed
//! conditions are all expressed through the per-row coefficients `(a, b)`.
//!
//! Module map:
//!
//! - [`ansatz`]: the MLP field with exact spatial derivatives and parameter
//!   Jacobians of `u` and `∂ₙu`.
//! - [`geometry`]: domains, fixed sample grids, outward normals.
//! - [`pde`]: the spatial operators `L` (heat, transport, Burgers).
//! - [`stepper`]: system assembly, truncated-SVD solve, the inner fitting loop.
//! - [`integrate`]: Euler/Heun/RK4 stage targets and the time-marching driver.
//! - [`reference`]: Bessel functions, analytic references, spectral Burgers.

pub mod ansatz;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod metrics;
pub mod pde;
pub mod reference;
pub mod stepper;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Vec2 = [f64; 2];
