//! Ground-truth fields for every benchmark.

pub mod bessel;
pub mod heat;
pub mod spectral;
pub mod transport;

pub use bessel::{bessel_j, bessel_j_prime, bessel_zero, BesselTable, ZeroKind};
pub use heat::{robin_lambda, HeatReference, HeatVariant};
pub use spectral::{burgers_initial, burgers_spectral, SpectralConfig, SpectralSolution};
pub use transport::TransportReference;

use crate::geometry::{Domain, SampleSet, Segment};
use crate::integrate::BoundaryConditions;
use crate::stepper::BoundaryRow;
use crate::{Error, Result, Vec2};
use rayon::prelude::*;

/// Exact values on a point set at a given time.
pub trait Reference: Sync {
    fn sample(&self, points: &[Vec2], t: f64) -> Result<Vec<f64>>;
}

/// A closed-form solution with its boundary data.
pub trait AnalyticSolution: Sync {
    fn value(&self, x: Vec2, t: f64) -> f64;
    fn gradient(&self, x: Vec2, t: f64) -> Vec2;
    fn domain(&self) -> Domain;
    /// Prescribed `(a, b, v)` on segment `tag` at `(x, t)`.
    fn boundary_data(&self, tag: Segment, x: Vec2, normal: Vec2, t: f64) -> Result<(f64, f64, f64)>;

    fn normal_derivative(&self, x: Vec2, normal: Vec2, t: f64) -> f64 {
        let g = self.gradient(x, t);
        g[0] * normal[0] + g[1] * normal[1]
    }
}

impl<T: AnalyticSolution + ?Sized> Reference for T {
    fn sample(&self, points: &[Vec2], t: f64) -> Result<Vec<f64>> {
        Ok(points.par_iter().map(|&x| self.value(x, t)).collect())
    }
}

impl<T: AnalyticSolution + ?Sized> BoundaryConditions for T {
    fn boundary_rows(&self, samples: &SampleSet, t: f64) -> Result<Vec<BoundaryRow>> {
        samples
            .boundary
            .iter()
            .map(|s| {
                let (a, b, v) = self.boundary_data(s.tag, s.point, s.normal, t)?;
                Ok(BoundaryRow {
                    point: s.point,
                    normal: s.normal,
                    a,
                    b,
                    v,
                    tag: s.tag,
                })
            })
            .collect()
    }
}

/// How spectral fields are evaluated off the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Trigonometric,
}

/// Spectral Burgers fields queried at stored output times.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersReference {
    pub solution: SpectralSolution,
    pub interpolation: Interpolation,
}

impl Reference for BurgersReference {
    fn sample(&self, points: &[Vec2], t: f64) -> Result<Vec<f64>> {
        let k = self.solution.time_index(t)?;
        Ok(points
            .par_iter()
            .map(|&x| match self.interpolation {
                Interpolation::Bilinear => self.solution.bilinear(k, x),
                Interpolation::Trigonometric => self.solution.trigonometric(k, x),
            })
            .collect())
    }
}

/// Every reference the benchmarks use.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceField {
    Heat(HeatReference),
    Transport(TransportReference),
    Burgers(BurgersReference),
}

impl ReferenceField {
    fn analytic(&self) -> Option<&dyn AnalyticSolution> {
        match self {
            ReferenceField::Heat(h) => Some(h),
            ReferenceField::Transport(t) => Some(t),
            ReferenceField::Burgers(_) => None,
        }
    }

    /// Value at a single point; spectral fields need a stored time.
    pub fn value(&self, x: Vec2, t: f64) -> Result<f64> {
        Ok(self.sample(&[x], t)?[0])
    }
}

impl Reference for ReferenceField {
    fn sample(&self, points: &[Vec2], t: f64) -> Result<Vec<f64>> {
        match self {
            ReferenceField::Heat(h) => h.sample(points, t),
            ReferenceField::Transport(r) => r.sample(points, t),
            ReferenceField::Burgers(b) => b.sample(points, t),
        }
    }
}

impl BoundaryConditions for ReferenceField {
    fn boundary_rows(&self, samples: &SampleSet, t: f64) -> Result<Vec<BoundaryRow>> {
        match self.analytic() {
            Some(a) => a.boundary_rows(samples, t),
            None if samples.boundary.is_empty() => Ok(Vec::new()),
            None => Err(Error::config("the periodic Burgers reference has no boundary data")),
        }
    }
}

/// `(a, b, v)` for a segment of an analytic reference.
pub fn boundary_data(field: &dyn AnalyticSolution, tag: Segment, x: Vec2, normal: Vec2, t: f64) -> Result<(f64, f64, f64)> {
    field.boundary_data(tag, x, normal, t)
}

#[cfg(test)]
mod tests;
