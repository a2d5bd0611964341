//! Domains and the fixed collocation grids used for a whole run.

use crate::{Error, Result, Vec2};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `{‖x‖ < radius}`.
    Disk { radius: f64 },
    /// `{r_in ≤ r ≤ r_out, 0 ≤ θ ≤ π/2}`.
    QuarterAnnulus { r_in: f64, r_out: f64 },
    /// `[0, side)²` with both axes periodic.
    PeriodicSquare { side: f64 },
}

impl Domain {
    pub fn unit_disk() -> Self {
        Domain::Disk { radius: 1.0 }
    }

    pub fn quarter_annulus() -> Self {
        Domain::QuarterAnnulus { r_in: 0.5, r_out: 1.0 }
    }

    pub fn periodic_square() -> Self {
        Domain::PeriodicSquare { side: 2.0 * PI }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Disk { radius } => PI * radius * radius,
            Domain::QuarterAnnulus { r_in, r_out } => FRAC_PI_2 * 0.5 * (r_out * r_out - r_in * r_in),
            Domain::PeriodicSquare { side } => side * side,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Domain::Disk { radius } => 2.0 * PI * radius,
            Domain::QuarterAnnulus { r_in, r_out } => FRAC_PI_2 * (r_in + r_out) + 2.0 * (r_out - r_in),
            Domain::PeriodicSquare { .. } => 0.0,
        }
    }

    /// Boundary segments and their lengths, in canonical order.
    pub fn segments(&self) -> Vec<(Segment, f64)> {
        match *self {
            Domain::Disk { radius } => vec![(Segment::Outer, 2.0 * PI * radius)],
            Domain::QuarterAnnulus { r_in, r_out } => vec![
                (Segment::Outer, FRAC_PI_2 * r_out),
                (Segment::Inner, FRAC_PI_2 * r_in),
                (Segment::Edge0, r_out - r_in),
                (Segment::Edge90, r_out - r_in),
            ],
            Domain::PeriodicSquare { .. } => Vec::new(),
        }
    }

    /// Strict interior test.
    pub fn contains(&self, x: Vec2) -> bool {
        match *self {
            Domain::Disk { radius } => x[0].hypot(x[1]) < radius,
            Domain::QuarterAnnulus { r_in, r_out } => {
                let r = x[0].hypot(x[1]);
                x[0] > 0.0 && x[1] > 0.0 && r > r_in && r < r_out
            }
            Domain::PeriodicSquare { .. } => true,
        }
    }

    /// Distance from an interior point to the boundary.
    fn boundary_distance(&self, x: Vec2) -> f64 {
        match *self {
            Domain::Disk { radius } => radius - x[0].hypot(x[1]),
            Domain::QuarterAnnulus { r_in, r_out } => {
                let r = x[0].hypot(x[1]);
                (r - r_in).min(r_out - r).min(x[0]).min(x[1])
            }
            Domain::PeriodicSquare { .. } => f64::INFINITY,
        }
    }

    /// Default interior grid side; the disk and annulus grids are larger to
    /// make up for the points the interior filter removes (about 1000
    /// points survive in each case).
    pub fn default_grid_side(&self) -> usize {
        match self {
            Domain::Disk { .. } => 36,
            Domain::QuarterAnnulus { .. } => 42,
            Domain::PeriodicSquare { .. } => 32,
        }
    }
}

/// Boundary segment tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    /// The outer circle `r = r_out` (the whole boundary of a disk).
    Outer,
    /// The inner arc `r = r_in` of the quarter annulus.
    Inner,
    /// The radial edge on `θ = 0`.
    Edge0,
    /// The radial edge on `θ = π/2`.
    Edge90,
}

impl Segment {
    pub fn as_str(self) -> &'static str {
        match self {
            Segment::Outer => "outer",
            Segment::Inner => "inner",
            Segment::Edge0 => "edge0",
            Segment::Edge90 => "edge90",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Segment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outer" => Ok(Segment::Outer),
            "inner" => Ok(Segment::Inner),
            "edge0" => Ok(Segment::Edge0),
            "edge90" => Ok(Segment::Edge90),
            other => Err(Error::config(format!("unknown boundary segment tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    pub tag: Segment,
}

/// Collocation points held fixed for the lifetime of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub domain: Domain,
    pub interior: Vec<Vec2>,
    pub boundary: Vec<BoundarySample>,
    /// `|Ω| / N_Ω`.
    pub interior_weight: f64,
    /// `|∂Ω| / N_∂Ω` (zero when there is no boundary).
    pub boundary_weight: f64,
}

impl SampleSet {
    pub fn new(domain: Domain, n_interior: usize, n_boundary: usize) -> Result<Self> {
        let interior = interior_grid(&domain, n_interior)?;
        let boundary = boundary_grid(&domain, n_boundary)?;
        let interior_weight = domain.area() / interior.len() as f64;
        let boundary_weight = if boundary.is_empty() {
            0.0
        } else {
            domain.perimeter() / boundary.len() as f64
        };
        Ok(Self {
            domain,
            interior,
            boundary,
            interior_weight,
            boundary_weight,
        })
    }

    pub fn boundary_points(&self) -> Vec<Vec2> {
        self.boundary.iter().map(|b| b.point).collect()
    }
}

/// Uniform tensor grid restricted to the strict interior.
///
/// Disk and annulus grids span the bounding box with `n` points per axis
/// (edges included) and keep points farther than `1e-3 × spacing` from the
/// boundary. The periodic grid is `n × n` over `[0, side)`.
pub fn interior_grid(domain: &Domain, n: usize) -> Result<Vec<Vec2>> {
    if n < 2 {
        return Err(Error::config(format!("interior grid needs n >= 2, got {n}")));
    }
    let points: Vec<Vec2> = match *domain {
        Domain::PeriodicSquare { side } => {
            let h = side / n as f64;
            (0..n)
                .flat_map(|i| (0..n).map(move |j| [i as f64 * h, j as f64 * h]))
                .collect()
        }
        Domain::Disk { radius } => filtered_grid(domain, [-radius, radius], [-radius, radius], n),
        Domain::QuarterAnnulus { r_out, .. } => filtered_grid(domain, [0.0, r_out], [0.0, r_out], n),
    };
    if points.is_empty() {
        return Err(Error::config(format!("interior grid with n = {n} has no interior points")));
    }
    Ok(points)
}

fn filtered_grid(domain: &Domain, xs: [f64; 2], ys: [f64; 2], n: usize) -> Vec<Vec2> {
    let hx = (xs[1] - xs[0]) / (n - 1) as f64;
    let hy = (ys[1] - ys[0]) / (n - 1) as f64;
    let margin = 1e-3 * hx.min(hy);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = [xs[0] + i as f64 * hx, ys[0] + j as f64 * hy];
            if domain.contains(p) && domain.boundary_distance(p) > margin {
                out.push(p);
            }
        }
    }
    out
}

/// Splits `total` points across segments proportionally to their lengths by
/// the largest-remainder rule; ties go to the earlier segment.
pub fn allocate_counts(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let quotas: Vec<f64> = lengths.iter().map(|l| l / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    // Stable sort keeps segment order among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).expect("finite quotas")
    });
    for &k in order.iter().take(total - assigned) {
        counts[k] += 1;
    }
    counts
}

/// Boundary samples with outward normals and segment tags.
///
/// Points sit at the midpoints of equal sub-intervals of each segment, so
/// no sample lands on a corner where the normal is undefined. The disk uses
/// `n_b` equiangular points starting at angle zero.
pub fn boundary_grid(domain: &Domain, n_b: usize) -> Result<Vec<BoundarySample>> {
    if let Domain::PeriodicSquare { .. } = domain {
        return Ok(Vec::new());
    }
    if n_b < 4 {
        return Err(Error::config(format!("boundary grid needs n_b >= 4, got {n_b}")));
    }
    let mut out = Vec::with_capacity(n_b);
    match *domain {
        Domain::Disk { radius } => {
            for k in 0..n_b {
                let t = 2.0 * PI * k as f64 / n_b as f64;
                let (s, c) = t.sin_cos();
                out.push(BoundarySample {
                    point: [radius * c, radius * s],
                    normal: [c, s],
                    tag: Segment::Outer,
                });
            }
        }
        Domain::QuarterAnnulus { r_in, r_out } => {
            let segs = domain.segments();
            let lengths: Vec<f64> = segs.iter().map(|s| s.1).collect();
            let counts = allocate_counts(&lengths, n_b);
            for ((seg, _), &count) in segs.iter().zip(&counts) {
                for k in 0..count {
                    let frac = (k as f64 + 0.5) / count as f64;
                    let sample = match seg {
                        Segment::Outer | Segment::Inner => {
                            let r = if *seg == Segment::Outer { r_out } else { r_in };
                            let sign = if *seg == Segment::Outer { 1.0 } else { -1.0 };
                            let (s, c) = (frac * FRAC_PI_2).sin_cos();
                            BoundarySample {
                                point: [r * c, r * s],
                                normal: [sign * c, sign * s],
                                tag: *seg,
                            }
                        }
                        Segment::Edge0 => BoundarySample {
                            point: [r_in + frac * (r_out - r_in), 0.0],
                            normal: [0.0, -1.0],
                            tag: *seg,
                        },
                        Segment::Edge90 => BoundarySample {
                            point: [0.0, r_in + frac * (r_out - r_in)],
                            normal: [-1.0, 0.0],
                            tag: *seg,
                        },
                    };
                    out.push(sample);
                }
            }
        }
        Domain::PeriodicSquare { .. } => unreachable!(),
    }
    Ok(out)
}
