//! Oracle suite behind `teng-bc verify`: every check compares production
//! code against an independently written reference computation.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};
use teng_bc_core::ansatz::{Mlp, NetworkSpec};
use teng_bc_core::geometry::{boundary_grid, Domain, SampleSet};
use teng_bc_core::integrate::{build_targets, BoundaryConditions, Scheme, StageState, StageTarget};
use teng_bc_core::pde::velocity_field;
use teng_bc_core::reference::{
    bessel_j, AnalyticSolution, BesselTable, HeatReference, HeatVariant, TransportReference,
};
use teng_bc_core::stepper::{assemble_system, natural_gradient_step, solve_ls, LinearSystem, RowWeighting};
use teng_bc_core::Vec2;

/// Outcome of one oracle comparison.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = f();
    Check {
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<Check> {
    vec![
        special_functions(),
        derivatives(20, 7),
        linear_algebra(50, 11),
        gram_equivalence(),
        reference_validity(),
        scheme_order(),
    ]
}

// ---- least squares -------------------------------------------------------

/// Solves the square system `m x = r` by Gaussian elimination with full
/// pivoting.
pub fn solve_full_pivot(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    (pi, pj, best) = (i, j, v.abs());
                }
            }
        }
        if best == 0.0 {
            return None;
        }
        m.swap(k, pi);
        r.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        perm.swap(k, pj);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            r[i] -= f * r[k];
        }
    }
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * y[j]).sum();
        y[k] = (r[k] - s) / m[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    Some(x)
}

/// Minimum-norm least-squares solution of a full-rank system through the
/// normal equations: `(AᵀA)⁻¹Aᵀb` when tall, `Aᵀ(AAᵀ)⁻¹b` when wide.
pub fn pinv_oracle(a: &Mat<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if m >= n {
        let g = (0..n)
            .map(|i| (0..n).map(|j| (0..m).map(|k| a[(k, i)] * a[(k, j)]).sum()).collect())
            .collect();
        let rhs = (0..n).map(|i| (0..m).map(|k| a[(k, i)] * b[k]).sum()).collect();
        solve_full_pivot(g, rhs)
    } else {
        let g = (0..m)
            .map(|i| (0..m).map(|j| (0..n).map(|k| a[(i, k)] * a[(j, k)]).sum()).collect())
            .collect();
        let y = solve_full_pivot(g, b.to_vec())?;
        Some((0..n).map(|j| (0..m).map(|i| a[(i, j)] * y[i]).sum()).collect())
    }
}

/// A random weighted system with `m ≤ 200` rows and `n ≤ 64` columns.
pub fn random_system(rng: &mut ChaCha8Rng) -> LinearSystem {
    let n = rng.random_range(2..=64);
    let m = if rng.random_bool(0.8) {
        rng.random_range(n..=200)
    } else {
        rng.random_range(1..n)
    };
    LinearSystem {
        residual: (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
        jacobian: Mat::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)),
        row_weights: (0..m).map(|_| rng.random_range(0.5..2.0)).collect(),
        n_interior: m,
    }
}

/// `solve_ls` against [`pinv_oracle`] on `count` random systems.
pub fn linear_algebra(count: usize, seed: u64) -> Check {
    timed("least squares vs pseudoinverse oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut largest = (0, 0);
        for _ in 0..count {
            let sys = random_system(&mut rng);
            let (m, n) = (sys.jacobian.nrows(), sys.jacobian.ncols());
            if m * n > largest.0 * largest.1 {
                largest = (m, n);
            }
            let (a, b) = sys.weighted();
            let Some(want) = pinv_oracle(&a, &b) else {
                return (false, format!("oracle failed on a singular {m}x{n} system"));
            };
            let got = solve_ls(&sys, 1e-12).delta;
            let err = got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
        (
            worst < 1e-10,
            format!("{count} systems up to {}x{}, max deviation {worst:.2e} (limit 1e-10)", largest.0, largest.1),
        )
    })
}

/// Full-mask `solve_ls` against the Gram-matrix natural-gradient step on a
/// small network with Dirichlet rows. The Gram route loses `ε κ²`, so the
/// cutoff is 1e-3; the bound is `1e-9 (1 + ‖Δθ‖∞)`.
pub fn gram_equivalence() -> Check {
    timed("least squares vs natural-gradient step", || {
        let run = || -> teng_bc_core::Result<(f64, f64, usize)> {
            let net = Mlp::new(NetworkSpec {
                hidden_layers: 1,
                width: 4,
                ..NetworkSpec::default()
            })?;
            let params = net.init(5);
            let samples = SampleSet::new(Domain::unit_disk(), 8, 16)?;
            let heat = HeatReference::new(HeatVariant::Dirichlet, 0.1)?;
            let targets: Vec<f64> = samples.interior.iter().map(|x| 0.3 * x[0] - 0.2 * x[1] * x[1]).collect();
            let rows = heat.boundary_rows(&samples, 0.0)?;
            let rtol = 1e-3;
            let full: Vec<usize> = (0..net.param_count()).collect();
            let sys = assemble_system(&net, &params, &samples, &targets, &rows, &full, RowWeighting::Quadrature)?;
            let direct = solve_ls(&sys, rtol).delta;
            let gram = natural_gradient_step(&net, &params, &samples, &targets, &rows, rtol, RowWeighting::Quadrature)?;
            let err = direct.iter().zip(&gram).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = 1.0 + direct.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            Ok((err, scale, net.param_count()))
        };
        match run() {
            Ok((err, scale, p)) => (
                err < 1e-9 * scale,
                format!("P = {p}, max deviation {err:.2e} (limit 1e-9 x {scale:.3})"),
            ),
            Err(e) => (false, e.to_string()),
        }
    })
}

// ---- derivatives ---------------------------------------------------------

fn rel(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = want.iter().map(|b| b * b).sum();
    (num / den.max(1e-300)).sqrt()
}

/// Spatial gradient and Hessian, and both parameter Jacobians of the
/// default network, against central differences at `n_points` random
/// points.
pub fn derivatives(n_points: usize, seed: u64) -> Check {
    timed("network derivatives vs finite differences", || {
        let run = || -> teng_bc_core::Result<(f64, f64, f64, f64)> {
            let net = Mlp::new(NetworkSpec::default())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = net.init(seed);
            let p = net.param_count();
            let points: Vec<Vec2> = (0..n_points)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let normals: Vec<Vec2> = (0..n_points)
                .map(|_| {
                    let a: f64 = rng.random_range(0.0..2.0 * PI);
                    [a.cos(), a.sin()]
                })
                .collect();
            let jac = net.param_jacobian(&params, &points)?;
            let (_, kjac) = net.normal_deriv_jacobian(&params, &points, &normals)?;
            let (mut eg, mut eh, mut ej, mut ek) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            let hx = 1e-5;
            for (i, (&x, &nrm)) in points.iter().zip(&normals).enumerate() {
                let b = net.evaluate(&params, x)?;
                let shift = |d: usize, s: f64| {
                    let mut y = x;
                    y[d] += s;
                    y
                };
                let fd_grad: Vec<f64> = (0..2)
                    .map(|d| (net.value(&params, shift(d, hx)) - net.value(&params, shift(d, -hx))) / (2.0 * hx))
                    .collect();
                eg = eg.max(rel(&b.grad, &fd_grad));
                let mut fd_hess = Vec::with_capacity(4);
                for d in 0..2 {
                    let gp = net.evaluate(&params, shift(d, hx))?.grad;
                    let gm = net.evaluate(&params, shift(d, -hx))?.grad;
                    for e in 0..2 {
                        fd_hess.push((gp[e] - gm[e]) / (2.0 * hx));
                    }
                }
                let hess: Vec<f64> = b.hess.iter().flatten().copied().collect();
                eh = eh.max(rel(&hess, &fd_hess));

                let ht = 1e-6;
                let idx: Vec<usize> = (0..20).map(|_| rng.random_range(0..p)).collect();
                let (mut fd_j, mut fd_k, mut got_j, mut got_k) = (vec![], vec![], vec![], vec![]);
                for &k in &idx {
                    let mut plus = params.clone();
                    plus[k] += ht;
                    let mut minus = params.clone();
                    minus[k] -= ht;
                    fd_j.push((net.value(&plus, x) - net.value(&minus, x)) / (2.0 * ht));
                    let dn = |q: &[f64]| -> teng_bc_core::Result<f64> {
                        let g = net.evaluate(q, x)?.grad;
                        Ok(g[0] * nrm[0] + g[1] * nrm[1])
                    };
                    fd_k.push((dn(&plus)? - dn(&minus)?) / (2.0 * ht));
                    got_j.push(jac[(i, k)]);
                    got_k.push(kjac[(i, k)]);
                }
                ej = ej.max(rel(&got_j, &fd_j));
                ek = ek.max(rel(&got_k, &fd_k));
            }
            Ok((eg, eh, ej, ek))
        };
        match run() {
            Ok((eg, eh, ej, ek)) => (
                eg.max(eh).max(ej).max(ek) < 1e-5,
                format!(
                    "{n_points} points; relative errors grad {eg:.1e}, hess {eh:.1e}, J {ej:.1e}, K {ek:.1e} (limit 1e-5)"
                ),
            ),
            Err(e) => (false, e.to_string()),
        }
    })
}

// ---- special functions ---------------------------------------------------

/// `J_m(z)` from Bessel's integral `(1/π)∫₀^π cos(mτ − z sin τ) dτ` by the
/// trapezoid rule, which converges geometrically for this periodic
/// integrand.
pub fn bessel_integral(m: i32, z: f64) -> f64 {
    if m < 0 {
        let v = bessel_integral(-m, z);
        return if m % 2 == 0 { v } else { -v };
    }
    let n = 256;
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let t = k as f64 * h;
            (m as f64 * t - z * t.sin()).cos()
        })
        .sum::<f64>()
        / n as f64
}

fn bessel_integral_prime(m: i32, z: f64) -> f64 {
    0.5 * (bessel_integral(m - 1, z) - bessel_integral(m + 1, z))
}

/// Root of `f` in `[lo, hi]` by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "bracket [{lo}, {hi}] does not straddle a root");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// The four leading zeros used by the references, against bisection on the
/// integral representation, plus the three-term recurrence on a sweep.
pub fn special_functions() -> Check {
    timed("Bessel zeros and recurrence", || {
        let table = match BesselTable::new() {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        let cases = [
            ("j0,1", table.j(0, 1), bisect(|z| bessel_integral(0, z), 2.0, 3.0)),
            ("j1,1", table.j(1, 1), bisect(|z| bessel_integral(1, z), 3.5, 4.0)),
            ("j'1,1", table.j_prime(1, 1), bisect(|z| bessel_integral_prime(1, z), 1.5, 2.0)),
            ("j'2,1", table.j_prime(2, 1), bisect(|z| bessel_integral_prime(2, z), 2.8, 3.3)),
        ];
        let zero_err = cases.iter().map(|(_, a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut rec: f64 = 0.0;
        for step in 1..=300 {
            let z = 0.1 * step as f64;
            for m in 1..8 {
                let j = |k: usize| bessel_j(k, z).unwrap_or(f64::NAN);
                let r = j(m - 1) + j(m + 1) - 2.0 * m as f64 / z * j(m);
                rec = rec.max(r.abs());
            }
        }
        let values: Vec<String> = cases.iter().map(|(n, a, _)| format!("{n} = {a:.12}")).collect();
        (
            zero_err < 1e-10 && rec < 1e-11,
            format!(
                "{}; zero deviation {zero_err:.1e} (limit 1e-10), recurrence residual {rec:.1e} on z in [0.1, 30] (limit 1e-11)",
                values.join(", ")
            ),
        )
    })
}

// ---- references ----------------------------------------------------------

fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

fn random_interior(domain: &Domain, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if domain.contains(x) {
            out.push(x);
        }
    }
    out
}

/// Worst `|a u + b ∂ₙu − v|` over 512 boundary samples at `t ∈ {0, 0.5}`.
pub fn boundary_identity(field: &dyn AnalyticSolution) -> teng_bc_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for s in boundary_grid(&field.domain(), 512)? {
        for t in [0.0, 0.5] {
            let (a, b, v) = field.boundary_data(s.tag, s.point, s.normal, t)?;
            let lhs = a * field.value(s.point, t) + b * field.normal_derivative(s.point, s.normal, t);
            worst = worst.max((lhs - v).abs());
        }
    }
    Ok(worst)
}

/// Fourth-order differences of each analytic reference against its PDE,
/// and the boundary identity.
pub fn reference_validity() -> Check {
    timed("analytic references: PDE residual and boundary data", || {
        let (kappa, beta) = (0.1, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut lines = Vec::new();
        let mut ok = true;
        let mut fields: Vec<(String, Box<dyn AnalyticSolution>, bool)> = Vec::new();
        for v in HeatVariant::ALL {
            match HeatReference::new(v, kappa) {
                Ok(h) => fields.push((format!("heat/{v}"), Box::new(h), true)),
                Err(e) => return (false, e.to_string()),
            }
        }
        match TransportReference::new(beta, kappa) {
            Ok(t) => fields.push(("transport".into(), Box::new(t), false)),
            Err(e) => return (false, e.to_string()),
        }
        for (name, f, heat) in &fields {
            let pts = random_interior(&f.domain(), 100, &mut rng);
            let mut pde: f64 = 0.0;
            for t in [0.0, 0.3, 0.7] {
                for &x in &pts {
                    let ut = d1(|s| f.value(x, s), t, 1e-5);
                    let r = if *heat {
                        let uxx = d2(|s| f.value([s, x[1]], t), x[0], 1e-4);
                        let uyy = d2(|s| f.value([x[0], s], t), x[1], 1e-4);
                        ut - kappa * (uxx + uyy)
                    } else {
                        let ux = d1(|s| f.value([s, x[1]], t), x[0], 1e-4);
                        let uy = d1(|s| f.value([x[0], s], t), x[1], 1e-4);
                        let v = velocity_field(beta, x);
                        ut + v[0] * ux + v[1] * uy
                    };
                    pde = pde.max(r.abs());
                }
            }
            let bnd = match boundary_identity(f.as_ref()) {
                Ok(b) => b,
                Err(e) => return (false, format!("{name}: {e}")),
            };
            ok &= pde < 1e-6 && bnd < 1e-10;
            lines.push(format!("{name} {pde:.1e}/{bnd:.1e}"));
        }
        (
            ok,
            format!("PDE residual/boundary identity (limits 1e-6/1e-10): {}", lines.join(", ")),
        )
    })
}

// ---- time stepping -------------------------------------------------------

/// `u' = λu` with every stage fitted exactly.
struct Scalar {
    u: f64,
    lambda: f64,
}

impl StageState for Scalar {
    fn values(&self) -> teng_bc_core::Result<Vec<f64>> {
        Ok(vec![self.u])
    }
    fn rates(&self) -> teng_bc_core::Result<Vec<f64>> {
        Ok(vec![self.lambda * self.u])
    }
    fn realize(&mut self, target: &StageTarget) -> teng_bc_core::Result<()> {
        self.u = target.values[0];
        Ok(())
    }
}

/// Least-squares slope of `log error` against `log dt` for `u' = −3u` on
/// `[0, 1]` with `dt ∈ {1e-2, 5e-3, 2.5e-3}`.
pub fn convergence_slope(scheme: Scheme) -> teng_bc_core::Result<f64> {
    let lambda = -3.0;
    let dts: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    let mut pts = Vec::new();
    for dt in dts {
        let mut s = Scalar { u: 1.0, lambda };
        let steps = (1.0 / dt).round() as usize;
        for k in 0..steps {
            build_targets(scheme, &mut s, k as f64 * dt, dt)?;
        }
        pts.push((f64::ln(dt), f64::ln((s.u - f64::exp(lambda)).abs())));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(num / den)
}

pub fn scheme_order() -> Check {
    timed("time-stepping convergence order", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (scheme, want, tol) in [(Scheme::Euler, 1.0, 0.2), (Scheme::Heun, 2.0, 0.2), (Scheme::Rk4, 4.0, 0.3)] {
            match convergence_slope(scheme) {
                Ok(s) => {
                    ok &= (s - want).abs() <= tol;
                    parts.push(format!("{scheme} {s:.3} (want {want}±{tol})"));
                }
                Err(e) => return (false, e.to_string()),
            }
        }
        (ok, parts.join(", "))
    })
}
