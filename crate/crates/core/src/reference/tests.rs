use super::*;
use crate::geometry::boundary_grid;
use crate::pde::velocity_field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const KAPPA: f64 = 0.1;
const BETA: f64 = 0.2;

fn random_interior(domain: &Domain, n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if domain.contains(x) {
            out.push(x);
        }
    }
    out
}

fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

fn heat_residual(r: &dyn AnalyticSolution, x: Vec2, t: f64) -> f64 {
    let (hs, ht) = (1e-4, 1e-5);
    let ut = d1(|s| r.value(x, s), t, ht);
    let uxx = d2(|s| r.value([s, x[1]], t), x[0], hs);
    let uyy = d2(|s| r.value([x[0], s], t), x[1], hs);
    ut - KAPPA * (uxx + uyy)
}

fn all_heat() -> Vec<HeatReference> {
    HeatVariant::ALL.iter().map(|&v| HeatReference::new(v, KAPPA).unwrap()).collect()
}

#[test]
fn heat_variants_satisfy_pde() {
    for r in all_heat() {
        let pts = random_interior(&r.domain(), 100, 1);
        let mut worst: f64 = 0.0;
        for t in [0.0, 0.3, 0.7] {
            for &x in &pts {
                worst = worst.max(heat_residual(&r, x, t).abs());
            }
        }
        assert!(worst < 1e-6, "{}: residual {worst:e}", r.variant);
    }
}

#[test]
fn transport_satisfies_pde() {
    let r = TransportReference::new(BETA, KAPPA).unwrap();
    let pts = random_interior(&Domain::unit_disk(), 100, 2);
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.3, 0.7] {
        for &x in &pts {
            let ut = d1(|s| r.value(x, s), t, 1e-5);
            let ux = d1(|s| r.value([s, x[1]], t), x[0], 1e-4);
            let uy = d1(|s| r.value([x[0], s], t), x[1], 1e-4);
            let v = velocity_field(BETA, x);
            worst = worst.max((ut + v[0] * ux + v[1] * uy).abs());
        }
    }
    assert!(worst < 1e-6, "residual {worst:e}");
}

#[test]
fn analytic_gradients_match_differences() {
    let transport = TransportReference::new(BETA, KAPPA).unwrap();
    let mut fields: Vec<Box<dyn AnalyticSolution>> = all_heat().into_iter().map(|h| Box::new(h) as _).collect();
    fields.push(Box::new(transport));
    for f in &fields {
        for &x in &random_interior(&f.domain(), 30, 3) {
            for t in [0.0, 0.4] {
                let g = f.gradient(x, t);
                let gx = d1(|s| f.value([s, x[1]], t), x[0], 1e-4);
                let gy = d1(|s| f.value([x[0], s], t), x[1], 1e-4);
                assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8, "{g:?} vs {gx} {gy}");
            }
        }
    }
}

#[test]
fn boundary_identities_hold() {
    let transport = TransportReference::new(BETA, KAPPA).unwrap();
    let mut fields: Vec<Box<dyn AnalyticSolution>> = all_heat().into_iter().map(|h| Box::new(h) as _).collect();
    fields.push(Box::new(transport));
    for f in &fields {
        let samples = boundary_grid(&f.domain(), 512).unwrap();
        assert_eq!(samples.len(), 512);
        let mut worst: f64 = 0.0;
        for t in [0.0, 0.5] {
            for s in &samples {
                let (a, b, v) = f.boundary_data(s.tag, s.point, s.normal, t).unwrap();
                let lhs = a * f.value(s.point, t) + b * f.normal_derivative(s.point, s.normal, t);
                worst = worst.max((lhs - v).abs());
            }
        }
        assert!(worst < 1e-10, "boundary identity off by {worst:e}");
    }
}

#[test]
fn dirichlet_origin_by_direct_summation() {
    let r = HeatReference::new(HeatVariant::Dirichlet, KAPPA).unwrap();
    let g = |c: Vec2, tau: f64| {
        let s = 4.0 * KAPPA * tau;
        (-(c[0] * c[0] + c[1] * c[1]) / s).exp() / (PI * s)
    };
    // At x = 0: d = −c, ∂ᵢG = cᵢ / (2κτ) G, and every W term vanishes.
    let dg = |c: Vec2, tau: f64, i: usize| c[i] / (2.0 * KAPPA * tau) * g(c, tau);
    let (c4, c5) = ([0.10, -0.35], [-0.40, -0.05]);
    let want = (0.9 * g([0.35, -0.15], 1.5) - 0.7 * g([-0.25, 0.30], 2.0) + 0.5 * g([0.05, 0.05], 1.2)
        + 0.2 * dg(c4, 1.8, 0)
        - 0.24 * dg(c4, 1.8, 1)
        - 0.16 * dg(c5, 1.4, 0)
        + 0.12 * dg(c5, 1.4, 1))
        / 3.0;
    assert!((r.value([0.0, 0.0], 0.0) - want).abs() < 1e-15);
}

#[test]
fn neumann_flux_vanishes() {
    let r = HeatReference::new(HeatVariant::Neumann, KAPPA).unwrap();
    let n = 2048;
    let flux: f64 = (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            let (s, c) = th.sin_cos();
            r.normal_derivative([c, s], [c, s], 0.1)
        })
        .sum::<f64>()
        * 2.0 * PI
        / n as f64;
    assert!(flux.abs() < 1e-8);
}

#[test]
fn nonzero_neumann_has_flux() {
    let r = HeatReference::new(HeatVariant::NeumannNonzero, KAPPA).unwrap();
    let (_, _, v) = r.boundary_data(Segment::Outer, [1.0, 0.0], [1.0, 0.0], 0.0).unwrap();
    // ∂ᵣ[J₁(j₁₁ r) cos θ] at r = 1, θ = 0.
    let want = 3.8317059702075125 * bessel_j_prime(1, 3.8317059702075125).unwrap();
    assert!((v - want).abs() < 1e-10);
    assert!(v.abs() > 0.1);
}

#[test]
fn single_mode_decays_exactly() {
    let r = HeatReference::new(HeatVariant::Robin, KAPPA).unwrap();
    let x = [0.62, 0.31];
    for t in [0.0, 0.3, 0.9] {
        let ratio = r.value(x, t + 0.25) / r.value(x, t);
        assert!((ratio - (-KAPPA * 16.0 * 0.25).exp()).abs() < 1e-14);
    }
}

#[test]
fn mode_tables_use_expected_zeros() {
    let table = BesselTable::new().unwrap();
    let neumann = HeatReference::new(HeatVariant::Neumann, KAPPA).unwrap();
    assert_eq!(neumann.modes().len(), 11);
    assert!(neumann.modes().iter().all(|m| (bessel_j_prime(m.m, m.lambda).unwrap()).abs() < 1e-12));
    let mixed = HeatReference::new(HeatVariant::Mixed, KAPPA).unwrap();
    assert_eq!(mixed.modes().len(), 9);
    assert!(mixed.modes().iter().all(|m| bessel_j(m.m, m.lambda).unwrap().abs() < 1e-12));
    assert_eq!(mixed.modes()[8].lambda, table.j(4, 2));
}

#[test]
fn robin_lambda_value() {
    let lam = robin_lambda();
    // −J₂(4) / (4 J₂′(4)) from the derivative routine directly.
    let direct = -bessel_j(2, 4.0).unwrap() / (4.0 * bessel_j_prime(2, 4.0).unwrap());
    assert!((lam - direct).abs() < 1e-13);
    assert!((lam - 0.36689).abs() < 1e-4, "{lam}");
    let r = HeatReference::new(HeatVariant::Robin, KAPPA).unwrap();
    assert_eq!(r.boundary_data(Segment::Outer, [1.0, 0.0], [1.0, 0.0], 0.3).unwrap(), (1.0, lam, 0.0));
}

#[test]
fn mixed_segment_data() {
    let r = HeatReference::new(HeatVariant::Mixed, KAPPA).unwrap();
    assert_eq!(r.boundary_data(Segment::Outer, [0.0, 1.0], [0.0, 1.0], 0.2).unwrap(), (1.0, 0.0, 0.0));
    assert_eq!(r.boundary_data(Segment::Edge0, [0.7, 0.0], [0.0, -1.0], 0.2).unwrap(), (0.0, 1.0, 0.0));
    let (a, b, v) = r.boundary_data(Segment::Inner, [0.5, 0.0], [-1.0, 0.0], 0.2).unwrap();
    assert_eq!((a, b), (1.0, 0.0));
    assert_eq!(v, r.value([0.5, 0.0], 0.2));
    let disk = HeatReference::new(HeatVariant::Neumann, KAPPA).unwrap();
    assert!(matches!(disk.boundary_data(Segment::Edge0, [0.5, 0.0], [0.0, -1.0], 0.0), Err(Error::Config(_))));
}

#[test]
fn transport_initial_and_origin() {
    let r = TransportReference::new(BETA, KAPPA).unwrap();
    let heat = HeatReference::new(HeatVariant::Dirichlet, KAPPA).unwrap();
    for &x in &random_interior(&Domain::unit_disk(), 20, 4) {
        assert_eq!(r.value(x, 0.0), heat.value(x, 0.0));
    }
    for t in [0.0, 0.3, 1.7] {
        assert_eq!(r.value([0.0, 0.0], t), r.initial_value([0.0, 0.0]));
    }
}

#[test]
fn transport_matches_characteristic_ode() {
    let r = TransportReference::new(BETA, KAPPA).unwrap();
    let rk4_back = |mut x: Vec2, t: f64| {
        let dt = 1e-5;
        let steps = (t / dt).round() as usize;
        let f = |x: Vec2| {
            let v = velocity_field(BETA, x);
            [-v[0], -v[1]]
        };
        for _ in 0..steps {
            let k1 = f(x);
            let k2 = f([x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]]);
            let k3 = f([x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]]);
            let k4 = f([x[0] + dt * k3[0], x[1] + dt * k3[1]]);
            for i in 0..2 {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    };
    for &x in &random_interior(&Domain::unit_disk(), 5, 5) {
        let t = 0.5;
        let foot = rk4_back(x, t);
        assert!((r.value(x, t) - r.initial_value(foot)).abs() < 1e-8);
    }
}

#[test]
fn reference_field_dispatch() {
    let heat = ReferenceField::Heat(HeatReference::new(HeatVariant::Dirichlet, KAPPA).unwrap());
    let samples = SampleSet::new(Domain::unit_disk(), 8, 16).unwrap();
    let rows = heat.boundary_rows(&samples, 0.1).unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.a == 1.0 && r.b == 0.0));
    let vals = heat.sample(&samples.interior, 0.1).unwrap();
    assert_eq!(vals.len(), samples.interior.len());
}
