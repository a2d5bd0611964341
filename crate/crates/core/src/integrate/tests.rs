use super::*;
use crate::ansatz::{Activation, NetworkSpec};
use crate::geometry::Domain;
use crate::reference::{HeatReference, HeatVariant};
use crate::Vec2;
use std::sync::Mutex;

/// `u' = λu` with exact stage fits.
struct Scalar {
    u: f64,
    lambda: f64,
}

impl StageState for Scalar {
    fn values(&self) -> Result<Vec<f64>> {
        Ok(vec![self.u])
    }
    fn rates(&self) -> Result<Vec<f64>> {
        Ok(vec![self.lambda * self.u])
    }
    fn realize(&mut self, target: &StageTarget) -> Result<()> {
        self.u = target.values[0];
        Ok(())
    }
}

fn advance(scheme: Scheme, lambda: f64, dt: f64, t_final: f64) -> f64 {
    let mut s = Scalar { u: 1.0, lambda };
    let steps = (t_final / dt).round() as usize;
    for k in 0..steps {
        build_targets(scheme, &mut s, k as f64 * dt, dt).unwrap();
    }
    s.u
}

#[test]
fn euler_target_formula() {
    let mut s = Scalar { u: 2.0, lambda: -3.0 };
    let targets = build_targets(Scheme::Euler, &mut s, 0.0, 0.1).unwrap();
    assert_eq!(targets.len(), 1);
    assert!((targets[0].values[0] - 2.0 * (1.0 - 0.3)).abs() < 1e-15);
    assert!(!targets[0].is_first_stage);
    assert_eq!(targets[0].stage_time, 0.1);
}

#[test]
fn heun_matches_second_order_taylor() {
    for (lambda, dt) in [(-3.0, 0.1), (1.5, 0.02), (-0.5, 0.3)] {
        let z: f64 = lambda * dt;
        let got = advance(Scheme::Heun, lambda, dt, dt);
        assert!((got - (1.0 + z + z * z / 2.0)).abs() < 1e-15);
    }
}

#[test]
fn rk4_matches_fourth_order_taylor() {
    let (lambda, dt) = (-2.0, 0.05);
    let z: f64 = lambda * dt;
    let want = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
    assert!((advance(Scheme::Rk4, lambda, dt, dt) - want).abs() < 1e-15);
}

fn slope(scheme: Scheme) -> f64 {
    let lambda = -3.0;
    let dts = [1e-2, 5e-3, 2.5e-3];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| (advance(scheme, lambda, dt, 1.0) - (lambda * 1.0f64).exp()).abs())
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = dts.iter().zip(&errs).map(|(d, e)| (d.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / 3.0;
    let my = ly.iter().sum::<f64>() / 3.0;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[test]
fn convergence_orders() {
    let (e, h, r) = (slope(Scheme::Euler), slope(Scheme::Heun), slope(Scheme::Rk4));
    assert!((e - 1.0).abs() < 0.2, "euler {e}");
    assert!((h - 2.0).abs() < 0.2, "heun {h}");
    assert!((r - 4.0).abs() < 0.3, "rk4 {r}");
}

#[test]
fn stage_times_and_flags() {
    let mut s = Scalar { u: 1.0, lambda: -1.0 };
    let heun = build_targets(Scheme::Heun, &mut s, 0.3, 0.1).unwrap();
    let times: Vec<f64> = heun.iter().map(|t| t.stage_time).collect();
    assert_eq!(times, vec![0.3 + 0.1, 0.3 + 0.1]);
    assert_eq!(heun.iter().map(|t| t.is_first_stage).collect::<Vec<_>>(), vec![true, false]);
    let rk4 = build_targets(Scheme::Rk4, &mut s, 0.3, 0.1).unwrap();
    let times: Vec<f64> = rk4.iter().map(|t| t.stage_time).collect();
    assert_eq!(times, vec![0.3 + 0.05, 0.3 + 0.05, 0.3 + 0.1, 0.3 + 0.1]);
    assert_eq!(rk4.iter().filter(|t| t.is_first_stage).count(), 1);
}

#[test]
fn scheme_config_validation() {
    assert!(SchemeConfig::default().validate().is_ok());
    assert_eq!(SchemeConfig::default().n_steps(), 100);
    let short = SchemeConfig {
        t_final: 1e-4,
        ..SchemeConfig::default()
    };
    assert!(matches!(short.validate(), Err(Error::Config(_))));
    assert!(SchemeConfig { dt: 0.0, ..SchemeConfig::default() }.validate().is_err());
    assert_eq!("rk4".parse::<Scheme>().unwrap(), Scheme::Rk4);
    assert!("leapfrog".parse::<Scheme>().is_err());
}

fn small_net() -> Mlp {
    Mlp::new(NetworkSpec {
        input_dim: 2,
        hidden_layers: 2,
        width: 6,
        activation: Activation::Tanh,
        embedding: None,
    })
    .unwrap()
}

fn small_cfg() -> StepConfig {
    StepConfig {
        n_ls: 2,
        subset_size: 12,
        first_stage_n_ls: 3,
        first_stage_subset: 20,
        ..StepConfig::default()
    }
}

/// Boundary conditions that log every query time.
struct Recording<B> {
    inner: B,
    times: Mutex<Vec<f64>>,
}

impl<B: BoundaryConditions> BoundaryConditions for Recording<B> {
    fn boundary_rows(&self, samples: &SampleSet, t: f64) -> Result<Vec<BoundaryRow>> {
        self.times.lock().unwrap().push(t);
        self.inner.boundary_rows(samples, t)
    }
}

#[test]
fn every_fit_uses_its_stage_time() {
    let net = small_net();
    let samples = SampleSet::new(Domain::unit_disk(), 6, 8).unwrap();
    let heat = HeatReference::new(HeatVariant::Dirichlet, 0.1).unwrap();
    let op = PdeOperator::heat(0.1).unwrap();
    for (scheme, per_step) in [
        (Scheme::Euler, vec![1.0]),
        (Scheme::Heun, vec![1.0, 1.0]),
        (Scheme::Rk4, vec![0.5, 0.5, 1.0, 1.0]),
    ] {
        let bc = Recording {
            inner: heat.clone(),
            times: Mutex::new(Vec::new()),
        };
        let sc = SchemeConfig {
            scheme,
            dt: 0.01,
            t_final: 0.03,
        };
        let (_, reports) = evolve(&net, net.init(1), &op, &samples, &bc, &sc, &small_cfg(), None, 1, |_| {}).unwrap();
        assert_eq!(reports.len(), 3);
        let want: Vec<f64> = (0..3)
            .flat_map(|k| per_step.iter().map(move |f| k as f64 * 0.01 + f * 0.01))
            .collect();
        let got = bc.times.lock().unwrap().clone();
        assert_eq!(got.len(), want.len(), "{scheme}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-15, "{scheme}: {got:?} vs {want:?}");
        }
        for r in &reports {
            assert!(r.ls_residual.is_finite() && r.ls_residual >= 0.0);
            assert_eq!(r.stage_wall.len(), scheme.stages());
        }
    }
}

/// Fixed field `x₁ + 2`, independent of time.
struct Static;

impl Reference for Static {
    fn sample(&self, points: &[Vec2], _t: f64) -> Result<Vec<f64>> {
        Ok(points.iter().map(|x| x[0] + 2.0).collect())
    }
}

/// Dirichlet data copied from a frozen network.
struct Frozen<'a> {
    net: &'a Mlp,
    params: &'a [f64],
}

impl BoundaryConditions for Frozen<'_> {
    fn boundary_rows(&self, samples: &SampleSet, _t: f64) -> Result<Vec<BoundaryRow>> {
        Ok(samples
            .boundary
            .iter()
            .map(|s| BoundaryRow {
                point: s.point,
                normal: s.normal,
                a: 1.0,
                b: 0.0,
                v: self.net.value(self.params, s.point),
                tag: s.tag,
            })
            .collect())
    }
}

#[test]
fn zero_diffusivity_is_static() {
    let net = small_net();
    let samples = SampleSet::new(Domain::unit_disk(), 6, 8).unwrap();
    let params = net.init(4);
    let bc = Frozen { net: &net, params: &params };
    let op = PdeOperator::heat(0.0).unwrap();
    let sc = SchemeConfig {
        scheme: Scheme::Heun,
        dt: 0.01,
        t_final: 0.05,
    };
    let (end, reports) = evolve(&net, params.clone(), &op, &samples, &bc, &sc, &small_cfg(), Some(&Static), 1, |_| {}).unwrap();
    assert_eq!(end.0, params.0);
    let e0 = reports[0].rel_l2.unwrap();
    assert!(reports.iter().all(|r| r.rel_l2 == Some(e0) && r.ls_residual == 0.0));
}

#[test]
fn error_decimation_and_full_range() {
    let net = small_net();
    let samples = SampleSet::new(Domain::unit_disk(), 6, 8).unwrap();
    let params = net.init(4);
    let bc = Frozen { net: &net, params: &params };
    let op = PdeOperator::heat(0.0).unwrap();
    let sc = SchemeConfig {
        scheme: Scheme::Euler,
        dt: 0.01,
        t_final: 0.05,
    };
    let mut seen = Vec::new();
    let (_, reports) = evolve(&net, params.clone(), &op, &samples, &bc, &sc, &small_cfg(), Some(&Static), 2, |r| {
        seen.push(r.step)
    })
    .unwrap();
    assert_eq!(seen, vec![1, 2, 3, 4, 5]);
    let logged: Vec<usize> = reports.iter().filter(|r| r.rel_l2.is_some()).map(|r| r.step).collect();
    assert_eq!(logged, vec![2, 4, 5]);
    // A static error gives the same space-time aggregate.
    let full = full_range_relative_l2(&reports).unwrap();
    assert!((full - reports[1].rel_l2.unwrap()).abs() < 1e-14);
}

#[test]
fn evolve_rejects_bad_schedule() {
    let net = small_net();
    let samples = SampleSet::new(Domain::unit_disk(), 6, 8).unwrap();
    let op = PdeOperator::heat(0.1).unwrap();
    let sc = SchemeConfig {
        scheme: Scheme::Euler,
        dt: 0.01,
        t_final: 0.001,
    };
    let heat = HeatReference::new(HeatVariant::Dirichlet, 0.1).unwrap();
    let err = evolve(&net, net.init(0), &op, &samples, &heat, &sc, &small_cfg(), None, 1, |_| {}).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn initial_fit_of_zero_field_is_immediate() {
    let net = small_net();
    let samples = SampleSet::new(Domain::unit_disk(), 6, 8).unwrap();
    let mut params = net.init(0);
    let out = *net.layout().layers.last().unwrap();
    for i in 0..out.fan_in {
        params[out.weight_offset + i] = 0.0;
    }
    params[out.bias_offset] = 0.0;
    let zero = vec![0.0; samples.interior.len()];
    let bc = Frozen { net: &net, params: &params.clone() };
    let rep = fit_initial(&net, &mut params, &samples, &zero, &bc, &StepConfig::default(), &InitialFitConfig::default()).unwrap();
    assert_eq!(rep.iterations, 0);
    assert_eq!(rep.residual_norm, 0.0);
    assert!(rep.converged);
}

#[test]
fn initial_fit_converges_and_is_deterministic() {
    let net = small_net();
    let samples = SampleSet::new(Domain::unit_disk(), 6, 8).unwrap();
    let heat = HeatReference::new(HeatVariant::Dirichlet, 0.1).unwrap();
    let u0 = heat.sample(&samples.interior, 0.0).unwrap();
    let run = || {
        let mut p = net.init(2);
        let rep = fit_initial(&net, &mut p, &samples, &u0, &heat, &StepConfig::default(), &InitialFitConfig::default()).unwrap();
        (p, rep)
    };
    let (p1, r1) = run();
    let (p2, r2) = run();
    assert_eq!(p1.0, p2.0);
    assert_eq!(r1, r2);
    // 67 parameters against 29 rows: an interpolation problem.
    assert!(r1.converged, "{r1:?}");
}
