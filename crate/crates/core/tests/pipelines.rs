use std::f64::consts::PI;

use eulerlab_core::extensions::{boussinesq_uniqueness_experiment, density_contraction_check, ScalarRunView};
use eulerlab_core::uniqueness::Verdict;
use eulerlab_core::*;

fn g(n: usize) -> PeriodicGrid {
    PeriodicGrid::new(2, n).unwrap()
}

#[test]
fn identical_runs_have_zero_relative_energy() {
    let u0 = taylor_green(g(32), 1.0).unwrap();
    let cfg = SolverConfig::new(32, 0.01, 0.2).with_stride(5);
    let ucfg = UniquenessConfig::new(0.9, 3.0, BudgetPath::Trilinear);
    let (r, _, _) = uniqueness_experiment(&u0, &cfg, &cfg, &ucfg).unwrap();
    assert!(r.series.e.iter().all(|&e| e == 0.0));
    assert!(r.certificate.pass);
    assert_eq!(r.verdict, Verdict::Certified);
}

#[test]
fn rough_data_fails_the_commutator_hypothesis() {
    let grid = g(64);
    let u0 = lacunary_field(&SynthSpec::lacunary(0.3, 1), grid).unwrap();
    let cfg = SolverConfig::new(64, 1e-3, 4e-3).with_stride(2);
    let ucfg = UniquenessConfig::new(0.6, 3.0, BudgetPath::Commutator);
    let (r, _, _) = uniqueness_experiment(&u0, &cfg, &cfg, &ucfg).unwrap();
    assert!(!r.hypothesis.met, "{:?}", r.hypothesis);
    assert_eq!(r.verdict, Verdict::HypothesisNotMet);
}

#[test]
fn unit_density_reduces_to_homogeneous_solver() {
    let grid = g(32);
    let u0 = random_divfree(grid, 3.0, 9);
    let cfg = SolverConfig::new(32, 0.01, 0.2).with_stride(5);
    let h = solve(&u0, &cfg).unwrap();
    let i = inhom_solve(&ScalarField::constant(grid, 1.0), &u0, &cfg).unwrap();
    for (a, b) in h.states.iter().zip(&i.states) {
        assert!(a.velocity.sub(&b.velocity).unwrap().max_abs() < 1e-8);
        assert!(b.density.values().iter().all(|r| (r - 1.0).abs() < 1e-12));
    }
}

#[test]
fn passive_temperature_leaves_velocity_unchanged() {
    let grid = g(32);
    let u0 = taylor_green(grid, 1.0).unwrap();
    let theta = ScalarField::from_fn(grid, |x| (PI * x[0]).cos() * (PI * x[1]).sin());
    let cfg = SolverConfig::new(32, 0.01, 0.2).with_stride(5);
    let h = solve(&u0, &cfg).unwrap();
    let b = boussinesq_solve(&theta, &u0, [0.0, 0.0], &cfg).unwrap();
    for (x, y) in h.states.iter().zip(&b.states) {
        assert!(x.velocity.sub(&y.velocity).unwrap().max_abs() < 1e-8);
    }
    assert!(b.relative_theta_drift() < 1e-10);
}

#[test]
fn identical_densities_contract_trivially() {
    let grid = g(32);
    let rho = ScalarField::from_fn(grid, |x| 1.0 + 0.2 * (PI * x[0]).sin());
    let cfg = SolverConfig::new(32, 0.01, 0.1).with_stride(5);
    let t = inhom_solve(&rho, &taylor_green(grid, 1.0).unwrap(), &cfg).unwrap();
    let view = || eulerlab_core::extensions::ScalarRunView {
        times: t.times(),
        scalars: t.states.iter().map(|s| &s.density).collect(),
        velocities: t.states.iter().map(|s| &s.velocity).collect(),
    };
    let r = density_contraction_check(&view(), &view(), None, 1e-12).unwrap();
    assert!(r.pass);
    assert!(r.series.difference.iter().all(|&d| d == 0.0));
}

#[test]
fn trajectory_snapshots_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let u0 = taylor_green(g(16), 0.5).unwrap();
    let t = solve(&u0, &SolverConfig::new(16, 0.01, 0.05).with_stride(2)).unwrap();
    let frames: Vec<(f64, Vec<&ScalarField>)> = t
        .states
        .iter()
        .map(|s| (s.time, vec![s.velocity.component(0), s.velocity.component(1)]))
        .collect();
    let mut m = eulerlab_core::snapshot::write_frames(dir.path(), "u", "abc", &["u1", "u2"], &frames).unwrap();
    m.ledgers.insert("energy".into(), t.energy_ledger.clone());
    let mpath = dir.path().join("manifest.json");
    m.write(&mpath).unwrap();
    let back = SnapshotManifest::read(&mpath).unwrap();
    assert_eq!(back, m);
    for (p, s) in back.paths(dir.path()).iter().zip(&t.states) {
        let v = read_velocity(p).unwrap();
        assert_eq!(v.component(0).values(), s.velocity.component(0).values());
        assert_eq!(v.component(1).values(), s.velocity.component(1).values());
    }
}

#[test]
fn scaling_experiment_rejects_bad_sweeps() {
    let grid = g(64);
    let v = taylor_green(grid, 1.0).unwrap();
    let f = ScalingFields::Convective(&v);
    assert!(scaling_experiment(f, 3.0, &[0.5, 0.25, 0.125], 0.15).is_err());
    assert!(scaling_experiment(f, 3.0, &[0.5, 0.25, 0.125, 0.0625], 0.15).is_err());
    assert!(scaling_experiment(f, 1.5, &[0.5, 0.25, 0.125, 0.0625], 0.15).is_err());
}

#[test]
fn perturbed_density_fails_at_the_first_perturbed_time() {
    let grid = g(32);
    let rho = ScalarField::from_fn(grid, |x| 1.0 + 0.2 * (PI * x[0]).sin());
    let cfg = SolverConfig::new(32, 0.01, 0.1).with_stride(2);
    let t = inhom_solve(&rho, &taylor_green(grid, 1.0).unwrap(), &cfg).unwrap();
    let bump = ScalarField::from_fn(grid, |x| 0.05 * (PI * x[1]).cos());
    let perturbed: Vec<ScalarField> = t
        .states
        .iter()
        .map(|s| if s.time > 0.05 { s.density.add(&bump).unwrap() } else { s.density.clone() })
        .collect();
    let a = ScalarRunView {
        times: t.times(),
        scalars: t.states.iter().map(|s| &s.density).collect(),
        velocities: t.states.iter().map(|s| &s.velocity).collect(),
    };
    let b = ScalarRunView {
        times: t.times(),
        scalars: perturbed.iter().collect(),
        velocities: t.states.iter().map(|s| &s.velocity).collect(),
    };
    let r = density_contraction_check(&a, &b, None, 1e-8).unwrap();
    assert!(!r.pass);
    let first = t.times().into_iter().find(|&x| x > 0.05).unwrap();
    assert_eq!(r.first_violation.map(|v| v.1), Some(first));
}

#[test]
fn shear_transport_follows_characteristics() {
    let grid = g(256);
    let rho = ScalarField::from_fn(grid, |x| (PI * x[0]).sin());
    let u = VelocityField::from_fn(grid, |x| vec![0.0, (PI * x[0]).sin()]);
    let dt = 2.0 / 800.0;
    let mut r = rho.clone();
    for _ in 0..800 {
        r = transport_step(&r, &u, dt).unwrap();
    }
    // Characteristics are vertical lines, so rho(t, x) = rho0(x1).
    assert!(r.sub(&rho).unwrap().max_abs() < 1e-6);
}

#[test]
fn transport_preserves_the_l2_norm_of_smooth_data() {
    let grid = g(256);
    let rho = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * (PI * x[0]).cos() * (PI * x[1]).sin());
    let u = taylor_green(grid, 1.0).unwrap();
    let dt = 2.5e-3;
    let mut r = rho.clone();
    for _ in 0..400 {
        r = transport_step(&r, &u, dt).unwrap();
    }
    let l2 = |f: &ScalarField| f.inner(f).unwrap();
    assert!((l2(&r) - l2(&rho)).abs() / l2(&rho) < 1e-6);
    assert!((r.integral() - rho.integral()).abs() < 1e-12 * rho.integral().abs().max(1.0));
}

#[test]
fn cold_boussinesq_pair_reduces_to_the_homogeneous_report() {
    let grid = g(32);
    let u0 = random_divfree(grid, 3.0, 4).scale(0.5);
    let a = SolverConfig::new(32, 0.01, 0.2).with_stride(5);
    let b = SolverConfig::new(32, 0.005, 0.2).with_stride(10);
    let ucfg = UniquenessConfig::new(0.9, 3.0, BudgetPath::Trilinear);
    let (h, _, _) = uniqueness_experiment(&u0, &a, &b, &ucfg).unwrap();
    let (r, _, _) =
        boussinesq_uniqueness_experiment(&ScalarField::zeros(grid), &u0, [0.0, -1.0], &a, &b, &ucfg, 1e-5).unwrap();
    assert_eq!(r.velocity, h);
    assert!(r.theta.series.difference.iter().all(|&d| d == 0.0));
    assert_eq!(r.verdict, h.verdict);
}
