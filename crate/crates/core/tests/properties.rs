use eulerlab_core::besov::translation_difference_norm_steps;
use eulerlab_core::calculus::{derivative, divergence, leray_project};
use eulerlab_core::snapshot::{read_components, write_components};
use eulerlab_core::calculus::velocity_gradient;
use eulerlab_core::uniqueness::{gronwall_certify, one_sided_lipschitz, relative_energy, LipschitzSeries, RelativeEnergySeries};
use eulerlab_core::*;
use proptest::prelude::*;

const N: usize = 32;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(2, N).unwrap()
}

fn scalar() -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-1.0f64..1.0, N * N).prop_map(|v| ScalarField::new(grid(), v).unwrap())
}

fn velocity() -> impl Strategy<Value = VelocityField> {
    (scalar(), scalar()).prop_map(|(a, b)| VelocityField::new(vec![a, b]).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leray_is_an_orthogonal_projection(u in velocity()) {
        let p = leray_project(&u);
        prop_assert!(divergence(&p).max_abs() < 1e-12);
        let pp = leray_project(&p);
        prop_assert!(pp.sub(&p).unwrap().max_abs() < 1e-12);
        let rest = u.sub(&p).unwrap();
        prop_assert!(p.inner(&rest).unwrap().abs() < 1e-12);
    }

    #[test]
    fn derivative_is_skew_adjoint(f in scalar(), g in scalar(), axis in 0usize..2) {
        let a = derivative(&f, axis).inner(&g).unwrap();
        let b = f.inner(&derivative(&g, axis)).unwrap();
        prop_assert!(close(a, -b, 1e-11));
    }

    #[test]
    fn mollification_contracts_and_keeps_mean(f in scalar(), k in 0usize..3) {
        let eps = [0.25, 0.375, 0.5][k];
        let kernel = make_kernel(grid(), eps).unwrap();
        let m = f.mollify(&kernel).unwrap();
        prop_assert!(lp_norm(&m, 2.0) <= lp_norm(&f, 2.0) * (1.0 + 1e-12));
        prop_assert!(close(m.integral(), f.integral(), 1e-12));
    }

    #[test]
    fn mollification_commutes_with_shifts(f in scalar(), s0 in -8i64..8, s1 in -8i64..8) {
        let kernel = make_kernel(grid(), 0.25).unwrap();
        let a = f.translated(&[s0, s1]).mollify(&kernel).unwrap();
        let b = f.mollify(&kernel).unwrap().translated(&[s0, s1]);
        prop_assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn lp_norm_triangle_and_homogeneity(f in scalar(), g in scalar(), p in 1.0f64..6.0, s in -3.0f64..3.0) {
        let sum = f.add(&g).unwrap();
        prop_assert!(lp_norm(&sum, p) <= (lp_norm(&f, p) + lp_norm(&g, p)) * (1.0 + 1e-12));
        prop_assert!(close(lp_norm(&f.scale(s), p), s.abs() * lp_norm(&f, p), 1e-12));
    }

    #[test]
    fn translation_difference_is_subadditive(u in velocity(), v in velocity(), s0 in -4i64..4, s1 in -4i64..4) {
        let steps = [s0, s1];
        let w = u.add(&v).unwrap();
        let lhs = translation_difference_norm_steps(&w, &steps, 3.0);
        let rhs = translation_difference_norm_steps(&u, &steps, 3.0)
            + translation_difference_norm_steps(&v, &steps, 3.0);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn one_sided_lipschitz_is_positively_homogeneous(u in velocity(), lambda in 0.0f64..5.0) {
        let c = one_sided_lipschitz(&u, 0.25).unwrap();
        let cl = one_sided_lipschitz(&u.scale(lambda), 0.25).unwrap();
        prop_assert!(close(cl, lambda * c, 1e-12));
        prop_assert!(c >= 0.0);
    }

    #[test]
    fn snapshot_roundtrip_is_bitwise(u in velocity()) {
        let mut buf = Vec::new();
        write_components(&mut buf, &[u.component(0), u.component(1)]).unwrap();
        let (g, back) = read_components(&buf[..]).unwrap();
        prop_assert_eq!(g, grid());
        prop_assert_eq!(back[0].values(), u.component(0).values());
        prop_assert_eq!(back[1].values(), u.component(1).values());
    }

    #[test]
    fn padding_then_truncating_is_identity(f in scalar()) {
        // Drop the Nyquist content first so the round trip is exact.
        let g8 = PeriodicGrid::new(2, N / 2).unwrap();
        let band = resample_scalar(&resample_scalar(&f, g8).unwrap(), grid()).unwrap();
        let up = resample_scalar(&band, PeriodicGrid::new(2, 2 * N).unwrap()).unwrap();
        let down = resample_scalar(&up, grid()).unwrap();
        prop_assert!(down.sub(&band).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn relative_energy_matches_its_expansion(u in velocity(), v in velocity()) {
        let direct = relative_energy(&u, &v).unwrap();
        let expanded = 0.5 * (u.inner(&u).unwrap() + v.inner(&v).unwrap()) - u.inner(&v).unwrap();
        prop_assert!((direct - expanded).abs() < 1e-10);
        prop_assert!(direct >= 0.0);
        prop_assert_eq!(direct, relative_energy(&v, &u).unwrap());
    }

    #[test]
    fn lipschitz_constant_is_below_the_gradient_sup(u in velocity()) {
        let kernel = make_kernel(grid(), 0.25).unwrap();
        let grad = velocity_gradient(&u.mollify(&kernel).unwrap());
        let sup: f64 = (0..grid().len())
            .map(|i| {
                let m: f64 = grad.entries().iter().map(|e| e.values()[i].powi(2)).sum();
                m.sqrt()
            })
            .fold(0.0, f64::max);
        prop_assert!(one_sided_lipschitz(&u, 0.25).unwrap() <= sup * (1.0 + 1e-12));
    }

    #[test]
    fn larger_budgets_never_fail_a_passing_certificate(
        e in prop::collection::vec(0.0f64..2.0, 6),
        c in prop::collection::vec(0.0f64..1.0, 6),
        budget in 0.0f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        let t: Vec<f64> = (0..6).map(|i| 0.2 * i as f64).collect();
        let es = RelativeEnergySeries { times: t.clone(), values: e, pair_id: ("a".into(), "b".into()) };
        let cs = LipschitzSeries { times: t, c_values: c, reg_epsilon: 0.25 };
        let a = gronwall_certify(&es, &cs, budget, 1e-9).unwrap();
        let b = gronwall_certify(&es, &cs, budget + extra, 1e-9).unwrap();
        prop_assert!(!a.pass || b.pass);
        prop_assert!(b.slack >= a.slack - 1e-12);
    }
}
