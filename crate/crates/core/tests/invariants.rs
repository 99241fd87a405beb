//! Property tests for the structural invariants of each layer.

use std::f64::consts::PI;

use ndarray::Array1;
use proptest::prelude::*;

use deltaflow::algebra::{check_relation, default_probes, sigma, Lattice, PhaseVector, RelationParams, WeylGroup};
use deltaflow::dyson::kernel_first;
use deltaflow::grid::{fourier_forward, make_grid, operator_norm, KernelMatrix, Representation, StateVector};
use deltaflow::potentials::{
    delta_transform, mollified_transform, truncate_l1, DeltaConfig, L1Source, Mollifier, Profile,
};
use deltaflow::propagator::{build_delta_propagator, DysonOptions};
use deltaflow::resolvent::UnitaryGroup;
use deltaflow::C64;

fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

fn centers() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.1f64..3.0, prop::bool::ANY, -4.0f64..4.0), 1..5).prop_map(|v| {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (a, neg, x) in v {
            if out.iter().all(|&(_, y)| (y - x).abs() > 1e-3) {
                out.push((if neg { -a } else { a }, x));
            }
        }
        out
    })
}

fn phase_vector() -> impl Strategy<Value = PhaseVector> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| PhaseVector::new(a, b).unwrap())
}

fn nonzero_lambda() -> impl Strategy<Value = f64> {
    (0.25f64..4.0, prop::bool::ANY).prop_map(|(m, neg)| if neg { -m } else { m })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn plancherel(re in prop::collection::vec(-1.0f64..1.0, 64), im in prop::collection::vec(-1.0f64..1.0, 64)) {
        let grid = make_grid(64, 8.0).unwrap();
        let amps: Array1<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
        let psi = StateVector::new(&grid, amps, Representation::Position).unwrap();
        prop_assume!(psi.norm() > 1e-3);
        let hat = fourier_forward(&psi).unwrap();
        prop_assert!((hat.norm() - psi.norm()).abs() / psi.norm() <= 1e-12);
        let back = hat.in_position().unwrap();
        let err = (&back.amplitudes - &psi.amplitudes).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reality_condition(cs in centers(), eps in 0.05f64..1.0, ps in prop::collection::vec(-50.0f64..50.0, 100)) {
        prop_assume!(!cs.is_empty());
        let cfg = DeltaConfig::new(cs, 0.0).unwrap();
        let delta = delta_transform(&cfg);
        let smooth = mollified_transform(&cfg, &Profile::Bump, eps).unwrap();
        for p in ps {
            for v in [&delta, &smooth] {
                prop_assert!((v.eval(p).conj() - v.eval(-p)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn mollifier_dominance(center in -3.0f64..3.0, eps in 0.01f64..2.0, ps in prop::collection::vec(-200.0f64..200.0, 50)) {
        let m = Mollifier::bump(center, eps).unwrap();
        for p in ps {
            prop_assert!(m.transform(p).norm() <= inv_sqrt_2pi() + 1e-12);
        }
    }

    #[test]
    fn l1_truncation_control(exp in 3i32..14, ratio in 0.2f64..0.8, ps in prop::collection::vec(-20.0f64..20.0, 30)) {
        let delta = 2f64.powi(-exp);
        let source = L1Source::geometric(ratio, 0.3);
        let coarse = delta_transform(&truncate_l1(&source, delta).unwrap());
        let fine = delta_transform(&truncate_l1(&source, delta / 2.0).unwrap());
        for p in ps {
            prop_assert!((coarse.eval(p) - fine.eval(p)).norm() <= delta * inv_sqrt_2pi() + 1e-12);
        }
    }

    #[test]
    fn delta_config_text_round_trip(cs in centers(), tail in 0.0f64..1.0) {
        prop_assume!(!cs.is_empty());
        let cfg = DeltaConfig::new(cs, tail).unwrap();
        let back = DeltaConfig::parse(&cfg.to_string()).unwrap();
        prop_assert_eq!(back.centers(), cfg.centers());
        prop_assert_eq!(back.tail_bound(), cfg.tail_bound());
    }

    #[test]
    fn first_order_kernel_is_hermitian(cs in centers(), t in -1.0f64..1.0) {
        prop_assume!(!cs.is_empty());
        let grid = make_grid(16, 4.0).unwrap();
        let k = kernel_first(t, &delta_transform(&DeltaConfig::new(cs, 0.0).unwrap()), &grid);
        for j in 0..16 {
            for l in 0..16 {
                prop_assert!((k.kernel(l, j).conj() - k.kernel(j, l)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn symplectic_form(f in phase_vector(), g in phase_vector(), h in phase_vector(), c in -3.0f64..3.0) {
        prop_assert_eq!(sigma(f, g), -sigma(g, f));
        prop_assert!((sigma(f + g.scaled(c), h) - sigma(f, h) - c * sigma(g, h)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_relations_hold(lambda in nonzero_lambda(), mu in nonzero_lambda(), nu in nonzero_lambda(),
                            f in phase_vector(), g in phase_vector()) {
        let grid = make_grid(64, 8.0).unwrap();
        let lattice = Lattice::new(&grid);
        let probes = default_probes(&grid);
        let params = RelationParams { lambda, mu, nu, f, g };
        for k in 1..=4 {
            let r = check_relation(k, &params, &lattice, &probes).unwrap();
            prop_assert!(r.passes(), "relation {} residual {:e}", k, r.residual);
        }
    }

    #[test]
    fn resolvent_norm_bound_and_regularity(lambda in nonzero_lambda(), f in phase_vector()) {
        let lattice = Lattice::new(&make_grid(64, 8.0).unwrap());
        let r = lattice.resolvent(lambda, f).unwrap();
        prop_assert!(r.norm <= 1.0 / lambda.abs() + 1e-2);
        prop_assert!(lattice.resolvent(1.0, f).unwrap().min_singular > 0.0);
    }

    #[test]
    fn weyl_group_law(f in phase_vector(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let lattice = Lattice::new(&make_grid(32, 6.0).unwrap());
        let group = WeylGroup::new(&lattice, f).unwrap();
        let lhs = group.at(s).unwrap().dot(&group.at(t).unwrap());
        let rhs = group.at(s + t).unwrap();
        let err = (&lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn small_builds_are_unitary(alpha in -2.0f64..2.0, x0 in -1.0f64..1.0, t in 0.05f64..0.3) {
        prop_assume!(alpha.abs() > 0.05);
        let grid = make_grid(32, 6.0).unwrap();
        let cfg = DeltaConfig::single(alpha, x0).unwrap();
        let u = build_delta_propagator(t, &cfg, &grid, &DysonOptions::default()).unwrap();
        prop_assert!(u.unitarity_defect <= u.tolerance, "{:e} > {:e}", u.unitarity_defect, u.tolerance);
        let k = KernelMatrix::from_weighted(&grid, u.matrix.clone()).unwrap();
        prop_assert!((operator_norm(&k).unwrap() - 1.0).abs() <= u.tolerance);
    }
}
