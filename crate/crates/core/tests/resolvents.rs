//! Laplace-transform resolvents of the delta dynamics against each other and
//! against a direct inverse.

use ndarray::Array2;

use deltaflow::grid::{make_grid, operator_norm, KernelMatrix, MomentumGrid};
use deltaflow::potentials::{delta_transform, DeltaConfig};
use deltaflow::propagator::{hamiltonian_matrix, DysonOptions};
use deltaflow::resolvent::{
    default_t_max, direct_resolvent, resolvent_from_propagator, DysonGroup, ResolventOperator, NORM_SLACK,
};
use deltaflow::C64;

const LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];

fn setup() -> (MomentumGrid, DysonGroup) {
    let grid = make_grid(32, 6.0).unwrap();
    let cfg = DeltaConfig::single(1.0, 0.3).unwrap();
    let group = DysonGroup::delta(&cfg, &grid, &DysonOptions::default());
    (grid, group)
}

fn norm_of(grid: &MomentumGrid, m: Array2<C64>) -> f64 {
    operator_norm(&KernelMatrix::from_weighted(grid, m).unwrap()).unwrap()
}

fn laplace(group: &DysonGroup, lambda: f64) -> ResolventOperator {
    resolvent_from_propagator(lambda, group, default_t_max(lambda), None).unwrap()
}

#[test]
fn first_resolvent_identity() {
    let (grid, group) = setup();
    let rs: Vec<ResolventOperator> = LAMBDAS.iter().map(|&l| laplace(&group, l)).collect();
    for (a, ra) in LAMBDAS.iter().zip(&rs) {
        for (b, rb) in LAMBDAS.iter().zip(&rs) {
            // (H − iλ)^{-1} − (H − iμ)^{-1} = i(λ − μ)(H − iλ)^{-1}(H − iμ)^{-1}
            let rhs = ra.matrix.dot(&rb.matrix).mapv(|z| z * C64::new(0.0, a - b));
            let err = norm_of(&grid, &ra.matrix - &rb.matrix - rhs);
            assert!(err <= 1e-4, "lambda {a}, mu {b}: {err:e}");
        }
    }
}

#[test]
fn reflection_in_lambda_is_adjoint_and_norms_are_bounded() {
    let (grid, group) = setup();
    for &l in &LAMBDAS {
        let plus = laplace(&group, l);
        let minus = laplace(&group, -l);
        assert!(norm_of(&grid, &minus.matrix - &plus.adjoint()) <= 1e-6);
        for r in [&plus, &minus] {
            assert!(r.norm <= 1.0 / l + NORM_SLACK, "{} at {l}", r.norm);
        }
    }
}

#[test]
fn laplace_matches_direct_inverse() {
    let (grid, group) = setup();
    let h = hamiltonian_matrix(&delta_transform(&DeltaConfig::single(1.0, 0.3).unwrap()), &grid);
    for &l in &LAMBDAS {
        let direct = direct_resolvent(l, &h).unwrap();
        let err = norm_of(&grid, &laplace(&group, l).matrix - &direct.matrix);
        assert!(err <= 1e-5, "{l}: {err:e}");
    }
}

#[test]
fn laplace_parameters_are_converged() {
    let (grid, group) = setup();
    let t_max = default_t_max(1.0);
    let base = resolvent_from_propagator(1.0, &group, t_max, None).unwrap();
    let longer = resolvent_from_propagator(1.0, &group, 2.0 * t_max, None).unwrap();
    let nodes = base.quadrature.unwrap().nodes;
    let denser = resolvent_from_propagator(1.0, &group, t_max, Some(2 * nodes)).unwrap();
    assert!(norm_of(&grid, &longer.matrix - &base.matrix) <= 1e-6);
    assert!(norm_of(&grid, &denser.matrix - &base.matrix) <= 1e-6);
}
