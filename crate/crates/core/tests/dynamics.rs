//! Propagator-level checks at the full (256, 32) configuration: time reversal,
//! node-count stability, an independent split-step cross-check and the
//! generator finite difference.

use deltaflow::dyson::{default_time_nodes, SignConvention, RESOLVED_CONVENTION};
use deltaflow::grid::{make_grid, operator_norm, KernelMatrix, MomentumGrid};
use deltaflow::potentials::{DeltaConfig, Profile};
use deltaflow::propagator::{
    build_delta_propagator, build_mollified_propagator, conjugate, free_phase, reference_propagator,
    select_convention, DysonOptions,
};
use deltaflow::C64;

fn grid() -> MomentumGrid {
    make_grid(256, 32.0).unwrap()
}

fn norm_of(grid: &MomentumGrid, m: ndarray::Array2<C64>) -> f64 {
    operator_norm(&KernelMatrix::from_weighted(grid, m).unwrap()).unwrap()
}

#[test]
fn time_reversal_for_symmetric_configuration() {
    let g = grid();
    let cfg = DeltaConfig::new(vec![(1.0, -0.5), (1.0, 0.5)], 0.0).unwrap();
    assert!(cfg.is_reflection_symmetric());
    let opts = DysonOptions::default();
    let fwd = build_delta_propagator(0.125, &cfg, &g, &opts).unwrap();
    let back = build_delta_propagator(-0.125, &cfg, &g, &opts).unwrap();
    let err = norm_of(&g, &back.matrix - &fwd.adjoint());
    assert!(err <= fwd.tolerance + back.tolerance, "{err:e}");
}

#[test]
fn doubling_time_nodes_is_invisible() {
    let g = grid();
    let cfg = DeltaConfig::single(1.0, 0.0).unwrap();
    let t = 0.25;
    let base = default_time_nodes(t, &g);
    let at = |nodes| {
        let opts = DysonOptions {
            time_nodes: Some(nodes),
            ..DysonOptions::default()
        };
        build_delta_propagator(t, &cfg, &g, &opts).unwrap().matrix
    };
    let err = norm_of(&g, at(base) - at(2 * base));
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn dyson_agrees_with_split_step_reference() {
    let g = grid();
    let cfg = DeltaConfig::single(1.0, 0.0).unwrap();
    let dyson = build_mollified_propagator(0.25, &cfg, &Profile::Bump, 0.2, &g, &DysonOptions::default()).unwrap();
    let reference = reference_propagator(0.25, &cfg, &Profile::Bump, 0.2, &g, 200).unwrap();
    let err = norm_of(&g, &dyson.matrix - &reference.matrix);
    assert!(err <= 1e-2, "{err:e}");
}

#[test]
fn generator_check_selects_recorded_convention() {
    let gate = select_convention().unwrap();
    assert_eq!(gate.selected, RESOLVED_CONVENTION);
    assert_eq!(gate.selected.other(), SignConvention::MinusI);
    assert!(gate.selected_residual <= 5e-2, "{:e}", gate.selected_residual);
    assert!(gate.rejected_residual > 10.0 * gate.selected_residual);
}

#[test]
fn free_conjugation_of_diagonal_is_trivial() {
    // A multiplication operator in momentum commutes with free evolution.
    let g = make_grid(32, 6.0).unwrap();
    let cfg = DeltaConfig::empty();
    let u = build_delta_propagator(0.7, &cfg, &g, &DysonOptions::default()).unwrap();
    let diff = norm_of(&g, &u.matrix - &free_phase(0.7, &g).matrix);
    assert!(diff <= 1e-14);
    let a = KernelMatrix::diagonal(&g, |p| C64::new(p.sin(), 0.0));
    let moved = conjugate(&u, &a).unwrap();
    assert!(norm_of(&g, &moved.matrix - &a.matrix) <= 1e-13);
}
