//! Resolvents `R(λ) = (H − iλ)^{−1}` as Laplace transforms of unitary groups.
//!
//! For `η = sign λ`,
//!
//! ```text
//! (H − iλ)^{−1} = iη ∫_0^∞ e^{−|λ|s} U(ηs) ds,   U(s) = e^{−isH}.
//! ```
//!
//! The half line is cut at `t_max = K h` with `K` a power of two and the
//! group law is used to fold it onto one step:
//!
//! ```text
//! ∫_0^{Kh} e^{−|λ|s} U(ηs) ds = (Σ_{k<K} M^k) · ∫_0^h e^{−|λ|r} U(ηr) dr,
//! M = e^{−|λ|h} U(ηh),
//! ```
//!
//! with `Σ_{k<K} M^k = (𝟙 + M)(𝟙 + M²)(𝟙 + M⁴)⋯`. Only the single-step
//! integral needs quadrature nodes.

use ndarray::{Array1, Array2};

use crate::dyson::{self, Engine};
use crate::grid::{KernelMatrix, MomentumGrid, Representation, StateVector};
use crate::linalg;
use crate::potentials::{delta_transform, mollified_transform, DeltaConfig, PotentialTransform, Profile};
use crate::propagator::{
    check_ladder, config_digest, monotone_verdict, propagate_with, Check, ConvergenceReport, DysonOptions,
    LaplaceMeta, Propagator, Provenance, QUADRATURE_SLACK,
};
use crate::quadrature::{panels_for, GaussLegendre, PANEL_ORDER};
use crate::{Error, Result, C64};

/// `e^{−|λ| t_max}` must be negligible: `|λ|·t_max` at least this.
pub const MIN_DAMPING: f64 = 20.0;

/// Slack allowed on `‖R(λ)‖ ≤ 1/|λ|`.
pub const NORM_SLACK: f64 = 1e-2;

/// Longest Dyson step composed into larger times.
pub const DYSON_STEP: f64 = 0.25;

/// One Laplace step: `∫_0^h e^{−|λ|r} U(ηr) dr` and `U(ηh)`.
#[derive(Debug, Clone)]
pub struct LaplaceStep {
    pub integral: Array2<C64>,
    pub unitary: Array2<C64>,
    pub order_used: usize,
    pub tail_estimate: f64,
}

/// A strongly continuous one-parameter unitary group on a momentum grid.
pub trait UnitaryGroup {
    fn grid(&self) -> &MomentumGrid;

    /// `U(t)` as a weighted matrix.
    fn at(&self, t: f64) -> Result<Array2<C64>>;

    /// Bound on `‖H‖`, used to size quadrature panels.
    fn frequency(&self) -> f64;

    /// Longest step `at` handles in one piece.
    fn max_step(&self) -> f64 {
        f64::INFINITY
    }

    /// Accuracy of a single `at` evaluation.
    fn accuracy(&self) -> f64 {
        0.0
    }

    /// The generator `H` with `U(t) = e^{−itH}`, when available.
    fn generator(&self) -> Option<Array2<C64>> {
        None
    }

    /// Composite Gauss–Legendre rule with `nodes` total nodes on `[0, h]`.
    fn laplace_step(&self, lambda: f64, h: f64, nodes: usize) -> Result<LaplaceStep> {
        let eta = lambda.signum();
        let (panels, order) = dyson::panel_layout(nodes);
        let gl = GaussLegendre::new(order);
        let n = self.grid().n_points;
        let mut integral = Array2::zeros((n, n));
        let width = h / panels as f64;
        for k in 0..panels {
            let a = k as f64 * width;
            let (rs, ws) = gl.on_interval(a, a + width);
            for (r, w) in rs.into_iter().zip(ws) {
                let u = self.at(eta * r)?;
                integral.scaled_add(C64::new(w * (-lambda.abs() * r).exp(), 0.0), &u);
            }
        }
        Ok(LaplaceStep {
            integral,
            unitary: self.at(eta * h)?,
            order_used: 0,
            tail_estimate: 0.0,
        })
    }
}

/// `U(t) = e^{−itp²}`.
#[derive(Debug, Clone)]
pub struct FreeGroup {
    grid: MomentumGrid,
}

impl FreeGroup {
    pub fn new(grid: &MomentumGrid) -> Self {
        Self { grid: grid.clone() }
    }
}

impl UnitaryGroup for FreeGroup {
    fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    fn at(&self, t: f64) -> Result<Array2<C64>> {
        Ok(crate::propagator::free_phase(t, &self.grid).matrix)
    }

    fn frequency(&self) -> f64 {
        self.grid.p_max * self.grid.p_max
    }

    fn generator(&self) -> Option<Array2<C64>> {
        Some(Array2::from_diag(&Array1::from_iter(self.grid.nodes.iter().map(|p| C64::new(p * p, 0.0)))))
    }
}

/// Dyson propagators of `p² + V`, composed from certified steps of at most
/// [`DYSON_STEP`].
pub struct DysonGroup {
    engine: Engine,
    opts: DysonOptions,
    provenance: Provenance,
    digest: String,
}

impl DysonGroup {
    pub fn new(v: &PotentialTransform, grid: &MomentumGrid, opts: &DysonOptions, provenance: Provenance, digest: String) -> Self {
        Self {
            engine: Engine::new(v, grid),
            opts: *opts,
            provenance,
            digest,
        }
    }

    pub fn delta(cfg: &DeltaConfig, grid: &MomentumGrid, opts: &DysonOptions) -> Self {
        Self::new(
            &delta_transform(cfg),
            grid,
            opts,
            Provenance::DysonDelta,
            config_digest("delta", cfg, ""),
        )
    }

    pub fn mollified(
        cfg: &DeltaConfig,
        profile: &Profile,
        epsilon: f64,
        grid: &MomentumGrid,
        opts: &DysonOptions,
    ) -> Result<Self> {
        Ok(Self::new(
            &mollified_transform(cfg, profile, epsilon)?,
            grid,
            opts,
            Provenance::DysonMollified,
            config_digest("mollified", cfg, &format!("{} {epsilon:e}", profile.name())),
        ))
    }

    /// A single certified build at `t`, `|t| ≤ DYSON_STEP`.
    pub fn propagator(&self, t: f64) -> Result<Propagator> {
        if t.abs() > DYSON_STEP * (1.0 + 1e-12) {
            return Err(Error::arg(format!("Dyson step {t} exceeds {DYSON_STEP}")));
        }
        propagate_with(&self.engine, t, &self.opts, self.provenance, self.digest.clone())
    }
}

impl UnitaryGroup for DysonGroup {
    fn grid(&self) -> &MomentumGrid {
        &self.engine.grid
    }

    fn at(&self, t: f64) -> Result<Array2<C64>> {
        let steps = (t.abs() / DYSON_STEP).ceil().max(1.0) as usize;
        let u = self.propagator(t / steps as f64)?;
        Ok(linalg::matpow(&u.matrix, steps))
    }

    fn frequency(&self) -> f64 {
        let g = &self.engine.grid;
        g.p_max * g.p_max
    }

    fn max_step(&self) -> f64 {
        DYSON_STEP
    }

    fn accuracy(&self) -> f64 {
        10.0 * (self.opts.tol + QUADRATURE_SLACK)
    }

    fn generator(&self) -> Option<Array2<C64>> {
        let mut h = self.engine.vd.clone();
        for (j, d) in self.engine.d.iter().enumerate() {
            h[(j, j)] += d;
        }
        Some(h)
    }

    /// Reuses the march: the collocation stage sums give `U(s)` at every
    /// Gauss node of the step without separate builds.
    fn laplace_step(&self, lambda: f64, h: f64, nodes: usize) -> Result<LaplaceStep> {
        let eta = lambda.signum();
        let t = eta * h;
        let end = self.propagator(t)?;
        let n = self.engine.grid.n_points;
        let (panels, order) = dyson::panel_layout(nodes);
        let mut integral = Array2::<C64>::zeros((n, n));
        let d = &self.engine.d;
        let mut observe = |s: f64, w: f64, sum: &Array2<C64>| {
            let mut gamma = sum.clone();
            for k in 0..n {
                gamma[(k, k)] += 1.0;
            }
            let mut u = linalg::adjoint(&gamma);
            let phases: Vec<C64> = d.iter().map(|&p2| C64::from_polar(1.0, -s * p2)).collect();
            linalg::scale_rows(&mut u, &phases);
            // w < 0 when η < 0; ds = η dr.
            integral.scaled_add(C64::new(eta * w * (-lambda * s).exp(), 0.0), &u);
        };
        self.engine.march(
            t,
            panels,
            order,
            end.order_used,
            dyson::RESOLVED_CONVENTION.phase(),
            Some(&mut observe),
        );
        Ok(LaplaceStep {
            integral,
            unitary: end.matrix,
            order_used: end.order_used,
            tail_estimate: end.tail_estimate,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventSource {
    LaplaceOfPropagator,
    DirectInverse,
}

/// Time grid behind a Laplace resolvent.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceQuadrature {
    pub t_max: f64,
    pub step: f64,
    pub steps: usize,
    /// Gauss nodes within one step.
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct ResolventOperator {
    pub grid: MomentumGrid,
    pub lambda: f64,
    pub matrix: Array2<C64>,
    pub source: ResolventSource,
    pub quadrature: Option<LaplaceQuadrature>,
    pub norm: f64,
    /// `‖(H − iλ)R − 𝟙‖` when the generator is known.
    pub defect: Option<f64>,
    /// `U(ηh)` of the Laplace step.
    pub step_unitary: Option<Array2<C64>>,
    pub order_used: usize,
    pub tail_estimate: f64,
}

impl ResolventOperator {
    pub fn as_kernel(&self) -> KernelMatrix {
        KernelMatrix {
            grid: self.grid.clone(),
            matrix: self.matrix.clone(),
        }
    }

    pub fn adjoint(&self) -> Array2<C64> {
        linalg::adjoint(&self.matrix)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::arg("lambda must be a nonzero finite number"));
    }
    Ok(())
}

fn generator_defect(h: &Array2<C64>, lambda: f64, r: &Array2<C64>) -> Result<f64> {
    let mut shifted = h.clone();
    for k in 0..shifted.nrows() {
        shifted[(k, k)] -= C64::new(0.0, lambda);
    }
    let mut prod = shifted.dot(r);
    for k in 0..prod.nrows() {
        prod[(k, k)] -= 1.0;
    }
    linalg::opnorm(&prod)
}

fn enforce_norm_bound(norm: f64, lambda: f64) -> Result<()> {
    if !(norm <= 1.0 / lambda.abs() + NORM_SLACK) {
        return Err(Error::Invariant(format!(
            "resolvent norm {norm:.6e} exceeds 1/|λ| = {:.6e}",
            1.0 / lambda.abs()
        )));
    }
    Ok(())
}

/// `(H − iλ)^{−1}` by Laplace transform of `group` up to `t_max`.
///
/// `nodes` is the Gauss node count within one folded step; `None` resolves
/// the fastest phase of the group with panels of [`PANEL_ORDER`] nodes.
pub fn resolvent_from_propagator(
    lambda: f64,
    group: &dyn UnitaryGroup,
    t_max: f64,
    nodes: Option<usize>,
) -> Result<ResolventOperator> {
    check_lambda(lambda)?;
    if !(lambda.abs() * t_max >= MIN_DAMPING) {
        return Err(Error::arg(format!(
            "t_max = {t_max} too short: need |λ|·t_max ≥ {MIN_DAMPING}"
        )));
    }
    if nodes == Some(0) {
        return Err(Error::arg("at least one Laplace node is required"));
    }
    let steps = ((t_max / group.max_step()).ceil().max(1.0) as usize).next_power_of_two();
    let h = t_max / steps as f64;
    let nodes = nodes.unwrap_or_else(|| PANEL_ORDER * panels_for(h, group.frequency()));
    let step = group.laplace_step(lambda, h, nodes)?;
    let mut m = step.unitary.clone();
    m.mapv_inplace(|z| z * (-lambda.abs() * h).exp());
    let n = group.grid().n_points;
    let mut geometric = linalg::eye(n);
    let mut k = 1;
    while k < steps {
        geometric = &geometric + &geometric.dot(&m);
        m = m.dot(&m);
        k *= 2;
    }
    let eta = lambda.signum();
    let matrix = geometric.dot(&step.integral).mapv(|z| z * C64::new(0.0, eta));
    if !linalg::all_finite(&matrix) {
        return Err(Error::NonFinite);
    }
    let norm = linalg::opnorm(&matrix)?;
    enforce_norm_bound(norm, lambda)?;
    let defect = group
        .generator()
        .map(|h| generator_defect(&h, lambda, &matrix))
        .transpose()?;
    Ok(ResolventOperator {
        grid: group.grid().clone(),
        lambda,
        matrix,
        source: ResolventSource::LaplaceOfPropagator,
        quadrature: Some(LaplaceQuadrature {
            t_max,
            step: h,
            steps,
            nodes,
        }),
        norm,
        defect,
        step_unitary: Some(step.unitary),
        order_used: step.order_used,
        tail_estimate: step.tail_estimate,
    })
}

/// `(H − iλ)^{−1}` by a dense solve, for a Hermitian weighted `H`.
pub fn direct_resolvent(lambda: f64, h: &KernelMatrix) -> Result<ResolventOperator> {
    check_lambda(lambda)?;
    let mut shifted = h.matrix.clone();
    for k in 0..shifted.nrows() {
        shifted[(k, k)] -= C64::new(0.0, lambda);
    }
    let matrix = linalg::inverse(&shifted)?;
    let norm = linalg::opnorm(&matrix)?;
    enforce_norm_bound(norm, lambda)?;
    let defect = Some(generator_defect(&h.matrix, lambda, &matrix)?);
    Ok(ResolventOperator {
        grid: h.grid.clone(),
        lambda,
        matrix,
        source: ResolventSource::DirectInverse,
        quadrature: None,
        norm,
        defect,
        step_unitary: None,
        order_used: 0,
        tail_estimate: 0.0,
    })
}

/// Default Laplace cutoff `t_max = 20/|λ|`.
pub fn default_t_max(lambda: f64) -> f64 {
    MIN_DAMPING / lambda.abs()
}

/// `‖R_δ(λ) − R_ε(λ)‖` along a decreasing ε ladder.
///
/// Each ε also gets a report-only row comparing the difference with the
/// bound implied by the single-step propagator difference,
/// `‖ΔU(h)‖·(1/(hλ²) + 1/|λ|)`.
#[allow(clippy::too_many_arguments)]
pub fn norm_resolvent_convergence(
    lambda: f64,
    cfg: &DeltaConfig,
    profile: &Profile,
    eps_list: &[f64],
    grid: &MomentumGrid,
    t_max: f64,
    nodes: Option<usize>,
    opts: &DysonOptions,
) -> Result<ConvergenceReport> {
    check_ladder(eps_list)?;
    let target = resolvent_from_propagator(lambda, &DysonGroup::delta(cfg, grid, opts), t_max, nodes)?;
    let quad = target.quadrature.expect("Laplace resolvent");
    let mut norms = Vec::with_capacity(eps_list.len());
    let mut orders_used = Vec::new();
    let mut tail_estimates = Vec::new();
    let mut checks = Vec::new();
    for &eps in eps_list {
        let group = DysonGroup::mollified(cfg, profile, eps, grid, opts)?;
        let r = resolvent_from_propagator(lambda, &group, t_max, nodes)?;
        let diff = linalg::opnorm(&(&target.matrix - &r.matrix))?;
        let du = linalg::opnorm(
            &(target.step_unitary.as_ref().expect("Laplace step") - r.step_unitary.as_ref().expect("Laplace step")),
        )?;
        let h = quad.step;
        checks.push(Check {
            name: format!("step bound eps={eps}"),
            lhs: diff,
            rhs: du * (1.0 / (h * lambda * lambda) + 1.0 / lambda.abs()),
            report_only: true,
        });
        norms.push(diff);
        orders_used.push(r.order_used.max(target.order_used));
        tail_estimates.push(r.tail_estimate + target.tail_estimate);
    }
    let smallest = *eps_list.last().unwrap();
    let fine = grid.refined()?;
    let a = resolvent_from_propagator(lambda, &DysonGroup::delta(cfg, &fine, opts), t_max, nodes)?;
    let b = resolvent_from_propagator(
        lambda,
        &DysonGroup::mollified(cfg, profile, smallest, &fine, opts)?,
        t_max,
        nodes,
    )?;
    let floor = (linalg::opnorm(&(&a.matrix - &b.matrix))? - norms.last().unwrap()).abs();
    Ok(ConvergenceReport {
        parameter_name: "epsilon".into(),
        values: eps_list.to_vec(),
        verdict: monotone_verdict(&norms, floor),
        norms,
        floor,
        grid_n: grid.n_points,
        p_max: grid.p_max,
        t: t_max,
        config: config_digest("resolvent", cfg, profile.name()),
        orders_used,
        tail_estimates,
        sanity: None,
        laplace: Some(LaplaceMeta {
            lambda,
            t_max,
            laplace_nodes: quad.nodes,
        }),
        checks,
    })
}

/// `ψ ⟨φ, ·⟩`-style rank-one operator `T = ⟨ψ, ·⟩ φ` as a weighted matrix.
pub fn rank_one(psi: &StateVector, phi: &StateVector) -> Result<KernelMatrix> {
    psi.grid.check(&phi.grid)?;
    let a = psi.in_momentum()?;
    let b = phi.in_momentum()?;
    let w = psi.grid.spacing;
    let n = psi.grid.n_points;
    let matrix = Array2::from_shape_fn((n, n), |(j, k)| b.amplitudes[j] * a.amplitudes[k].conj() * w);
    Ok(KernelMatrix {
        grid: psi.grid.clone(),
        matrix,
    })
}

fn momentum_norm(v: &Array1<C64>, w: f64) -> f64 {
    (w * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `‖U(t₀+dt)* T U(t₀+dt) − U(t₀)* T U(t₀)‖` for the rank-one `T = ⟨ψ,·⟩φ`.
///
/// Every row also records `‖U(t)*T − U(t₀)*T‖ ≤ ‖ψ‖·‖U(t)*φ − U(t₀)*φ‖`.
pub fn finite_rank_continuity(
    group: &dyn UnitaryGroup,
    psi: &StateVector,
    phi: &StateVector,
    t0: f64,
    dt_list: &[f64],
) -> Result<ConvergenceReport> {
    for s in [psi, phi] {
        if (s.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::arg("continuity probes must be normalised"));
        }
    }
    if dt_list.is_empty() || dt_list.iter().any(|d| !(*d >= 0.0)) || dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("dt values must be non-negative and strictly decreasing"));
    }
    let grid = group.grid();
    let t = rank_one(psi, phi)?;
    let phi_m = phi.in_momentum()?;
    debug_assert_eq!(phi_m.representation, Representation::Momentum);
    let w = grid.spacing;
    let conj_at = |u: &Array2<C64>| -> (Array2<C64>, Array2<C64>, Array1<C64>) {
        let ua = linalg::adjoint(u);
        let left = ua.dot(&t.matrix);
        let full = left.dot(u);
        let moved = ua.dot(&phi_m.amplitudes);
        (full, left, moved)
    };
    let (base, base_left, base_phi) = conj_at(&group.at(t0)?);
    let mut norms = Vec::with_capacity(dt_list.len());
    let mut checks = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let (full, left, moved) = conj_at(&group.at(t0 + dt)?);
        norms.push(linalg::opnorm(&(&full - &base))?);
        checks.push(Check {
            name: format!("triangle dt={dt}"),
            lhs: linalg::opnorm(&(&left - &base_left))?,
            rhs: psi.norm() * momentum_norm(&(&moved - &base_phi), w) + 1e-10,
            report_only: false,
        });
    }
    let floor = 2.0 * group.accuracy();
    let verdict = monotone_verdict(&norms, floor) && checks.iter().all(Check::holds);
    Ok(ConvergenceReport {
        parameter_name: "dt".into(),
        values: dt_list.to_vec(),
        verdict,
        norms,
        floor,
        grid_n: grid.n_points,
        p_max: grid.p_max,
        t: t0,
        config: String::new(),
        orders_used: Vec::new(),
        tail_estimates: Vec::new(),
        sanity: None,
        laplace: None,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::propagator::hamiltonian_matrix;

    #[test]
    fn free_resolvent_matches_diagonal() {
        let g = make_grid(64, 8.0).unwrap();
        for lambda in [1.0, -0.5, 2.0] {
            let r = resolvent_from_propagator(lambda, &FreeGroup::new(&g), default_t_max(lambda), None).unwrap();
            for (j, p) in g.nodes.iter().enumerate() {
                let exact = C64::new(1.0, 0.0) / C64::new(p * p, -lambda);
                assert!((r.matrix[(j, j)] - exact).norm() < 1e-8, "{lambda} {p}");
            }
            assert!(r.defect.unwrap() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = make_grid(16, 4.0).unwrap();
        let free = FreeGroup::new(&g);
        assert!(resolvent_from_propagator(0.0, &free, 20.0, None).is_err());
        assert!(resolvent_from_propagator(1.0, &free, 5.0, None).is_err());
    }

    #[test]
    fn laplace_matches_direct_inverse_for_dyson_group() {
        let g = make_grid(32, 6.0).unwrap();
        let cfg = DeltaConfig::new(vec![(1.0, 0.4)], 0.0).unwrap();
        let opts = DysonOptions::default();
        let group = DysonGroup::delta(&cfg, &g, &opts);
        let lap = resolvent_from_propagator(1.0, &group, 20.0, None).unwrap();
        let direct = direct_resolvent(1.0, &hamiltonian_matrix(&delta_transform(&cfg), &g)).unwrap();
        let err = linalg::opnorm(&(&lap.matrix - &direct.matrix)).unwrap();
        assert!(err < 1e-6, "{err}");
        assert!(lap.defect.unwrap() < 1e-5);
    }

    #[test]
    fn rank_one_norm_is_product_of_norms() {
        let g = make_grid(64, 8.0).unwrap();
        let a = StateVector::gaussian(&g, 0.0, 1.0, 0.0);
        let b = StateVector::gaussian(&g, 1.0, 0.7, 1.0);
        let t = rank_one(&a, &b).unwrap();
        let n = linalg::opnorm(&t.matrix).unwrap();
        assert!((n - 1.0).abs() < 1e-10, "{n}");
    }
}
