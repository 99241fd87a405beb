//! Full propagators `U(t) = e^{−itH₀} Γ(t)` in momentum representation, a
//! split-step reference integrator and the mollifier convergence studies.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::dyson::{self, assemble_with_convention, dyson_sum_with, Engine, SignConvention, RESOLVED_CONVENTION};
use crate::grid::{make_grid, KernelMatrix, MomentumGrid, Representation, StateVector};
use crate::linalg;
use crate::potentials::{delta_transform, mollified_transform, truncate_l1, DeltaConfig, L1Source, PotentialTransform, Profile};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    DysonDelta,
    DysonMollified,
    ReferenceSplitStep,
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub grid: MomentumGrid,
    pub t: f64,
    /// Weighted operator acting on momentum amplitudes.
    pub matrix: Array2<C64>,
    pub provenance: Provenance,
    pub config_digest: String,
    /// Measured `‖U*U − I‖`.
    pub unitarity_defect: f64,
    /// Declared bound on the defect.
    pub tolerance: f64,
    pub order_used: usize,
    pub tail_estimate: f64,
}

impl Propagator {
    pub fn as_kernel(&self) -> KernelMatrix {
        KernelMatrix {
            grid: self.grid.clone(),
            matrix: self.matrix.clone(),
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.as_kernel().apply(psi)
    }

    /// `U*`, i.e. the propagator for `−t` up to discretisation error.
    pub fn adjoint(&self) -> Array2<C64> {
        linalg::adjoint(&self.matrix)
    }

    /// Apply `steps` times, i.e. `U(t)^steps ψ = U(steps·t) ψ`.
    pub fn evolve(&self, psi: &StateVector, steps: usize) -> Result<StateVector> {
        let mut cur = psi.in_momentum()?;
        for _ in 0..steps {
            cur.amplitudes = self.matrix.dot(&cur.amplitudes);
        }
        Ok(cur)
    }
}

/// Allowance for time-quadrature error in the declared unitarity tolerance.
/// The default panel layout integrates to about `1e-10`.
pub const QUADRATURE_SLACK: f64 = 1e-8;

/// Options for Dyson-based builds.
#[derive(Debug, Clone, Copy)]
pub struct DysonOptions {
    pub tol: f64,
    pub n_max: usize,
    /// Total Gauss nodes on `[0, t]`; `None` picks a resolving default.
    pub time_nodes: Option<usize>,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            n_max: 40,
            time_nodes: None,
        }
    }
}

impl DysonOptions {
    pub(crate) fn nodes_for(&self, t: f64, grid: &MomentumGrid) -> usize {
        self.time_nodes.unwrap_or_else(|| dyson::default_time_nodes(t, grid))
    }
}

/// `e^{−itp²}` as a diagonal operator.
pub fn free_phase(t: f64, grid: &MomentumGrid) -> KernelMatrix {
    KernelMatrix::diagonal(grid, |p| C64::from_polar(1.0, -t * p * p))
}

/// The discrete Hamiltonian `diag(p²) + V` in weighted form.
pub fn hamiltonian_matrix(v: &PotentialTransform, grid: &MomentumGrid) -> KernelMatrix {
    let engine = Engine::new(v, grid);
    let mut h = engine.vd;
    for (j, d) in engine.d.iter().enumerate() {
        h[(j, j)] += d;
    }
    KernelMatrix {
        grid: grid.clone(),
        matrix: h,
    }
}

/// Ascending eigenvalues of the discrete Hamiltonian `diag(p²) + V`.
pub fn hamiltonian_spectrum(v: &PotentialTransform, grid: &MomentumGrid) -> Result<Vec<f64>> {
    let (vals, _) = linalg::eigh(&hamiltonian_matrix(v, grid).matrix)?;
    Ok(vals.to_vec())
}

pub fn config_digest(kind: &str, cfg: &DeltaConfig, extra: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_bytes());
    hasher.update(b"\n");
    hasher.update(extra.as_bytes());
    hasher.update(b"\n");
    hasher.update(cfg.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

/// `U = e^{−itD} Γ` from precomputed engine data.
pub(crate) fn propagate_with(
    engine: &Engine,
    t: f64,
    opts: &DysonOptions,
    provenance: Provenance,
    digest: String,
) -> Result<Propagator> {
    let grid = &engine.grid;
    let series = dyson_sum_with(engine, t, opts.tol, opts.n_max, opts.nodes_for(t, grid))?;
    let gamma = dyson::assemble_interaction_operator(&series)?;
    let mut matrix = gamma.matrix;
    let phases: Vec<C64> = engine.d.iter().map(|&d| C64::from_polar(1.0, -t * d)).collect();
    linalg::scale_rows(&mut matrix, &phases);
    let unitarity_defect = linalg::unitarity_defect(&matrix)?;
    Ok(Propagator {
        grid: grid.clone(),
        t,
        matrix,
        provenance,
        config_digest: digest,
        unitarity_defect,
        tolerance: 10.0 * (series.tail_estimate + QUADRATURE_SLACK),
        order_used: if engine.is_zero() { 0 } else { series.orders.len() },
        tail_estimate: series.tail_estimate,
    })
}

pub fn build_propagator(
    t: f64,
    v: &PotentialTransform,
    grid: &MomentumGrid,
    opts: &DysonOptions,
    provenance: Provenance,
    digest: String,
) -> Result<Propagator> {
    propagate_with(&Engine::new(v, grid), t, opts, provenance, digest)
}

pub fn build_delta_propagator(t: f64, cfg: &DeltaConfig, grid: &MomentumGrid, opts: &DysonOptions) -> Result<Propagator> {
    build_propagator(
        t,
        &delta_transform(cfg),
        grid,
        opts,
        Provenance::DysonDelta,
        config_digest("delta", cfg, ""),
    )
}

pub fn build_mollified_propagator(
    t: f64,
    cfg: &DeltaConfig,
    profile: &Profile,
    epsilon: f64,
    grid: &MomentumGrid,
    opts: &DysonOptions,
) -> Result<Propagator> {
    let v = mollified_transform(cfg, profile, epsilon)?;
    build_propagator(
        t,
        &v,
        grid,
        opts,
        Provenance::DysonMollified,
        config_digest("mollified", cfg, &format!("{} {epsilon:e}", profile.name())),
    )
}

/// Strang splitting `(e^{−iτD/2} e^{−iτV} e^{−iτD/2})^steps` with `τ = t/steps`.
///
/// `V` is assembled from samples of `Σ α_i W_ε(x − x_i)` on a 16× finer
/// position lattice and a discrete Fourier transform, independently of the
/// quadrature used by the Dyson builds.
pub fn reference_propagator(
    t: f64,
    cfg: &DeltaConfig,
    profile: &Profile,
    epsilon: f64,
    grid: &MomentumGrid,
    steps: usize,
) -> Result<Propagator> {
    if steps == 0 {
        return Err(Error::arg("steps must be positive"));
    }
    let digest = config_digest("reference", cfg, &format!("{} {epsilon:e} {steps}", profile.name()));
    let v = mollified_transform(cfg, profile, epsilon)?;
    let free = free_phase(t, grid).matrix;
    if cfg.is_empty() {
        return Ok(Propagator {
            grid: grid.clone(),
            t,
            matrix: free,
            provenance: Provenance::ReferenceSplitStep,
            config_digest: digest,
            unitarity_defect: 0.0,
            tolerance: 1e-12,
            order_used: 0,
            tail_estimate: 0.0,
        });
    }
    let vd = sampled_potential_matrix(&v, grid, 16);
    let tau = t / steps as f64;
    let half: Vec<C64> = grid.nodes.iter().map(|p| C64::from_polar(1.0, -0.5 * tau * p * p)).collect();
    let mut step = linalg::expm_hermitian(&vd, tau)?;
    linalg::scale_rows(&mut step, &half);
    linalg::scale_cols(&mut step, &half);
    let matrix = linalg::matpow(&step, steps);
    let unitarity_defect = linalg::unitarity_defect(&matrix)?;
    Ok(Propagator {
        grid: grid.clone(),
        t,
        matrix,
        provenance: Provenance::ReferenceSplitStep,
        config_digest: digest,
        unitarity_defect,
        tolerance: 1e-8,
        order_used: 0,
        tail_estimate: 0.0,
    })
}

/// Weighted `V_jk = Δp Ṽ((j−k)Δp)/√(2π)` with `Ṽ` from lattice samples of
/// the position-space potential.
fn sampled_potential_matrix(v: &PotentialTransform, grid: &MomentumGrid, oversample: usize) -> Array2<C64> {
    let n = grid.n_points;
    let m = oversample * n;
    let dx = grid.dx() / oversample as f64;
    let half_box = 0.5 * grid.box_length();
    let mut buf: Vec<C64> = (0..m)
        .map(|k| {
            let x = (k as f64 - (m / 2) as f64) * dx;
            let mut w = 0.0;
            for term in &v.terms {
                if let crate::potentials::Term::Smeared { alpha, mollifier } = term {
                    // Periodic image closest to the box.
                    let mut y = x - mollifier.center;
                    y -= (y / (2.0 * half_box)).round() * 2.0 * half_box;
                    w += alpha * mollifier.value(mollifier.center + y);
                }
            }
            C64::new(w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    // Σ_k W_k e^{−i eΔp (k − M/2)dx} = (−1)^e FFT[e mod M].
    let c = grid.spacing * dx / (2.0 * PI);
    let symbol = |e: isize| {
        let sign = if e.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[e.rem_euclid(m as isize) as usize] * (sign * c)
    };
    Array2::from_shape_fn((n, n), |(j, k)| symbol(j as isize - k as isize))
}

/// `U* A U`.
pub fn conjugate(u: &Propagator, a: &KernelMatrix) -> Result<KernelMatrix> {
    if u.grid != a.grid {
        return Err(Error::GridMismatch);
    }
    Ok(KernelMatrix {
        grid: u.grid.clone(),
        matrix: u.adjoint().dot(&a.matrix).dot(&u.matrix),
    })
}

/// Relative residual `‖(U(h)ψ − ψ)/h + iHψ‖ / ‖Hψ‖` of the short-time
/// propagator assembled with `convention`.
pub fn generator_check(
    convention: SignConvention,
    v: &PotentialTransform,
    grid: &MomentumGrid,
    psi: &StateVector,
    h: f64,
) -> Result<f64> {
    let engine = Engine::new(v, grid);
    let n_nodes = dyson::default_time_nodes(h, grid);
    let series = dyson_sum_with(&engine, h, 1e-14, 40, n_nodes)?;
    let mut u = assemble_with_convention(&series, convention).matrix;
    let phases: Vec<C64> = engine.d.iter().map(|&d| C64::from_polar(1.0, -h * d)).collect();
    linalg::scale_rows(&mut u, &phases);
    let psi = psi.in_momentum()?;
    let x = &psi.amplitudes;
    let mut hpsi = engine.vd.dot(x);
    for (z, (d, xi)) in hpsi.iter_mut().zip(engine.d.iter().zip(x.iter())) {
        *z += d * xi;
    }
    let diff: Array1<C64> = (u.dot(x) - x) / h + hpsi.mapv(|z| z * C64::new(0.0, 1.0));
    let norm = |a: &Array1<C64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(norm(&diff) / norm(&hpsi))
}

/// Outcome of comparing both conventions with [`generator_check`].
#[derive(Debug, Clone, Copy)]
pub struct ConventionGate {
    pub selected: SignConvention,
    pub selected_residual: f64,
    pub rejected_residual: f64,
}

impl ConventionGate {
    /// The winner must beat the loser by at least a factor of ten and agree
    /// with the recorded constant.
    pub fn decisive(&self) -> bool {
        self.selected == RESOLVED_CONVENTION && self.rejected_residual >= 10.0 * self.selected_residual
    }
}

/// Run the generator check for a smooth potential and Gaussian state on
/// grid `(256, 32)` at `h = 10⁻³` and pick the better convention.
pub fn select_convention() -> Result<ConventionGate> {
    let grid = make_grid(256, 32.0)?;
    let cfg = DeltaConfig::single(1.0, 0.0)?;
    let v = mollified_transform(&cfg, &Profile::Bump, 0.2)?;
    let psi = StateVector::gaussian(&grid, 0.3, 1.0, 1.0);
    let h = 1e-3;
    let plus = generator_check(SignConvention::PlusI, &v, &grid, &psi, h)?;
    let minus = generator_check(SignConvention::MinusI, &v, &grid, &psi, h)?;
    let (selected, selected_residual, rejected_residual) = if plus <= minus {
        (SignConvention::PlusI, plus, minus)
    } else {
        (SignConvention::MinusI, minus, plus)
    };
    Ok(ConventionGate {
        selected,
        selected_residual,
        rejected_residual,
    })
}

/// An auxiliary inequality `lhs ≤ rhs` recorded alongside a study.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Report-only checks do not affect the verdict.
    pub report_only: bool,
}

impl Check {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// A study repeated at twice the cutoff with the spacing kept.
#[derive(Debug, Clone, Copy)]
pub struct SanityRow {
    pub grid_n: usize,
    pub p_max: f64,
    pub value: f64,
    pub norm: f64,
}

/// Laplace metadata for resolvent studies.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceMeta {
    pub lambda: f64,
    pub t_max: f64,
    pub laplace_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub parameter_name: String,
    pub values: Vec<f64>,
    pub norms: Vec<f64>,
    /// Resolution-doubling floor estimate.
    pub floor: f64,
    pub verdict: bool,
    pub grid_n: usize,
    pub p_max: f64,
    pub t: f64,
    pub config: String,
    pub orders_used: Vec<usize>,
    pub tail_estimates: Vec<f64>,
    pub sanity: Option<SanityRow>,
    pub laplace: Option<LaplaceMeta>,
    pub checks: Vec<Check>,
}

/// Norms must shrink (5% slack) at every step until they come within
/// three times the floor, and the sequence must decrease overall.
pub fn monotone_verdict(norms: &[f64], floor: f64) -> bool {
    if norms.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let settled = |x: f64| x <= 3.0 * floor;
    for w in norms.windows(2) {
        if !settled(w[0]) && w[1] > 1.05 * w[0] {
            return false;
        }
    }
    match (norms.first(), norms.last()) {
        (Some(&a), Some(&b)) if norms.len() >= 2 => settled(a) || b < a,
        _ => true,
    }
}

pub(crate) fn check_ladder(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(Error::arg("at least three epsilon values are required"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("epsilon values must be positive and strictly decreasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StudyOptions {
    /// Also repeat the smallest ε at doubled cutoff.
    pub pmax_sanity: bool,
}

fn difference_norm(a: &Propagator, b: &Propagator) -> Result<f64> {
    linalg::opnorm(&(&a.matrix - &b.matrix))
}

/// `‖U_δ(t) − U_ε(t)‖` along a decreasing ε ladder.
pub fn convergence_study(
    t: f64,
    cfg: &DeltaConfig,
    profile: &Profile,
    eps_list: &[f64],
    grid: &MomentumGrid,
    opts: &DysonOptions,
    study: &StudyOptions,
) -> Result<ConvergenceReport> {
    check_ladder(eps_list)?;
    let target = build_delta_propagator(t, cfg, grid, opts)?;
    let mut norms = Vec::with_capacity(eps_list.len());
    let mut orders_used = Vec::new();
    let mut tail_estimates = Vec::new();
    for &eps in eps_list {
        let u = build_mollified_propagator(t, cfg, profile, eps, grid, opts)?;
        norms.push(difference_norm(&target, &u)?);
        orders_used.push(u.order_used.max(target.order_used));
        tail_estimates.push(u.tail_estimate + target.tail_estimate);
    }
    let smallest = *eps_list.last().unwrap();
    let at = |g: &MomentumGrid| -> Result<f64> {
        let a = build_delta_propagator(t, cfg, g, opts)?;
        let b = build_mollified_propagator(t, cfg, profile, smallest, g, opts)?;
        difference_norm(&a, &b)
    };
    let floor = (at(&grid.refined()?)? - norms.last().unwrap()).abs();
    let sanity = if study.pmax_sanity {
        let wide = grid.widened()?;
        Some(SanityRow {
            grid_n: wide.n_points,
            p_max: wide.p_max,
            value: smallest,
            norm: at(&wide)?,
        })
    } else {
        None
    };
    Ok(ConvergenceReport {
        parameter_name: "epsilon".into(),
        values: eps_list.to_vec(),
        verdict: monotone_verdict(&norms, floor),
        norms,
        floor,
        grid_n: grid.n_points,
        p_max: grid.p_max,
        t,
        config: config_digest("study", cfg, profile.name()),
        orders_used,
        tail_estimates,
        sanity,
        laplace: None,
        checks: Vec::new(),
    })
}

/// Propagators for `ℓ¹` sources truncated at two tail levels.
#[derive(Debug, Clone, Copy)]
pub struct L1Stability {
    pub kept_coarse: usize,
    pub kept_fine: usize,
    pub tail_gap: f64,
    pub difference: f64,
    /// `difference / (tail_gap·|t|)`.
    pub constant: f64,
}

pub fn l1_stability(
    t: f64,
    source: &L1Source,
    delta_coarse: f64,
    delta_fine: f64,
    grid: &MomentumGrid,
    opts: &DysonOptions,
) -> Result<L1Stability> {
    let coarse = truncate_l1(source, delta_coarse)?;
    let fine = truncate_l1(source, delta_fine)?;
    let a = build_delta_propagator(t, &coarse, grid, opts)?;
    let b = build_delta_propagator(t, &fine, grid, opts)?;
    let difference = difference_norm(&a, &b)?;
    let tail_gap = (coarse.tail_bound() - fine.tail_bound()).abs();
    Ok(L1Stability {
        kept_coarse: coarse.len(),
        kept_fine: fine.len(),
        tail_gap,
        difference,
        constant: difference / (tail_gap * t.abs()),
    })
}

/// Probability mass of a momentum-space state on `p > 0`.
pub fn right_moving_fraction(psi: &StateVector) -> Result<f64> {
    let m = psi.in_momentum()?;
    debug_assert_eq!(m.representation, Representation::Momentum);
    let total: f64 = m.amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let right: f64 = m
        .amplitudes
        .iter()
        .zip(&m.grid.nodes)
        .filter(|(_, &p)| p > 0.0)
        .map(|(z, _)| z.norm_sqr())
        .sum();
    Ok(right / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_phase_examples() {
        let g = make_grid(8, 4.0).unwrap();
        let id = free_phase(0.0, &g);
        assert!((&id.matrix - &linalg::eye(8)).iter().all(|z| z.norm() == 0.0));
        let round = free_phase(0.7, &g).compose(&free_phase(-0.7, &g)).unwrap();
        assert!((&round.matrix - &linalg::eye(8)).iter().all(|z| z.norm() < 1e-14));
        let u = free_phase(PI / 4.0, &g);
        let j = g.nodes.iter().position(|&p| p == 2.0).unwrap();
        assert!((u.matrix[(j, j)] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn empty_config_is_free_evolution() {
        let g = make_grid(32, 4.0).unwrap();
        let u = build_delta_propagator(0.3, &DeltaConfig::empty(), &g, &DysonOptions::default()).unwrap();
        assert!((&u.matrix - &free_phase(0.3, &g).matrix).iter().all(|z| z.norm() < 1e-15));
        let r = reference_propagator(0.3, &DeltaConfig::empty(), &Profile::Bump, 0.2, &g, 8).unwrap();
        assert_eq!(r.matrix, free_phase(0.3, &g).matrix);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = make_grid(32, 4.0).unwrap();
        let cfg = DeltaConfig::single(1.0, 0.0).unwrap();
        let u = build_delta_propagator(0.0, &cfg, &g, &DysonOptions::default()).unwrap();
        assert_eq!(u.matrix, linalg::eye(32));
    }

    #[test]
    fn small_grid_matches_matrix_exponential() {
        let g = make_grid(64, 8.0).unwrap();
        let cfg = DeltaConfig::new(vec![(1.0, -0.5), (-0.5, 0.8)], 0.0).unwrap();
        let v = delta_transform(&cfg);
        let t = 0.2;
        let opts = DysonOptions {
            tol: 1e-12,
            ..DysonOptions::default()
        };
        let u = build_delta_propagator(t, &cfg, &g, &opts).unwrap();
        let h = hamiltonian_matrix(&v, &g);
        let exact = linalg::expm_hermitian(&h.matrix, t).unwrap();
        let err = linalg::opnorm(&(&u.matrix - &exact)).unwrap();
        assert!(err < 1e-8, "{err}");
        assert!(u.unitarity_defect <= u.tolerance);
    }

    #[test]
    fn sampled_potential_matches_quadrature_transform() {
        let g = make_grid(64, 16.0).unwrap();
        let cfg = DeltaConfig::new(vec![(1.0, 0.3)], 0.0).unwrap();
        let v = mollified_transform(&cfg, &Profile::Bump, 0.5).unwrap();
        let sampled = sampled_potential_matrix(&v, &g, 16);
        let direct = Engine::new(&v, &g).vd;
        let err = (&sampled - &direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn verdict_rule() {
        assert!(monotone_verdict(&[1.0, 0.5, 0.25, 0.12], 0.0));
        assert!(monotone_verdict(&[1.0, 1.04, 0.5], 0.0));
        assert!(!monotone_verdict(&[1.0, 1.2, 0.5], 0.0));
        assert!(monotone_verdict(&[1.0, 0.1, 0.011, 0.012], 0.005));
        assert!(!monotone_verdict(&[1.0, 1.0], 0.0));
        assert!(!monotone_verdict(&[1.0, f64::NAN], 0.0));
    }

    #[test]
    fn ladder_validation() {
        let g = make_grid(16, 4.0).unwrap();
        let cfg = DeltaConfig::single(1.0, 0.0).unwrap();
        let opts = DysonOptions::default();
        for bad in [&[0.4, 0.2][..], &[0.1, 0.2, 0.05][..], &[0.4, 0.2, 0.0][..]] {
            assert!(convergence_study(0.1, &cfg, &Profile::Bump, bad, &g, &opts, &StudyOptions::default()).is_err());
        }
    }
}
