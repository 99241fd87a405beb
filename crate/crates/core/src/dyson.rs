//! Fourier-domain Dyson kernels.
//!
//! With `θ(p,q) = p² − q²` the first-order kernel is
//!
//! ```text
//! K_t,1(p,q) = (e^{itθ} − 1)/(iθ) · Ṽ(p−q)/√(2π)
//! ```
//!
//! and order `n` follows from order `n−1` by
//!
//! ```text
//! K_t,n(p,q) = ∫_0^t ds ∫ dz K_s,n−1(p,z) e^{is(z²−q²)} Ṽ(z−q)/√(2π).
//! ```
//!
//! In weighted form this is `A_n(t) = ∫_0^t A_{n−1}(s) E(s) V E(s)* ds` with
//! `E(s) = diag(e^{isp²})` and `V_jk = Δp Ṽ(p_j − p_k)/√(2π)`, a Toeplitz
//! matrix. The recursion integrates `V` on the right, so `Σ iⁿ K_n(t)` is the
//! anti-time-ordered series and the interaction-picture propagator is its
//! adjoint: `Γ(t) = (𝟙 + Σ iⁿ K_t,n)*`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::parallel::prelude::*;
use ndarray::linalg::{general_mat_mul, general_mat_vec_mul};
use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, ArrayViewMut2, Axis, Zip};
use rustfft::{Fft, FftPlanner};

use crate::grid::{schur_of_weighted, KernelMatrix, MomentumGrid};
use crate::linalg;
use crate::potentials::PotentialTransform;
use crate::quadrature::{panels_for, Collocation, TimeQuadrature, PANEL_ORDER};
use crate::{Error, Result, C64};

/// Below this `|sθ|` the removable singularity is evaluated by its series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Largest Schur-bound ratio between consecutive orders accepted as a
/// geometric tail.
pub const CERTIFY_RATIO: f64 = 0.75;

/// Orders computed before the first certification attempt.
const INITIAL_ORDERS: usize = 12;

/// Phase multiplying order `n` when the series is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `(−i)ⁿ`
    MinusI,
    /// `iⁿ`
    PlusI,
}

impl SignConvention {
    pub fn phase(self) -> C64 {
        match self {
            SignConvention::MinusI => C64::new(0.0, -1.0),
            SignConvention::PlusI => C64::new(0.0, 1.0),
        }
    }

    pub fn other(self) -> Self {
        match self {
            SignConvention::MinusI => SignConvention::PlusI,
            SignConvention::PlusI => SignConvention::MinusI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignConvention::MinusI => "minus_i",
            SignConvention::PlusI => "plus_i",
        }
    }
}

/// The convention selected by the generator check (see
/// `propagator::generator_check`); fixed, not configurable.
pub const RESOLVED_CONVENTION: SignConvention = SignConvention::PlusI;

/// `∫_0^s e^{iθu} du = (e^{isθ} − 1)/(iθ)`, accurate through `θ → 0`.
pub fn phase_integral(s: f64, theta: f64) -> C64 {
    let x = s * theta;
    if x.abs() < SERIES_THRESHOLD {
        return C64::new(s * (1.0 - x * x / 6.0), s * x / 2.0);
    }
    // (e^{ix} − 1)/(ix) = sin x / x + i·2sin²(x/2)/x, free of cancellation.
    let half = (0.5 * x).sin();
    C64::new(s * x.sin() / x, s * 2.0 * half * half / x)
}

/// How `M ↦ M·V` is evaluated.
enum Coupling {
    Zero,
    /// `V = A·B` with `A_jm = e^{−ip_j x_m}`, `B_mk = c_m conj(A_km)`.
    LowRank { a: Array2<C64>, b: Array2<C64> },
    /// Row-wise circular convolution of length `2N`.
    Toeplitz {
        spectrum: Arc<Vec<C64>>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
}

/// Precomputed data for one potential on one grid.
pub(crate) struct Engine {
    pub grid: MomentumGrid,
    /// `p_j²`
    pub d: Vec<f64>,
    /// Weighted potential matrix `V`.
    pub vd: Array2<C64>,
    coupling: Coupling,
}

impl Engine {
    pub fn new(v: &PotentialTransform, grid: &MomentumGrid) -> Self {
        let n = grid.n_points;
        let d: Vec<f64> = grid.nodes.iter().map(|p| p * p).collect();
        if v.is_zero() {
            return Self {
                grid: grid.clone(),
                d,
                vd: Array2::zeros((n, n)),
                coupling: Coupling::Zero,
            };
        }
        let dp = grid.spacing;
        let c = dp / (2.0 * PI).sqrt();
        // symbol[e + N − 1] = V at offset j − k = e.
        let symbol: Vec<C64> = (0..2 * n - 1)
            .map(|i| v.eval((i as f64 - (n as f64 - 1.0)) * dp) * c)
            .collect();
        let vd = Array2::from_shape_fn((n, n), |(j, k)| symbol[j + n - 1 - k]);

        let coupling = match v.delta_centers() {
            Some(centers) if centers.len() * 4 <= n => {
                let a = Array2::from_shape_fn((n, centers.len()), |(j, m)| {
                    C64::from_polar(1.0, -grid.nodes[j] * centers[m].1)
                });
                let b = Array2::from_shape_fn((centers.len(), n), |(m, k)| {
                    a[(k, m)].conj() * (dp * centers[m].0 / (2.0 * PI))
                });
                Coupling::LowRank { a, b }
            }
            _ => {
                let len = 2 * n;
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(len);
                let inverse = planner.plan_fft_inverse(len);
                // (M V)(r,k) = Σ_j M(r,j) u(k − j) with u(e) = V at offset −e.
                let mut kernel = vec![C64::new(0.0, 0.0); len];
                for e in -(n as isize - 1)..(n as isize) {
                    let idx = e.rem_euclid(len as isize) as usize;
                    kernel[idx] = symbol[(n as isize - 1 - e) as usize] / len as f64;
                }
                forward.process(&mut kernel);
                Coupling::Toeplitz {
                    spectrum: Arc::new(kernel),
                    forward,
                    inverse,
                }
            }
        };
        Self {
            grid: grid.clone(),
            d,
            vd,
            coupling,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.coupling, Coupling::Zero)
    }

    /// Weighted first-order kernel at time `s`.
    pub fn first(&self, s: f64) -> Array2<C64> {
        let n = self.grid.n_points;
        let mut out = Array2::zeros((n, n));
        self.first_into(s, out.view_mut());
        out
    }

    fn first_into(&self, s: f64, mut out: ArrayViewMut2<C64>) {
        if self.is_zero() {
            out.fill(C64::new(0.0, 0.0));
            return;
        }
        let d = &self.d;
        Zip::indexed(&mut out).and(&self.vd).par_for_each(|(j, k), o, &v| {
            *o = phase_integral(s, d[j] - d[k]) * v;
        });
    }

    /// `M ↦ M·V` in place.
    fn right_apply(&self, mut m: ArrayViewMut2<C64>) {
        match &self.coupling {
            Coupling::Zero => m.fill(C64::new(0.0, 0.0)),
            Coupling::LowRank { a, b } => {
                let r = m.dot(a).dot(b);
                m.assign(&r);
            }
            Coupling::Toeplitz {
                spectrum,
                forward,
                inverse,
            } => {
                let n = m.ncols();
                let len = 2 * n;
                let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
                m.axis_iter_mut(Axis(0)).into_par_iter().for_each_init(
                    || (vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); scratch_len]),
                    |(buf, scratch), mut row| {
                        for (b, z) in buf.iter_mut().zip(row.iter()) {
                            *b = *z;
                        }
                        buf[n..].iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                        forward.process_with_scratch(buf, scratch);
                        for (b, s) in buf.iter_mut().zip(spectrum.iter()) {
                            *b *= s;
                        }
                        inverse.process_with_scratch(buf, scratch);
                        for (z, b) in row.iter_mut().zip(buf.iter()) {
                            *z = *b;
                        }
                    },
                );
            }
        }
    }

    /// Recursion integrand `M E(s) V E(s)*`, consuming `M`.
    pub fn transfer(&self, mut m: Array2<C64>, s: f64) -> Array2<C64> {
        self.transfer_inplace(m.view_mut(), s);
        m
    }

    fn transfer_inplace(&self, mut m: ArrayViewMut2<C64>, s: f64) {
        let fwd: Vec<C64> = self.d.iter().map(|&x| C64::from_polar(1.0, s * x)).collect();
        scale_cols_view(&mut m, &fwd, false);
        self.right_apply(m.view_mut());
        scale_cols_view(&mut m, &fwd, true);
    }

    /// Integrate orders `1..=n_orders` from 0 to `t` with `panels` Gauss
    /// collocation panels of `order` nodes, all orders carried together.
    ///
    /// Order 1 is exact at every node. For higher orders the integrand
    /// `A_{n−1}(s)E(s)VE(s)*` is collocated on each panel, which gives
    /// stage values of order `n` for the next order and superconvergent
    /// panel-end values.
    ///
    /// `observer(s, w, S)` receives, at each node `s` with quadrature weight
    /// `w`, the partial sum `S = Σ_n phaseⁿ A_n(s)`.
    pub fn march(
        &self,
        t: f64,
        panels: usize,
        order: usize,
        n_orders: usize,
        phase: C64,
        mut observer: Option<&mut dyn FnMut(f64, f64, &Array2<C64>)>,
    ) -> Vec<Array2<C64>> {
        let n = self.grid.n_points;
        let col = Collocation::new(order);
        let h = t / panels as f64;
        let g = col.order();
        let mut ends: Vec<Array2<C64>> = (0..n_orders).map(|_| Array2::zeros((n, n))).collect();
        if self.is_zero() || n_orders == 0 {
            if let Some(obs) = observer.as_mut() {
                let zero = Array2::zeros((n, n));
                for k in 0..panels {
                    for i in 0..g {
                        obs(k as f64 * h + h * col.nodes[i], h * col.weights[i], &zero);
                    }
                }
            }
            return ends;
        }
        let integ = Array2::from_shape_fn((g, g), |(i, j)| C64::new(h * col.integration[i][j], 0.0));
        let quad = Array1::from_shape_fn(g, |j| C64::new(h * col.weights[j], 0.0));
        let mut stages = Array2::<C64>::zeros((g, n * n));
        let mut sums = observer.as_ref().map(|_| Array2::<C64>::zeros((g, n * n)));
        for k in 0..panels {
            let a = k as f64 * h;
            let times: Vec<f64> = col.nodes.iter().map(|c| a + h * c).collect();
            for (i, &s) in times.iter().enumerate() {
                self.first_into(s, square(stages.row_mut(i), n));
            }
            ends[0] = self.first(a + h);
            if let Some(sums) = sums.as_mut() {
                Zip::from(&mut *sums).and(&stages).par_for_each(|acc, &z| *acc = z * phase);
            }
            let mut power = phase;
            for ord in 1..n_orders {
                power *= phase;
                for (i, &s) in times.iter().enumerate() {
                    self.transfer_inplace(square(stages.row_mut(i), n), s);
                }
                // `stages` now holds the integrand at the nodes.
                let start = ends[ord].as_slice().expect("standard layout").to_vec();
                let start = ArrayView1::from(&start[..]);
                let end_flat = ends[ord].view_mut().into_shape_with_order(n * n).expect("standard layout");
                general_mat_vec_mul(C64::new(1.0, 0.0), &stages.t(), &quad, C64::new(1.0, 0.0), &mut { end_flat });
                let mut next = Array2::<C64>::zeros((g, n * n));
                Zip::from(next.rows_mut()).for_each(|mut row| row.assign(&start));
                general_mat_mul(C64::new(1.0, 0.0), &integ, &stages, C64::new(1.0, 0.0), &mut next);
                stages = next;
                if let Some(sums) = sums.as_mut() {
                    sums.scaled_add(power, &stages);
                }
            }
            if let (Some(obs), Some(sums)) = (observer.as_mut(), sums.as_ref()) {
                for i in 0..g {
                    let m = sums.row(i).to_owned().into_shape_with_order((n, n)).expect("contiguous row");
                    obs(times[i], h * col.weights[i], &m);
                }
            }
        }
        ends
    }
}

/// `K_t,1` on the grid.
pub fn kernel_first(t: f64, v: &PotentialTransform, grid: &MomentumGrid) -> KernelMatrix {
    let engine = Engine::new(v, grid);
    KernelMatrix {
        grid: grid.clone(),
        matrix: engine.first(t),
    }
}

/// One step of the recursion by explicit quadrature: `prev_at_nodes[k]` is
/// `K_{·,n−1}` at time `tq.nodes[k]`.
pub fn kernel_next(
    prev_at_nodes: &[KernelMatrix],
    tq: &TimeQuadrature,
    v: &PotentialTransform,
    grid: &MomentumGrid,
) -> Result<KernelMatrix> {
    if prev_at_nodes.len() != tq.len() {
        return Err(Error::arg(format!(
            "{} kernels supplied for {} time nodes",
            prev_at_nodes.len(),
            tq.len()
        )));
    }
    if prev_at_nodes.iter().any(|k| &k.grid != grid) {
        return Err(Error::GridMismatch);
    }
    let engine = Engine::new(v, grid);
    let n = grid.n_points;
    let mut out = Array2::zeros((n, n));
    for ((prev, &s), &w) in prev_at_nodes.iter().zip(&tq.nodes).zip(&tq.weights) {
        let j = engine.transfer(prev.matrix.clone(), s);
        out.scaled_add(C64::new(w, 0.0), &j);
    }
    if !linalg::all_finite(&out) {
        return Err(Error::NonFinite);
    }
    Ok(KernelMatrix {
        grid: grid.clone(),
        matrix: out,
    })
}

/// A summed Dyson series `K_t,1 … K_t,n*`.
#[derive(Debug, Clone)]
pub struct DysonSeries {
    pub grid: MomentumGrid,
    pub t: f64,
    pub orders: Vec<KernelMatrix>,
    pub schur_bounds: Vec<f64>,
    pub sign_convention: SignConvention,
    /// Bound on `Σ_{n>n*} ‖K_t,n‖` from the observed geometric ratio.
    pub tail_estimate: f64,
    pub certified: bool,
    pub time_nodes: usize,
}

/// Default node count: Gauss panels of [`PANEL_ORDER`] nodes resolving the
/// fastest free phase `p_max²|t|`.
pub fn default_time_nodes(t: f64, grid: &MomentumGrid) -> usize {
    PANEL_ORDER * panels_for(t, grid.p_max * grid.p_max)
}

pub(crate) fn panel_layout(time_nodes: usize) -> (usize, usize) {
    if time_nodes < PANEL_ORDER {
        (1, time_nodes.max(1))
    } else {
        (time_nodes.div_ceil(PANEL_ORDER), PANEL_ORDER)
    }
}

/// First order `n ≥ 2` whose Schur bound is at most `tol`, with ratio to the
/// previous order at most [`CERTIFY_RATIO`] and geometric tail below `tol`.
fn certify(bounds: &[f64], tol: f64) -> Option<(usize, f64)> {
    for n in 1..bounds.len() {
        let s = bounds[n];
        if s == 0.0 {
            return Some((n + 1, 0.0));
        }
        let r = s / bounds[n - 1];
        if s <= tol && r <= CERTIFY_RATIO {
            let tail = s * r / (1.0 - r);
            if tail < tol {
                return Some((n + 1, tail));
            }
        }
    }
    None
}

/// Sum the series at time `t` until the tail is certified below `tol`.
pub fn dyson_sum(
    t: f64,
    v: &PotentialTransform,
    grid: &MomentumGrid,
    tol: f64,
    n_max: usize,
    time_nodes: usize,
) -> Result<DysonSeries> {
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if n_max == 0 || time_nodes == 0 {
        return Err(Error::arg("n_max and time_nodes must be positive"));
    }
    if !t.is_finite() {
        return Err(Error::arg("non-finite time"));
    }
    let engine = Engine::new(v, grid);
    dyson_sum_with(&engine, t, tol, n_max, time_nodes)
}

pub(crate) fn dyson_sum_with(
    engine: &Engine,
    t: f64,
    tol: f64,
    n_max: usize,
    time_nodes: usize,
) -> Result<DysonSeries> {
    let grid = &engine.grid;
    let mut series = DysonSeries {
        grid: grid.clone(),
        t,
        orders: vec![KernelMatrix::zeros(grid)],
        schur_bounds: vec![0.0],
        sign_convention: RESOLVED_CONVENTION,
        tail_estimate: 0.0,
        certified: true,
        time_nodes,
    };
    if engine.is_zero() || t == 0.0 {
        return Ok(series);
    }
    let (panels, order) = panel_layout(time_nodes);
    let mut cap = n_max.min(INITIAL_ORDERS);
    loop {
        let ends = engine.march(t, panels, order, cap, RESOLVED_CONVENTION.phase(), None);
        if ends.iter().any(|a| !linalg::all_finite(a)) {
            return Err(Error::NonFinite);
        }
        let bounds: Vec<f64> = ends.iter().map(schur_of_weighted).collect();
        let verdict = certify(&bounds, tol);
        if verdict.is_some() || cap == n_max {
            let (keep, tail, certified) = match verdict {
                Some((keep, tail)) => (keep, tail, true),
                None => {
                    let k = bounds.len();
                    let tail = if k >= 2 {
                        let r = bounds[k - 1] / bounds[k - 2];
                        if r < 1.0 {
                            bounds[k - 1] * r / (1.0 - r)
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        f64::INFINITY
                    };
                    (k, tail, false)
                }
            };
            series.orders = ends
                .into_iter()
                .take(keep)
                .map(|matrix| KernelMatrix {
                    grid: grid.clone(),
                    matrix,
                })
                .collect();
            series.schur_bounds = bounds[..keep].to_vec();
            series.tail_estimate = tail;
            series.certified = certified;
            if certified {
                return Ok(series);
            }
            return Err(Error::TailNotCertified(Box::new(series)));
        }
        cap = (2 * cap).min(n_max);
    }
}

/// `Σ_n phaseⁿ A_n` plus the identity, before taking the adjoint.
fn partial_sum(s: &DysonSeries, convention: SignConvention) -> Array2<C64> {
    let mut sum = linalg::eye(s.grid.n_points);
    let phase = convention.phase();
    let mut power = C64::new(1.0, 0.0);
    for k in &s.orders {
        power *= phase;
        sum.scaled_add(power, &k.matrix);
    }
    sum
}

/// Interaction-picture propagator `Γ(t) = (𝟙 + Σ phaseⁿ K_t,n)*` with the
/// series' own convention.
pub fn assemble_interaction_operator(s: &DysonSeries) -> Result<KernelMatrix> {
    if !s.certified {
        return Err(Error::TailNotCertified(Box::new(s.clone())));
    }
    Ok(assemble_with_convention(s, s.sign_convention))
}

/// As [`assemble_interaction_operator`] with an explicit convention and no
/// certification check. Used to compare conventions.
pub fn assemble_with_convention(s: &DysonSeries, convention: SignConvention) -> KernelMatrix {
    KernelMatrix {
        grid: s.grid.clone(),
        matrix: linalg::adjoint(&partial_sum(s, convention)),
    }
}

/// View a flat row of length `n²` as an `n × n` matrix.
fn square(row: ArrayViewMut1<'_, C64>, n: usize) -> ArrayViewMut2<'_, C64> {
    row.into_shape_with_order((n, n)).expect("contiguous row")
}

fn scale_cols_view(m: &mut ArrayViewMut2<C64>, d: &[C64], conj: bool) {
    m.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        for (z, s) in row.iter_mut().zip(d) {
            *z *= if conj { s.conj() } else { *s };
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potentials::{delta_transform, mollified_transform, DeltaConfig, Profile};

    fn single() -> PotentialTransform {
        delta_transform(&DeltaConfig::single(1.0, 0.0).unwrap())
    }

    #[test]
    fn phase_integral_branches_agree() {
        for theta in [1e-3, 0.7, -3.0, 40.0] {
            let s = 0.37;
            let exact = (C64::new(0.0, s * theta).exp() - 1.0) / C64::new(0.0, theta);
            assert!((phase_integral(s, theta) - exact).norm() < 1e-13);
        }
        let tiny = phase_integral(0.5, 1e-9);
        assert!((tiny - C64::new(0.5, 0.5 * 0.5 * 1e-9 / 2.0)).norm() < 1e-18);
        assert_eq!(phase_integral(0.0, 3.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn diagonal_and_zero_time() {
        let g = make_grid(16, 4.0).unwrap();
        let k = kernel_first(0.5, &single(), &g);
        for j in 0..16 {
            assert!((k.kernel(j, j) - 0.5 / (2.0 * PI)).norm() < 1e-14);
        }
        let k0 = kernel_first(0.0, &single(), &g);
        assert!(k0.matrix.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn toeplitz_and_low_rank_agree_with_dense() {
        let g = make_grid(32, 4.0).unwrap();
        let cfg = DeltaConfig::new(vec![(1.0, -0.4), (0.5, 1.1)], 0.0).unwrap();
        let m = Array2::from_shape_fn((32, 32), |(j, k)| C64::new((j as f64 * 0.3).sin(), (k as f64).cos()));
        for v in [
            delta_transform(&cfg),
            mollified_transform(&cfg, &Profile::Bump, 0.3).unwrap(),
        ] {
            let e = Engine::new(&v, &g);
            let mut fast = m.clone();
            e.right_apply(fast.view_mut());
            let dense = m.dot(&e.vd);
            let err = (&fast - &dense).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn zero_potential_gives_identity() {
        let g = make_grid(32, 4.0).unwrap();
        let s = dyson_sum(0.3, &PotentialTransform::zero(), &g, 1e-8, 10, 16).unwrap();
        assert_eq!(s.orders.len(), 1);
        assert_eq!(s.tail_estimate, 0.0);
        let gamma = assemble_interaction_operator(&s).unwrap();
        assert!((&gamma.matrix - &linalg::eye(32)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn march_matches_explicit_recursion() {
        // Order 2 from the march against kernel_next fed with exact order-1 kernels.
        let g = make_grid(16, 4.0).unwrap();
        let v = single();
        let t = 0.3;
        let e = Engine::new(&v, &g);
        let ends = e.march(t, 1, 8, 2, C64::new(0.0, 1.0), None);
        let tq = TimeQuadrature::gauss_legendre(t, 1, 8).unwrap();
        let prev: Vec<KernelMatrix> = tq.nodes.iter().map(|&s| kernel_first(s, &v, &g)).collect();
        let k2 = kernel_next(&prev, &tq, &v, &g).unwrap();
        let err = (&ends[1] - &k2.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn certification_rule() {
        assert_eq!(certify(&[0.4, 0.07, 0.01, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8], 1e-6).map(|c| c.0), Some(7));
        assert!(certify(&[0.4, 0.39, 0.38], 1.0).is_none());
        assert_eq!(certify(&[0.1, 0.0], 1e-9), Some((2, 0.0)));
    }

    #[test]
    fn uncertified_sum_reports_partial_series() {
        let g = make_grid(16, 4.0).unwrap();
        let err = dyson_sum(0.3, &single(), &g, 1e-12, 2, 8).unwrap_err();
        match err {
            Error::TailNotCertified(s) => {
                assert_eq!(s.orders.len(), 2);
                assert!(!s.certified);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn kernel_next_validates_inputs() {
        let g = make_grid(16, 4.0).unwrap();
        let tq = TimeQuadrature::gauss_legendre(0.2, 1, 4).unwrap();
        let prev = vec![KernelMatrix::zeros(&g); 3];
        assert!(kernel_next(&prev, &tq, &single(), &g).is_err());
        let other = make_grid(32, 4.0).unwrap();
        let prev = vec![KernelMatrix::zeros(&other); 4];
        assert!(matches!(kernel_next(&prev, &tq, &single(), &g), Err(Error::GridMismatch)));
    }
}
