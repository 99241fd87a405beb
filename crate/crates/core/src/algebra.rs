//! A lattice Schrödinger representation of the resolvent algebra over
//! `(ℝ², σ)`.
//!
//! Operators act on position samples `ψ(x_m)`. The field operator is
//! `φ(f) = f₁Q + f₂P` with `Q = diag(x_m)` and `P = F* diag(p_j) F`, and the
//! generators are represented by
//!
//! ```text
//! R(λ, f) = (iλ − φ(f))^{−1},   σ(f, g) = f₁g₂ − f₂g₁.
//! ```
//!
//! With this sign `R(λ, 0) = −(i/λ)𝟙` and the commutator relation carries
//! `+iσ(f, g)`, matching `[φ(f), φ(g)] = iσ(f, g)` and `[Q, P] = i`.
//! Relations that only involve one `φ` hold exactly on the lattice; the two
//! that need the canonical commutator hold on states away from the box edge
//! and the momentum cutoff.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use crate::grid::{MomentumGrid, StateVector};
use crate::linalg;
use crate::resolvent::{self, UnitaryGroup, DYSON_STEP, NORM_SLACK};
use crate::{Error, Result, C64};

/// Threshold for relations that are exact matrix identities.
pub const EXACT_THRESHOLD: f64 = 1e-10;

/// Threshold for the two relations that depend on the canonical commutator.
pub const CCR_THRESHOLD: f64 = 1e-3;

/// Below this a residual is treated as converged in refinement studies.
pub const REFINEMENT_FLOOR: f64 = 1e-8;

/// A point `f = (f₁, f₂)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVector {
    pub f1: f64,
    pub f2: f64,
}

impl PhaseVector {
    pub fn new(f1: f64, f2: f64) -> Result<Self> {
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(Error::arg("phase-space vector must be finite"));
        }
        Ok(Self { f1, f2 })
    }

    pub const fn zero() -> Self {
        Self { f1: 0.0, f2: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.f1 == 0.0 && self.f2 == 0.0
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            f1: c * self.f1,
            f2: c * self.f2,
        }
    }
}

impl std::ops::Add for PhaseVector {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            f1: self.f1 + o.f1,
            f2: self.f2 + o.f2,
        }
    }
}

impl std::fmt::Display for PhaseVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.f1, self.f2)
    }
}

pub fn sigma(f: PhaseVector, g: PhaseVector) -> f64 {
    f.f1 * g.f2 - f.f2 * g.f1
}

/// Position and momentum operators on the position lattice of a grid.
#[derive(Debug, Clone)]
pub struct Lattice {
    grid: MomentumGrid,
    x: Vec<f64>,
    p: Array2<C64>,
}

impl Lattice {
    pub fn new(grid: &MomentumGrid) -> Self {
        let f = grid.fourier_matrix();
        let mut dp = f.clone();
        for (mut row, &p) in dp.rows_mut().into_iter().zip(&grid.nodes) {
            row.mapv_inplace(|z| z * p);
        }
        let mut p = linalg::adjoint(&f).dot(&dp);
        // Symmetrise away rounding so φ is Hermitian to machine precision.
        let pa = linalg::adjoint(&p);
        p = (&p + &pa).mapv(|z| z * 0.5);
        Self {
            grid: grid.clone(),
            x: grid.positions(),
            p,
        }
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    /// `φ(f) = f₁Q + f₂P`.
    pub fn phase_operator(&self, f: PhaseVector) -> Array2<C64> {
        let mut m = self.p.mapv(|z| z * f.f2);
        for (k, x) in self.x.iter().enumerate() {
            m[(k, k)] += f.f1 * x;
        }
        m
    }

    /// `(iλ − φ(f))^{−1}` by a dense solve.
    pub fn resolvent(&self, lambda: f64, f: PhaseVector) -> Result<RepResolvent> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::arg("lambda must be a nonzero finite number"));
        }
        let mut a = self.phase_operator(f).mapv(|z| -z);
        for k in 0..a.nrows() {
            a[(k, k)] += C64::new(0.0, lambda);
        }
        let matrix = linalg::inverse(&a)?;
        let (norm, min_singular) = linalg::singular_extremes(&matrix)?;
        if !(norm <= 1.0 / lambda.abs() + NORM_SLACK) {
            return Err(Error::Invariant(format!(
                "‖R({lambda}, {f})‖ = {norm:.6e} exceeds 1/|λ|"
            )));
        }
        if !(min_singular > 0.0) {
            return Err(Error::Invariant(format!("R({lambda}, {f}) is not injective")));
        }
        Ok(RepResolvent {
            lambda,
            f,
            matrix,
            norm,
            min_singular,
        })
    }

    /// `e^{iφ(f)}` by Hermitian eigendecomposition.
    pub fn weyl(&self, f: PhaseVector) -> Result<Array2<C64>> {
        linalg::expm_hermitian(&self.phase_operator(f), -1.0)
    }
}

/// A represented generator `R(λ, f)`.
#[derive(Debug, Clone)]
pub struct RepResolvent {
    pub lambda: f64,
    pub f: PhaseVector,
    pub matrix: Array2<C64>,
    pub norm: f64,
    pub min_singular: f64,
}

pub fn build_phase_operator(f: PhaseVector, grid: &MomentumGrid) -> Array2<C64> {
    Lattice::new(grid).phase_operator(f)
}

pub fn build_resolvent(lambda: f64, f: PhaseVector, grid: &MomentumGrid) -> Result<RepResolvent> {
    Lattice::new(grid).resolvent(lambda, f)
}

pub fn weyl_bridge(f: PhaseVector, grid: &MomentumGrid) -> Result<Array2<C64>> {
    Lattice::new(grid).weyl(f)
}

/// `φ = iλ − R(λ, f)^{−1}`, valid for any `λ`.
pub fn phi_from_resolvent(r: &RepResolvent) -> Result<Array2<C64>> {
    let mut phi = linalg::inverse(&r.matrix)?.mapv(|z| -z);
    for k in 0..phi.nrows() {
        phi[(k, k)] += C64::new(0.0, r.lambda);
    }
    Ok(phi)
}

/// The field operator recovered from `R(1, f)`.
pub fn reconstruct_phi(r: &RepResolvent) -> Result<Array2<C64>> {
    if r.lambda != 1.0 {
        return Err(Error::arg("reconstruction expects λ = 1"));
    }
    phi_from_resolvent(r)
}

/// `t ↦ e^{−itφ(f)}`, the Weyl group along `f`.
pub struct WeylGroup {
    grid: MomentumGrid,
    values: Array1<f64>,
    vectors: Array2<C64>,
}

impl WeylGroup {
    pub fn new(lattice: &Lattice, f: PhaseVector) -> Result<Self> {
        let (values, vectors) = linalg::eigh(&lattice.phase_operator(f))?;
        Ok(Self {
            grid: lattice.grid.clone(),
            values,
            vectors,
        })
    }
}

impl UnitaryGroup for WeylGroup {
    fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    fn at(&self, t: f64) -> Result<Array2<C64>> {
        Ok(linalg::spectral_apply(&self.values, &self.vectors, |x| {
            C64::from_polar(1.0, -t * x)
        }))
    }

    fn frequency(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Short steps keep the node count per step small.
    fn max_step(&self) -> f64 {
        DYSON_STEP
    }

    fn generator(&self) -> Option<Array2<C64>> {
        Some(linalg::spectral_apply(&self.values, &self.vectors, |x| C64::new(x, 0.0)))
    }
}

/// `‖−i∫_0^∞ e^{−t} e^{iφ(−tf)} dt − R(1, f)‖` with the Laplace quadrature
/// of the resolvent module.
pub fn weyl_laplace_consistency(lattice: &Lattice, f: PhaseVector) -> Result<f64> {
    let group = WeylGroup::new(lattice, f)?;
    // The Laplace routine returns iη∫e^{−|λ|s}U(ηs)ds = −(−i∫…).
    let lap = resolvent::resolvent_from_propagator(1.0, &group, resolvent::default_t_max(1.0), None)?;
    let direct = lattice.resolvent(1.0, f)?;
    linalg::opnorm(&(&lap.matrix + &direct.matrix))
}

/// Parameters shared by the relation checks.
#[derive(Debug, Clone, Copy)]
pub struct RelationParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub f: PhaseVector,
    pub g: PhaseVector,
}

impl Default for RelationParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
            nu: 3.0,
            f: PhaseVector { f1: 1.0, f2: 0.0 },
            g: PhaseVector { f1: 0.0, f2: 1.0 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelationResidual {
    pub relation: usize,
    pub residual: f64,
    pub threshold: f64,
    pub grid_n: usize,
    pub params: String,
}

impl RelationResidual {
    pub fn passes(&self) -> bool {
        self.residual <= self.threshold
    }
}

/// Normalised Gaussians well inside the box and below the cutoff.
pub fn default_probes(grid: &MomentumGrid) -> Vec<StateVector> {
    let mut out = Vec::new();
    for x0 in [-1.0, 0.0, 1.5] {
        for k0 in [0.0, 1.0] {
            out.push(StateVector::gaussian(grid, x0, 1.0, k0));
        }
    }
    out
}

fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Weak residual of relation `k` of the resolvent algebra:
///
/// 1. `R(λ, 0) = −(i/λ)𝟙`
/// 2. `R(λ, f)* = R(−λ, f)`
/// 3. `νR(νλ, νf) = R(λ, f)`
/// 4. `R(λ, f) − R(μ, f) = i(μ − λ)R(λ, f)R(μ, f)`
/// 5. `[R(λ, f), R(μ, g)] = iσ(f, g)R(λ, f)R(μ, g)²R(λ, f)`
/// 6. `R(λ, f)R(μ, g) = R(λ+μ, f+g)[R(λ, f) + R(μ, g) + iσ(f, g)R(λ, f)²R(μ, g)]`
///
/// The residual is `max_ψ ‖(LHS − RHS)ψ‖/‖ψ‖` over the probe states.
pub fn check_relation(k: usize, p: &RelationParams, lattice: &Lattice, probes: &[StateVector]) -> Result<RelationResidual> {
    if probes.is_empty() {
        return Err(Error::arg("at least one probe state is required"));
    }
    let i = C64::new(0.0, 1.0);
    let vectors: Vec<Array1<C64>> = probes
        .iter()
        .map(|s| {
            lattice.grid.check(&s.grid)?;
            Ok(s.in_position()?.amplitudes)
        })
        .collect::<Result<_>>()?;
    let r = |lambda: f64, f: PhaseVector| lattice.resolvent(lambda, f).map(|r| r.matrix);
    let (diff, params): (Box<dyn Fn(&Array1<C64>) -> Array1<C64>>, String) = match k {
        1 => {
            let a = r(p.lambda, PhaseVector::zero())?;
            let c = -i / p.lambda;
            (Box::new(move |v| a.dot(v) - v.mapv(|z| z * c)), format!("lambda={}", p.lambda))
        }
        2 => {
            let a = linalg::adjoint(&r(p.lambda, p.f)?);
            let b = r(-p.lambda, p.f)?;
            (Box::new(move |v| a.dot(v) - b.dot(v)), format!("lambda={} f={}", p.lambda, p.f))
        }
        3 => {
            let a = r(p.nu * p.lambda, p.f.scaled(p.nu))?;
            let b = r(p.lambda, p.f)?;
            let nu = p.nu;
            (
                Box::new(move |v| a.dot(v).mapv(|z| z * nu) - b.dot(v)),
                format!("lambda={} nu={} f={}", p.lambda, p.nu, p.f),
            )
        }
        4 => {
            let a = r(p.lambda, p.f)?;
            let b = r(p.mu, p.f)?;
            let c = i * (p.mu - p.lambda);
            (
                Box::new(move |v| {
                    let bv = b.dot(v);
                    a.dot(v) - &bv - a.dot(&bv).mapv(|z| z * c)
                }),
                format!("lambda={} mu={} f={}", p.lambda, p.mu, p.f),
            )
        }
        5 => {
            let a = r(p.lambda, p.f)?;
            let b = r(p.mu, p.g)?;
            let c = i * sigma(p.f, p.g);
            (
                Box::new(move |v| {
                    let av = a.dot(v);
                    let bv = b.dot(v);
                    let rhs = a.dot(&b.dot(&b.dot(&av))).mapv(|z| z * c);
                    a.dot(&bv) - b.dot(&av) - rhs
                }),
                format!("lambda={} mu={} f={} g={}", p.lambda, p.mu, p.f, p.g),
            )
        }
        6 => {
            if p.lambda + p.mu == 0.0 {
                return Err(Error::arg("relation 6 requires λ + μ ≠ 0"));
            }
            let a = r(p.lambda, p.f)?;
            let b = r(p.mu, p.g)?;
            let s = r(p.lambda + p.mu, p.f + p.g)?;
            let c = i * sigma(p.f, p.g);
            (
                Box::new(move |v| {
                    let av = a.dot(v);
                    let bv = b.dot(v);
                    let inner = &av + &bv + a.dot(&a.dot(&bv)).mapv(|z| z * c);
                    a.dot(&bv) - s.dot(&inner)
                }),
                format!("lambda={} mu={} f={} g={}", p.lambda, p.mu, p.f, p.g),
            )
        }
        _ => return Err(Error::arg(format!("relation {k} does not exist (expected 1..=6)"))),
    };
    let residual = vectors
        .iter()
        .map(|v| vec_norm(&diff(v)) / vec_norm(v))
        .fold(0.0, f64::max);
    Ok(RelationResidual {
        relation: k,
        residual,
        threshold: if k <= 4 { EXACT_THRESHOLD } else { CCR_THRESHOLD },
        grid_n: lattice.grid.n_points,
        params,
    })
}

/// Residual of a CCR-dependent relation at a grid and at twice as many
/// points with the same cutoff.
#[derive(Debug, Clone)]
pub struct RefinementRow {
    pub coarse: RelationResidual,
    pub fine: RelationResidual,
}

impl RefinementRow {
    /// The residual halves, or both sit below [`REFINEMENT_FLOOR`].
    pub fn halves(&self) -> bool {
        self.fine.residual <= 0.5 * self.coarse.residual
            || (self.fine.residual <= REFINEMENT_FLOOR && self.coarse.residual <= REFINEMENT_FLOOR)
    }
}

pub fn refinement_study(k: usize, p: &RelationParams, grid: &MomentumGrid) -> Result<RefinementRow> {
    let coarse = Lattice::new(grid);
    let fine = Lattice::new(&grid.refined()?);
    Ok(RefinementRow {
        coarse: check_relation(k, p, &coarse, &default_probes(coarse.grid()))?,
        fine: check_relation(k, p, &fine, &default_probes(fine.grid()))?,
    })
}

/// `‖[Q, P]ψ − iψ‖/‖ψ‖` for a probe, a direct look at the lattice CCR.
pub fn ccr_defect(lattice: &Lattice, psi: &StateVector) -> Result<f64> {
    let v = psi.in_position()?.amplitudes;
    let q = |u: &Array1<C64>| -> Array1<C64> { u.iter().zip(&lattice.x).map(|(z, x)| z * x).collect() };
    let comm = q(&lattice.p.dot(&v)) - lattice.p.dot(&q(&v));
    let d = comm - v.mapv(|z| z * C64::new(0.0, 1.0));
    Ok(vec_norm(&d) / vec_norm(&v))
}

/// `2π/Δp`-periodic box half-width, handy for choosing probes.
pub fn half_box(grid: &MomentumGrid) -> f64 {
    PI / grid.spacing
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn max_abs(a: &Array2<C64>) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn phase_operator_examples() {
        let g = make_grid(32, 4.0).unwrap();
        let l = Lattice::new(&g);
        assert_eq!(max_abs(&l.phase_operator(PhaseVector::zero())), 0.0);
        let q = l.phase_operator(PhaseVector::new(1.0, 0.0).unwrap());
        for (k, x) in g.positions().iter().enumerate() {
            assert_eq!(q[(k, k)], C64::new(*x, 0.0));
        }
        let p = l.phase_operator(PhaseVector::new(0.0, 1.0).unwrap());
        assert!(linalg::hermitian_defect(&p) <= 1e-10);
        let (vals, _) = linalg::eigh(&p).unwrap();
        for (v, p) in vals.iter().zip(&g.nodes) {
            assert!((v - p).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_vector_resolvent() {
        let g = make_grid(16, 4.0).unwrap();
        let r = build_resolvent(2.0, PhaseVector::zero(), &g).unwrap();
        let expected = linalg::eye(16).mapv(|z| z * C64::new(0.0, -0.5));
        assert!(max_abs(&(&r.matrix - &expected)) < 1e-15);
        let phi = reconstruct_phi(&build_resolvent(1.0, PhaseVector::zero(), &g).unwrap()).unwrap();
        assert!(max_abs(&phi) < 1e-14);
        assert!(reconstruct_phi(&r).is_err());
        assert!(build_resolvent(0.0, PhaseVector::zero(), &g).is_err());
    }

    #[test]
    fn relation_six_requires_nonzero_sum() {
        let g = make_grid(16, 4.0).unwrap();
        let l = Lattice::new(&g);
        let p = RelationParams {
            mu: -1.0,
            ..Default::default()
        };
        assert!(check_relation(6, &p, &l, &default_probes(&g)).is_err());
        assert!(check_relation(7, &RelationParams::default(), &l, &default_probes(&g)).is_err());
    }

    #[test]
    fn weyl_group_is_unitary_and_additive() {
        let g = make_grid(64, 8.0).unwrap();
        let l = Lattice::new(&g);
        let f = PhaseVector::new(0.7, -0.4).unwrap();
        let a = l.weyl(f.scaled(0.3)).unwrap();
        let b = l.weyl(f.scaled(0.5)).unwrap();
        let c = l.weyl(f.scaled(0.8)).unwrap();
        assert!(linalg::unitarity_defect(&a).unwrap() < 1e-10);
        assert!(max_abs(&(&a.dot(&b) - &c)) < 1e-9);
        let id = l.weyl(PhaseVector::zero()).unwrap();
        assert!(max_abs(&(&id - &linalg::eye(64))) < 1e-12);
    }
}
