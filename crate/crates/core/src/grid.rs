//! Momentum lattice, the discrete Fourier–Plancherel transform and kernel
//! matrices with their norm estimates.
//!
//! The grid has `N` nodes `p_j = −p_max + jΔp`, `Δp = 2p_max/N`, each with
//! weight `Δp`. Its FFT dual is the position lattice `x_m = (m − N/2)Δx`,
//! `Δx = π/p_max`, i.e. a periodic box of length `2π/Δp`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rustfft::{Fft, FftPlanner};

use crate::linalg;
use crate::{Error, Result, C64};

#[derive(Clone)]
pub struct MomentumGrid {
    pub n_points: usize,
    pub p_max: f64,
    pub spacing: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    fft: Arc<FftPair>,
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for MomentumGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentumGrid")
            .field("n_points", &self.n_points)
            .field("p_max", &self.p_max)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for MomentumGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.p_max == other.p_max
    }
}

pub fn make_grid(n_points: usize, p_max: f64) -> Result<MomentumGrid> {
    if n_points < 8 || !n_points.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "n_points must be a power of two ≥ 8, got {n_points}"
        )));
    }
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("p_max must be positive, got {p_max}")));
    }
    let spacing = 2.0 * p_max / n_points as f64;
    let nodes = (0..n_points).map(|j| -p_max + j as f64 * spacing).collect();
    let weights = vec![spacing; n_points];
    let mut planner = FftPlanner::new();
    let fft = Arc::new(FftPair {
        forward: planner.plan_fft_forward(n_points),
        inverse: planner.plan_fft_inverse(n_points),
    });
    Ok(MomentumGrid {
        n_points,
        p_max,
        spacing,
        nodes,
        weights,
        fft,
    })
}

impl MomentumGrid {
    /// Position lattice spacing `π/p_max`.
    pub fn dx(&self) -> f64 {
        PI / self.p_max
    }

    /// Length of the periodic position box, `2π/Δp`.
    pub fn box_length(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        let half = (self.n_points / 2) as f64;
        (0..self.n_points).map(|m| (m as f64 - half) * dx).collect()
    }

    /// Same cutoff, twice the resolution (half the spacing).
    pub fn refined(&self) -> Result<Self> {
        make_grid(2 * self.n_points, self.p_max)
    }

    /// Same spacing, twice the cutoff.
    pub fn widened(&self) -> Result<Self> {
        make_grid(2 * self.n_points, 2.0 * self.p_max)
    }

    /// Unitary Fourier matrix `F_jm = e^{−i p_j x_m}/√N` mapping weighted
    /// position coordinates to weighted momentum coordinates.
    pub fn fourier_matrix(&self) -> Array2<C64> {
        let x = self.positions();
        let norm = 1.0 / (self.n_points as f64).sqrt();
        Array2::from_shape_fn((self.n_points, self.n_points), |(j, m)| {
            C64::from_polar(norm, -self.nodes[j] * x[m])
        })
    }

    pub(crate) fn check(&self, other: &MomentumGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

impl Representation {
    fn name(self) -> &'static str {
        match self {
            Representation::Position => "position",
            Representation::Momentum => "momentum",
        }
    }
}

/// Function samples on the position or momentum lattice.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub grid: MomentumGrid,
    pub amplitudes: Array1<C64>,
    pub representation: Representation,
}

impl StateVector {
    pub fn new(grid: &MomentumGrid, amplitudes: Array1<C64>, representation: Representation) -> Result<Self> {
        if amplitudes.len() != grid.n_points {
            return Err(Error::arg(format!(
                "state has {} amplitudes, grid has {} points",
                amplitudes.len(),
                grid.n_points
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            amplitudes,
            representation,
        })
    }

    pub fn from_position_fn(grid: &MomentumGrid, f: impl Fn(f64) -> C64) -> Self {
        let amplitudes = grid.positions().into_iter().map(f).collect();
        Self {
            grid: grid.clone(),
            amplitudes,
            representation: Representation::Position,
        }
    }

    pub fn from_momentum_fn(grid: &MomentumGrid, f: impl Fn(f64) -> C64) -> Self {
        let amplitudes = grid.nodes.iter().map(|&p| f(p)).collect();
        Self {
            grid: grid.clone(),
            amplitudes,
            representation: Representation::Momentum,
        }
    }

    /// Normalised Gaussian `exp(−(x−x₀)²/(4σ²) + ik₀x)` in position space.
    pub fn gaussian(grid: &MomentumGrid, x0: f64, sigma: f64, k0: f64) -> Self {
        let mut psi = Self::from_position_fn(grid, |x| {
            C64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), k0 * x)
        });
        psi.normalize();
        psi
    }

    fn weight(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.spacing,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.weight() * self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.mapv_inplace(|z| z / n);
        }
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.grid.check(&other.grid)?;
        if self.representation != other.representation {
            return Err(Error::RepresentationMismatch {
                expected: self.representation.name(),
                found: other.representation.name(),
            });
        }
        let s: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.weight())
    }

    pub fn in_momentum(&self) -> Result<StateVector> {
        match self.representation {
            Representation::Momentum => Ok(self.clone()),
            Representation::Position => fourier_forward(self),
        }
    }

    pub fn in_position(&self) -> Result<StateVector> {
        match self.representation {
            Representation::Position => Ok(self.clone()),
            Representation::Momentum => fourier_inverse(self),
        }
    }

    fn expect(&self, rep: Representation) -> Result<()> {
        if self.representation == rep {
            Ok(())
        } else {
            Err(Error::RepresentationMismatch {
                expected: rep.name(),
                found: self.representation.name(),
            })
        }
    }
}

fn alternate(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `ψ̂(p_j) = (2π)^{−1/2} Σ_m Δx ψ(x_m) e^{−i p_j x_m}`.
pub fn fourier_forward(psi: &StateVector) -> Result<StateVector> {
    psi.expect(Representation::Position)?;
    let g = &psi.grid;
    // p_j x_m = −π(m − N/2) + 2πjm/N − πj and N/2 is even.
    let mut buf: Vec<C64> = psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(m, z)| z * alternate(m))
        .collect();
    g.fft.forward.process(&mut buf);
    let scale = g.dx() / (2.0 * PI).sqrt();
    let amplitudes = buf
        .into_iter()
        .enumerate()
        .map(|(j, z)| z * (scale * alternate(j)))
        .collect();
    Ok(StateVector {
        grid: g.clone(),
        amplitudes,
        representation: Representation::Momentum,
    })
}

/// `ψ(x_m) = (2π)^{−1/2} Σ_j Δp ψ̂(p_j) e^{i p_j x_m}`.
pub fn fourier_inverse(psi: &StateVector) -> Result<StateVector> {
    psi.expect(Representation::Momentum)?;
    let g = &psi.grid;
    let mut buf: Vec<C64> = psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, z)| z * alternate(j))
        .collect();
    g.fft.inverse.process(&mut buf);
    let scale = g.spacing / (2.0 * PI).sqrt();
    let amplitudes = buf
        .into_iter()
        .enumerate()
        .map(|(m, z)| z * (scale * alternate(m)))
        .collect();
    Ok(StateVector {
        grid: g.clone(),
        amplitudes,
        representation: Representation::Position,
    })
}

/// An integral operator on the momentum grid.
///
/// Stored in weighted form `matrix[j,k] = √(w_j w_k) K(p_j, p_k)`, which acts
/// on momentum amplitudes directly (the weights are uniform) and whose
/// Euclidean norms are the discrete `L²` norms.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub grid: MomentumGrid,
    pub matrix: Array2<C64>,
}

impl KernelMatrix {
    pub fn from_weighted(grid: &MomentumGrid, matrix: Array2<C64>) -> Result<Self> {
        let n = grid.n_points;
        if matrix.dim() != (n, n) {
            return Err(Error::arg(format!("kernel matrix must be {n}×{n}, got {:?}", matrix.dim())));
        }
        Ok(Self {
            grid: grid.clone(),
            matrix,
        })
    }

    /// Build from kernel values `K(p_j, p_k)`.
    pub fn from_kernel(grid: &MomentumGrid, k: impl Fn(f64, f64) -> C64) -> Self {
        let w = grid.spacing;
        let matrix = Array2::from_shape_fn((grid.n_points, grid.n_points), |(j, l)| {
            k(grid.nodes[j], grid.nodes[l]) * w
        });
        Self {
            grid: grid.clone(),
            matrix,
        }
    }

    /// The identity operator, kernel `δ_jk / w_j`.
    pub fn identity(grid: &MomentumGrid) -> Self {
        Self {
            grid: grid.clone(),
            matrix: linalg::eye(grid.n_points),
        }
    }

    pub fn zeros(grid: &MomentumGrid) -> Self {
        Self {
            grid: grid.clone(),
            matrix: Array2::zeros((grid.n_points, grid.n_points)),
        }
    }

    pub fn diagonal(grid: &MomentumGrid, d: impl Fn(f64) -> C64) -> Self {
        let diag: Array1<C64> = grid.nodes.iter().map(|&p| d(p)).collect();
        Self {
            grid: grid.clone(),
            matrix: Array2::from_diag(&diag),
        }
    }

    /// Kernel value `K(p_j, p_k)`.
    pub fn kernel(&self, j: usize, k: usize) -> C64 {
        self.matrix[(j, k)] / (self.grid.weights[j] * self.grid.weights[k]).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            matrix: linalg::adjoint(&self.matrix),
        }
    }

    /// Operator composition `self ∘ other`.
    pub fn compose(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        self.grid.check(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    pub fn sub(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        self.grid.check(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scaled(&self, c: C64) -> KernelMatrix {
        Self {
            grid: self.grid.clone(),
            matrix: self.matrix.mapv(|z| z * c),
        }
    }

    /// Apply to a state (either representation is converted to momentum).
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.grid.check(&psi.grid)?;
        let m = psi.in_momentum()?;
        Ok(StateVector {
            grid: self.grid.clone(),
            amplitudes: self.matrix.dot(&m.amplitudes),
            representation: Representation::Momentum,
        })
    }

    /// `‖A*A − I‖` of the weighted matrix.
    pub fn unitarity_defect(&self) -> Result<f64> {
        linalg::unitarity_defect(&self.matrix)
    }
}

/// Discrete `L²` operator norm (largest singular value of the weighted matrix).
pub fn operator_norm(k: &KernelMatrix) -> Result<f64> {
    linalg::opnorm(&k.matrix)
}

/// Schur-test bound `√(max row L¹ · max column L¹)` of the kernel.
pub fn schur_bound(k: &KernelMatrix) -> Result<f64> {
    if !k.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(schur_of_weighted(&k.matrix))
}

/// Schur bound computed straight from a weighted matrix. With uniform weights
/// `Σ_k w_k |K_jk| = Σ_k |A_jk|`.
pub(crate) fn schur_of_weighted(a: &Array2<C64>) -> f64 {
    let n = a.ncols();
    let mut col = vec![0.0f64; n];
    let mut row_max: f64 = 0.0;
    for row in a.rows() {
        let mut s = 0.0;
        for (c, z) in col.iter_mut().zip(row.iter()) {
            let m = z.norm();
            s += m;
            *c += m;
        }
        row_max = row_max.max(s);
    }
    let col_max = col.into_iter().fold(0.0, f64::max);
    (row_max * col_max).sqrt()
}
