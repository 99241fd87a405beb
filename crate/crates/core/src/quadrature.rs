//! Gauss–Legendre rules, spectral integration matrices and time quadratures.

use crate::{Error, Result};

/// Nodes per panel used by the composite time rules.
pub const PANEL_ORDER: usize = 8;

/// Largest free phase `ω·h` (radians) a single panel is allowed to span.
pub const MAX_PANEL_PHASE: f64 = 8.0;

/// `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped affinely onto `[a, b]` (`b < a` allowed).
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|x| mid + half * x).collect();
        let weights = self.weights.iter().map(|w| half * w).collect();
        (nodes, weights)
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = self.on_interval(a, b);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `P_0(x), …, P_{n}(x)`.
fn legendre_table(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(p);
    }
    out
}

/// Gauss collocation data on the unit panel `[0, 1]`.
///
/// `integration[i][j] = ∫_0^{c_i} ℓ_j(c) dc` where `ℓ_j` is the Lagrange
/// basis polynomial of node `c_j`; it turns values at the nodes into the
/// indefinite integral evaluated back at the nodes.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub integration: Vec<Vec<f64>>,
}

impl Collocation {
    pub fn new(order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let g = order;
        let tables: Vec<Vec<f64>> = gl.nodes.iter().map(|&x| legendre_table(g, x)).collect();
        let mut integration = vec![vec![0.0; g]; g];
        for (i, row) in integration.iter_mut().enumerate() {
            let py = &tables[i];
            for (j, entry) in row.iter_mut().enumerate() {
                let px = &tables[j];
                // ∫_{-1}^{y} ℓ_j = w_j Σ_k (2k+1)/2 P_k(x_j) ∫_{-1}^{y} P_k
                let mut acc = 0.5 * (gl.nodes[i] + 1.0);
                for k in 1..g {
                    acc += 0.5 * px[k] * (py[k + 1] - py[k - 1]);
                }
                // Halve once more for the map [-1, 1] → [0, 1].
                *entry = 0.5 * gl.weights[j] * acc;
            }
        }
        Self {
            nodes: gl.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: gl.weights.iter().map(|w| 0.5 * w).collect(),
            integration,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// Composite Gauss–Legendre: `panels` equal panels of `order` nodes each.
    GaussLegendre { panels: usize, order: usize },
    /// Composite Simpson on `intervals` (even) equal sub-intervals.
    UniformSimpson { intervals: usize },
}

/// Quadrature rule for `∫_0^t ds` (`t` may be negative, in which case the
/// weights are negative and sum to `t`).
#[derive(Debug, Clone)]
pub struct TimeQuadrature {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scheme: TimeScheme,
}

impl TimeQuadrature {
    pub fn gauss_legendre(t: f64, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 || order == 0 {
            return Err(Error::arg("time quadrature needs at least one panel and one node"));
        }
        if !t.is_finite() {
            return Err(Error::arg("non-finite time"));
        }
        let gl = GaussLegendre::new(order);
        let h = t / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let a = k as f64 * h;
            let (x, w) = gl.on_interval(a, a + h);
            nodes.extend(x);
            weights.extend(w);
        }
        Ok(Self {
            t,
            nodes,
            weights,
            scheme: TimeScheme::GaussLegendre { panels, order },
        })
    }

    pub fn uniform_simpson(t: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 || intervals % 2 != 0 {
            return Err(Error::arg("Simpson's rule needs a positive even interval count"));
        }
        let h = t / intervals as f64;
        let nodes = (0..=intervals).map(|k| k as f64 * h).collect();
        let weights = (0..=intervals)
            .map(|k| {
                let c = if k == 0 || k == intervals {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Ok(Self {
            t,
            nodes,
            weights,
            scheme: TimeScheme::UniformSimpson { intervals },
        })
    }

    /// Composite Gauss rule whose panels each span at most
    /// [`MAX_PANEL_PHASE`] radians of the fastest free oscillation `ω_max`.
    pub fn resolving(t: f64, omega_max: f64) -> Result<Self> {
        Self::gauss_legendre(t, panels_for(t, omega_max), PANEL_ORDER)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Panel count needed to resolve `e^{iωs}` on `[0, t]`.
pub fn panels_for(t: f64, omega_max: f64) -> usize {
    ((omega_max * t.abs()) / MAX_PANEL_PHASE).ceil().max(1.0) as usize
}
