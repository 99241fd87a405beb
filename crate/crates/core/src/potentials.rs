//! Delta configurations, mollifier families and their Fourier transforms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result, C64};

/// Nodes of the fixed rule used for `ŵ(u) = ∫ W(x) e^{−iux} dx`.
pub const TRANSFORM_NODES: usize = 64;

fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

/// Strengths and positions of finitely many point interactions, plus the
/// `ℓ¹` mass of any terms dropped by truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaConfig {
    centers: Vec<(f64, f64)>,
    tail_bound: f64,
}

impl DeltaConfig {
    /// `centers` holds `(alpha, x)` pairs.
    pub fn new(centers: Vec<(f64, f64)>, tail_bound: f64) -> Result<Self> {
        if !(tail_bound >= 0.0 && tail_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!("tail_bound must be ≥ 0, got {tail_bound}")));
        }
        for (i, &(a, x)) in centers.iter().enumerate() {
            if !a.is_finite() || !x.is_finite() {
                return Err(Error::InvalidConfig(format!("center {i} is not finite")));
            }
            if a == 0.0 {
                return Err(Error::InvalidConfig(format!("center {i} has zero strength")));
            }
            if centers[..i].iter().any(|&(_, y)| y == x) {
                return Err(Error::InvalidConfig(format!("duplicate center position {x}")));
            }
        }
        Ok(Self { centers, tail_bound })
    }

    pub fn single(alpha: f64, x0: f64) -> Result<Self> {
        Self::new(vec![(alpha, x0)], 0.0)
    }

    pub fn empty() -> Self {
        Self {
            centers: Vec::new(),
            tail_bound: 0.0,
        }
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn l1_mass(&self) -> f64 {
        self.centers.iter().map(|(a, _)| a.abs()).sum()
    }

    /// Invariant under `x ↦ −x`.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.centers
            .iter()
            .all(|&(a, x)| self.centers.iter().any(|&(b, y)| b == a && y == -x))
    }

    /// Parse the plain-text form: a `tail_bound t` header followed by one
    /// `alpha x` line per center. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tail = None;
        let mut centers = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!("expected two fields, found {}", fields.len())));
            }
            if fields[0] == "tail_bound" {
                if tail.is_some() || !centers.is_empty() {
                    return Err(parse_err("tail_bound must be the single header line".into()));
                }
                tail = Some(fields[1].parse::<f64>().map_err(|e| parse_err(format!("tail_bound: {e}")))?);
                continue;
            }
            if tail.is_none() {
                return Err(parse_err("missing tail_bound header".into()));
            }
            let a = fields[0].parse::<f64>().map_err(|e| parse_err(format!("alpha: {e}")))?;
            let x = fields[1].parse::<f64>().map_err(|e| parse_err(format!("x: {e}")))?;
            centers.push((a, x));
        }
        let tail = tail.ok_or(Error::Parse {
            line: 0,
            msg: "missing tail_bound header".into(),
        })?;
        Self::new(centers, tail)
    }
}

impl fmt::Display for DeltaConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tail_bound {:e}", self.tail_bound)?;
        for (a, x) in &self.centers {
            writeln!(f, "{a:e} {x:e}")?;
        }
        Ok(())
    }
}

/// Shape function `W` on `[−1, 1]`.
#[derive(Clone)]
pub enum Profile {
    /// `C·exp(−1/(1−x²))`, normalised to unit mass.
    Bump,
    /// A user-supplied profile; it must already be non-negative with unit mass.
    Custom {
        name: String,
        w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Profile {
    pub fn name(&self) -> &str {
        match self {
            Profile::Bump => "bump",
            Profile::Custom { name, .. } => name,
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match self {
            Profile::Bump => {
                if x.abs() < 1.0 {
                    (-1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            Profile::Custom { w, .. } => {
                if x.abs() <= 1.0 {
                    w(x)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Composite Gauss rule used to check profile mass independently of the
/// transform rule.
fn mass_of(f: impl Fn(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let panels = 32;
    let h = 2.0 / panels as f64;
    (0..panels)
        .map(|k| {
            let a = -1.0 + k as f64 * h;
            gl.integrate(a, a + h, &f)
        })
        .sum()
}

/// The scaled family `W_ε(x) = ε^{−1} W((x − x₀)/ε)`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub profile: Profile,
    pub center: f64,
    pub epsilon: f64,
    scale: f64,
    /// `(x_k, w_k W(x_k))` of the transform rule.
    samples: Arc<Vec<(f64, f64)>>,
}

impl Mollifier {
    pub fn new(profile: Profile, center: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidMollifier(format!("epsilon must be positive, got {epsilon}")));
        }
        if !center.is_finite() {
            return Err(Error::InvalidMollifier("center is not finite".into()));
        }
        let gl = GaussLegendre::new(TRANSFORM_NODES);
        // Normalise with the transform rule itself so that ŵ(0) = 1 exactly;
        // the mass check below uses an independent composite rule.
        let scale = match profile {
            Profile::Bump => 1.0 / gl.integrate(-1.0, 1.0, |x| profile.raw(x)),
            Profile::Custom { .. } => 1.0,
        };
        for x in gl.nodes.iter().chain(&[-1.0, -0.5, 0.0, 0.5, 1.0]) {
            let v = profile.raw(*x);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidMollifier(format!("profile negative or non-finite at x={x}")));
            }
        }
        let mass = scale * mass_of(|x| profile.raw(x));
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidMollifier(format!("profile mass is {mass}, expected 1")));
        }
        let samples = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&x, &w)| (x, w * scale * profile.raw(x)))
            .collect();
        Ok(Self {
            profile,
            center,
            epsilon,
            scale,
            samples: Arc::new(samples),
        })
    }

    pub fn bump(center: f64, epsilon: f64) -> Result<Self> {
        Self::new(Profile::Bump, center, epsilon)
    }

    /// Same profile and center, different width.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidMollifier(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }

    /// Normalised profile `W(x)`.
    pub fn profile_value(&self, x: f64) -> f64 {
        self.scale * self.profile.raw(x)
    }

    /// `W_ε(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.profile_value((x - self.center) / self.epsilon) / self.epsilon
    }

    /// `ŵ(u) = ∫ W(x) e^{−iux} dx` (unscaled, uncentred).
    pub fn profile_transform(&self, u: f64) -> C64 {
        self.samples
            .iter()
            .map(|&(x, c)| C64::from_polar(c, -u * x))
            .sum()
    }

    /// `W̃_ε(p) = (2π)^{−1/2} e^{−ipx₀} ŵ(εp)`.
    pub fn transform(&self, p: f64) -> C64 {
        self.profile_transform(self.epsilon * p) * C64::from_polar(inv_sqrt_2pi(), -p * self.center)
    }
}

/// One additive piece of a potential's Fourier transform.
#[derive(Debug, Clone)]
pub enum Term {
    Delta { alpha: f64, x: f64 },
    Smeared { alpha: f64, mollifier: Mollifier },
}

impl Term {
    fn eval(&self, p: f64) -> C64 {
        match self {
            Term::Delta { alpha, x } => C64::from_polar(alpha * inv_sqrt_2pi(), -p * x),
            Term::Smeared { alpha, mollifier } => mollifier.transform(p) * *alpha,
        }
    }

    fn alpha(&self) -> f64 {
        match self {
            Term::Delta { alpha, .. } | Term::Smeared { alpha, .. } => *alpha,
        }
    }
}

/// `p ↦ Ṽ(p) = (2π)^{−1/2} ∫ V(x) e^{−ipx} dx` for a sum of terms.
#[derive(Debug, Clone)]
pub struct PotentialTransform {
    pub terms: Vec<Term>,
    pub sup_bound: f64,
}

impl PotentialTransform {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            sup_bound: 0.0,
        }
    }

    pub fn eval(&self, p: f64) -> C64 {
        self.terms.iter().map(|t| t.eval(p)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(alpha, x)` pairs when every term is a point interaction.
    pub fn delta_centers(&self) -> Option<Vec<(f64, f64)>> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Delta { alpha, x } => Some((*alpha, *x)),
                Term::Smeared { .. } => None,
            })
            .collect()
    }

    /// Pointwise sum of two transforms.
    pub fn plus(&self, other: &PotentialTransform) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self {
            terms,
            sup_bound: self.sup_bound + other.sup_bound,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Delta { alpha, x } => Term::Delta { alpha: alpha * c, x: *x },
                Term::Smeared { alpha, mollifier } => Term::Smeared {
                    alpha: alpha * c,
                    mollifier: mollifier.clone(),
                },
            })
            .collect();
        Self {
            terms,
            sup_bound: self.sup_bound * c.abs(),
        }
    }

    /// Split into one transform per term.
    pub fn split(&self) -> Vec<PotentialTransform> {
        self.terms
            .iter()
            .map(|t| Self {
                terms: vec![t.clone()],
                sup_bound: t.alpha().abs() * inv_sqrt_2pi(),
            })
            .collect()
    }
}

pub fn delta_transform(cfg: &DeltaConfig) -> PotentialTransform {
    let terms = cfg
        .centers()
        .iter()
        .map(|&(alpha, x)| Term::Delta { alpha, x })
        .collect();
    PotentialTransform {
        terms,
        sup_bound: (cfg.l1_mass() + cfg.tail_bound()) * inv_sqrt_2pi(),
    }
}

pub fn mollifier_transform(m: &Mollifier) -> PotentialTransform {
    PotentialTransform {
        terms: vec![Term::Smeared {
            alpha: 1.0,
            mollifier: m.clone(),
        }],
        sup_bound: inv_sqrt_2pi(),
    }
}

/// `Σ_i α_i W̃_{ε,i}` with one shared `ε` and the given profile at every center.
pub fn mollified_transform(cfg: &DeltaConfig, profile: &Profile, epsilon: f64) -> Result<PotentialTransform> {
    let profiles = vec![profile.clone(); cfg.len()];
    mollified_transform_with(cfg, &profiles, epsilon)
}

/// As [`mollified_transform`] with a profile per center.
pub fn mollified_transform_with(cfg: &DeltaConfig, profiles: &[Profile], epsilon: f64) -> Result<PotentialTransform> {
    if profiles.len() != cfg.len() {
        return Err(Error::arg("one profile per center is required"));
    }
    let mut terms = Vec::with_capacity(cfg.len());
    for (&(alpha, x), profile) in cfg.centers().iter().zip(profiles) {
        terms.push(Term::Smeared {
            alpha,
            mollifier: Mollifier::new(profile.clone(), x, epsilon)?,
        });
    }
    Ok(PotentialTransform {
        terms,
        sup_bound: (cfg.l1_mass() + cfg.tail_bound()) * inv_sqrt_2pi(),
    })
}

/// A summable family of centers, indexed from 1.
pub enum L1Source {
    Finite(Vec<(f64, f64)>),
    Generator {
        alpha: Box<dyn Fn(usize) -> f64 + Send + Sync>,
        x: Box<dyn Fn(usize) -> f64 + Send + Sync>,
        /// Upper bound on `Σ_{i>n} |α_i|`, if known.
        tail: Option<Box<dyn Fn(usize) -> f64 + Send + Sync>>,
    },
}

impl L1Source {
    /// `α_i = r^i` at `x_i = spacing·i`.
    pub fn geometric(ratio: f64, spacing: f64) -> Self {
        L1Source::Generator {
            alpha: Box::new(move |i| ratio.powi(i as i32)),
            x: Box::new(move |i| spacing * i as f64),
            tail: Some(Box::new(move |n| ratio.abs().powi(n as i32 + 1) / (1.0 - ratio.abs()))),
        }
    }

    /// `α_i = 1/i²` at `x_i = spacing·i`, tail bounded by the integral test.
    pub fn inverse_square(spacing: f64) -> Self {
        L1Source::Generator {
            alpha: Box::new(|i| 1.0 / (i as f64).powi(2)),
            x: Box::new(move |i| spacing * i as f64),
            tail: Some(Box::new(|n| 1.0 / n as f64)),
        }
    }
}

/// Largest number of terms `truncate_l1` will keep.
pub const MAX_TRUNCATION: usize = 1 << 20;

/// Keep the shortest prefix whose certified tail mass is at most `delta`.
pub fn truncate_l1(source: &L1Source, delta: f64) -> Result<DeltaConfig> {
    if !(delta > 0.0) {
        return Err(Error::arg("truncation threshold must be positive"));
    }
    match source {
        L1Source::Finite(list) => DeltaConfig::new(list.clone(), 0.0),
        L1Source::Generator { alpha, x, tail } => {
            let tail = tail
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("generator has no computable tail bound".into()))?;
            let mut n = 1;
            // Small slack so exact powers of two land on the intended index.
            while tail(n) > delta * (1.0 + 1e-12) {
                n += 1;
                if n > MAX_TRUNCATION {
                    return Err(Error::InvalidConfig(format!(
                        "tail bound still above {delta} after {MAX_TRUNCATION} terms"
                    )));
                }
            }
            let centers = (1..=n).map(|i| (alpha(i), x(i))).collect();
            DeltaConfig::new(centers, tail(n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_delta_transform_is_flat() {
        let v = delta_transform(&DeltaConfig::single(1.0, 0.0).unwrap());
        for p in [-7.0, 0.0, 0.3, 12.5] {
            assert!((v.eval(p) - inv_sqrt_2pi()).norm() < 1e-15);
        }
        let v = delta_transform(&DeltaConfig::new(vec![(1.0, 0.0), (-1.0, 0.5)], 0.0).unwrap());
        assert_abs_diff_eq!(v.eval(0.0).norm(), 0.0, epsilon = 1e-15);
        assert!((v.eval(2.3).conj() - v.eval(-2.3)).norm() < 1e-15);
        assert_abs_diff_eq!(v.sup_bound, 2.0 * inv_sqrt_2pi(), epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(DeltaConfig::single(0.0, 1.0).is_err());
        assert!(DeltaConfig::new(vec![(1.0, 0.0), (2.0, 0.0)], 0.0).is_err());
        assert!(DeltaConfig::new(vec![(1.0, 0.0)], -1.0).is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let cfg = DeltaConfig::new(vec![(1.5, -0.25), (-0.5, 2.0)], 1e-4).unwrap();
        let text = cfg.to_string();
        assert!(text.starts_with("tail_bound"));
        assert_eq!(DeltaConfig::parse(&text).unwrap(), cfg);
        let err = DeltaConfig::parse("tail_bound 0\n1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(DeltaConfig::parse("1.0 0.0\n").is_err());
    }

    #[test]
    fn bump_mass_and_reference_transform() {
        let m = Mollifier::bump(0.0, 1.0).unwrap();
        // ∫ exp(−1/(1−x²)) dx over (−1, 1).
        assert_abs_diff_eq!(1.0 / m.scale, 0.443_993_816_168_079_3, epsilon = 1e-12);
        assert_abs_diff_eq!(m.profile_transform(0.0).re, 1.0, epsilon = 1e-12);
        // Independent reference values from high-order adaptive quadrature.
        assert_abs_diff_eq!(m.profile_transform(1.0).re, 0.923_12, epsilon = 1e-5);
        assert_abs_diff_eq!(m.profile_transform(3.0).re, 0.445_73, epsilon = 1e-5);
        assert_abs_diff_eq!(m.profile_transform(10.0).re, 0.032_935, epsilon = 1e-6);
        assert_abs_diff_eq!(m.profile_transform(20.0).re, -1.2656e-3, epsilon = 1e-7);
    }

    #[test]
    fn scaled_mollifier_has_unit_mass() {
        for eps in [0.05, 0.3, 2.0] {
            let m = Mollifier::bump(0.7, eps).unwrap();
            let gl = GaussLegendre::new(64);
            let mass = gl.integrate(0.7 - eps, 0.7 + eps, |x| m.value(x));
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-10);
        }
        assert!(Mollifier::bump(0.0, 0.0).is_err());
        assert!(Mollifier::bump(0.0, -1.0).is_err());
    }

    #[test]
    fn mollifier_transform_limits() {
        let bound = inv_sqrt_2pi();
        let base = Mollifier::bump(0.0, 0.4).unwrap();
        let v = mollifier_transform(&base);
        assert!((v.eval(0.0) - bound).norm() < 1e-12);
        let mut prev = f64::INFINITY;
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let m = base.with_epsilon(eps).unwrap();
            let gap = (m.transform(1.0) - bound).norm();
            assert!(gap < prev);
            prev = gap;
        }
    }

    #[test]
    fn custom_profiles_are_checked() {
        let tent = Profile::Custom {
            name: "tent".into(),
            w: Arc::new(|x: f64| 1.0 - x.abs()),
        };
        assert!(Mollifier::new(tent, 0.0, 0.5).is_ok());
        let heavy = Profile::Custom {
            name: "heavy".into(),
            w: Arc::new(|_| 1.0),
        };
        assert!(matches!(Mollifier::new(heavy, 0.0, 0.5), Err(Error::InvalidMollifier(_))));
        let signed = Profile::Custom {
            name: "signed".into(),
            w: Arc::new(|x: f64| 0.5 + x),
        };
        assert!(Mollifier::new(signed, 0.0, 0.5).is_err());
    }

    #[test]
    fn truncation_examples() {
        let cfg = truncate_l1(&L1Source::geometric(0.5, 0.3), 2f64.powi(-10)).unwrap();
        assert_eq!(cfg.len(), 10);
        assert_abs_diff_eq!(cfg.tail_bound(), 2f64.powi(-10), epsilon = 1e-18);

        let cfg = truncate_l1(&L1Source::inverse_square(1.0), 0.01).unwrap();
        assert_eq!(cfg.len(), 100);

        let list = vec![(1.0, 0.0), (0.5, 1.0)];
        let cfg = truncate_l1(&L1Source::Finite(list.clone()), 1e-9).unwrap();
        assert_eq!(cfg.centers(), &list[..]);
        assert_eq!(cfg.tail_bound(), 0.0);

        let blind = L1Source::Generator {
            alpha: Box::new(|i| 1.0 / i as f64),
            x: Box::new(|i| i as f64),
            tail: None,
        };
        assert!(truncate_l1(&blind, 0.1).is_err());
    }
}
