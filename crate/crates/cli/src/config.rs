//! Flat `key = value` experiment configuration.
//!
//! A file holds one `[experiment]` section header followed by keys:
//!
//! ```text
//! # single delta at the origin
//! [propagator_convergence]
//! grid = 256, 32
//! time = 0.25
//! delta = 1.0 @ 0.0
//! eps_list = 0.4, 0.2, 0.1, 0.05
//! output = out/prop
//! ```
//!
//! Centers are given inline as `alpha @ x` pairs separated by `;`, or with
//! `delta_file` pointing at a file in the library's `tail_bound`/`alpha x`
//! format. Relative paths resolve against the directory of the config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use deltaflow::potentials::DeltaConfig;
use deltaflow::propagator::DysonOptions;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PropagatorConvergence,
    ResolventConvergence,
    Relations,
    Continuity,
    ValidationScattering,
    ValidationBoundState,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::PropagatorConvergence,
        Experiment::ResolventConvergence,
        Experiment::Relations,
        Experiment::Continuity,
        Experiment::ValidationScattering,
        Experiment::ValidationBoundState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PropagatorConvergence => "propagator_convergence",
            Experiment::ResolventConvergence => "resolvent_convergence",
            Experiment::Relations => "relations",
            Experiment::Continuity => "continuity",
            Experiment::ValidationScattering => "validation_scattering",
            Experiment::ValidationBoundState => "validation_bound_state",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: (usize, f64),
    pub time: f64,
    pub delta: DeltaConfig,
    pub profile: String,
    pub eps_list: Vec<f64>,
    pub tol: f64,
    pub n_max: usize,
    pub time_nodes: Option<usize>,
    pub output: PathBuf,
    pub seed: u64,
    pub lambda: f64,
    pub t_max: Option<f64>,
    pub laplace_nodes: Option<usize>,
    pub t0: f64,
    pub dt_list: Vec<f64>,
    pub k0: f64,
    pub sigma_x: f64,
    pub step: f64,
    pub pmax_sanity: bool,
    pub refine: bool,
    /// Raw text, hashed into the summary.
    pub source: String,
}

impl ExperimentConfig {
    pub fn dyson_options(&self) -> DysonOptions {
        DysonOptions {
            tol: self.tol,
            n_max: self.n_max,
            time_nodes: self.time_nodes,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut section: Option<(usize, Experiment)> = None;
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if section.is_some() {
                    return Err(parse_err(line_no, "only one experiment section per file"));
                }
                let exp = name.trim().parse().map_err(|m| parse_err(line_no, m))?;
                section = Some((line_no, exp));
                continue;
            }
            if section.is_none() {
                return Err(parse_err(line_no, "key before the experiment section header"));
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(parse_err(line_no, format!("unknown key `{key}`")));
            }
            if entries.contains_key(&key) {
                return Err(parse_err(line_no, format!("duplicate key `{key}`")));
            }
            entries.insert(key, (line_no, value.trim().to_string()));
        }
        let (_, experiment) = section.ok_or_else(|| parse_err(1, "missing `[experiment]` section header"))?;
        let fields = Fields { entries: &entries };

        let grid = match fields.get("grid") {
            Some((line, v)) => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(parse_err(line, "grid expects `n_points, p_max`"));
                }
                let n: usize = parse_value(line, "grid", parts[0])?;
                let p: f64 = parse_value(line, "grid", parts[1])?;
                if n < 8 || !n.is_power_of_two() || !(p > 0.0) || !p.is_finite() {
                    return Err(parse_err(line, "grid needs a power-of-two n_points ≥ 8 and positive p_max"));
                }
                (n, p)
            }
            None => default_grid(experiment),
        };

        let delta = match (fields.get("delta"), fields.get("delta_file")) {
            (Some(_), Some((line, _))) => {
                return Err(parse_err(line, "give either `delta` or `delta_file`, not both"));
            }
            (Some((line, v)), None) => {
                let tail = fields.number("tail_bound", 0.0)?;
                parse_inline_delta(line, &v, tail)?
            }
            (None, Some((line, v))) => {
                if fields.get("tail_bound").is_some() {
                    return Err(parse_err(line, "`tail_bound` belongs in the delta file"));
                }
                let path = base.join(&v);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| parse_err(line, format!("cannot read delta file {}: {e}", path.display())))?;
                DeltaConfig::parse(&text).map_err(|e| parse_err(line, format!("{}: {e}", path.display())))?
            }
            (None, None) => default_delta(experiment),
        };

        let eps_list = match fields.get("eps_list") {
            Some((line, v)) => {
                let list = parse_list(line, "eps_list", &v)?;
                if list.len() < 3 {
                    return Err(parse_err(line, "eps_list needs at least three values"));
                }
                if list.iter().any(|e| !(*e > 0.0)) || list.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(parse_err(line, "eps_list must be positive and strictly decreasing"));
                }
                list
            }
            None => default_eps(experiment),
        };

        let dt_list = match fields.get("dt_list") {
            Some((line, v)) => {
                let list = parse_list(line, "dt_list", &v)?;
                if list.is_empty() || list.iter().any(|d| !(*d >= 0.0)) || list.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(parse_err(line, "dt_list must be non-negative and strictly decreasing"));
                }
                list
            }
            None => vec![0.04, 0.02, 0.01],
        };

        let profile = match fields.get("profile") {
            Some((line, v)) if v != "bump" => {
                return Err(parse_err(line, format!("unknown mollifier profile `{v}` (available: bump)")));
            }
            _ => "bump".to_string(),
        };

        let tol = fields.positive("tol", 1e-6)?;
        let n_max = fields.count("n_max", 40)?;
        let time_nodes = fields.auto_count("time_nodes")?;
        let lambda = fields.number("lambda", 1.0)?;
        if lambda == 0.0 {
            let (line, _) = fields.get("lambda").expect("lambda given");
            return Err(parse_err(line, "lambda must be nonzero"));
        }
        let t_max = match fields.get("t_max") {
            Some((_, v)) if v == "auto" => None,
            Some(_) => Some(fields.positive("t_max", 0.0)?),
            None => None,
        };
        if let Some(t) = t_max {
            if lambda.abs() * t < deltaflow::resolvent::MIN_DAMPING {
                let (line, _) = fields.get("t_max").expect("t_max given");
                return Err(parse_err(line, "t_max too short: need |lambda|·t_max ≥ 20"));
            }
        }
        let output = match fields.get("output") {
            Some((_, v)) => base.join(v),
            None => base.join(format!("out/{}", experiment.name())),
        };

        Ok(Self {
            experiment,
            grid,
            time: fields.number("time", 0.25)?,
            delta,
            profile,
            eps_list,
            tol,
            n_max,
            time_nodes,
            output,
            seed: fields.count("seed", 0)? as u64,
            lambda,
            t_max,
            laplace_nodes: fields.auto_count("laplace_nodes")?,
            t0: fields.number("t0", 0.1)?,
            dt_list,
            k0: fields.positive("k0", 2.0)?,
            sigma_x: fields.positive("sigma_x", 3.0)?,
            step: fields.positive("step", 0.125)?,
            pmax_sanity: fields.flag("pmax_sanity", true)?,
            refine: fields.flag("refine", true)?,
            source: text.to_string(),
        })
    }
}

const KNOWN_KEYS: &[&str] = &[
    "grid",
    "time",
    "delta",
    "delta_file",
    "tail_bound",
    "profile",
    "eps_list",
    "tol",
    "n_max",
    "time_nodes",
    "output",
    "seed",
    "lambda",
    "t_max",
    "laplace_nodes",
    "t0",
    "dt_list",
    "k0",
    "sigma_x",
    "step",
    "pmax_sanity",
    "refine",
];

fn default_grid(e: Experiment) -> (usize, f64) {
    match e {
        Experiment::ValidationBoundState => (1024, 128.0),
        Experiment::ValidationScattering | Experiment::Relations => (512, 32.0),
        _ => (256, 32.0),
    }
}

fn default_delta(e: Experiment) -> DeltaConfig {
    let alpha = match e {
        Experiment::ValidationBoundState => -2.0,
        Experiment::ValidationScattering => 2.0,
        _ => 1.0,
    };
    DeltaConfig::single(alpha, 0.0).expect("valid default")
}

fn default_eps(e: Experiment) -> Vec<f64> {
    match e {
        Experiment::ValidationBoundState => vec![0.1, 0.05, 0.025],
        _ => vec![0.4, 0.2, 0.1, 0.05],
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{v}` for `{key}`")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let x: f64 = parse_value(line, key, s)?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(parse_err(line, format!("non-finite value in `{key}`")))
            }
        })
        .collect()
}

fn parse_inline_delta(line: usize, v: &str, tail: f64) -> Result<DeltaConfig, CliError> {
    let mut centers = Vec::new();
    for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, x) = item
            .split_once('@')
            .ok_or_else(|| parse_err(line, format!("expected `alpha @ x`, got `{item}`")))?;
        centers.push((parse_value(line, "delta", a.trim())?, parse_value(line, "delta", x.trim())?));
    }
    DeltaConfig::new(centers, tail).map_err(|e| parse_err(line, e.to_string()))
}

struct Fields<'a> {
    entries: &'a BTreeMap<String, (usize, String)>,
}

impl Fields<'_> {
    fn get(&self, key: &str) -> Option<(usize, String)> {
        self.entries.get(key).cloned()
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            Some((line, v)) => {
                let x: f64 = parse_value(line, key, &v)?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(parse_err(line, format!("`{key}` must be finite")))
                }
            }
            None => Ok(default),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x = self.number(key, default)?;
        match self.get(key) {
            Some((line, _)) if !(x > 0.0) => Err(parse_err(line, format!("`{key}` must be positive"))),
            _ => Ok(x),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            Some((line, v)) => parse_value(line, key, &v),
            None => Ok(default),
        }
    }

    fn auto_count(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(key) {
            Some((_, v)) if v == "auto" => Ok(None),
            Some((line, v)) => {
                let n: usize = parse_value(line, key, &v)?;
                if n == 0 {
                    return Err(parse_err(line, format!("`{key}` must be positive")));
                }
                Ok(Some(n))
            }
            None => Ok(None),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            Some((line, v)) => match v.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(parse_err(line, format!("`{key}` expects true or false"))),
            },
            None => Ok(default),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text, Path::new("/tmp"))
    }

    #[test]
    fn parses_full_section() {
        let c = parse(
            "# comment\n[propagator_convergence]\ngrid = 128, 16\ntime = 0.2\n\
             delta = 1 @ 0; -0.5 @ 1.5\neps_list = 0.4, 0.2, 0.1\ntol = 1e-7\n\
             time_nodes = 64\noutput = res\nseed = 9\npmax_sanity = false\n",
        )
        .unwrap();
        assert_eq!(c.experiment, Experiment::PropagatorConvergence);
        assert_eq!(c.grid, (128, 16.0));
        assert_eq!(c.delta.centers(), &[(1.0, 0.0), (-0.5, 1.5)]);
        assert_eq!(c.eps_list, vec![0.4, 0.2, 0.1]);
        assert_eq!(c.time_nodes, Some(64));
        assert_eq!(c.output, PathBuf::from("/tmp/res"));
        assert!(!c.pmax_sanity);
    }

    #[test]
    fn increasing_eps_list_is_rejected_with_line() {
        let err = parse("[propagator_convergence]\ntime = 0.25\neps_list = 0.1, 0.2, 0.4\n").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_input() {
        for text in [
            "grid = 16, 4\n",
            "[nonsense]\n",
            "[relations]\ncolour = red\n",
            "[relations]\ngrid = 15, 4\n",
            "[relations]\ngrid = 100, 4\n",
            "[relations]\ntol = -1\n",
            "[relations]\ntime = 1\ntime = 2\n",
            "[relations]\nlambda = 0\n",
            "[resolvent_convergence]\nt_max = 5\n",
            "[relations]\n[continuity]\n",
            "[relations]\ndelta = 1 at 0\n",
            "[relations]\ndelta_file = /definitely/missing.txt\n",
        ] {
            assert!(matches!(parse(text), Err(CliError::Parse { .. })), "{text}");
        }
    }
}
