//! Experiment configuration: defaults, `key = value` files, validation and
//! construction of the problem, geometry, schedule and start point.

use anyhow::{anyhow, bail, Context, Result};
use balm_core::problems::{
    make_counterexample_lp, make_log_sum_exp, make_mdp_lp, make_piecewise_max, make_random_qp, DEFAULT_DISCOUNT,
};
use balm_core::solvers::Algorithm;
use balm_core::{BregmanGeometry, Domain, Geometry64, Problem64, Schedule64, Sense};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemName {
    Pmax,
    Lse,
    Mdp,
    Qp,
    Counterexample,
}

impl ProblemName {
    pub fn name(self) -> &'static str {
        match self {
            ProblemName::Pmax => "pmax",
            ProblemName::Lse => "lse",
            ProblemName::Mdp => "mdp",
            ProblemName::Qp => "qp",
            ProblemName::Counterexample => "counterexample",
        }
    }

    /// Problems without linear constraints, solved by the prox on the simplex.
    pub fn is_direct(self) -> bool {
        matches!(self, ProblemName::Pmax | ProblemName::Lse)
    }
}

impl FromStr for ProblemName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pmax" => ProblemName::Pmax,
            "lse" => ProblemName::Lse,
            "mdp" => ProblemName::Mdp,
            "qp" => ProblemName::Qp,
            "counterexample" | "cex" => ProblemName::Counterexample,
            _ => bail!("unknown problem `{s}` (expected pmax, lse, mdp, qp or counterexample)"),
        })
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryName {
    Euclidean,
    Entropy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    /// Ones under entropy, zeros under the Euclidean kernel, the barycentre
    /// on the simplex.
    Default,
    Zeros,
    Ones,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemName,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub discount: f64,
    pub algorithm: Algorithm,
    /// `None` picks entropy where it applies and Euclidean otherwise.
    pub geometry: Option<GeometryName>,
    pub g: f64,
    pub schedule: String,
    pub iters: usize,
    pub lambda0: StartSpec,
    pub inner_tol: f64,
    pub checkpoints: Vec<usize>,
    pub output_dir: PathBuf,
    pub a0: f64,
    pub l: f64,
    pub strict: bool,
    pub reference_budget: usize,
    pub samples: usize,
    pub plot: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemName::Lse,
            m: 15,
            n: 20,
            seed: 0,
            discount: DEFAULT_DISCOUNT,
            algorithm: Algorithm::Bpp,
            geometry: None,
            g: 1.0,
            schedule: "const:1".into(),
            iters: 100,
            lambda0: StartSpec::Default,
            inner_tol: 1e-10,
            checkpoints: Vec::new(),
            output_dir: PathBuf::from("balm-out"),
            a0: 1.0,
            l: 1.0,
            strict: false,
            reference_budget: 2000,
            samples: 20,
            plot: true,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| anyhow!("bad value `{value}` for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("bad value `{value}` for `{key}`: expected true or false"),
    }
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 20] = [
        "problem",
        "m",
        "n",
        "seed",
        "discount",
        "algo",
        "geometry",
        "G",
        "schedule",
        "iters",
        "lambda0",
        "inner_tol",
        "checkpoints",
        "output_dir",
        "a0",
        "L",
        "strict",
        "reference_budget",
        "samples",
        "plot",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "problem" => self.problem = value.parse()?,
            "m" => self.m = parse_num(key, value)?,
            "n" => self.n = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "discount" => self.discount = parse_num(key, value)?,
            "algo" | "algorithm" => {
                self.algorithm = value.parse().map_err(|e: balm_core::Error| anyhow!("{e}"))?
            }
            "geometry" => {
                self.geometry = match value {
                    "euclidean" => Some(GeometryName::Euclidean),
                    "entropy" => Some(GeometryName::Entropy),
                    "auto" => None,
                    _ => bail!("unknown geometry `{value}` (expected euclidean, entropy or auto)"),
                }
            }
            "G" | "g" => self.g = parse_num(key, value)?,
            "schedule" => self.schedule = value.to_string(),
            "iters" => self.iters = parse_num(key, value)?,
            "lambda0" => {
                self.lambda0 = match value {
                    "default" => StartSpec::Default,
                    "zeros" => StartSpec::Zeros,
                    "ones" => StartSpec::Ones,
                    _ => match value.strip_prefix("file:") {
                        Some(p) => StartSpec::File(PathBuf::from(p)),
                        None => bail!("bad value `{value}` for `lambda0`: expected default, zeros, ones or file:PATH"),
                    },
                }
            }
            "inner_tol" => self.inner_tol = parse_num(key, value)?,
            "checkpoints" => {
                self.checkpoints = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<Result<_>>()?
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "a0" | "A0" => self.a0 = parse_num(key, value)?,
            "L" | "l" => self.l = parse_num(key, value)?,
            "strict" => self.strict = parse_bool(key, value)?,
            "reference_budget" => self.reference_budget = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "plot" => self.plot = parse_bool(key, value)?,
            _ => bail!("unknown key `{key}` (known keys: {})", Self::KEYS.join(", ")),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// ignored; errors carry the file name and line.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{origin}:{}: expected `key = value`, got `{line}`", i + 1);
            };
            self.set(key.trim(), value).map_err(|e| anyhow!("{origin}:{}: {e}", i + 1))?;
        }
        Ok(())
    }

    /// `key=value` pairs given on the command line.
    pub fn apply_pairs(&mut self, pairs: &[String]) -> Result<()> {
        for p in pairs {
            let (key, value) = p.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{p}`"))?;
            self.set(key.trim(), value).map_err(|e| anyhow!("--set {p}: {e}"))?;
        }
        Ok(())
    }

    pub fn resolved_geometry(&self) -> GeometryName {
        self.geometry.unwrap_or(match (self.problem, self.algorithm) {
            (ProblemName::Counterexample, _) => GeometryName::Euclidean,
            (_, Algorithm::Guler1 | Algorithm::Guler2 | Algorithm::NesterovDa) => GeometryName::Euclidean,
            _ => GeometryName::Entropy,
        })
    }

    /// Checks compatibility and builds everything a run needs.
    pub fn prepare(&self) -> Result<Prepared> {
        if self.iters == 0 {
            bail!("iters must be at least 1");
        }
        if self.m == 0 || self.n == 0 {
            bail!("m and n must be positive");
        }
        if !(self.inner_tol > 0.0) {
            bail!("inner_tol must be positive");
        }
        use Algorithm::*;
        let algo = self.algorithm;
        let geometry_name = self.resolved_geometry();
        let classical = matches!(algo, Guler1 | Guler2 | NesterovDa);
        if self.problem.is_direct() && matches!(algo, Balm | AccBalm) {
            bail!("{algo} needs a linearly constrained problem; {} has none", self.problem);
        }
        if classical && self.problem != ProblemName::Counterexample {
            bail!("{algo} needs equality constraints; use problem = counterexample");
        }
        if classical && geometry_name != GeometryName::Euclidean {
            bail!("{algo} runs in the Euclidean geometry only");
        }
        if self.problem.is_direct() && geometry_name != GeometryName::Entropy {
            bail!("{} lives on the simplex and needs the entropy geometry", self.problem);
        }
        if self.problem == ProblemName::Counterexample && geometry_name != GeometryName::Euclidean {
            bail!("equality multipliers are free; the counterexample needs the Euclidean geometry");
        }
        if self.problem == ProblemName::Counterexample && self.m < self.n {
            bail!("the counterexample needs m ≥ n for a full column rank A");
        }

        let problem: Problem64 = match self.problem {
            ProblemName::Pmax => make_piecewise_max(self.m, self.n, self.seed),
            ProblemName::Lse => make_log_sum_exp(self.m, self.n, self.seed),
            ProblemName::Mdp => make_mdp_lp(self.n, self.m, self.discount, self.seed),
            ProblemName::Qp => make_random_qp(self.m, self.n, self.seed),
            ProblemName::Counterexample => make_counterexample_lp(self.m, self.n, self.seed),
        }?;

        let domain = match problem.constraint() {
            None => Domain::Simplex(problem.dim()),
            Some(c) if c.sense == Sense::Equality => Domain::FullSpace(problem.constraint_dim()),
            Some(_) => Domain::NonnegativeOrthant(problem.constraint_dim()),
        };
        let geometry = match geometry_name {
            GeometryName::Euclidean => BregmanGeometry::euclidean(domain),
            GeometryName::Entropy => BregmanGeometry::entropy(domain)?,
        }
        .with_scaling_constant(self.g)?;

        let schedule: Schedule64 = match self.schedule.strip_prefix("file:") {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read schedule file {p}"))?;
                Schedule64::from_list(&text)?
            }
            None => self.schedule.parse()?,
        };
        schedule.validate(self.iters)?;
        if classical && !matches!(schedule, Schedule64::Constant(_)) {
            bail!("{algo} needs a constant schedule");
        }

        let dim = geometry.dim();
        let lambda0 = match &self.lambda0 {
            StartSpec::Default => geometry.default_start(),
            StartSpec::Zeros => vec![0.0; dim],
            StartSpec::Ones => vec![1.0; dim],
            StartSpec::File(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                text.split_whitespace()
                    .map(|t| parse_num("lambda0", t))
                    .collect::<Result<Vec<f64>>>()?
            }
        };
        if lambda0.len() != dim {
            bail!("lambda0 has {} entries, the geometry needs {dim}", lambda0.len());
        }
        Ok(Prepared { problem, geometry, schedule, lambda0 })
    }

    /// Short tag of the schedule usable in a path.
    pub fn schedule_tag(&self) -> String {
        self.schedule.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem64,
    pub geometry: Geometry64,
    pub schedule: Schedule64,
    pub lambda0: Vec<f64>,
}

/// Splits `const:1,poly:1,1` into schedules: a comma starts a new item only
/// when the next token names a kind.
pub fn split_schedules(list: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match out.last_mut() {
            Some(last) if !tok.contains(':') => {
                last.push(',');
                last.push_str(tok);
            }
            _ => out.push(tok.to_string()),
        }
    }
    out
}
