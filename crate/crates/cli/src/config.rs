//! Run configuration: an optional TOML file overlaid by command-line flags.
//!
//! Every key is optional; a missing key takes the flag value, then the
//! default. Recognised keys:
//!
//! ```toml
//! function = "f2"        # f1, f2 or linear
//! a = 1000.0
//! m = 1
//! mu = 2
//! n = 10                 # stencil size, defaults to M(d, m + mu)
//! eps = 1e-5
//! seed = 0
//! shifts = [[0.08], [0.4]]
//! reference_shifts = false
//! l_max = 40
//! n_cap = 316227
//! grid_count = 10
//! policy = "changed"     # changed or violating-only
//! strict = false
//! out_dir = "out"
//! ```

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use kadapt::driver::DEFAULT_NODE_CAP;
use kadapt::fixtures::reference;
use kadapt::{AdaptiveConfig, Cell, ExactOperator, ExtensionMode, FunctionKind, Point, Task, TestFunction, UpdatePolicy};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Changed,
    ViolatingOnly,
}

impl From<PolicyArg> for UpdatePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Changed => UpdatePolicy::ChangedNeighborhoods,
            PolicyArg::ViolatingOnly => UpdatePolicy::ViolatingOnly,
        }
    }
}

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub function: Option<String>,
    pub a: Option<f64>,
    pub m: Option<usize>,
    pub mu: Option<usize>,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub shifts: Option<Vec<Vec<f64>>>,
    pub reference_shifts: Option<bool>,
    pub l_max: Option<usize>,
    pub n_cap: Option<usize>,
    pub grid_count: Option<usize>,
    pub policy: Option<PolicyArg>,
    pub strict: Option<bool>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by the four adaptive subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config file; flags take precedence over its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Test function: f1, f2 or linear (f(x) = sum of coordinates).
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub mu: Option<usize>,
    /// Stencil size; defaults to M(d, m + mu).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Seed for the random shifts.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Explicit shift, repeatable: `x` in 1-D, `x,y` in 2-D.
    #[arg(long = "shift", allow_hyphen_values = true)]
    pub shifts: Vec<String>,
    /// Use the shipped reference shifts for this dimension.
    #[arg(long)]
    pub reference_shifts: bool,
    #[arg(long)]
    pub l_max: Option<usize>,
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// Initial grid points per axis.
    #[arg(long)]
    pub grid_count: Option<usize>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Fail on a degenerate extension instead of falling back to least squares.
    #[arg(long)]
    pub strict: bool,
}

/// The field sampled by a run together with its exact operators.
pub enum Field {
    Bumps(TestFunction),
    Linear { dim: usize },
}

impl Field {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            Field::Bumps(f) => f.eval(x),
            Field::Linear { .. } => x.coords().iter().sum(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Field::Bumps(f) => f.kind().to_string(),
            Field::Linear { .. } => "linear".into(),
        }
    }
}

impl ExactOperator for Field {
    fn cell_integral(&self, cell: &Cell) -> f64 {
        match self {
            Field::Bumps(f) => f.cell_integral(cell),
            Field::Linear { .. } => cell.measure() * cell.barycenter().coords().iter().sum::<f64>(),
        }
    }

    fn gradient(&self, x: &Point) -> Vec<f64> {
        match self {
            Field::Bumps(f) => f.gradient(x),
            Field::Linear { dim } => vec![1.0; *dim],
        }
    }

    fn domain_integral(&self) -> Option<f64> {
        match self {
            Field::Bumps(f) => f.exact_integral().ok(),
            Field::Linear { .. } => Some(0.0),
        }
    }
}

/// A fully resolved adaptive run.
pub struct Resolved {
    pub field: Field,
    pub config: AdaptiveConfig,
    pub seed: u64,
    pub a: f64,
    pub out_dir: Option<PathBuf>,
}

fn parse_shift(s: &str, dim: usize) -> Result<Point, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Config(format!("bad shift '{s}': {e}"))))
        .collect::<Result<_, _>>()?;
    if v.len() != dim {
        return Err(CliError::Config(format!("shift '{s}' has {} coordinates, expected {dim}", v.len())));
    }
    Ok(Point::new(&v))
}

/// Build the field from a function name, shifts or a seed.
pub fn make_field(name: &str, a: f64, dim: usize, shifts: Option<Vec<Point>>, seed: u64) -> Result<Field, CliError> {
    if name.eq_ignore_ascii_case("linear") {
        return Ok(Field::Linear { dim });
    }
    let kind: FunctionKind = name.parse()?;
    Ok(Field::Bumps(match shifts {
        Some(s) => TestFunction::new(kind, a, s)?,
        None => TestFunction::random(kind, a, dim, seed)?,
    }))
}

impl RunArgs {
    pub fn resolve(&self, dim: usize, task: Task) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let function = self.function.clone().or(file.function).unwrap_or_else(|| "f2".into());
        let a = self.a.or(file.a).unwrap_or(100.0);
        let m = self.m.or(file.m).unwrap_or(1);
        let eps = self.eps.or(file.eps).unwrap_or(1e-5);
        let seed = self.seed.or(file.seed).unwrap_or(0);
        let shifts = if !self.shifts.is_empty() {
            Some(self.shifts.iter().map(|s| parse_shift(s, dim)).collect::<Result<Vec<_>, _>>()?)
        } else if self.reference_shifts || file.reference_shifts.unwrap_or(false) {
            let r = reference();
            Some(if dim == 1 { r.quad1d.shift_points() } else { r.quad2d.shift_points() })
        } else {
            file.shifts.map(|s| s.iter().map(|v| Point::new(v)).collect())
        };
        if shifts.as_ref().is_some_and(|s| s.iter().any(|p| p.dim() != dim)) {
            return Err(CliError::Config(format!("shifts must have {dim} coordinates")));
        }
        let field = make_field(&function, a, dim, shifts, seed)?;

        let mut config = AdaptiveConfig::new(dim, task, m, eps);
        config.mu = self.mu.or(file.mu).unwrap_or(config.mu);
        config.n = self.n.or(file.n);
        config.l_max = self.l_max.or(file.l_max).unwrap_or(config.l_max);
        config.n_cap = self.n_cap.or(file.n_cap).unwrap_or(DEFAULT_NODE_CAP);
        config.grid_count = self.grid_count.or(file.grid_count).unwrap_or(config.grid_count);
        config.policy = self.policy.or(file.policy).map(Into::into).unwrap_or_default();
        if self.strict || file.strict.unwrap_or(false) {
            config.extension = ExtensionMode::Strict;
        }
        config.validate()?;
        Ok(Resolved { field, config, seed, a, out_dir: file.out_dir })
    }
}

/// Comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    let v: Vec<T> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|e| CliError::Config(format!("bad list entry '{t}': {e}"))))
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(CliError::Config(format!("empty list '{s}'")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "a = 10.0\nm = 3\neps = 1e-4\nshifts = [[0.5]]\npolicy = \"violating-only\"\n").unwrap();
        let args = RunArgs { config: Some(path), m: Some(2), ..Default::default() };
        let r = args.resolve(1, Task::Quadrature).unwrap();
        assert_eq!(r.a, 10.0);
        assert_eq!(r.config.m, 2);
        assert_eq!(r.config.eps, 1e-4);
        assert_eq!(r.config.policy, UpdatePolicy::ViolatingOnly);
        match r.field {
            Field::Bumps(f) => assert_eq!(f.shifts(), &[Point::from1(0.5)]),
            Field::Linear { .. } => panic!("expected bumps"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "alpha = 1\n").unwrap();
        assert!(matches!(FileConfig::load(&path), Err(CliError::Config(_))));
    }

    #[test]
    fn shift_parsing() {
        assert_eq!(parse_shift("0.1, -0.2", 2).unwrap(), Point::from2(0.1, -0.2));
        assert!(parse_shift("0.1", 2).is_err());
        assert!(parse_shift("x", 1).is_err());
        assert_eq!(parse_list::<f64>("1,10, 100").unwrap(), vec![1.0, 10.0, 100.0]);
        assert!(parse_list::<usize>("").is_err());
    }
}
