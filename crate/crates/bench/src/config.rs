//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//! algorithms = ["rspg", "2-rspg", "2-rspg-v"]
//! budgets = [1000, 5000, 25000]
//!
//! [[scenarios]]
//! name = "lsq-100"
//! problem = "least_squares"
//! n = 100
//! noise_sigma = 0.1
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rspg_core::problems::ProblemSpec;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Solvers the runner knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "pg")]
    Pg,
    #[serde(rename = "rspg")]
    Rspg,
    #[serde(rename = "2-rspg")]
    TwoPhase,
    #[serde(rename = "2-rspg-v")]
    TwoPhaseV,
    #[serde(rename = "rspgf")]
    Rspgf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Pg,
        Algorithm::Rspg,
        Algorithm::TwoPhase,
        Algorithm::TwoPhaseV,
        Algorithm::Rspgf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pg => "pg",
            Algorithm::Rspg => "rspg",
            Algorithm::TwoPhase => "2-rspg",
            Algorithm::TwoPhaseV => "2-rspg-v",
            Algorithm::Rspgf => "rspgf",
        }
    }

    /// Stream label; fixed per algorithm so adding one to a grid leaves the others unchanged.
    pub fn stream_id(self) -> u64 {
        match self {
            Algorithm::Pg => 1,
            Algorithm::Rspg => 2,
            Algorithm::TwoPhase => 3,
            Algorithm::TwoPhaseV => 4,
            Algorithm::Rspgf => 5,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named rules for the post-selection sample size `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostSampleRule {
    /// `ceil(N_bar / 2)` with `N_bar` the per-run oracle budget.
    HalfBudget,
    /// `ceil(N / 2)` with `N` the iteration limit of one run.
    HalfIterations,
}

/// Post-selection sample size: a named rule or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PostSamples {
    Fixed(usize),
    Rule(PostSampleRule),
}

impl Default for PostSamples {
    fn default() -> Self {
        PostSamples::Rule(PostSampleRule::HalfBudget)
    }
}

/// Replaces pilot estimates with known constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    pub lipschitz: Option<f64>,
    pub sigma: Option<f64>,
    pub d_tilde: Option<f64>,
    /// `D_psi`; defaults to `sqrt(Psi(x_1) / L)`, an upper bound when `Psi* >= 0`.
    pub d_psi: Option<f64>,
    pub gradient_bound: Option<f64>,
}

impl ConstantOverrides {
    fn validate(&self, scenario: &str) -> Result<()> {
        let fields = [
            ("lipschitz", self.lipschitz, false),
            ("sigma", self.sigma, true),
            ("d_tilde", self.d_tilde, false),
            ("d_psi", self.d_psi, true),
            ("gradient_bound", self.gradient_bound, true),
        ];
        for (name, value, zero_ok) in fields {
            if let Some(v) = value {
                let ok = v.is_finite() && (v > 0.0 || (zero_ok && v == 0.0));
                if !ok {
                    return Err(BenchError::Config(format!(
                        "scenario {scenario}: constant {name} = {v} is out of range"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One problem of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Seed for the problem instance; derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    #[serde(default)]
    pub constants: ConstantOverrides,
    #[serde(flatten)]
    pub problem: ProblemSpec,
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Rspg, Algorithm::TwoPhase, Algorithm::TwoPhaseV]
}

fn default_budgets() -> Vec<u64> {
    vec![1000, 5000, 25000]
}

fn default_replications() -> usize {
    20
}

fn default_runs() -> usize {
    5
}

fn default_evaluation_samples() -> usize {
    rspg_core::problems::DEFAULT_EVALUATION_SAMPLES
}

fn default_pilot_samples() -> usize {
    rspg_core::problems::DEFAULT_PILOT_SAMPLES
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Oracle budgets `NS`.
    #[serde(default = "default_budgets")]
    pub budgets: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// `S`: runs of 2-RSPG, candidates of 2-RSPG-V.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// `T`, samples per candidate in post-selection.
    #[serde(default)]
    pub post_samples: PostSamples,
    /// `K`, samples used to score a returned point.
    #[serde(default = "default_evaluation_samples")]
    pub evaluation_samples: usize,
    /// `N0`, samples per pilot point when estimating problem constants.
    #[serde(default = "default_pilot_samples")]
    pub pilot_samples: usize,
    /// Size of the fixed sample average PG runs on when the problem has no exact gradient;
    /// defaults to `pilot_samples`.
    #[serde(default)]
    pub pg_sample_size: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Default output directory; `--out` takes precedence.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub scenarios: Vec<Scenario>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        check_scenario_keys(text, &config)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(BenchError::Config(msg));
        if self.scenarios.is_empty() {
            return fail("at least one scenario is required".into());
        }
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return fail("budgets must be a nonempty list of positive integers".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.post_samples == PostSamples::Fixed(0) {
            return fail("post_samples must be at least 1".into());
        }
        if self.evaluation_samples == 0 {
            return fail("evaluation_samples must be at least 1".into());
        }
        if self.pilot_samples < 2 {
            return fail("pilot_samples must be at least 2".into());
        }
        if self.pg_sample_size == Some(0) {
            return fail("pg_sample_size must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha = {} must be positive", self.alpha));
        }
        if !unique(self.algorithms.iter()) {
            return fail("algorithms contain duplicates".into());
        }
        if !unique(self.budgets.iter()) {
            return fail("budgets contain duplicates".into());
        }
        if !unique(self.scenarios.iter().map(|s| &s.name)) {
            return fail("scenario names must be unique".into());
        }
        for s in &self.scenarios {
            if s.name.is_empty() || s.name.contains([',', '"', '\n']) {
                return fail(format!("scenario name {:?} is not a plain label", s.name));
            }
            s.constants.validate(&s.name)?;
        }
        Ok(())
    }

    pub fn pg_samples(&self) -> usize {
        self.pg_sample_size.unwrap_or(self.pilot_samples)
    }
}

/// Flattened problem fields cannot reject unknown keys through serde, so compare each
/// scenario table against the keys its parsed form serializes to.
fn check_scenario_keys(text: &str, config: &ExperimentConfig) -> Result<()> {
    let raw: toml::Table = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    let Some(toml::Value::Array(tables)) = raw.get("scenarios") else {
        return Ok(());
    };
    for (table, parsed) in tables.iter().zip(&config.scenarios) {
        let known = toml::Table::try_from(parsed).map_err(|e| BenchError::Config(e.to_string()))?;
        if let toml::Value::Table(table) = table {
            if let Some(key) = table
                .keys()
                .find(|k| !known.contains_key(*k) && k.as_str() != "instance_seed")
            {
                return Err(BenchError::Config(format!(
                    "scenario {}: unknown key `{key}`",
                    parsed.name
                )));
            }
        }
    }
    Ok(())
}

fn unique<T: Eq + std::hash::Hash>(items: impl Iterator<Item = T>) -> bool {
    let mut seen = HashSet::new();
    items.into_iter().all(|x| seen.insert(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[scenarios]]
name = "lsq"
problem = "least_squares"
n = 20
noise_sigma = 0.05
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.budgets, vec![1000, 5000, 25000]);
        assert_eq!(c.replications, 20);
        assert_eq!(c.runs, 5);
        assert_eq!(c.evaluation_samples, 75_000);
        assert_eq!(c.pilot_samples, 200);
        assert_eq!(
            c.post_samples,
            PostSamples::Rule(PostSampleRule::HalfBudget)
        );
        assert_eq!(c.algorithms, default_algorithms());
        match &c.scenarios[0].problem {
            ProblemSpec::LeastSquares(s) => {
                assert_eq!(s.n, 20);
                assert_eq!(s.noise_sigma, 0.05);
                assert_eq!(s.sparsity, 0.05);
            }
            other => panic!("unexpected problem {other:?}"),
        }
    }

    #[test]
    fn parses_full_grid() {
        let text = r#"
seed = 7
algorithms = ["pg", "rspg", "2-rspg", "2-rspg-v", "rspgf"]
budgets = [100, 200]
replications = 3
runs = 2
post_samples = "half_iterations"

[[scenarios]]
name = "svm"
problem = "s3vm"
n = 10
label_noise = 0.2
instance_seed = 99
[scenarios.constants]
lipschitz = 2.0
sigma = 0.0
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.algorithms.len(), 5);
        assert_eq!(
            c.post_samples,
            PostSamples::Rule(PostSampleRule::HalfIterations)
        );
        let s = &c.scenarios[0];
        assert_eq!(s.instance_seed, Some(99));
        assert_eq!(s.constants.lipschitz, Some(2.0));
        assert_eq!(s.problem.noise(), 0.2);
    }

    #[test]
    fn fixed_post_samples() {
        let text = format!("post_samples = 12\n{MINIMAL}");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.post_samples, PostSamples::Fixed(12));
    }

    #[test]
    fn rejects_bad_grids() {
        for head in [
            "replications = 0",
            "budgets = []",
            "budgets = [0]",
            "budgets = [5, 5]",
            "runs = 0",
            "algorithms = [\"sgd\"]",
            "algorithms = []",
            "post_samples = 0",
            "pilot_samples = 1",
            "unknown_key = 3",
        ] {
            let text = format!("{head}\n{MINIMAL}");
            let err = ExperimentConfig::from_toml(&text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{head}");
        }
    }

    #[test]
    fn rejects_bad_constants() {
        let text = format!("{MINIMAL}[scenarios.constants]\nlipschitz = 0.0\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{MINIMAL}[scenarios.constants]\nsigma = -1.0\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn rejects_unknown_problem_keys() {
        let text = MINIMAL.replace("noise_sigma", "noise_sigmaa");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("noise_sigmaa"), "{err}");
    }

    #[test]
    fn rejects_duplicate_scenarios() {
        let text = format!("{MINIMAL}{MINIMAL}");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.name()));
        }
    }
}
