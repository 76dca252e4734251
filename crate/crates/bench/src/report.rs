//! Per-replication rows, cell aggregates and the files written for a run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::experiment::ScenarioRecord;

pub const REPORT_FILE: &str = "report.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const SERIES_FILE: &str = "series.csv";

/// One replication of one cell; the CSV schema of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub scenario: String,
    pub n: usize,
    pub noise: f64,
    pub algorithm: Algorithm,
    #[serde(rename = "NS")]
    pub ns: u64,
    pub replication: usize,
    pub mapping_norm_sq: f64,
    pub objective: f64,
    pub zero_ratio: Option<f64>,
    /// Optimization-phase oracle calls (SZO calls for RSPGF).
    pub sfo_calls: u64,
    /// Calls spent in post-selection, outside the `NS` budget.
    pub post_calls: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub scenario: String,
    pub algorithm: Algorithm,
    #[serde(rename = "NS")]
    pub ns: u64,
    /// `None` when every replication of the cell was skipped.
    pub replication: Option<usize>,
    pub reason: String,
}

/// Mean and unbiased sample variance; the variance is absent for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub variance: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let k = values.len() as f64;
        // running mean, exact for constant samples
        let mean = values
            .iter()
            .enumerate()
            .fold(0.0, |m, (i, v)| m + (v - m) / (i + 1) as f64);
        let variance = (values.len() > 1)
            .then(|| values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0));
        Stat { mean, variance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub scenario: String,
    pub algorithm: Algorithm,
    #[serde(rename = "NS")]
    pub ns: u64,
    pub replications: usize,
    pub mapping_norm_sq: Stat,
    pub objective: Stat,
    pub zero_ratio: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub scenarios: Vec<ScenarioRecord>,
    pub rows: Vec<ReplicationRow>,
    pub skipped: Vec<SkippedCell>,
    pub aggregates: Vec<CellAggregate>,
}

type SortKey = (usize, usize, usize, usize);

fn position<T: PartialEq>(items: &[T], x: &T) -> usize {
    items.iter().position(|y| y == x).unwrap_or(usize::MAX)
}

fn row_key(
    config: &ExperimentConfig,
    scenario: &str,
    a: Algorithm,
    ns: u64,
) -> (usize, usize, usize) {
    let s = config
        .scenarios
        .iter()
        .position(|s| s.name == scenario)
        .unwrap_or(usize::MAX);
    (
        s,
        position(&config.algorithms, &a),
        position(&config.budgets, &ns),
    )
}

fn sort_key(config: &ExperimentConfig, r: &ReplicationRow) -> SortKey {
    let (s, a, b) = row_key(config, &r.scenario, r.algorithm, r.ns);
    (s, a, b, r.replication)
}

/// Aggregates per (scenario, algorithm, NS) cell, in row order.
pub fn compute_aggregates(rows: &[ReplicationRow]) -> Vec<CellAggregate> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let head = &rows[start];
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| {
                    r.scenario == head.scenario && r.algorithm == head.algorithm && r.ns == head.ns
                })
                .count();
        let cell = &rows[start..end];
        let pick = |f: fn(&ReplicationRow) -> f64| cell.iter().map(f).collect::<Vec<_>>();
        let zero: Option<Vec<f64>> = cell.iter().map(|r| r.zero_ratio).collect();
        out.push(CellAggregate {
            scenario: head.scenario.clone(),
            algorithm: head.algorithm,
            ns: head.ns,
            replications: cell.len(),
            mapping_norm_sq: Stat::of(&pick(|r| r.mapping_norm_sq)),
            objective: Stat::of(&pick(|r| r.objective)),
            zero_ratio: zero.map(|z| Stat::of(&z)),
        });
        start = end;
    }
    out
}

impl ExperimentReport {
    /// Sorts rows and skipped cells by grid position and computes the aggregates.
    pub fn assemble(
        config: ExperimentConfig,
        scenarios: Vec<ScenarioRecord>,
        mut rows: Vec<ReplicationRow>,
        mut skipped: Vec<SkippedCell>,
    ) -> Self {
        rows.sort_by_key(|r| sort_key(&config, r));
        skipped.sort_by_key(|s| {
            let (a, b, c) = row_key(&config, &s.scenario, s.algorithm, s.ns);
            (a, b, c, s.replication.map_or(0, |r| r + 1))
        });
        let aggregates = compute_aggregates(&rows);
        ExperimentReport {
            config,
            scenarios,
            rows,
            skipped,
            aggregates,
        }
    }

    pub fn aggregate(
        &self,
        scenario: &str,
        algorithm: Algorithm,
        ns: u64,
    ) -> Option<&CellAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.scenario == scenario && a.algorithm == algorithm && a.ns == ns)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| BenchError::Runtime(format!("cannot serialize report: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a report and checks that its aggregates match its rows exactly.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: ExperimentReport =
            serde_json::from_str(text).map_err(|e| BenchError::Report(e.to_string()))?;
        report.check()?;
        Ok(report)
    }

    pub fn check(&self) -> Result<()> {
        let sorted = self
            .rows
            .windows(2)
            .all(|w| sort_key(&self.config, &w[0]) < sort_key(&self.config, &w[1]));
        if !sorted {
            return Err(BenchError::Report("rows are not in grid order".into()));
        }
        if compute_aggregates(&self.rows) != self.aggregates {
            return Err(BenchError::Report(
                "aggregates do not match the replication rows".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn results_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(RESULTS_HEADER)
                .map_err(|e| BenchError::Runtime(e.to_string()))?;
        }
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| BenchError::Runtime(e.to_string()))?;
        }
        finish_csv(w)
    }

    /// Long-format aggregate table: one line per cell and metric.
    pub fn series_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "scenario",
            "n",
            "noise",
            "algorithm",
            "NS",
            "metric",
            "mean",
            "variance",
            "replications",
        ])
        .map_err(|e| BenchError::Runtime(e.to_string()))?;
        for a in &self.aggregates {
            let (n, noise) = self
                .scenarios
                .iter()
                .find(|s| s.name == a.scenario)
                .map(|s| (s.n.to_string(), s.noise.to_string()))
                .unwrap_or_default();
            let metrics = [
                ("mapping_norm_sq", Some(a.mapping_norm_sq)),
                ("objective", Some(a.objective)),
                ("zero_ratio", a.zero_ratio),
            ];
            for (metric, stat) in metrics {
                let Some(stat) = stat else { continue };
                w.write_record([
                    a.scenario.as_str(),
                    &n,
                    &noise,
                    a.algorithm.name(),
                    &a.ns.to_string(),
                    metric,
                    &stat.mean.to_string(),
                    &stat.variance.map(|v| v.to_string()).unwrap_or_default(),
                    &a.replications.to_string(),
                ])
                .map_err(|e| BenchError::Runtime(e.to_string()))?;
            }
        }
        finish_csv(w)
    }

    /// Writes `report.json`, `results.csv` and `series.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        let files = [
            (REPORT_FILE, self.to_json()?),
            (RESULTS_FILE, self.results_csv()?),
            (SERIES_FILE, self.series_csv()?),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
        }
        Ok(())
    }
}

pub const RESULTS_HEADER: [&str; 12] = [
    "scenario",
    "n",
    "noise",
    "algorithm",
    "NS",
    "replication",
    "mapping_norm_sq",
    "objective",
    "zero_ratio",
    "sfo_calls",
    "post_calls",
    "wall_ms",
];

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Runtime(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scenario: &str, algorithm: Algorithm, ns: u64, rep: usize, g: f64) -> ReplicationRow {
        ReplicationRow {
            scenario: scenario.into(),
            n: 10,
            noise: 0.1,
            algorithm,
            ns,
            replication: rep,
            mapping_norm_sq: g,
            objective: 2.0 * g,
            zero_ratio: Some(0.5),
            sfo_calls: ns,
            post_calls: 0,
            wall_ms: 0,
        }
    }

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
algorithms = ["rspg", "2-rspg"]
budgets = [100, 200]
replications = 2
[[scenarios]]
name = "a"
problem = "least_squares"
n = 10
"#,
        )
        .unwrap()
    }

    #[test]
    fn two_point_sample() {
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, Some(2.0));
    }

    #[test]
    fn single_value_has_no_variance() {
        let s = Stat::of(&[4.0]);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.variance, None);
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        assert_eq!(Stat::of(&[0.1, 0.1, 0.1]).variance, Some(0.0));
    }

    #[test]
    fn assemble_sorts_into_grid_order() {
        let rows = vec![
            row("a", Algorithm::TwoPhase, 100, 1, 4.0),
            row("a", Algorithm::Rspg, 200, 0, 1.0),
            row("a", Algorithm::TwoPhase, 100, 0, 2.0),
            row("a", Algorithm::Rspg, 200, 1, 3.0),
        ];
        let r = ExperimentReport::assemble(config(), vec![], rows, vec![]);
        let order: Vec<_> = r
            .rows
            .iter()
            .map(|r| (r.algorithm, r.ns, r.replication))
            .collect();
        assert_eq!(
            order,
            vec![
                (Algorithm::Rspg, 200, 0),
                (Algorithm::Rspg, 200, 1),
                (Algorithm::TwoPhase, 100, 0),
                (Algorithm::TwoPhase, 100, 1),
            ]
        );
        assert_eq!(r.aggregates.len(), 2);
        assert_eq!(
            r.aggregates[0].mapping_norm_sq,
            Stat {
                mean: 2.0,
                variance: Some(2.0)
            }
        );
        assert_eq!(r.aggregates[1].objective.mean, 6.0);
    }

    #[test]
    fn json_round_trip_and_tamper_check() {
        let rows = vec![
            row("a", Algorithm::Rspg, 100, 0, 0.1),
            row("a", Algorithm::Rspg, 100, 1, 0.7),
        ];
        let r = ExperimentReport::assemble(config(), vec![], rows, vec![]);
        let text = r.to_json().unwrap();
        assert_eq!(ExperimentReport::from_json(&text).unwrap(), r);

        let mut bad = r.clone();
        bad.aggregates[0].mapping_norm_sq.mean += 1e-12;
        let err = ExperimentReport::from_json(&bad.to_json().unwrap()).unwrap_err();
        assert!(matches!(err, BenchError::Report(_)));
    }

    #[test]
    fn results_header_is_stable() {
        let r = ExperimentReport::assemble(
            config(),
            vec![],
            vec![row("a", Algorithm::Rspg, 100, 0, 1.0)],
            vec![],
        );
        let csv = r.results_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), RESULTS_HEADER.join(","));
        let empty = ExperimentReport::assemble(config(), vec![], vec![], vec![]);
        assert_eq!(
            empty.results_csv().unwrap().trim_end(),
            RESULTS_HEADER.join(",")
        );
    }

    #[test]
    fn absent_zero_ratio_is_an_empty_field() {
        let mut one = row("a", Algorithm::Rspg, 100, 0, 1.0);
        one.zero_ratio = None;
        let r = ExperimentReport::assemble(config(), vec![], vec![one], vec![]);
        let csv = r.results_csv().unwrap();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').nth(8), Some(""));
        assert!(r.aggregates[0].zero_ratio.is_none());
    }
}
