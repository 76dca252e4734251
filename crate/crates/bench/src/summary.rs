//! Mean/variance tables with one row per (scenario, NS, metric, statistic) and one
//! column per algorithm.

use serde::{Deserialize, Serialize};

use crate::config::Algorithm;
use crate::error::{BenchError, Result};
use crate::report::{CellAggregate, ExperimentReport, Stat};

/// Written where a value does not exist: skipped cells, single-replication variances.
pub const ABSENT: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MappingNormSq,
    Objective,
    ZeroRatio,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::MappingNormSq => "mapping_norm_sq",
            Metric::Objective => "objective",
            Metric::ZeroRatio => "zero_ratio",
        }
    }

    fn stat(self, a: &CellAggregate) -> Option<Stat> {
        match self {
            Metric::MappingNormSq => Some(a.mapping_norm_sq),
            Metric::Objective => Some(a.objective),
            Metric::ZeroRatio => a.zero_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Var,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    #[serde(rename = "NS")]
    pub ns: u64,
    pub metric: Metric,
    pub stat: Statistic,
    /// One entry per algorithm column.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<SummaryRow>,
}

pub fn summarize(report: &ExperimentReport) -> Result<SummaryTable> {
    if report.rows.is_empty() {
        return Err(BenchError::Report("report has no replication rows".into()));
    }
    let algorithms = report.config.algorithms.clone();
    let mut rows = Vec::new();
    for scenario in &report.config.scenarios {
        for &ns in &report.config.budgets {
            let cells: Vec<Option<&CellAggregate>> = algorithms
                .iter()
                .map(|&a| report.aggregate(&scenario.name, a, ns))
                .collect();
            if cells.iter().all(Option::is_none) {
                continue;
            }
            for metric in [Metric::MappingNormSq, Metric::Objective, Metric::ZeroRatio] {
                let stats: Vec<Option<Stat>> = cells
                    .iter()
                    .map(|c| c.and_then(|c| metric.stat(c)))
                    .collect();
                if stats.iter().all(Option::is_none) {
                    continue;
                }
                for stat in [Statistic::Mean, Statistic::Var] {
                    let values = stats
                        .iter()
                        .map(|s| {
                            s.and_then(|s| match stat {
                                Statistic::Mean => Some(s.mean),
                                Statistic::Var => s.variance,
                            })
                        })
                        .collect();
                    rows.push(SummaryRow {
                        scenario: scenario.name.clone(),
                        ns,
                        metric,
                        stat,
                        values,
                    });
                }
            }
        }
    }
    Ok(SummaryTable { algorithms, rows })
}

impl SummaryTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["scenario", "NS", "metric", "stat"];
        header.extend(self.algorithms.iter().map(|a| a.name()));
        let err = |e: csv::Error| BenchError::Runtime(e.to_string());
        w.write_record(&header).map_err(err)?;
        for row in &self.rows {
            let mut record = vec![
                row.scenario.clone(),
                row.ns.to_string(),
                row.metric.name().to_string(),
                match row.stat {
                    Statistic::Mean => "mean".to_string(),
                    Statistic::Var => "var".to_string(),
                },
            ];
            record.extend(
                row.values
                    .iter()
                    .map(|v| v.map_or_else(|| ABSENT.to_string(), |v| v.to_string())),
            );
            w.write_record(&record).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| BenchError::Runtime(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Runtime(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| BenchError::Runtime(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}
