//! Per-`n` statistics of sample CSV files.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use modcomm::modular::ModularSample;

use crate::error::{CliError, CliResult};

/// The columns of a sample CSV row used by the aggregation.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SampleRow {
    pub n: usize,
    pub sample_index: u64,
    pub seed: u64,
    #[serde(rename = "J")]
    pub j: f64,
    pub gamma: f64,
}

/// Parse one sample CSV; `source` names it in error messages.
pub fn parse_samples(text: &str, source: &str) -> CliResult<Vec<SampleRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("{source}: line 1: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != ModularSample::CSV_HEADER {
        return Err(CliError::validation(format!("{source}: line 1: unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<SampleRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::validation(format!("{source}: line {line}: {e}"))
        })?;
        if !row.j.is_finite() || !row.gamma.is_finite() {
            return Err(CliError::validation(format!(
                "{source}: sample {} of n = {} has a non-finite value",
                row.sample_index, row.n
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Sample standard deviation; `None` for a single value.
    pub std: Option<f64>,
    pub stderr: Option<f64>,
}

impl Moments {
    fn of(values: &[f64]) -> Moments {
        let count = values.len() as f64;
        let mean = values.iter().sum::<f64>() / count;
        if values.len() < 2 {
            return Moments {
                mean,
                std: None,
                stderr: None,
            };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
        let std = var.sqrt();
        Moments {
            mean,
            std: Some(std),
            stderr: Some(std / count.sqrt()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    pub count: usize,
    #[serde(rename = "J")]
    pub j: Moments,
    pub gamma: Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: Vec<AggregateRow>,
    /// Infinite-size values for reference: `π/3` and `ln √2`.
    pub targets: BTreeMap<String, f64>,
}

impl Aggregate {
    pub fn row(&self, n: usize) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Group by `n` and reduce in `(seed, sample_index)` order, so the result does
/// not depend on how rows were split across files.
pub fn aggregate(mut rows: Vec<SampleRow>) -> CliResult<Aggregate> {
    if rows.is_empty() {
        return Err(CliError::validation("no sample rows to aggregate"));
    }
    rows.sort_by_key(|r| (r.n, r.seed, r.sample_index));
    let mut groups: BTreeMap<usize, Vec<&SampleRow>> = BTreeMap::new();
    for r in &rows {
        groups.entry(r.n).or_default().push(r);
    }
    let out = groups
        .into_iter()
        .map(|(n, g)| {
            let js: Vec<f64> = g.iter().map(|r| r.j).collect();
            let gs: Vec<f64> = g.iter().map(|r| r.gamma).collect();
            AggregateRow {
                n,
                count: g.len(),
                j: Moments::of(&js),
                gamma: Moments::of(&gs),
            }
        })
        .collect();
    let targets = [("J".to_string(), PI / 3.0), ("gamma".to_string(), 0.5 * LN_2)].into();
    Ok(Aggregate { rows: out, targets })
}
