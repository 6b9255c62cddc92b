use serde::{Deserialize, Serialize};

use modcomm::fitting::{fit, DataPoint, Dataset, FitOptions, FitResult, Model};

use crate::aggregate::Aggregate;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Quantity {
    #[serde(rename = "J")]
    #[value(name = "J", alias = "j")]
    J,
    #[serde(rename = "gamma")]
    Gamma,
}

/// Means and standard errors of one quantity for the sizes with `n >= min_n`.
pub fn dataset(agg: &Aggregate, quantity: Quantity, min_n: usize) -> CliResult<Dataset> {
    let rows = agg
        .rows
        .iter()
        .filter(|r| r.n >= min_n)
        .map(|r| {
            let m = match quantity {
                Quantity::J => &r.j,
                Quantity::Gamma => &r.gamma,
            };
            let stderr = m
                .stderr
                .ok_or_else(|| CliError::validation(format!("n = {} has a single sample and no standard error", r.n)))?;
            Ok(DataPoint {
                n: r.n,
                mean: m.mean,
                stderr,
                count: r.count as u64,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Dataset::new(rows)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub quantity: Quantity,
    pub sizes: Vec<usize>,
    #[serde(flatten)]
    pub result: FitResult,
}

pub fn fit_aggregate(
    agg: &Aggregate,
    quantity: Quantity,
    model: Model,
    min_n: usize,
    opts: &FitOptions,
) -> CliResult<FitReport> {
    let ds = dataset(agg, quantity, min_n)?;
    let result = fit(&ds, model, None, opts)?;
    Ok(FitReport {
        quantity,
        sizes: ds.rows().iter().map(|r| r.n).collect(),
        result,
    })
}
