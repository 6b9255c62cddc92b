use rayon::prelude::*;

use modcomm::laughlin::{semion_state_with_limit, SphereLattice};
use modcomm::modular::{sample, ModularSample, SampleMeta};
use modcomm::partition::sample_rotation;
use modcomm::PureState;

use crate::error::{CliError, CliResult};

/// Largest `n` sampled without `--allow-large`.
pub const DEFAULT_MAX_N: usize = 20;
/// Hard ceiling with `--allow-large`.
pub const LARGE_MAX_N: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub threads: usize,
    pub allow_large: bool,
}

pub fn size_limit(allow_large: bool) -> usize {
    if allow_large {
        LARGE_MAX_N
    } else {
        DEFAULT_MAX_N
    }
}

/// Golden lattice and semion state for `n` sites, within the configured limit.
pub fn build_state(n: usize, allow_large: bool) -> CliResult<(SphereLattice, PureState)> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(CliError::validation(format!("n must be even and at least 2, got {n}")));
    }
    let limit = size_limit(allow_large);
    if n > limit {
        let hint = if allow_large { "" } else { " (use --allow-large for up to 24)" };
        return Err(CliError::resource(format!("n = {n} exceeds the limit {limit}{hint}")));
    }
    let lattice = SphereLattice::golden(n)?;
    let state = semion_state_with_limit(&lattice, limit).map_err(|e| CliError::from(e).context(format!("n = {n}")))?;
    Ok((lattice, state))
}

pub fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    if threads == 0 {
        return Err(CliError::validation("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::resource(format!("thread pool: {e}")))
}

/// All samples of a run, in index order.
pub fn run_samples(cfg: &SampleConfig) -> CliResult<Vec<ModularSample>> {
    let (lattice, state) = build_state(cfg.n, cfg.allow_large)?;
    let pool = thread_pool(cfg.threads)?;
    pool.install(|| {
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|index| {
                let rotation = sample_rotation(cfg.seed, index);
                let meta = SampleMeta {
                    sample_index: index,
                    seed: cfg.seed,
                };
                sample(&state, &lattice, &rotation, meta)
                    .map_err(|e| CliError::from(e).context(format!("n = {}, sample {index}", cfg.n)))
            })
            .collect()
    })
}

pub fn render_csv(samples: &[ModularSample]) -> String {
    let mut out = String::with_capacity(160 * (samples.len() + 1));
    out.push_str(ModularSample::CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

/// "positive", "negative", "mixed", or "none" for the signs of `J`.
pub fn sign_summary(samples: &[ModularSample]) -> &'static str {
    let pos = samples.iter().any(|s| s.j > 0.0);
    let neg = samples.iter().any(|s| s.j < 0.0);
    match (pos, neg) {
        (true, false) => "positive",
        (false, true) => "negative",
        (true, true) => "mixed",
        (false, false) => "none",
    }
}
