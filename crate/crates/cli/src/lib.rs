//! Command-line front end: lattices, semion states, parallel sampling,
//! aggregation, fits, the invariant suite and modular-current reports.

pub mod aggregate;
pub mod check;
pub mod error;
pub mod fitcmd;
pub mod manifest;
pub mod sample;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use modcomm::current::current_report;
use modcomm::fitting::{FitOptions, Model};
use modcomm::laughlin::SphereLattice;
use modcomm::tensorcore::write_state_cache;

use crate::aggregate::{aggregate, parse_samples, Aggregate};
use crate::error::{CliError, CliResult};
use crate::fitcmd::{fit_aggregate, Quantity};
use crate::manifest::{manifest_path, sha256_hex, write_output, RunManifest, SIGN_CONVENTION};
use crate::sample::{build_state, render_csv, run_samples, sign_summary, SampleConfig};

#[derive(Debug, Parser)]
#[command(name = "modcomm", version, about = "Modular commutators of the lattice semion state")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Exponential,
    Power,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Golden-angle sphere lattice as JSON.
    Lattice {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_large: bool,
    },
    /// Semion state in the binary state-cache format.
    State {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_large: bool,
    },
    /// J and the seven region entropies for random tetrahedral partitions.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_large: bool,
    },
    /// Per-n mean, sample std and standard error of sample CSV files.
    Aggregate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-size fit of an aggregate.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "exponential")]
        model: Family,
        /// Fixed exponent of the exponential ansatz; free when omitted.
        #[arg(long)]
        d: Option<f64>,
        /// Fixed exponent of the power ansatz; free when omitted.
        #[arg(long)]
        b: Option<f64>,
        #[arg(long, value_enum, default_value = "J")]
        quantity: Quantity,
        #[arg(long, default_value_t = 0)]
        min_n: usize,
        /// Treat the standard errors as exact instead of rescaling by the reduced chi-square.
        #[arg(long)]
        trusted_weights: bool,
        #[arg(long)]
        strict_rank: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite; exits 3 if any check fails.
    Check {
        #[arg(long, default_value_t = 100)]
        instances: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact modular-current report on a triangular disk.
    Current {
        #[arg(long, default_value_t = 3)]
        radius: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the command recorded in a manifest and compare output hashes.
    Replay { manifest: PathBuf },
}

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    match run(cli.command, &args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8], manifest: RunManifest, start: Instant) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut manifest = manifest;
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_output(path, bytes, manifest)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn run(command: Command, args: &[String]) -> CliResult<()> {
    let start = Instant::now();
    match command {
        Command::Lattice { n, out, allow_large } => {
            let lattice = lattice_only(n, allow_large)?;
            let mut m = RunManifest::new("lattice", args);
            m.n = Some(n);
            emit(out.as_deref(), &json_bytes(&lattice.to_json())?, m, start)
        }
        Command::State { n, out, allow_large } => {
            let (_, state) = build_state(n, allow_large)?;
            let mut bytes = Vec::new();
            write_state_cache(&state, &mut bytes)?;
            let mut m = RunManifest::new("state", args);
            m.n = Some(n);
            emit(Some(&out), &bytes, m, start)
        }
        Command::Sample {
            n,
            samples,
            seed,
            threads,
            out,
            allow_large,
        } => {
            let cfg = SampleConfig {
                n,
                samples,
                seed,
                threads,
                allow_large,
            };
            let rows = run_samples(&cfg)?;
            let sign = sign_summary(&rows);
            if rows.first().is_some_and(|s| s.j < 0.0) {
                eprintln!("warning: first sample has J < 0 under the fixed labeling convention; values are reported unflipped");
            }
            let mut m = RunManifest::new("sample", args);
            m.n = Some(n);
            m.seed = Some(seed);
            m.samples = Some(samples);
            m.threads = threads;
            m.notes.insert("sign_convention".into(), SIGN_CONVENTION.into());
            m.notes.insert("j_sign".into(), sign.into());
            emit(out.as_deref(), render_csv(&rows).as_bytes(), m, start)
        }
        Command::Aggregate { inputs, out } => {
            let mut rows = Vec::new();
            for path in &inputs {
                rows.extend(parse_samples(&read_text(path)?, &path.display().to_string())?);
            }
            let agg = aggregate(rows)?;
            let m = RunManifest::new("aggregate", args);
            emit(out.as_deref(), &json_bytes(&agg)?, m, start)
        }
        Command::Fit {
            input,
            model,
            d,
            b,
            quantity,
            min_n,
            trusted_weights,
            strict_rank,
            out,
        } => {
            let model = match (model, d, b) {
                (Family::Exponential, d, None) => Model::Exponential { d },
                (Family::Power, None, b) => Model::Power { b },
                _ => return Err(CliError::validation("--d applies to the exponential model and --b to the power model")),
            };
            let agg: Aggregate = serde_json::from_str(&read_text(&input)?)
                .map_err(|e| CliError::from(e).context(input.display()))?;
            let opts = FitOptions {
                trusted_weights,
                strict_rank,
                ..FitOptions::default()
            };
            let report = fit_aggregate(&agg, quantity, model, min_n, &opts)?;
            let m = RunManifest::new("fit", args);
            emit(out.as_deref(), &json_bytes(&report)?, m, start)
        }
        Command::Check { instances, out } => {
            let report = check::run_all(instances);
            for s in &report.suites {
                for c in &s.checks {
                    let tag = if c.passed { "PASS" } else { "FAIL" };
                    eprintln!("{tag} {} / {}: {}", s.name, c.name, c.detail);
                }
            }
            let m = RunManifest::new("check", args);
            emit(out.as_deref(), &json_bytes(&report)?, m, start)?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::invariant("invariant suite failed"))
            }
        }
        Command::Current { radius, out } => {
            let report = current_report(radius)?;
            let m = RunManifest::new("current", args);
            emit(out.as_deref(), &json_bytes(&report)?, m, start)
        }
        Command::Replay { manifest } => replay(&manifest),
    }
}

fn lattice_only(n: usize, allow_large: bool) -> CliResult<SphereLattice> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(CliError::validation(format!("n must be even and at least 2, got {n}")));
    }
    let limit = sample::size_limit(allow_large);
    if n > limit {
        return Err(CliError::resource(format!("n = {n} exceeds the limit {limit}")));
    }
    Ok(SphereLattice::golden(n)?)
}

/// Re-run a recorded command into a scratch file next to the manifest and compare hashes.
fn replay(path: &Path) -> CliResult<()> {
    let recorded = RunManifest::read(path)?;
    let (name, want) = recorded
        .outputs
        .iter()
        .next()
        .ok_or_else(|| CliError::validation("manifest records no output"))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let scratch = dir.join(format!("{name}.replay"));
    let mut args = recorded.args.clone();
    let pos = args
        .iter()
        .position(|a| a == "--out")
        .ok_or_else(|| CliError::validation("recorded command has no --out"))?;
    if pos + 1 >= args.len() {
        return Err(CliError::validation("recorded --out has no value"));
    }
    args[pos + 1] = scratch.to_string_lossy().into_owned();
    let cli = Cli::try_parse_from(std::iter::once("modcomm".to_string()).chain(args.iter().cloned()))
        .map_err(|e| CliError::validation(format!("recorded arguments: {e}")))?;
    run(cli.command, &args)?;
    let got = sha256_hex(&fs::read(&scratch)?);
    let _ = fs::remove_file(&scratch);
    let _ = fs::remove_file(manifest_path(&scratch));
    if &got == want {
        println!("{name}: {got} reproduced");
        Ok(())
    } else {
        Err(CliError::invariant(format!("{name}: recorded {want}, replay produced {got}")))
    }
}
