use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use freechan::sim::{run_trials, summarize, ExperimentDescriptor, ExperimentKind, TrialRecord};

use crate::config::{parse_real, require, resolve, Common, Format};
use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig12};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bell,
    Confinement,
    Projnorm,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub t: Option<f64>,
    /// Schatten order reported alongside Bell spectra.
    #[arg(long, value_parser = parse_real)]
    pub p: Option<f64>,
    /// Ambient dimension for projnorm.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub dim: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub beta: Option<f64>,
    /// Haar-uniform inputs per confinement trial.
    #[arg(long)]
    pub uniform_inputs: Option<usize>,
    /// Subspace-aligned inputs per confinement trial.
    #[arg(long)]
    pub boundary_inputs: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write per-observable summary statistics to this CSV file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    experiment: String,
    observable: String,
    count: usize,
    mean: f64,
    std_dev: f64,
    std_err: f64,
    min: f64,
    max: f64,
}

fn kind(args: &SimulateArgs) -> CliResult<ExperimentKind> {
    Ok(match args.mode.unwrap_or(Mode::Bell) {
        Mode::Bell => ExperimentKind::Bell {
            n: require(&args.n, "n")?,
            k: require(&args.k, "k")?,
            t: require(&args.t, "t")?,
            schatten_p: args.p,
        },
        Mode::Confinement => ExperimentKind::Confinement {
            n: require(&args.n, "n")?,
            k: require(&args.k, "k")?,
            t: require(&args.t, "t")?,
            uniform_inputs: args.uniform_inputs.unwrap_or(900),
            boundary_inputs: args.boundary_inputs.unwrap_or(100),
        },
        Mode::Projnorm => ExperimentKind::ProjectorNorm {
            dim: require(&args.dim, "N")?,
            alpha: require(&args.alpha, "alpha")?,
            beta: require(&args.beta, "beta")?,
        },
    })
}

fn rounded(mut r: TrialRecord) -> TrialRecord {
    r.t = r.t.map(sig12);
    r.p = r.p.map(sig12);
    r.alpha = r.alpha.map(sig12);
    r.value = sig12(r.value);
    r.wall_ms = sig12(r.wall_ms);
    r
}

pub fn run(args: SimulateArgs, workers: usize) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = resolve("simulate", args, config.as_deref())?;
    let desc = ExperimentDescriptor::all(kind(&args)?);
    desc.validate()?;
    let trials = args.trials.unwrap_or(10);
    if trials == 0 {
        return Err(CliError::Validation("--trials must be positive".into()));
    }
    let records = run_trials(&desc, trials, args.seed.unwrap_or(0), workers)?;
    let failures: Vec<&TrialRecord> = records.iter().filter(|r| r.observable.starts_with("error")).collect();
    let summaries: Vec<SummaryRow> = summarize(&records)
        .into_iter()
        .map(|s| SummaryRow {
            experiment: desc.kind.name().into(),
            observable: s.observable,
            count: s.count,
            mean: sig12(s.mean),
            std_dev: sig12(s.std_dev),
            std_err: sig12(s.std_err),
            min: sig12(s.min),
            max: sig12(s.max),
        })
        .collect();
    let rows: Vec<TrialRecord> = records.iter().cloned().map(rounded).collect();
    let body = render(&rows, args.common.format.unwrap_or(Format::Csv))?;
    emit(&body, args.common.out.as_deref())?;
    let summary = render(&summaries, Format::Csv)?;
    match &args.summary {
        Some(path) => emit(&summary, Some(path))?,
        None => eprint!("{summary}"),
    }
    if let Some(first) = failures.first() {
        return Err(CliError::Numerical(format!("{} of {} trials failed: {}", failures.len(), trials, first.observable)));
    }
    Ok(())
}
