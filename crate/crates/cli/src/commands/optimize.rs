use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use freechan::entropy::renyi_entropy;
use freechan::free::{beta_partial_sums, beta_vector};
use freechan::opt::{estimate_hmin, max_partial_sum, OptResult, OptimizerConfig};
use freechan::sim::{build_channel, TrialRecord};

use crate::config::{parse_real, require, resolve, Common, Format};
use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig12};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub t: Option<f64>,
    /// Partial-sum sizes j in [1, k] to maximize, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub j: Option<Vec<usize>>,
    /// Rényi orders p > 1 to minimize, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct Check {
    observable: String,
    value: f64,
    /// `φ(j/k, t)` for partial sums, `H^p(β^(t))` for entropies.
    prediction: f64,
    iterations: usize,
    converged: bool,
}

pub fn run(args: OptimizeArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = resolve("optimize", args, config.as_deref())?;
    let (n, k, t) = (require(&args.n, "n")?, require(&args.k, "k")?, require(&args.t, "t")?);
    let js = args.j.clone().unwrap_or_default();
    let ps = args.p.clone().unwrap_or_default();
    if js.is_empty() && ps.is_empty() {
        return Err(CliError::Validation("nothing to optimize: pass --j and/or --p".into()));
    }
    if let Some(j) = js.iter().find(|&&j| j == 0 || j > k) {
        return Err(CliError::Validation(format!("--j {j} is outside [1, {k}]")));
    }
    if let Some(p) = ps.iter().find(|&&p| !(p > 1.0)) {
        return Err(CliError::Validation(format!("--p {p} must exceed 1")));
    }
    let seed = args.seed.unwrap_or(0);
    let defaults = OptimizerConfig::default();
    let cfg = OptimizerConfig {
        restarts: args.restarts.unwrap_or(defaults.restarts),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        seed,
        ..defaults
    };
    cfg.validate()?;
    let channel = build_channel(n, k, t, seed)?;
    let partial = beta_partial_sums(k, t)?;
    let beta = beta_vector(k, t)?;

    let record = |observable: String, p: Option<f64>, r: &OptResult, started: Instant| TrialRecord {
        experiment: "optimize".into(),
        n: Some(n),
        k: Some(k),
        t: Some(sig12(t)),
        p: p.map(sig12),
        alpha: None,
        seed,
        stream_id: r.best_restart as u64,
        observable,
        value: sig12(r.value),
        wall_ms: sig12(started.elapsed().as_secs_f64() * 1e3),
    };
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &j in &js {
        let started = Instant::now();
        let r = max_partial_sum(&channel, j, &cfg)?;
        let name = format!("max_s_{j}");
        checks.push(Check { observable: name.clone(), value: sig12(r.value), prediction: sig12(partial[j]), iterations: r.iterations, converged: r.converged });
        rows.push(record(name, None, &r, started));
    }
    for &p in &ps {
        let started = Instant::now();
        let r = estimate_hmin(&channel, p, &cfg)?;
        let name = format!("hmin_{p}");
        let prediction = renyi_entropy(&beta, p)?;
        checks.push(Check { observable: name.clone(), value: sig12(r.value), prediction: sig12(prediction), iterations: r.iterations, converged: r.converged });
        rows.push(record(name, Some(p), &r, started));
    }
    emit(&render(&rows, args.common.format.unwrap_or(Format::Csv))?, args.common.out.as_deref())?;
    eprint!("{}", render(&checks, Format::Csv)?);
    Ok(())
}
