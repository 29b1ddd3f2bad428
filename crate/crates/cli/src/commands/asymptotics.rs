use clap::Args;
use serde::{Deserialize, Serialize};

use freechan::entropy::{asymptotic_diagnostics, nontrivial_index};

use crate::config::{parse_real, resolve, Common, Format};
use crate::error::CliResult;
use crate::output::{emit, render, sig12};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct AsymptoticsArgs {
    /// Exponents α with t = k^(-α); defaults to 0.5,1,2,3.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub alpha: Option<Vec<f64>>,
    /// Values of k; defaults to 100,1000,10000,100000.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Entropy columns are in nats, as the header says.
#[derive(Debug, Serialize)]
struct Row {
    alpha: f64,
    k: usize,
    t: f64,
    j_index: usize,
    h_beta_nat: f64,
    h_gamma_nat: f64,
    predicted_h_beta_nat: f64,
    predicted_h_gamma_nat: f64,
    beta_ratio: f64,
    gamma_ratio: f64,
}

pub fn run(args: AsymptoticsArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = resolve("asymptotics", args, config.as_deref())?;
    let alphas = args.alpha.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 3.0]);
    let ks = args.k.clone().unwrap_or_else(|| vec![100, 1000, 10_000, 100_000]);
    let mut rows = Vec::new();
    for &alpha in &alphas {
        for &k in &ks {
            let d = asymptotic_diagnostics(k, alpha)?;
            rows.push(Row {
                alpha: sig12(alpha),
                k,
                t: sig12(d.t),
                j_index: nontrivial_index(k, alpha),
                h_beta_nat: sig12(d.entropy_beta),
                h_gamma_nat: sig12(d.entropy_gamma),
                predicted_h_beta_nat: sig12(d.predicted_beta),
                predicted_h_gamma_nat: sig12(d.predicted_gamma),
                beta_ratio: sig12(d.beta_ratio),
                gamma_ratio: sig12(d.gamma_ratio),
            });
        }
    }
    let body = render(&rows, args.common.format.unwrap_or(Format::Csv))?;
    emit(&body, args.common.out.as_deref())
}
