use clap::Args;
use serde::{Deserialize, Serialize};

use freechan::entropy::{gamma_renyi, renyi_entropy, schatten_norm_from_entropy, violation_margin};
use freechan::free::{beta_vector, GammaSpectrum};

use crate::config::{parse_real, require, resolve, Common, Format};
use crate::error::CliResult;
use crate::output::{emit, opt12, render, sig12, sig12_vec};

/// Largest `k²` for which the full `γ^(t)` vector is printed.
const GAMMA_PRINT_MAX: usize = 4096;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Input fraction t in (0, 1); fractions like 1/3 are accepted.
    #[arg(long, value_parser = parse_real)]
    pub t: Option<f64>,
    /// Rényi orders, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub p: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct OrderRow {
    p: f64,
    renyi_beta: f64,
    renyi_gamma: f64,
    /// `2 H^p(β) − H^p(γ)`, for `p > 1`.
    margin: Option<f64>,
    schatten_beta: Option<f64>,
    schatten_gamma: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Report {
    k: usize,
    t: f64,
    log_base: &'static str,
    beta: Vec<f64>,
    gamma: Option<Vec<f64>>,
    gamma_top: f64,
    gamma_rest: f64,
    gamma_rest_multiplicity: usize,
    orders: Vec<OrderRow>,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    k: usize,
    t: f64,
    p: f64,
    renyi_beta: f64,
    renyi_gamma: f64,
    margin: Option<f64>,
    schatten_beta: Option<f64>,
    schatten_gamma: Option<f64>,
}

fn order_row(beta: &freechan::ProbabilityVector, gamma: &GammaSpectrum, p: f64) -> CliResult<OrderRow> {
    let hb = renyi_entropy(beta, p)?;
    let hg = gamma_renyi(gamma, p)?;
    let (margin, sb, sg) = if p > 1.0 {
        (
            Some(violation_margin(gamma.k, gamma.t, p)?),
            Some(schatten_norm_from_entropy(hb, p)?),
            Some(schatten_norm_from_entropy(hg, p)?),
        )
    } else {
        (None, None, None)
    };
    Ok(OrderRow {
        p: sig12(p),
        renyi_beta: sig12(hb),
        renyi_gamma: sig12(hg),
        margin: opt12(margin),
        schatten_beta: opt12(sb),
        schatten_gamma: opt12(sg),
    })
}

pub fn run(args: PredictArgs) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = resolve("predict", args, config.as_deref())?;
    let k = require(&args.k, "k")?;
    let t = require(&args.t, "t")?;
    let ps = args.p.clone().unwrap_or_else(|| vec![2.0]);
    let beta = beta_vector(k, t)?;
    let gamma = GammaSpectrum::new(k, t)?;
    let orders = ps.iter().map(|&p| order_row(&beta, &gamma, p)).collect::<CliResult<Vec<_>>>()?;
    let body = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let full = if gamma.dim() <= GAMMA_PRINT_MAX { Some(sig12_vec(gamma.to_vector()?.entries())) } else { None };
            let report = Report {
                k,
                t: sig12(t),
                log_base: "natural",
                beta: sig12_vec(beta.entries()),
                gamma: full,
                gamma_top: sig12(gamma.top()),
                gamma_rest: sig12(gamma.rest()),
                gamma_rest_multiplicity: gamma.rest_multiplicity(),
                orders,
            };
            serde_json::to_string(&report)? + "\n"
        }
        Format::Csv => {
            let rows: Vec<CsvRow> = orders
                .into_iter()
                .map(|o| CsvRow {
                    k,
                    t: sig12(t),
                    p: o.p,
                    renyi_beta: o.renyi_beta,
                    renyi_gamma: o.renyi_gamma,
                    margin: o.margin,
                    schatten_beta: o.schatten_beta,
                    schatten_gamma: o.schatten_gamma,
                })
                .collect();
            render(&rows, Format::Csv)?
        }
    };
    emit(&body, args.common.out.as_deref())
}
