use clap::Args;
use serde::{Deserialize, Serialize};

use freechan::entropy::k_zero;
use freechan::Error;

use crate::config::{parse_real, resolve, Common, Format};
use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig12};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct K0Args {
    /// Values of t, comma separated; defaults to 1/2,1/3,1/4.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub t: Option<Vec<f64>>,
    /// Orders p > 1, comma separated; defaults to 1.1, 1.2, ..., 5.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct Row {
    t: f64,
    p: f64,
    /// Empty when no `k ≤ k_max` violates additivity.
    k0: Option<usize>,
    found: bool,
    /// Whether `t n k0` is an integer for every `n`, i.e. whether the
    /// channel at `k0` exists at all sizes rather than only along a subsequence.
    realizable_all_n: Option<bool>,
    k_max: usize,
}

pub fn run(args: K0Args) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = resolve("k0-table", args, config.as_deref())?;
    let ts = args.t.clone().unwrap_or_else(|| vec![0.5, 1.0 / 3.0, 0.25]);
    let ps = args.p.clone().unwrap_or_else(|| (11..=50).map(|i| i as f64 / 10.0).collect());
    let k_max = args.k_max.unwrap_or(10_000);
    if let Some(p) = ps.iter().find(|&&p| !(p > 1.0)) {
        return Err(CliError::Validation(format!("every p must exceed 1, got {p}")));
    }
    let mut rows = Vec::with_capacity(ts.len() * ps.len());
    for &t in &ts {
        for &p in &ps {
            let k0 = match k_zero(t, p, k_max) {
                Ok(k) => Some(k),
                Err(Error::NotFound { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let realizable_all_n = k0.map(|k| {
                let tk = t * k as f64;
                (tk - tk.round()).abs() < 1e-9
            });
            rows.push(Row { t: sig12(t), p: sig12(p), k0, found: k0.is_some(), realizable_all_n, k_max });
        }
    }
    let body = render(&rows, args.common.format.unwrap_or(Format::Csv))?;
    emit(&body, args.common.out.as_deref())
}
