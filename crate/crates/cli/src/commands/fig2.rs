use clap::Args;
use serde::{Deserialize, Serialize};

use freechan::majorization::simplex_figure_data;

use crate::config::{resolve, Common, Format};
use crate::error::{CliError, CliResult};
use crate::output::{emit, render, sig12};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Fig2Args {
    /// Values k' with t = 1/k'; defaults to 2,3,4,5,10,20,50,100.
    #[arg(long = "kprime", value_delimiter = ',')]
    pub kprime: Option<Vec<usize>>,
    /// Polyline points per hexagon edge.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct Row {
    kprime: usize,
    t: f64,
    vertex_index: usize,
    x: f64,
    y: f64,
    /// Smallest barycentric coordinate over the hull.
    min_coordinate: f64,
    touches_boundary: bool,
    /// Whether this hull lies inside the one for the previous (larger) t.
    nested_in_previous: Option<bool>,
}

pub fn run(args: Fig2Args) -> CliResult<()> {
    let config = args.common.config.clone();
    let args = resolve("fig2-data", args, config.as_deref())?;
    let mut kprimes = args.kprime.clone().unwrap_or_else(|| vec![2, 3, 4, 5, 10, 20, 50, 100]);
    if kprimes.iter().any(|&k| k < 2) {
        return Err(CliError::Validation("every k' must be at least 2".into()));
    }
    kprimes.sort_unstable();
    kprimes.dedup();
    let ts: Vec<f64> = kprimes.iter().map(|&k| 1.0 / k as f64).collect();
    let polygons = simplex_figure_data(&ts, args.resolution.unwrap_or(1))?;
    let mut rows = Vec::new();
    for (i, poly) in polygons.iter().enumerate() {
        let min_coordinate = poly.min_coordinate();
        let nested = (i > 0).then(|| poly.contained_in(&polygons[i - 1]));
        for (j, pt) in poly.points.iter().enumerate() {
            rows.push(Row {
                kprime: kprimes[i],
                t: sig12(poly.t),
                vertex_index: j,
                x: sig12(pt[0]),
                y: sig12(pt[1]),
                min_coordinate: sig12(min_coordinate),
                touches_boundary: min_coordinate <= 1e-12,
                nested_in_previous: nested,
            });
        }
    }
    let body = render(&rows, args.common.format.unwrap_or(Format::Csv))?;
    emit(&body, args.common.out.as_deref())
}
