//! Optimization over pure inputs of a channel instance: largest Schmidt
//! partial sums by alternating maximization, and minimum output Rényi
//! entropy by projected gradient descent on the unit sphere.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::renyi_entropy;
use crate::error::{Error, Result};
use crate::kernel::{check_normalized, eigh_unchecked, inner, reduced_density, vec_norm, ComplexMatrix, RngStream, C64};
use crate::prob::ProbabilityVector;
use crate::sim::ChannelInstance;

/// Each outer step warm-starts one short Krylov pass from the current input.
const INNER_KRYLOV: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once the relative objective change drops below this.
    pub tol: f64,
    /// Stop once the tangential gradient norm drops below this.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Restart `r` draws its start from stream `r` of this seed.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 300,
            tol: 1e-9,
            grad_tol: 1e-7,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter("restarts and max_iters must be positive".into()));
        }
        let positive = [self.tol, self.grad_tol, self.initial_step, self.armijo];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.shrink > 0.0 && self.shrink < 1.0) || self.armijo >= 1.0 {
            return Err(Error::InvalidParameter("tolerances and step parameters must be positive, shrink in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    pub argument: Vec<C64>,
    pub iterations: usize,
    pub best_restart: usize,
    pub converged: bool,
    /// Objective after each iteration of the best restart.
    pub history: Vec<f64>,
}

/// Sum of the `j` largest Schmidt coefficients of `W x`.
pub fn schmidt_partial_sum(c: &ChannelInstance, x: &[C64], j: usize) -> Result<f64> {
    let spec = c.output_spectrum(x)?;
    Ok(spec.entries()[..j].iter().sum::<f64>().min(1.0))
}

fn top_frame(rho: &ComplexMatrix, j: usize) -> ComplexMatrix {
    let (_, vecs) = eigh_unchecked(rho);
    ComplexMatrix::from_fn(rho.rows(), j, |r, col| vecs[(r, col)])
}

fn best_of(results: Vec<Result<OptResult>>, maximize: bool) -> Result<OptResult> {
    let mut best: Option<OptResult> = None;
    for r in results {
        let r = r?;
        let better = match &best {
            None => true,
            Some(b) if maximize => r.value > b.value,
            Some(b) => r.value < b.value,
        };
        if better {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no restarts".into()))
}

/// Largest value of `s_j(x)` over unit inputs, by alternating between the
/// best `j`-dimensional subspace `F ⊂ C^k` for the current input and the
/// best input for the current `F`. Each half-step can only increase the
/// objective. Returns the best of `cfg.restarts` random starts.
pub fn max_partial_sum(c: &ChannelInstance, j: usize, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    if j == 0 || j > c.k {
        return Err(Error::InvalidParameter(format!("j = {j} is outside [1, {}]", c.k)));
    }
    let runs: Vec<Result<OptResult>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(cfg.seed, r as u64);
            let start = rng.unit_vector(c.p_n);
            alternating_from(c, j, cfg, start, r)
        })
        .collect();
    best_of(runs, true)
}

/// One alternating-maximization run from `start`.
pub fn alternating_from(
    c: &ChannelInstance,
    j: usize,
    cfg: &OptimizerConfig,
    start: Vec<C64>,
    restart: usize,
) -> Result<OptResult> {
    check_normalized(&start)?;
    if j == c.k {
        // F is the whole space and every unit input is optimal.
        return Ok(OptResult { value: 1.0, argument: start, iterations: 0, best_restart: restart, converged: true, history: vec![1.0] });
    }
    let mut x = start;
    let mut value = schmidt_partial_sum(c, &x, j)?;
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let rho = reduced_density(&c.embed(&x)?, c.n, c.k)?;
        let frame = top_frame(&rho, j);
        let (_, next) = c.improve_input_with(&frame, &x, INNER_KRYLOV, 1);
        let next_value = schmidt_partial_sum(c, &next, j)?;
        let gain = next_value - value;
        if next_value >= value {
            x = next;
            value = next_value;
        }
        history.push(value);
        if gain < cfg.tol * value.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(OptResult { value, argument: x, iterations, best_restart: restart, converged, history })
}

/// Rényi entropy of the normalized output `Φ(|x><x|) / Tr Φ(|x><x|)` for any
/// nonzero `x`, with its derivative with respect to `(Re x, Im x)` packed as
/// a complex vector `∂f/∂Re x + i ∂f/∂Im x`.
pub fn renyi_objective_ambient(c: &ChannelInstance, x: &[C64], p: f64) -> Result<(f64, Vec<C64>)> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("gradient needs p > 1, got {p}")));
    }
    if x.len() != c.p_n {
        return Err(Error::InvalidDimension(format!("input of length {} for p_n = {}", x.len(), c.p_n)));
    }
    let (n, k) = (c.n, c.k);
    let y = c.embed(x)?;
    let rho = reduced_density(&y, n, k)?;
    let (vals, vecs) = eigh_unchecked(&rho);
    let tr: f64 = rho.trace().re;
    let lam: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let power_sum: f64 = lam.iter().map(|v| v.powf(p)).sum();
    let value = (power_sum.ln() - p * tr.ln()) / (1.0 - p);

    // M = ρ^{p−1}
    let m = ComplexMatrix::from_fn(k, k, |b, d| {
        (0..k).map(|i| vecs[(b, i)] * vecs[(d, i)].conj() * lam[i].powf(p - 1.0)).sum()
    });
    // Z = Y Mᵀ, stacked like y
    let mut z = vec![C64::new(0.0, 0.0); n * k];
    for a in 0..n {
        for b in 0..k {
            z[a * k + b] = (0..k).map(|d| m[(b, d)] * y[a * k + d]).sum();
        }
    }
    let scale = 2.0 * p / (1.0 - p);
    let combined: Vec<C64> = z.iter().zip(&y).map(|(a, b)| (a / power_sum - b / tr) * scale).collect();
    let grad = c.isometry().adjoint_mul_vec(&combined)?;
    Ok((value, grad))
}

/// Objective `H^p(Φ(|x><x|))` at a unit vector and its ambient gradient.
pub fn renyi_objective_and_gradient(c: &ChannelInstance, x: &[C64], p: f64) -> Result<(f64, Vec<C64>)> {
    check_normalized(x)?;
    renyi_objective_ambient(c, x, p)
}

/// Relative error `‖g_fd − g‖ / ‖g‖` of the analytic gradient at `x` against
/// central differences of step `h` in every real coordinate.
pub fn finite_difference_error(c: &ChannelInstance, x: &[C64], p: f64, h: f64) -> Result<f64> {
    let (_, g) = renyi_objective_and_gradient(c, x, p)?;
    let mut err = 0.0;
    for i in 0..x.len() {
        for (dir, analytic) in [(C64::new(1.0, 0.0), g[i].re), (C64::new(0.0, 1.0), g[i].im)] {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += dir * h;
            xm[i] -= dir * h;
            let fd = (renyi_objective_ambient(c, &xp, p)?.0 - renyi_objective_ambient(c, &xm, p)?.0) / (2.0 * h);
            err += (fd - analytic).powi(2);
        }
    }
    Ok(err.sqrt() / vec_norm(&g).max(f64::MIN_POSITIVE))
}

fn tangential(x: &[C64], g: &[C64]) -> Vec<C64> {
    let radial = inner(x, g).re;
    g.iter().zip(x).map(|(gi, xi)| gi - xi * radial).collect()
}

fn normalize(mut v: Vec<C64>) -> Vec<C64> {
    let n = vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Projected gradient descent with Armijo backtracking from `start`,
/// retracting to the sphere by normalization.
pub fn descend_from(c: &ChannelInstance, p: f64, cfg: &OptimizerConfig, start: Vec<C64>, restart: usize) -> Result<OptResult> {
    cfg.validate()?;
    let mut x = normalize(start);
    let (mut value, mut grad) = renyi_objective_and_gradient(c, &x, p)?;
    let mut history = vec![value];
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let dir = tangential(&x, &grad);
        let gnorm2: f64 = dir.iter().map(|z| z.norm_sqr()).sum();
        if gnorm2.sqrt() < cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = None;
        while step > 1e-14 {
            let trial = normalize(x.iter().zip(&dir).map(|(xi, di)| xi - di * step).collect());
            let (v, g) = renyi_objective_and_gradient(c, &trial, p)?;
            if v <= value - cfg.armijo * step * gnorm2 {
                accepted = Some((trial, v, g));
                break;
            }
            step *= cfg.shrink;
        }
        let Some((trial, v, g)) = accepted else {
            converged = true;
            break;
        };
        let change = (value - v).abs() / value.abs().max(1e-12);
        x = trial;
        value = v;
        grad = g;
        history.push(value);
        step = (step / cfg.shrink).min(cfg.initial_step * 1e3);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    let value = renyi_entropy(&c.output_spectrum(&x)?, p)?;
    Ok(OptResult { value, argument: x, iterations, best_restart: restart, converged, history })
}

/// Estimate of the minimum output Rényi entropy of order `p > 1`: the best
/// local minimum over `cfg.restarts` uniformly random starts.
pub fn estimate_hmin(c: &ChannelInstance, p: f64, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("descent needs p > 1, got {p}")));
    }
    let runs: Vec<Result<OptResult>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(cfg.seed, r as u64);
            let start = rng.unit_vector(c.p_n);
            descend_from(c, p, cfg, start, r)
        })
        .collect();
    best_of(runs, false)
}

/// Output spectrum at an optimizer's argument.
pub fn spectrum_at(c: &ChannelInstance, result: &OptResult) -> Result<ProbabilityVector> {
    c.output_spectrum(&result.argument)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::build_channel;

    fn small_cfg() -> OptimizerConfig {
        OptimizerConfig { restarts: 4, max_iters: 200, ..Default::default() }
    }

    #[test]
    fn full_partial_sum_is_one() {
        let c = build_channel(10, 3, 0.5, 1).unwrap();
        let r = max_partial_sum(&c, 3, &small_cfg()).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(max_partial_sum(&c, 0, &small_cfg()).is_err());
        assert!(max_partial_sum(&c, 4, &small_cfg()).is_err());
    }

    #[test]
    fn alternating_is_monotone() {
        let c = build_channel(30, 4, 0.5, 2).unwrap();
        for j in 1..4 {
            let r = max_partial_sum(&c, j, &small_cfg()).unwrap();
            assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", r.history);
            assert!(r.value <= 1.0);
            assert!((schmidt_partial_sum(&c, &r.argument, j).unwrap() - r.value).abs() < 1e-9);
            assert!((vec_norm(&r.argument) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn partial_sums_nondecreasing_in_j() {
        let c = build_channel(30, 4, 0.5, 3).unwrap();
        let vals: Vec<f64> = (1..=4).map(|j| max_partial_sum(&c, j, &small_cfg()).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{vals:?}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = build_channel(12, 3, 0.5, 4).unwrap();
        let mut rng = RngStream::new(4, 1);
        for p in [1.5, 2.0, 5.0] {
            for _ in 0..5 {
                let x = rng.unit_vector(c.p_n);
                assert!(finite_difference_error(&c, &x, p, 1e-5).unwrap() <= 1e-5, "p={p}");
            }
        }
    }

    #[test]
    fn gradient_has_no_phase_component() {
        let c = build_channel(12, 3, 0.5, 5).unwrap();
        let mut rng = RngStream::new(5, 1);
        let x = rng.unit_vector(c.p_n);
        let (v, g) = renyi_objective_and_gradient(&c, &x, 2.0).unwrap();
        let ix: Vec<C64> = x.iter().map(|z| z * C64::new(0.0, 1.0)).collect();
        assert!(inner(&ix, &g).re.abs() < 1e-9);
        let direct = renyi_entropy(&c.output_spectrum(&x).unwrap(), 2.0).unwrap();
        assert!((v - direct).abs() < 1e-10);
        assert!(renyi_objective_and_gradient(&c, &x, 1.0).is_err());
    }

    #[test]
    fn descent_decreases_and_stays_in_range() {
        let c = build_channel(20, 3, 0.5, 6).unwrap();
        let r = estimate_hmin(&c, 2.0, &small_cfg()).unwrap();
        assert!(r.value >= 0.0 && r.value <= 3f64.ln() + 1e-9);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        let direct = renyi_entropy(&spectrum_at(&c, &r).unwrap(), 2.0).unwrap();
        assert!((direct - r.value).abs() < 1e-9);
        assert!(estimate_hmin(&c, 1.0, &small_cfg()).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig { restarts: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig { shrink: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(OptimizerConfig::default().validate().is_ok());
    }
}
