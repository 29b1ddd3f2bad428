//! Rényi and Shannon entropies of the predicted spectra, violation margins,
//! the `k₀(t, p)` scan and the large-`k` asymptotics. Natural logarithms
//! throughout.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free::{beta_vector, GammaSpectrum};
use crate::prob::ProbabilityVector;
use crate::quad;

/// Name of the logarithm used by every entropy in this crate.
pub const LOG_BASE: &str = "natural";

/// Order, dimension and environment parameter of an entropy computation.
///
/// When `alpha` is set, `t = k^(−alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyParams {
    pub p: f64,
    pub k: usize,
    pub t: f64,
    pub alpha: Option<f64>,
}

impl EntropyParams {
    pub fn new(p: f64, k: usize, t: f64) -> Result<Self> {
        let params = Self { p, k, t, alpha: None };
        params.validate()?;
        Ok(params)
    }

    pub fn with_alpha(p: f64, k: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
        }
        let params = Self { p, k, t: (k as f64).powf(-alpha), alpha: Some(alpha) };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        check_order(self.p)?;
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("k = {} must be at least 2", self.k)));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::InvalidParameter(format!("t = {} is outside (0, 1)", self.t)));
        }
        Ok(())
    }

    /// Uses the Shannon branch.
    pub fn is_shannon(&self) -> bool {
        self.p == 1.0
    }

    pub fn beta(&self) -> Result<ProbabilityVector> {
        beta_vector(self.k, self.t)
    }

    pub fn gamma(&self) -> Result<GammaSpectrum> {
        GammaSpectrum::new(self.k, self.t)
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("entropy order p = {p} must be positive")));
    }
    Ok(())
}

fn check_order_above_one(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    Ok(())
}

/// `h(x) = −x log x` with `h(0) = 0`.
pub fn h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `ψ(x) = √(x(1−x))`.
pub fn psi(x: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).sqrt()
}

pub fn psi_prime(x: f64) -> f64 {
    (1.0 - 2.0 * x) / (2.0 * psi(x))
}

/// `g(x) = √((1−x)/x) − √(x/(1−x))`.
pub fn g(x: f64) -> f64 {
    ((1.0 - x) / x).sqrt() - (x / (1.0 - x)).sqrt()
}

/// Number of nonzero entries of `β^(k^(−α))` beyond the first:
/// `k − 1` for `α ≥ 1`, `⌊k − k^(1−α)⌋` otherwise.
pub fn nontrivial_index(k: usize, alpha: f64) -> usize {
    if alpha >= 1.0 {
        k - 1
    } else {
        let kf = k as f64;
        (kf - kf.powf(1.0 - alpha)).floor() as usize
    }
}

pub fn shannon_entropy(x: &ProbabilityVector) -> f64 {
    // `+ 0.0` turns a negative zero positive.
    x.entries().iter().map(|&v| h(v)).sum::<f64>().max(0.0) + 0.0
}

/// Rényi entropy of order `p`; `p = 1` is the Shannon entropy.
pub fn renyi_entropy(x: &ProbabilityVector, p: f64) -> Result<f64> {
    check_order(p)?;
    if p == 1.0 {
        return Ok(shannon_entropy(x));
    }
    let power_sum: f64 = x.entries().iter().filter(|&&v| v > 0.0).map(|&v| v.powf(p)).sum();
    let max = (x.len() as f64).ln();
    Ok((power_sum.ln() / (1.0 - p)).clamp(0.0, max) + 0.0)
}

/// Rényi entropy of `γ^(t)` from its two distinct eigenvalues.
pub fn gamma_renyi(gamma: &GammaSpectrum, p: f64) -> Result<f64> {
    check_order(p)?;
    let m = gamma.rest_multiplicity() as f64;
    if p == 1.0 {
        return Ok(h(gamma.top()) + m * h(gamma.rest()));
    }
    Ok((gamma.top().powf(p) + m * gamma.rest().powf(p)).ln() / (1.0 - p))
}

/// `2 log k − H(γ)` without cancellation, using
/// `k² γ₁ = 1 + (k² − 1) t` and `k² γ_j = 1 − t`.
pub fn gamma_shannon_defect(gamma: &GammaSpectrum) -> f64 {
    let t = gamma.t;
    let m = gamma.rest_multiplicity() as f64;
    gamma.top() * (m * t).ln_1p() + m * gamma.rest() * (-t).ln_1p()
}

/// `log k − H(x)` for a vector of length `k`, summed as `Σ x_j log(k x_j)`.
pub fn shannon_defect(x: &ProbabilityVector) -> f64 {
    let k = x.len() as f64;
    x.entries().iter().filter(|&&v| v > 0.0).map(|&v| v * (k * v).ln()).sum()
}

/// Converts an output entropy into an `S₁ → S_p` norm: `exp((1−p) H / p)`.
pub fn schatten_norm_from_entropy(entropy: f64, p: f64) -> Result<f64> {
    check_order_above_one(p)?;
    if !(entropy >= 0.0) {
        return Err(Error::InvalidParameter(format!("entropy {entropy} must be nonnegative")));
    }
    Ok(((1.0 - p) * entropy / p).exp())
}

/// `2 H^p(β^(t)) − H^p(γ^(t))`; positive values certify an asymptotic
/// violation of additivity at `(k, t, p)`.
pub fn violation_margin(k: usize, t: f64, p: f64) -> Result<f64> {
    check_order_above_one(p)?;
    let beta = beta_vector(k, t)?;
    let gamma = GammaSpectrum::new(k, t)?;
    Ok(2.0 * renyi_entropy(&beta, p)? - gamma_renyi(&gamma, p)?)
}

const K_SCAN_BLOCK: usize = 256;

/// Smallest `k ≥ 2` with a positive violation margin, scanning every integer
/// up to `k_max`.
pub fn k_zero(t: f64, p: f64, k_max: usize) -> Result<usize> {
    check_order_above_one(p)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("t = {t} is outside (0, 1)")));
    }
    if k_max > 100_000 {
        return Err(Error::InvalidParameter(format!("k_max = {k_max} exceeds 100000")));
    }
    let mut start = 2;
    while start <= k_max {
        let end = (start + K_SCAN_BLOCK).min(k_max + 1);
        let hit = (start..end)
            .into_par_iter()
            .map(|k| violation_margin(k, t, p).map(|m| (k, m)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .find(|&(_, m)| m > 0.0);
        if let Some((k, _)) = hit {
            return Ok(k);
        }
        start = end;
    }
    Err(Error::NotFound { k_max })
}

/// `H(γ^(1/2)) − 2 H(β^(1/2))` for even `k ≥ 4`.
pub fn shannon_deficit(k: usize) -> Result<f64> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::InvalidParameter(format!("k = {k} must be even and at least 4")));
    }
    let beta = beta_vector(k, 0.5)?;
    let gamma = GammaSpectrum::new(k, 0.5)?;
    Ok(gamma_renyi(&gamma, 1.0)? - 2.0 * shannon_entropy(&beta))
}

fn check_alpha(k: usize, alpha: f64) -> Result<()> {
    if k < 2 || !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("need k >= 2 and alpha > 0, got k = {k}, alpha = {alpha}")));
    }
    Ok(())
}

/// Leading correction in `H(γ^(k^(−α))) ≈ 2 log k − correction`.
pub fn asymptotic_gamma_correction(k: usize, alpha: f64) -> Result<f64> {
    check_alpha(k, alpha)?;
    let kf = k as f64;
    Ok(if alpha < 2.0 {
        (2.0 - alpha) * kf.ln() / kf.powf(alpha)
    } else if alpha == 2.0 {
        (2.0 * std::f64::consts::LN_2 - 1.0) / (kf * kf)
    } else {
        1.0 / (2.0 * kf.powf(2.0 * alpha - 2.0))
    })
}

/// Large-`k` expansion of the Shannon entropy of `γ^(k^(−α))`.
pub fn asymptotic_entropy_gamma(k: usize, alpha: f64) -> Result<f64> {
    Ok(2.0 * (k as f64).ln() - asymptotic_gamma_correction(k, alpha)?)
}

/// Leading correction in `H(β^(k^(−α))) ≈ log k − log k / k^α`.
pub fn asymptotic_beta_correction(k: usize, alpha: f64) -> Result<f64> {
    check_alpha(k, alpha)?;
    let kf = k as f64;
    Ok(kf.ln() / kf.powf(alpha))
}

/// Large-`k` expansion of the Shannon entropy of `β^(k^(−α))`.
pub fn asymptotic_entropy_beta(k: usize, alpha: f64) -> Result<f64> {
    Ok((k as f64).ln() - asymptotic_beta_correction(k, alpha)?)
}

/// Exact-versus-asymptotic comparison at one `(k, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDiagnostics {
    pub k: usize,
    pub alpha: f64,
    pub t: f64,
    pub entropy_beta: f64,
    pub entropy_gamma: f64,
    pub predicted_beta: f64,
    pub predicted_gamma: f64,
    /// `(log k − H(β)) / (log k / k^α)`.
    pub beta_ratio: f64,
    /// `(2 log k − H(γ)) / correction`.
    pub gamma_ratio: f64,
}

pub fn asymptotic_diagnostics(k: usize, alpha: f64) -> Result<AsymptoticDiagnostics> {
    let params = EntropyParams::with_alpha(1.0, k, alpha)?;
    let beta = params.beta()?;
    let gamma = params.gamma()?;
    Ok(AsymptoticDiagnostics {
        k,
        alpha,
        t: params.t,
        entropy_beta: shannon_entropy(&beta),
        entropy_gamma: gamma_renyi(&gamma, 1.0)?,
        predicted_beta: asymptotic_entropy_beta(k, alpha)?,
        predicted_gamma: asymptotic_entropy_gamma(k, alpha)?,
        beta_ratio: shannon_defect(&beta) / asymptotic_beta_correction(k, alpha)?,
        gamma_ratio: gamma_shannon_defect(&gamma) / asymptotic_gamma_correction(k, alpha)?,
    })
}

/// `∫₀^{1/2} h(ψ'(t)) dt`, integrated in `t = u²`.
pub fn integral_h_psi_prime_with_tol(tol: f64) -> Result<f64> {
    let upper = 0.5f64.sqrt();
    let q = quad::integrate(|u| 2.0 * u * h(psi_prime(u * u)), 0.0, upper, tol)?;
    Ok(q.value)
}

pub fn integral_h_psi_prime() -> Result<f64> {
    integral_h_psi_prime_with_tol(1e-12)
}

/// `(1/k) Σ_{j=1}^{k/2−1} (1 − 2j/k)² / (4j(1 − j/k))`, the `p = 2` tail bound.
pub fn companion_sum(k: usize) -> f64 {
    let kf = k as f64;
    (1..(k / 2))
        .map(|j| {
            let x = j as f64 / kf;
            (1.0 - 2.0 * x).powi(2) / (4.0 * j as f64 * (1.0 - x))
        })
        .sum::<f64>()
        / kf
}

/// `Σ_{j≥2} x_j^p` over the sorted entries.
pub fn tail_power_sum(x: &ProbabilityVector, p: f64) -> f64 {
    x.sorted_desc().entries()[1..].iter().filter(|&&v| v > 0.0).map(|v| v.powf(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::gamma_vector;
    use crate::kernel::RngStream;
    use crate::majorization::majorizes;
    use std::f64::consts::LN_2;

    #[test]
    fn renyi_examples() {
        for k in [2, 5, 17] {
            for p in [0.5, 1.0, 2.0, 7.0] {
                let u = ProbabilityVector::uniform(k);
                assert!((renyi_entropy(&u, p).unwrap() - (k as f64).ln()).abs() < 1e-12);
                let pure = renyi_entropy(&ProbabilityVector::point_mass(k), p).unwrap();
                assert!(pure == 0.0 && pure.is_sign_positive());
            }
        }
        let g = gamma_vector(2, 0.5).unwrap();
        let v = renyi_entropy(&g, 2.0).unwrap();
        assert!((v + 0.4375f64.ln()).abs() < 1e-14);
        assert!((v - 0.826_678_573_184_468).abs() < 1e-12);
        assert!(renyi_entropy(&g, 0.0).is_err());
        assert!(renyi_entropy(&g, -1.0).is_err());
    }

    #[test]
    fn renyi_nonincreasing_in_p_and_shannon_limit() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..200 {
            let x = rng.simplex_point(6);
            let ps: Vec<f64> = (0..=95).map(|i| 0.5 + 0.1 * i as f64).collect();
            let hs: Vec<f64> = ps.iter().map(|&p| renyi_entropy(&x, p).unwrap()).collect();
            assert!(hs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let sh = shannon_entropy(&x);
            for p in [1.0 - 1e-6, 1.0 + 1e-6] {
                assert!((renyi_entropy(&x, p).unwrap() - sh).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn schur_concavity() {
        let mut rng = RngStream::new(9, 0);
        let mut checked = 0;
        while checked < 1000 {
            let k = 2 + (rng.uniform() * 7.0) as usize;
            let (x, y) = (rng.simplex_point(k), rng.simplex_point(k));
            let (x, y) = if majorizes(&y, &x).majorized {
                (x, y)
            } else if majorizes(&x, &y).majorized {
                (y, x)
            } else {
                continue;
            };
            for p in [0.5, 1.0, 2.0, 5.0] {
                assert!(renyi_entropy(&x, p).unwrap() >= renyi_entropy(&y, p).unwrap() - 1e-12);
            }
            checked += 1;
        }
    }

    #[test]
    fn gamma_closed_form_matches_vector() {
        for k in [2, 3, 7, 20] {
            for t in [0.1, 0.5, 0.9] {
                let gs = GammaSpectrum::new(k, t).unwrap();
                let gv = gamma_vector(k, t).unwrap();
                for p in [0.5, 1.0, 1.5, 4.0] {
                    let a = gamma_renyi(&gs, p).unwrap();
                    let b = renyi_entropy(&gv, p).unwrap();
                    assert!((a - b).abs() < 1e-12, "k={k} t={t} p={p}");
                }
                let defect = 2.0 * (k as f64).ln() - renyi_entropy(&gv, 1.0).unwrap();
                assert!((gamma_shannon_defect(&gs) - defect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_majorizes_uniform() {
        for k in 2..12 {
            for i in 1..10 {
                let g = gamma_vector(k, i as f64 / 10.0).unwrap();
                assert!(majorizes(&g, &ProbabilityVector::uniform(k * k)).majorized);
            }
        }
    }

    #[test]
    fn schatten_examples() {
        assert_eq!(schatten_norm_from_entropy(0.0, 3.0).unwrap(), 1.0);
        assert!(schatten_norm_from_entropy(0.3, 1.0).is_err());
        let beta = beta_vector(10_000, 0.5).unwrap();
        let hb = renyi_entropy(&beta, 4.0).unwrap();
        assert!((schatten_norm_from_entropy(hb, 4.0).unwrap() - 0.5).abs() < 0.05);
        let hg = gamma_renyi(&GammaSpectrum::new(1000, 1.0 / 3.0).unwrap(), 4.0).unwrap();
        assert!((schatten_norm_from_entropy(hg, 4.0).unwrap() - 1.0 / 3.0).abs() < 0.05);
    }

    #[test]
    fn margin_examples() {
        // Values from an independent 20-digit evaluation.
        let m10 = violation_margin(10, 0.5, 5.0).unwrap();
        assert!((m10 + 0.296_153_512_520_310_99).abs() < 1e-10);
        let m100 = violation_margin(100, 0.5, 5.0).unwrap();
        assert!((m100 - 0.412_843_487_186_334_74).abs() < 1e-10);
        let big = violation_margin(10_000, 0.5, 2.0).unwrap();
        assert!((big - 2.0 * LN_2).abs() < 0.1);
        assert!(violation_margin(10, 0.5, 1.0).is_err());
    }

    #[test]
    fn k_zero_values() {
        // Regression constants from an exhaustive high-precision scan.
        assert_eq!(k_zero(0.5, 5.0, 10_000).unwrap(), 23);
        assert_eq!(k_zero(0.5, 2.0, 10_000).unwrap(), 25);
        assert_eq!(k_zero(0.5, 1.5, 10_000).unwrap(), 36);
        assert_eq!(k_zero(1.0 / 3.0, 2.0, 10_000).unwrap(), 20);
        assert_eq!(k_zero(0.25, 5.0, 10_000).unwrap(), 15);
        assert_eq!(k_zero(0.5, 1.05, 10_000).unwrap(), 1890);
        assert_eq!(k_zero(0.5, 1.05, 1000), Err(Error::NotFound { k_max: 1000 }));
        assert!(k_zero(0.5, 1.0, 100).is_err());
        assert!(k_zero(0.5, 2.0, 200_000).is_err());
    }

    #[test]
    fn k_zero_monotone_in_p() {
        for t in [0.5, 1.0 / 3.0, 0.25] {
            let ks: Vec<usize> = [1.2, 1.5, 2.0, 3.0, 5.0].iter().map(|&p| k_zero(t, p, 10_000).unwrap()).collect();
            assert!(ks.windows(2).all(|w| w[1] <= w[0]), "t={t}: {ks:?}");
        }
    }

    #[test]
    fn shannon_deficit_values() {
        assert!(shannon_deficit(5).is_err());
        assert!(shannon_deficit(2).is_err());
        let d2 = shannon_deficit(100).unwrap();
        let d3 = shannon_deficit(1000).unwrap();
        let d4 = shannon_deficit(10_000).unwrap();
        assert!(d2 > 0.0 && d3 > 0.0 && d4 > 0.0);
        // Independent high-precision evaluation: 1.16894, 0.91323, 0.78538.
        assert!((d2 - 1.168_944_442_631_689).abs() < 1e-9);
        assert!((d3 - 0.913_230_530_766_222).abs() < 1e-9);
        assert!((d4 - LN_2).abs() < 0.1);
        assert!((d4 - LN_2).abs() < (d2 - LN_2).abs());
    }

    #[test]
    fn gamma_asymptotics() {
        let d = asymptotic_diagnostics(10_000, 1.0).unwrap();
        assert!((d.gamma_ratio - 1.0).abs() <= 0.15, "{d:?}");
        let d = asymptotic_diagnostics(1000, 2.0).unwrap();
        assert!((d.gamma_ratio - 1.0).abs() <= 0.15, "{d:?}");
        let d = asymptotic_diagnostics(300, 3.0).unwrap();
        assert!((d.gamma_ratio - 1.0).abs() <= 0.2, "{d:?}");
    }

    #[test]
    fn beta_asymptotics() {
        let far = asymptotic_diagnostics(100_000, 1.0).unwrap();
        let near = asymptotic_diagnostics(1000, 1.0).unwrap();
        assert!((0.8..=1.2).contains(&far.beta_ratio), "{far:?}");
        assert!((far.beta_ratio - 1.0).abs() < (near.beta_ratio - 1.0).abs());
        let half = asymptotic_diagnostics(10_000, 0.5).unwrap();
        assert!((half.beta_ratio - 1.0).abs() <= 0.25, "{half:?}");
        for (k, a) in [(10, 0.3), (1000, 1.0), (50, 4.0)] {
            assert!(asymptotic_entropy_beta(k, a).unwrap() < (k as f64).ln());
        }
    }

    #[test]
    fn nontrivial_index_matches_beta_support() {
        for (k, alpha) in [(100, 1.0), (100, 2.0), (100, 0.5), (1000, 0.3)] {
            let beta = beta_vector(k, (k as f64).powf(-alpha)).unwrap();
            let nonzero = beta.entries().iter().filter(|&&v| v > 0.0).count();
            let j = nontrivial_index(k, alpha);
            assert!(nonzero == j || nonzero == j + 1, "k={k} alpha={alpha}: {nonzero} vs {j}");
        }
    }

    #[test]
    fn integral_identity() {
        let v = integral_h_psi_prime().unwrap();
        assert!((v + LN_2 / 2.0).abs() <= 1e-8, "{v}");
        let coarse = integral_h_psi_prime_with_tol(2e-12).unwrap();
        assert!((coarse - v).abs() < 1e-9);
    }

    #[test]
    fn companion_sum_small() {
        assert!(companion_sum(100_000) < 5e-4);
        assert!(companion_sum(100_000) < companion_sum(1000));
    }

    #[test]
    fn tail_sums_vanish() {
        for p in [1.5, 2.0, 3.0] {
            let sums: Vec<f64> = [100, 1000, 10_000]
                .iter()
                .map(|&k| tail_power_sum(&beta_vector(k, 0.5).unwrap(), p))
                .collect();
            assert!(sums.windows(2).all(|w| w[1] < w[0]), "p={p}: {sums:?}");
        }
        let h2 = renyi_entropy(&beta_vector(10_000, 0.5).unwrap(), 2.0).unwrap();
        assert!((h2 - 2.0 * LN_2).abs() <= 0.05);
    }

    #[test]
    fn helper_functions() {
        assert_eq!(h(0.0), 0.0);
        assert!((h(0.5) - 0.5 * LN_2).abs() < 1e-15);
        assert!((psi(0.25) - 0.1875f64.sqrt()).abs() < 1e-15);
        assert!(g(0.5).abs() < 1e-15);
        // d/dx φ(x, y) = (1 − 2y)(1 + g(x)/g(y)), checked by central differences
        let (x, y) = (0.3, 0.2);
        let step = 1e-6;
        let fd = (crate::free::phi(x + step, y).unwrap() - crate::free::phi(x - step, y).unwrap()) / (2.0 * step);
        assert!((fd - (1.0 - 2.0 * y) * (1.0 + g(x) / g(y))).abs() < 1e-7);
        let p = EntropyParams::with_alpha(2.0, 100, 1.0).unwrap();
        assert!((p.t - 0.01).abs() < 1e-15);
        assert!(EntropyParams::new(0.0, 4, 0.5).is_err());
        assert!(EntropyParams::new(1.0, 4, 0.5).unwrap().is_shannon());
    }
}
