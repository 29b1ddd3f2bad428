//! Closed-form free-probability predictions for products of projectors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;
use crate::quad;

const DENSITY_QUAD_TOL: f64 = 1e-8;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} = {v} is outside (0, 1)")));
    }
    Ok(())
}

/// Edges `(φ⁻, φ⁺)` of the continuous part of the product of two free
/// projections of traces `x` and `y`.
pub fn phi_pm(x: f64, y: f64) -> Result<(f64, f64)> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    let (x, y) = (x.min(y), x.max(y));
    let center = x + y - 2.0 * x * y;
    let radius = (4.0 * x * y * (1.0 - x) * (1.0 - y)).max(0.0).sqrt();
    Ok(((center - radius).clamp(0.0, 1.0), (center + radius).clamp(0.0, 1.0)))
}

/// Norm of the product of two free projections of traces `x` and `y`:
/// 0 when either vanishes, 1 once the ranges must overlap, `φ⁺` otherwise.
pub fn phi(x: f64, y: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    Ok(phi_unchecked(x, y))
}

pub(crate) fn phi_unchecked(x: f64, y: f64) -> f64 {
    let (x, y) = (x.min(y), x.max(y));
    if x == 0.0 || y == 0.0 {
        0.0
    } else if x + y >= 1.0 {
        // φ⁺ equals 1 on the seam x + y = 1.
        1.0
    } else {
        let radius = (4.0 * x * y * (1.0 - x) * (1.0 - y)).sqrt();
        (x + y - 2.0 * x * y + radius).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A measure on `[0, 1]` made of atoms plus the density
/// `√((hi − x)(x − lo)) / (2π x (1 − x))` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
    pub lo: f64,
    pub hi: f64,
}

impl SpectralMeasure {
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi || x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        ((self.hi - x) * (x - self.lo)).sqrt() / (2.0 * PI * x * (1.0 - x))
    }

    /// `∫ x^m` against the continuous part.
    ///
    /// Uses `x = lo + (hi − lo) sin²(θ/2)`, which turns the square-root edges
    /// (and the `1/x`, `1/(1−x)` poles when an edge touches 0 or 1) into a
    /// smooth integrand on `[0, π]`.
    pub fn continuous_moment(&self, m: u32) -> Result<f64> {
        let (lo, hi) = (self.lo, self.hi);
        let w = hi - lo;
        if w <= 0.0 {
            return Ok(0.0);
        }
        let integrand = |theta: f64| {
            let s2 = (0.5 * theta).sin().powi(2);
            let c2 = (0.5 * theta).cos().powi(2);
            let x = lo + w * s2;
            let one_minus_x = (1.0 - hi) + w * c2;
            let sin = theta.sin();
            // dx · √((hi−x)(x−lo)) = (w/2)² sin²θ dθ
            x.powi(m as i32) * 0.25 * w * w * sin * sin / (2.0 * PI * x * one_minus_x)
        };
        Ok(quad::integrate(integrand, 0.0, PI, DENSITY_QUAD_TOL)?.value)
    }

    pub fn continuous_mass(&self) -> Result<f64> {
        self.continuous_moment(0)
    }

    pub fn total_mass(&self) -> Result<f64> {
        Ok(self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.continuous_mass()?)
    }

    /// `∫ x^m dμ`, atoms included.
    pub fn moment(&self, m: u32) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * a.location.powi(m as i32)).sum();
        Ok(atoms + self.continuous_moment(m)?)
    }

    pub fn atom_mass_at(&self, location: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location == location).map(|a| a.mass).sum()
    }
}

/// Free multiplicative convolution of the Bernoulli laws
/// `(1−α)δ₀ + αδ₁` and `(1−β)δ₀ + βδ₁`.
pub fn free_mult_conv_projectors(alpha: f64, beta: f64) -> Result<SpectralMeasure> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("beta", beta)?;
    let (lo, hi) = phi_pm(alpha, beta)?;
    Ok(SpectralMeasure {
        atoms: vec![
            Atom { location: 0.0, mass: 1.0 - alpha.min(beta) },
            Atom { location: 1.0, mass: (alpha + beta - 1.0).max(0.0) },
        ],
        lo,
        hi,
    })
}

fn check_k_t(k: usize, t: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
    }
    check_open_unit("t", t)
}

/// Values `φ(j/k, t)` for `j = 0..=k`; these are the partial sums of `β^(t)`.
pub fn beta_partial_sums(k: usize, t: f64) -> Result<Vec<f64>> {
    check_k_t(k, t)?;
    Ok((0..=k).map(|j| phi_unchecked(j as f64 / k as f64, t)).collect())
}

/// The confining vector `β^(t)_j = φ(j/k, t) − φ((j−1)/k, t)`.
pub fn beta_vector(k: usize, t: f64) -> Result<ProbabilityVector> {
    let sums = beta_partial_sums(k, t)?;
    ProbabilityVector::new(sums.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Limiting spectrum of the product channel on the Bell input: one eigenvalue
/// `t + (1−t)/k²` and `k² − 1` copies of `(1−t)/k²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSpectrum {
    pub k: usize,
    pub t: f64,
}

impl GammaSpectrum {
    pub fn new(k: usize, t: f64) -> Result<Self> {
        check_k_t(k, t)?;
        Ok(Self { k, t })
    }

    pub fn dim(&self) -> usize {
        self.k * self.k
    }

    pub fn top(&self) -> f64 {
        self.t + self.rest()
    }

    pub fn rest(&self) -> f64 {
        (1.0 - self.t) / self.dim() as f64
    }

    /// Number of copies of [`GammaSpectrum::rest`].
    pub fn rest_multiplicity(&self) -> usize {
        self.dim() - 1
    }

    pub fn to_vector(&self) -> Result<ProbabilityVector> {
        if self.dim() > 1 << 24 {
            return Err(Error::TooLarge(format!("gamma vector with {} entries", self.dim())));
        }
        let mut v = vec![self.rest(); self.dim()];
        v[0] = self.top();
        ProbabilityVector::new(v)
    }
}

/// `γ^(t)` materialized as a vector of length `k²`.
pub fn gamma_vector(k: usize, t: f64) -> Result<ProbabilityVector> {
    GammaSpectrum::new(k, t)?.to_vector()
}
