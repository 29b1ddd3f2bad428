use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries below this are treated as rounding noise and clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Maximal deviation of the total mass from one.
pub const SUM_TOLERANCE: f64 = 1e-10;

/// A point of the probability simplex.
///
/// Construction clamps entries in `[-1e-12, 0)` to exact zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(mut entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("empty probability vector".into()));
        }
        for (i, e) in entries.iter_mut().enumerate() {
            if !e.is_finite() || *e < -NEGATIVE_TOLERANCE {
                return Err(Error::InvalidParameter(format!("entry {i} = {e} is not a probability")));
            }
            if *e < 0.0 {
                *e = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self { entries })
    }

    /// Rescales a nonnegative vector to unit mass.
    pub fn normalized(entries: Vec<f64>) -> Result<Self> {
        let sum: f64 = entries.iter().map(|e| e.max(0.0)).sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidParameter("vector has no positive mass".into()));
        }
        Self::new(entries.into_iter().map(|e| e.max(0.0) / sum).collect())
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform vector needs at least one entry");
        Self { entries: vec![1.0 / len as f64; len] }
    }

    /// The vector `(1, 0, ..., 0)`.
    pub fn point_mass(len: usize) -> Self {
        assert!(len > 0, "point mass needs at least one entry");
        let mut entries = vec![0.0; len];
        entries[0] = 1.0;
        Self { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries rearranged in nonincreasing order.
    pub fn sorted_desc(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.sort_by(|a, b| b.total_cmp(a));
        Self { entries }
    }

    pub fn is_sorted_desc(&self) -> bool {
        self.entries.windows(2).all(|w| w[0] >= w[1])
    }

    /// Appends zeros up to `len`; never truncates.
    pub fn zero_padded(&self, len: usize) -> Self {
        let mut entries = self.entries.clone();
        if entries.len() < len {
            entries.resize(len, 0.0);
        }
        Self { entries }
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.entries
    }
}
