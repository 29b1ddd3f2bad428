//! Monte-Carlo realizations of the random channel `X ↦ Tr_n(U χ(X) U*)`, its
//! conjugate pair on the Bell state, and products of random projectors.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free::beta_vector;
use crate::kernel::{
    check_normalized, eigenvalues_unchecked, haar_isometry, lanczos_top_with, partial_trace_left, reduced_density,
    spectrum_of_density, ComplexMatrix, RngStream, C64,
};
use crate::majorization::polytope_violation;
use crate::prob::ProbabilityVector;

/// Guard on `nk` for the Bell-state computation, which holds an `nk x nk` projector.
pub const BELL_MAX_NK: usize = 1024;
/// Guard on the output dimension `k²` of the product channel.
pub const BELL_MAX_OUTPUT: usize = 256;

/// One draw of the random channel `Φ: M_{p_n}(C) → M_k(C)`.
///
/// The embedding `χ` is fixed to the first `p_n` coordinates of `C^{nk}`, so
/// only the first `p_n` columns of the Haar unitary ever matter; they are
/// stored as the isometry `W = Uχ`, whose range is the random subspace `V`.
#[derive(Debug, Clone)]
pub struct ChannelInstance {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub p_n: usize,
    pub seed: u64,
    pub stream_id: u64,
    isometry: ComplexMatrix,
}

/// `round(t n k)` with ties to even.
pub fn input_dimension(n: usize, k: usize, t: f64) -> usize {
    (t * (n * k) as f64).round_ties_even() as usize
}

/// Draws a channel from stream 0 of `seed`.
pub fn build_channel(n: usize, k: usize, t: f64, seed: u64) -> Result<ChannelInstance> {
    build_channel_on_stream(n, k, t, seed, 0)
}

pub fn build_channel_on_stream(n: usize, k: usize, t: f64, seed: u64, stream_id: u64) -> Result<ChannelInstance> {
    let mut rng = RngStream::new(seed, stream_id);
    build_channel_with(n, k, t, &mut rng)
}

/// Draws a channel from an existing stream, advancing it.
pub fn build_channel_with(n: usize, k: usize, t: f64, rng: &mut RngStream) -> Result<ChannelInstance> {
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} and k = {k} must both be at least 2")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("t = {t} is outside (0, 1)")));
    }
    let p_n = input_dimension(n, k, t);
    if p_n == 0 || p_n >= n * k {
        return Err(Error::DegenerateParameter(format!("round(t n k) = {p_n} for n k = {}", n * k)));
    }
    let isometry = haar_isometry(n * k, p_n, rng)?;
    Ok(ChannelInstance { n, k, t, p_n, seed: rng.seed(), stream_id: rng.stream_id(), isometry })
}

impl ChannelInstance {
    pub fn nk(&self) -> usize {
        self.n * self.k
    }

    /// `W = Uχ`, an `nk x p_n` isometry.
    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    /// `W x`, the image of an input vector in `C^n ⊗ C^k`.
    pub fn embed(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.isometry.mul_vec(x)
    }

    /// Output state `Φ(|x><x|)` for a unit vector `x ∈ C^{p_n}`.
    pub fn apply_pure(&self, x: &[C64]) -> Result<ComplexMatrix> {
        check_normalized(x)?;
        let y = self.embed(x)?;
        reduced_density(&y, self.n, self.k)
    }

    /// Output spectrum `spec Φ(|x><x|)`, nonincreasing.
    pub fn output_spectrum(&self, x: &[C64]) -> Result<ProbabilityVector> {
        spectrum_of_density(&self.apply_pure(x)?)
    }

    /// `Φ(ρ)` for a density matrix on `C^{p_n}`, via `Tr_n(W ρ W†)`.
    pub fn apply_mixed(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.p_n || rho.cols() != self.p_n {
            return Err(Error::InvalidDimension(format!("input is {}x{}, expected {}", rho.rows(), rho.cols(), self.p_n)));
        }
        let conj = self.isometry.matmul(rho)?.matmul(&self.isometry.adjoint())?;
        partial_trace_left(&conj, self.n, self.k)
    }

    /// Applies `W† (I_n ⊗ P_F) W` to `x`, where `frame` holds an orthonormal
    /// basis of `F ⊂ C^k` as columns.
    pub fn compressed_subspace_apply(&self, frame: &ComplexMatrix, x: &[C64], out: &mut [C64]) {
        let y = self.isometry.mul_vec(x).expect("input length matches p_n");
        let mut z = vec![C64::new(0.0, 0.0); y.len()];
        let k = self.k;
        let j = frame.cols();
        let mut coef = vec![C64::new(0.0, 0.0); j];
        for a in 0..self.n {
            let block = &y[a * k..(a + 1) * k];
            for (m, c) in coef.iter_mut().enumerate() {
                *c = (0..k).map(|b| frame[(b, m)].conj() * block[b]).sum();
            }
            for b in 0..k {
                z[a * k + b] = (0..j).map(|m| frame[(b, m)] * coef[m]).sum();
            }
        }
        out.copy_from_slice(&self.isometry.adjoint_mul_vec(&z).expect("length nk"));
    }

    /// Unit vector of `C^{p_n}` maximizing `Tr(P_x P_{C^n ⊗ F})`, with the
    /// maximal value. Lanczos warm-started at `start`, so the value is never
    /// below the one attained at `start`.
    pub fn best_input_for_subspace(&self, frame: &ComplexMatrix, start: &[C64]) -> (f64, Vec<C64>) {
        self.improve_input_for_subspace(frame, start, 30)
    }

    /// `B = W† (I_n ⊗ F)`, a `p_n x n j` matrix with `B B† = W† (I_n ⊗ P_F) W`.
    pub fn subspace_factor(&self, frame: &ComplexMatrix) -> DMatrix<C64> {
        let (k, j) = (self.k, frame.cols());
        let w = self.isometry.as_dmatrix();
        let f = frame.as_dmatrix();
        let mut b = DMatrix::<C64>::zeros(self.p_n, self.n * j);
        for a in 0..self.n {
            let block = w.rows(a * k, k).ad_mul(f);
            b.columns_mut(a * j, j).copy_from(&block);
        }
        b
    }

    /// As [`Self::best_input_for_subspace`] with at most `passes` Krylov
    /// passes: cheaper, still never worse than `start`.
    pub fn improve_input_for_subspace(&self, frame: &ComplexMatrix, start: &[C64], passes: usize) -> (f64, Vec<C64>) {
        self.improve_input_with(frame, start, 48, passes)
    }

    /// As [`Self::improve_input_for_subspace`] with Krylov dimension `krylov`.
    pub fn improve_input_with(&self, frame: &ComplexMatrix, start: &[C64], krylov: usize, passes: usize) -> (f64, Vec<C64>) {
        let b = self.subspace_factor(frame);
        let apply = |x: &[C64], out: &mut [C64]| {
            let coef = b.ad_mul(&DVector::from_column_slice(x));
            out.iter_mut().zip((&b * coef).iter()).for_each(|(o, v)| *o = *v);
        };
        lanczos_top_with(self.p_n, krylov, apply, start, 1e-10, passes)
    }
}

/// Output of the product channel `Φ ⊗ Φ̄` on the maximally entangled input of
/// `C^{p_n} ⊗ C^{p_n}`, as a `k² x k²` density with index `b k + b'`.
///
/// The output vector before the partial trace is `vec(P_V)/√p_n`, so the
/// result is assembled from the `nk x nk` projector onto `V` without ever
/// forming an operator on `(C^{nk})^{⊗2}`.
pub fn conjugate_bell_output(c: &ChannelInstance) -> Result<ComplexMatrix> {
    let (n, k) = (c.n, c.k);
    if c.nk() > BELL_MAX_NK || k * k > BELL_MAX_OUTPUT {
        return Err(Error::TooLarge(format!("Bell output needs n k <= {BELL_MAX_NK} and k² <= {BELL_MAX_OUTPUT}")));
    }
    let w = c.isometry.as_dmatrix();
    let proj = w * w.adjoint();
    let v = DMatrix::<C64>::from_fn(n * n, k * k, |r, col| {
        let (a, ap) = (r / n, r % n);
        let (b, bp) = (col / k, col % k);
        proj[(a * k + b, ap * k + bp)]
    });
    let gram = v.ad_mul(&v).transpose() / C64::new(c.p_n as f64, 0.0);
    Ok(ComplexMatrix::from_dmatrix(gram).hermitian_part())
}

/// Spectrum of [`conjugate_bell_output`], nonincreasing.
pub fn conjugate_bell_spectrum(c: &ChannelInstance) -> Result<Vec<f64>> {
    Ok(eigenvalues_unchecked(&conjugate_bell_output(c)?))
}

/// `‖π π' π‖_∞` for a coordinate projection `π` of rank `q` and the
/// projection `π'` onto the range of the isometry `range`.
///
/// Equals the squared largest singular value of the top `q` rows of `range`.
pub fn projector_product_norm_from_range(q: usize, range: &ComplexMatrix) -> Result<f64> {
    if q == 0 || q > range.rows() {
        return Err(Error::DegenerateParameter(format!("rank {q} for dimension {}", range.rows())));
    }
    let block = range.as_dmatrix().rows(0, q).into_owned();
    let gram = if q <= block.ncols() { &block * block.adjoint() } else { block.ad_mul(&block) };
    let vals = eigenvalues_unchecked(&ComplexMatrix::from_dmatrix(gram).hermitian_part());
    Ok(vals[0].clamp(0.0, 1.0))
}

pub fn projection_ranks(dim: usize, alpha: f64, beta: f64) -> Result<(usize, usize)> {
    let q = (alpha * dim as f64).round_ties_even();
    let r = (beta * dim as f64).round_ties_even();
    if !(q >= 1.0 && r >= 1.0 && q <= (dim - 1) as f64 && r <= (dim - 1) as f64) {
        return Err(Error::DegenerateParameter(format!("ranks ({q}, {r}) in dimension {dim}")));
    }
    Ok((q as usize, r as usize))
}

/// Norm of the product of a coordinate projection of rank `round(αN)` and a
/// Haar-rotated one of rank `round(βN)`.
pub fn projector_product_norm(dim: usize, alpha: f64, beta: f64, rng: &mut RngStream) -> Result<f64> {
    if dim < 2 {
        return Err(Error::DegenerateParameter(format!("dimension {dim} is too small")));
    }
    let (q, r) = projection_ranks(dim, alpha, beta)?;
    let range = haar_isometry(dim, r, rng)?;
    projector_product_norm_from_range(q, &range)
}

/// Largest confinement violation over an input ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfinementStats {
    pub max_violation: f64,
    pub max_top_eigenvalue: f64,
    pub inputs: usize,
}

/// Random orthonormal `k x j` frame.
pub fn random_frame(k: usize, j: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    haar_isometry(k, j, rng)
}

/// Samples `uniform` Haar-random unit inputs plus `boundary` inputs that
/// maximize `Tr(P_x P_{C^n ⊗ F})` for a random subspace `F` of random
/// dimension `1 ≤ j < k`, and reports the worst partial-sum excess of their
/// output spectra over `β^(t)`.
pub fn confinement_stats(
    c: &ChannelInstance,
    uniform: usize,
    boundary: usize,
    rng: &mut RngStream,
) -> Result<ConfinementStats> {
    let beta = beta_vector(c.k, c.t)?;
    let mut stats = ConfinementStats { max_violation: 0.0, max_top_eigenvalue: 0.0, inputs: 0 };
    let record = |x: &[C64], stats: &mut ConfinementStats| -> Result<()> {
        let spec = c.output_spectrum(x)?;
        stats.max_violation = stats.max_violation.max(polytope_violation(&spec, &beta));
        stats.max_top_eigenvalue = stats.max_top_eigenvalue.max(spec.max_entry());
        stats.inputs += 1;
        Ok(())
    };
    for _ in 0..uniform {
        let x = rng.unit_vector(c.p_n);
        record(&x, &mut stats)?;
    }
    for _ in 0..boundary {
        let j = 1 + ((rng.uniform() * (c.k - 1) as f64) as usize).min(c.k - 2);
        let frame = random_frame(c.k, j, rng)?;
        let start = rng.unit_vector(c.p_n);
        let (_, x) = c.improve_input_for_subspace(&frame, &start, 1);
        record(&x, &mut stats)?;
    }
    Ok(stats)
}

/// What a batch of trials measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Output spectra of one channel per trial against `β^(t)`.
    Confinement { n: usize, k: usize, t: f64, uniform_inputs: usize, boundary_inputs: usize },
    /// Spectrum of `Φ ⊗ Φ̄` on the Bell state, one channel per trial.
    Bell { n: usize, k: usize, t: f64, schatten_p: Option<f64> },
    /// `‖π π' π‖_∞` in dimension `dim`.
    ProjectorNorm { dim: usize, alpha: f64, beta: f64 },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Confinement { .. } => "confinement",
            Self::Bell { .. } => "bell",
            Self::ProjectorNorm { .. } => "projnorm",
        }
    }

    pub fn available_observables(&self) -> Vec<String> {
        match self {
            Self::Confinement { .. } => vec!["max_violation".into(), "max_top_eigenvalue".into()],
            Self::Bell { k, schatten_p, .. } => {
                let mut v: Vec<String> = (1..=k * k).map(|i| format!("eig_{i}")).collect();
                if schatten_p.is_some() {
                    v.push("schatten_norm".into());
                }
                v
            }
            Self::ProjectorNorm { .. } => vec!["norm".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDescriptor {
    pub kind: ExperimentKind,
    pub observables: Vec<String>,
}

impl ExperimentDescriptor {
    /// Descriptor recording every observable the experiment offers.
    pub fn all(kind: ExperimentKind) -> Self {
        let observables = kind.available_observables();
        Self { kind, observables }
    }

    pub fn validate(&self) -> Result<()> {
        if self.observables.is_empty() {
            return Err(Error::InvalidParameter("no observables requested".into()));
        }
        let available = self.kind.available_observables();
        if let Some(bad) = self.observables.iter().find(|o| !available.contains(o)) {
            return Err(Error::InvalidParameter(format!("unknown observable {bad} for {}", self.kind.name())));
        }
        match &self.kind {
            ExperimentKind::Confinement { n, k, uniform_inputs, boundary_inputs, t } => {
                if uniform_inputs + boundary_inputs == 0 {
                    return Err(Error::InvalidParameter("confinement needs at least one input".into()));
                }
                check_channel_params(*n, *k, *t)
            }
            ExperimentKind::Bell { n, k, t, schatten_p } => {
                check_channel_params(*n, *k, *t)?;
                if n * k > BELL_MAX_NK || k * k > BELL_MAX_OUTPUT {
                    return Err(Error::TooLarge(format!("Bell output needs n k <= {BELL_MAX_NK}")));
                }
                match schatten_p {
                    Some(p) if !(*p >= 1.0) => Err(Error::InvalidParameter(format!("Schatten order {p} < 1"))),
                    _ => Ok(()),
                }
            }
            ExperimentKind::ProjectorNorm { dim, alpha, beta } => {
                if *dim < 2 {
                    return Err(Error::DegenerateParameter(format!("dimension {dim} is too small")));
                }
                projection_ranks(*dim, *alpha, *beta).map(|_| ())
            }
        }
    }
}

fn check_channel_params(n: usize, k: usize, t: f64) -> Result<()> {
    if n < 2 || k < 2 || !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("need n, k >= 2 and t in (0, 1); got n={n}, k={k}, t={t}")));
    }
    let p = input_dimension(n, k, t);
    if p == 0 || p >= n * k {
        return Err(Error::DegenerateParameter(format!("round(t n k) = {p}")));
    }
    Ok(())
}

/// One observed value of one trial.
///
/// For `projnorm` records, `n` holds the dimension `N`, `alpha` the first
/// rank ratio and `t` the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub stream_id: u64,
    pub observable: String,
    pub value: f64,
    pub wall_ms: f64,
}

fn record_template(kind: &ExperimentKind, seed: u64, stream_id: u64) -> TrialRecord {
    let mut r = TrialRecord {
        experiment: kind.name().into(),
        n: None,
        k: None,
        t: None,
        p: None,
        alpha: None,
        seed,
        stream_id,
        observable: String::new(),
        value: f64::NAN,
        wall_ms: 0.0,
    };
    match *kind {
        ExperimentKind::Confinement { n, k, t, .. } => {
            (r.n, r.k, r.t) = (Some(n), Some(k), Some(t));
        }
        ExperimentKind::Bell { n, k, t, schatten_p } => {
            (r.n, r.k, r.t, r.p) = (Some(n), Some(k), Some(t), schatten_p);
        }
        ExperimentKind::ProjectorNorm { dim, alpha, beta } => {
            (r.n, r.alpha, r.t) = (Some(dim), Some(alpha), Some(beta));
        }
    }
    r
}

fn observe(kind: &ExperimentKind, rng: &mut RngStream) -> Result<Vec<(String, f64)>> {
    match *kind {
        ExperimentKind::Confinement { n, k, t, uniform_inputs, boundary_inputs } => {
            let c = build_channel_with(n, k, t, rng)?;
            let s = confinement_stats(&c, uniform_inputs, boundary_inputs, rng)?;
            Ok(vec![("max_violation".into(), s.max_violation), ("max_top_eigenvalue".into(), s.max_top_eigenvalue)])
        }
        ExperimentKind::Bell { n, k, t, schatten_p } => {
            let c = build_channel_with(n, k, t, rng)?;
            let spec = conjugate_bell_spectrum(&c)?;
            let mut out: Vec<(String, f64)> =
                spec.iter().enumerate().map(|(i, &v)| (format!("eig_{}", i + 1), v)).collect();
            if let Some(p) = schatten_p {
                out.push(("schatten_norm".into(), schatten_norm(&spec, p)));
            }
            Ok(out)
        }
        ExperimentKind::ProjectorNorm { dim, alpha, beta } => {
            Ok(vec![("norm".into(), projector_product_norm(dim, alpha, beta, rng)?)])
        }
    }
}

/// `(Σ λ_i^p)^{1/p}` over the nonnegative part of a spectrum.
pub fn schatten_norm(spectrum: &[f64], p: f64) -> f64 {
    spectrum.iter().map(|v| v.max(0.0).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Runs one trial on stream `(seed, stream_id)`.
pub fn run_trial(desc: &ExperimentDescriptor, seed: u64, stream_id: u64) -> Vec<TrialRecord> {
    let template = record_template(&desc.kind, seed, stream_id);
    let mut rng = RngStream::new(seed, stream_id);
    let start = Instant::now();
    let result = observe(&desc.kind, &mut rng);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(values) => values
            .into_iter()
            .filter(|(name, _)| desc.observables.contains(name))
            .map(|(observable, value)| TrialRecord { observable, value, wall_ms, ..template.clone() })
            .collect(),
        Err(e) => vec![TrialRecord { observable: format!("error: {e}"), value: f64::NAN, wall_ms, ..template }],
    }
}

/// Runs `trials` independent trials on `workers` threads. Trial `i` draws
/// from stream `i` of `seed`, so the records do not depend on `workers`;
/// they are returned ordered by stream id, then observable. A failing trial
/// contributes one record whose observable starts with `error:`.
pub fn run_trials(desc: &ExperimentDescriptor, trials: usize, seed: u64, workers: usize) -> Result<Vec<TrialRecord>> {
    desc.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::NumericalFailure(format!("cannot start worker pool: {e}")))?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..trials as u64).into_par_iter().map(|i| run_trial(desc, seed, i)).collect());
    Ok(per_trial.into_iter().flatten().collect())
}

/// Mean and standard error of one observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSummary {
    pub observable: String,
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-observable summaries in order of first appearance, accumulated with
/// Welford's recurrence. Error records are skipped.
pub fn summarize(records: &[TrialRecord]) -> Vec<ObservableSummary> {
    let mut acc: Vec<(String, usize, f64, f64, f64, f64)> = Vec::new();
    for r in records.iter().filter(|r| !r.observable.starts_with("error")) {
        let pos = match acc.iter().position(|a| a.0 == r.observable) {
            Some(p) => p,
            None => {
                acc.push((r.observable.clone(), 0, 0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY));
                acc.len() - 1
            }
        };
        let a = &mut acc[pos];
        a.1 += 1;
        let delta = r.value - a.2;
        a.2 += delta / a.1 as f64;
        a.3 += delta * (r.value - a.2);
        a.4 = a.4.min(r.value);
        a.5 = a.5.max(r.value);
    }
    acc.into_iter()
        .map(|(observable, count, mean, m2, min, max)| {
            let std_dev = if count > 1 { (m2 / (count - 1) as f64).sqrt() } else { 0.0 };
            ObservableSummary { observable, count, mean, std_dev, std_err: std_dev / (count as f64).sqrt(), min, max }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::gamma_vector;
    use crate::kernel::hermitian_eigenvalues;

    #[test]
    fn build_examples() {
        let c = build_channel(4, 2, 0.5, 1).unwrap();
        assert_eq!(c.p_n, 4);
        assert_eq!(c.isometry().rows(), 8);
        assert!(c.isometry().is_isometry());
        let again = build_channel(4, 2, 0.5, 1).unwrap();
        assert_eq!(c.isometry(), again.isometry());
        assert_eq!(input_dimension(100, 4, 1.0 / 3.0), 133);
        assert!(matches!(build_channel(2, 2, 0.1, 1), Err(Error::DegenerateParameter(_))));
        assert!(matches!(build_channel(2, 2, 0.95, 1), Err(Error::DegenerateParameter(_))));
        assert!(matches!(build_channel(1, 2, 0.5, 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_channel(3, 2, 1.0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rounding_invariant() {
        for (n, k, t) in [(10, 3, 0.37), (7, 5, 0.5), (100, 4, 1.0 / 3.0), (33, 2, 0.01)] {
            let p = input_dimension(n, k, t);
            assert!(((p as f64) / (n * k) as f64 - t).abs() <= 1.0 / (n * k) as f64);
        }
    }

    #[test]
    fn pure_output_matches_slow_path() {
        let c = build_channel(6, 3, 0.5, 2).unwrap();
        let mut rng = RngStream::new(2, 99);
        for _ in 0..20 {
            let x = rng.unit_vector(c.p_n);
            let fast = c.apply_pure(&x).unwrap();
            let slow = c.apply_mixed(&ComplexMatrix::outer(&x)).unwrap();
            assert!(fast.max_abs_diff(&slow) <= 1e-10);
            assert!((fast.trace().re - 1.0).abs() <= 1e-10);
            assert!(fast.is_hermitian());
            assert!(*hermitian_eigenvalues(&fast).unwrap().last().unwrap() >= -1e-12);
        }
        assert!(matches!(c.apply_pure(&vec![C64::new(1.0, 0.0); c.p_n]), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn mixed_inputs_preserve_trace() {
        let c = build_channel(10, 3, 0.4, 3).unwrap();
        let mut rng = RngStream::new(3, 1);
        for _ in 0..10 {
            let g = ComplexMatrix::from_fn(c.p_n, 4, |_, _| rng.complex_normal());
            let rho = g.matmul(&g.adjoint()).unwrap();
            let tr = rho.trace().re;
            let rho = ComplexMatrix::from_dmatrix(rho.into_dmatrix() / C64::new(tr, 0.0));
            let out = c.apply_mixed(&rho).unwrap();
            assert!((out.trace().re - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn bell_output_is_a_state() {
        let c = build_channel(8, 2, 0.5, 4).unwrap();
        let z = conjugate_bell_output(&c).unwrap();
        assert_eq!((z.rows(), z.cols()), (4, 4));
        assert!((z.trace().re - 1.0).abs() < 1e-10);
        assert!(z.is_hermitian());
        assert!(*hermitian_eigenvalues(&z).unwrap().last().unwrap() > -1e-12);
    }

    #[test]
    fn bell_output_matches_brute_force() {
        // Oracle: form the Bell output vector on (C^n ⊗ C^k)^{⊗2} and trace out both n factors.
        let c = build_channel(3, 2, 0.5, 5).unwrap();
        let (n, k, p) = (c.n, c.k, c.p_n);
        let w = c.isometry();
        let dim = n * k;
        let mut v = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..p {
            for r in 0..dim {
                for s in 0..dim {
                    v[r * dim + s] += w[(r, i)] * w[(s, i)].conj() / (p as f64).sqrt();
                }
            }
        }
        let mut z = vec![C64::new(0.0, 0.0); k.pow(4)];
        for b in 0..k {
            for bp in 0..k {
                for cc in 0..k {
                    for cp in 0..k {
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..n {
                            for ap in 0..n {
                                acc += v[(a * k + b) * dim + ap * k + bp] * v[(a * k + cc) * dim + ap * k + cp].conj();
                            }
                        }
                        z[(b * k + bp) * k * k + cc * k + cp] = acc;
                    }
                }
            }
        }
        let oracle = ComplexMatrix::from_row_major(k * k, k * k, z).unwrap();
        assert!(conjugate_bell_output(&c).unwrap().max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn bell_spectrum_near_gamma() {
        let gamma = gamma_vector(2, 0.5).unwrap();
        let c = build_channel(120, 2, 0.5, 6).unwrap();
        let spec = conjugate_bell_spectrum(&c).unwrap();
        for (a, b) in spec.iter().zip(gamma.entries()) {
            assert!((a - b).abs() < 0.03, "{spec:?}");
        }
        assert!(spec[0] >= 0.5 - 0.05);
    }

    #[test]
    fn bell_guard() {
        let c = build_channel(300, 4, 0.5, 7).unwrap();
        assert!(matches!(conjugate_bell_output(&c), Err(Error::TooLarge(_))));
    }

    #[test]
    fn projector_norm_examples() {
        let mut rng = RngStream::new(8, 0);
        let v = projector_product_norm(60, 0.6, 0.5, &mut rng).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let q = 7;
        let same = ComplexMatrix::from_fn(20, q, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        assert_eq!(projector_product_norm_from_range(q, &same).unwrap(), 1.0);
        assert!(matches!(projector_product_norm(10, 0.01, 0.5, &mut rng), Err(Error::DegenerateParameter(_))));
        assert!(matches!(projector_product_norm(10, 0.5, 0.99, &mut rng), Err(Error::DegenerateParameter(_))));
    }

    #[test]
    fn subspace_maximizer_improves_start() {
        let c = build_channel(20, 3, 0.5, 9).unwrap();
        let mut rng = RngStream::new(9, 1);
        let frame = random_frame(3, 1, &mut rng).unwrap();
        let start = rng.unit_vector(c.p_n);
        let mut tmp = vec![C64::new(0.0, 0.0); c.p_n];
        c.compressed_subspace_apply(&frame, &start, &mut tmp);
        let before = crate::kernel::inner(&start, &tmp).re;
        let (after, x) = c.best_input_for_subspace(&frame, &start);
        assert!(after >= before);
        // the value is Tr(P_x P_{C^n ⊗ F}) = <f| ρ |f>
        let rho = c.apply_pure(&x).unwrap();
        let f = frame.column(0);
        let direct: C64 = (0..3).flat_map(|b| (0..3).map(move |d| (b, d))).map(|(b, d)| f[b].conj() * rho[(b, d)] * f[d]).sum();
        assert!((direct.re - after).abs() < 1e-10);
    }

    #[test]
    fn subspace_factor_reproduces_compressed_operator() {
        let c = build_channel(15, 4, 0.4, 10).unwrap();
        let mut rng = RngStream::new(10, 1);
        let frame = random_frame(4, 2, &mut rng).unwrap();
        let b = c.subspace_factor(&frame);
        assert_eq!((b.nrows(), b.ncols()), (c.p_n, 30));
        let x = rng.unit_vector(c.p_n);
        let mut slow = vec![C64::new(0.0, 0.0); c.p_n];
        c.compressed_subspace_apply(&frame, &x, &mut slow);
        let fast = &b * (b.adjoint() * DVector::from_column_slice(&x));
        let diff = slow.iter().zip(fast.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn trials_are_worker_independent() {
        let desc = ExperimentDescriptor::all(ExperimentKind::Bell { n: 10, k: 2, t: 0.5, schatten_p: Some(2.0) });
        let a = run_trials(&desc, 10, 7, 1).unwrap();
        let b = run_trials(&desc, 10, 7, 8).unwrap();
        let strip = |v: &[TrialRecord]| v.iter().map(|r| TrialRecord { wall_ms: 0.0, ..r.clone() }).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.len(), 10 * 5);
    }

    #[test]
    fn descriptor_validation() {
        let kind = ExperimentKind::ProjectorNorm { dim: 50, alpha: 0.3, beta: 0.3 };
        let empty = ExperimentDescriptor { kind: kind.clone(), observables: vec![] };
        assert!(matches!(run_trials(&empty, 3, 1, 1), Err(Error::InvalidParameter(_))));
        let unknown = ExperimentDescriptor { kind, observables: vec!["eig_1".into()] };
        assert!(unknown.validate().is_err());
        let big = ExperimentDescriptor::all(ExperimentKind::Bell { n: 600, k: 2, t: 0.5, schatten_p: None });
        assert!(matches!(big.validate(), Err(Error::TooLarge(_))));
    }

    #[test]
    fn failing_trials_yield_error_records() {
        // validate() is bypassed to exercise the per-trial error path.
        let desc = ExperimentDescriptor {
            kind: ExperimentKind::Bell { n: 600, k: 2, t: 0.5, schatten_p: None },
            observables: vec!["eig_1".into()],
        };
        let recs = run_trial(&desc, 1, 0);
        assert_eq!(recs.len(), 1);
        assert!(recs[0].observable.starts_with("error:"));
        assert!(recs[0].value.is_nan());
    }

    #[test]
    fn summary_matches_two_pass() {
        let mut rng = RngStream::new(10, 0);
        let values: Vec<f64> = (0..500).map(|_| 1e3 + rng.uniform()).collect();
        let recs: Vec<TrialRecord> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| TrialRecord {
                experiment: "x".into(),
                n: None,
                k: None,
                t: None,
                p: None,
                alpha: None,
                seed: 0,
                stream_id: i as u64,
                observable: "v".into(),
                value: v,
                wall_ms: 0.0,
            })
            .collect();
        let s = &summarize(&recs)[0];
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        assert!((s.mean - mean).abs() <= 1e-12 * mean.abs());
        assert!((s.std_dev - var.sqrt()).abs() <= 1e-12);
        assert_eq!(s.count, 500);
    }
}
