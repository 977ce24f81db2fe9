//! Informationally complete POVMs, linear-inversion tomography and the
//! Monte-Carlo acceptance test built on it.
//!
//! The acceptance probability of `(target, source, n, eps)` is the chance
//! that reconstructing `n - 1` measured copies of `source` lands within trace
//! distance `eps / 2` of `target`. Estimates are kept raw (not projected to
//! the state space), so the ball test uses half the trace norm of a Hermitian
//! difference.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{half_trace_norm_hermitian, hermitian_eig, tensor, ComplexMatrix, DensityMatrix, C64};
use crate::rng::{derive_seed, random_unit_vector, seeded};
use crate::states::Ensemble;

/// Seeded projector sets examined per IC-POVM construction.
pub const POVM_CANDIDATES: u64 = 256;
/// Born probabilities below this are treated as invalid input.
pub const NEGATIVE_PROB_TOL: f64 = 1e-12;
const GRAM_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    duals: Vec<ComplexMatrix>,
    dim: usize,
}

impl Povm {
    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn duals(&self) -> &[ComplexMatrix] {
        &self.duals
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `sum_n ||M_n*||_F^2`
    pub fn dual_energy(&self) -> f64 {
        self.duals.iter().map(|x| x.frobenius_norm().powi(2)).sum()
    }

    /// `Tr(rho M_n)` for every element, clamped at zero and renormalised.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!("state dim {} vs POVM dim {}", rho.dim(), self.dim)));
        }
        let mut p: Vec<f64> = self.elements.iter().map(|m| rho.matrix().trace_product(m).re).collect();
        if let Some((i, &v)) = p.iter().enumerate().find(|(_, &v)| v < -NEGATIVE_PROB_TOL) {
            return Err(Error::InvalidArgument(format!("negative outcome probability {v:e} for element {i}")));
        }
        p.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        Ok(p)
    }

    /// `sum_n c_n M_n*`
    pub fn combine_duals(&self, coeffs: &[f64]) -> Result<ComplexMatrix> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("{} coefficients for {} elements", coeffs.len(), self.len())));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, dual) in coeffs.iter().zip(&self.duals) {
            if *c != 0.0 {
                out += &dual.scale(*c);
            }
        }
        Ok(out)
    }

    /// Linear inversion from exact (or estimated) outcome probabilities.
    pub fn reconstruct_from_probabilities(&self, probs: &[f64]) -> Result<ComplexMatrix> {
        self.combine_duals(probs)
    }

    /// `X = sum_n Tr(X M_n) M_n*`; the identity on Hermitian operators.
    pub fn frame_map(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let coeffs: Vec<f64> = self.elements.iter().map(|m| x.trace_product(m).re).collect();
        self.combine_duals(&coeffs)
    }

    fn gram(elements: &[ComplexMatrix]) -> ComplexMatrix {
        let n = elements.len();
        ComplexMatrix::from_fn(n, n, |a, b| C64::new(elements[a].trace_product(&elements[b]).re, 0.0))
    }

    /// Builds duals from the Gram matrix; `None` if the elements do not span.
    fn with_duals(elements: Vec<ComplexMatrix>, dim: usize) -> Result<Option<Self>> {
        let eig = hermitian_eig(&Self::gram(&elements))?;
        let top = eig.values[0];
        let bottom = *eig.values.last().expect("non-empty");
        if bottom <= GRAM_RANK_TOL * top {
            return Ok(None);
        }
        let inv = eig.reconstruct_with(|v| 1.0 / v);
        let duals = (0..elements.len())
            .map(|n| {
                let mut d = ComplexMatrix::zeros(dim, dim);
                for (m, e) in elements.iter().enumerate() {
                    d += &e.scale(inv[(n, m)].re);
                }
                d.hermitian_part()
            })
            .collect();
        Ok(Some(Povm { elements, duals, dim }))
    }
}

/// `d^2` seeded rank-one projectors `P_n`, made into a POVM as
/// `S^{-1/2} P_n S^{-1/2}` with `S = sum_n P_n`.
///
/// `POVM_CANDIDATES` projector sets are drawn from seeds derived from `seed`;
/// sets whose Gram matrix is rank deficient are skipped, and among the rest
/// the one with the smallest dual-frame energy `sum_n ||M_n*||_F^2` (which
/// bounds the variance of linear inversion) is kept.
pub fn build_ic_povm(d: usize, seed: u64) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("IC-POVM needs d >= 2, got {d}")));
    }
    let mut best: Option<(f64, Povm)> = None;
    for candidate in 0..POVM_CANDIDATES {
        let mut rng = seeded(derive_seed(seed, candidate));
        let projectors: Vec<ComplexMatrix> =
            (0..d * d).map(|_| ComplexMatrix::projector(&random_unit_vector(d, &mut rng))).collect();
        let mut s = ComplexMatrix::zeros(d, d);
        for p in &projectors {
            s += p;
        }
        let s_eig = hermitian_eig(&s)?;
        if *s_eig.values.last().expect("non-empty") <= GRAM_RANK_TOL * s_eig.values[0] {
            continue;
        }
        let s_inv_sqrt = s_eig.reconstruct_with(|v| 1.0 / v.sqrt());
        let elements =
            projectors.iter().map(|p| s_inv_sqrt.matmul(p).matmul(&s_inv_sqrt).hermitian_part()).collect();
        if let Some(povm) = Povm::with_duals(elements, d)? {
            let energy = povm.dual_energy();
            if best.as_ref().is_none_or(|(e, _)| energy < *e) {
                best = Some((energy, povm));
            }
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::Precondition(format!("no informationally complete POVM among {POVM_CANDIDATES} seeds")))
}

/// Elements `P_n ⊗ Q_m` with duals `P_n* ⊗ Q_m*`, index `n * |Q| + m`.
pub fn product_povm(pa: &Povm, pb: &Povm) -> Povm {
    let mut elements = Vec::with_capacity(pa.len() * pb.len());
    let mut duals = Vec::with_capacity(pa.len() * pb.len());
    for (ea, da) in pa.elements.iter().zip(&pa.duals) {
        for (eb, db) in pb.elements.iter().zip(&pb.duals) {
            elements.push(tensor(ea, eb));
            duals.push(tensor(da, db));
        }
    }
    Povm { elements, duals, dim: pa.dim * pb.dim }
}

/// Local IC-POVM for a bipartite shape, seeded from `seed`.
pub fn local_povm(rho: &DensityMatrix, seed: u64) -> Result<Povm> {
    let shape = rho.shape();
    let pa = build_ic_povm(shape.dim_a, derive_seed(seed, 0))?;
    let pb = build_ic_povm(shape.dim_b, derive_seed(seed, 1))?;
    Ok(product_povm(&pa, &pb))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub counts: Vec<u64>,
    pub total: u64,
}

fn sample_with(dist: &WeightedIndex<f64>, outcomes: usize, shots: u64, seed: u64) -> OutcomeCounts {
    let mut rng = seeded(seed);
    let mut counts = vec![0u64; outcomes];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    OutcomeCounts { counts, total: shots }
}

fn outcome_distribution(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::InvalidArgument(format!("outcome distribution: {e}")))
}

/// `shots` i.i.d. outcomes of measuring `rho` with `povm`.
pub fn sample_outcomes(rho: &DensityMatrix, povm: &Povm, shots: u64, seed: u64) -> Result<OutcomeCounts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let probs = povm.probabilities(rho)?;
    Ok(sample_with(&outcome_distribution(&probs)?, povm.len(), shots, seed))
}

/// Frame estimate `sum_i (r_i / total) M_i*`; Hermitian but not necessarily PSD.
pub fn reconstruct(counts: &OutcomeCounts, povm: &Povm) -> Result<ComplexMatrix> {
    if counts.total == 0 {
        return Err(Error::InvalidArgument("cannot reconstruct from zero shots".into()));
    }
    if counts.counts.iter().sum::<u64>() != counts.total {
        return Err(Error::InvalidArgument("counts do not sum to total".into()));
    }
    let coeffs: Vec<f64> = counts.counts.iter().map(|&r| r as f64 / counts.total as f64).collect();
    povm.combine_duals(&coeffs)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AcceptanceEstimate {
    pub probability: f64,
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
    /// Worst-case standard error `1 / (2 sqrt(trials))`.
    pub std_error_bound: f64,
    pub trials: u64,
}

impl AcceptanceEstimate {
    fn from_count(accepted: u64, trials: u64) -> Self {
        let t = trials as f64;
        let p = accepted as f64 / t;
        AcceptanceEstimate {
            probability: p,
            std_error: (p * (1.0 - p) / t).sqrt(),
            std_error_bound: 0.5 / t.sqrt(),
            trials,
        }
    }
}

fn check_acceptance_args(target: &DensityMatrix, source: &DensityMatrix, n: u64, trials: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("acceptance needs n >= 2 copies, got {n}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if target.shape() != source.shape() {
        return Err(Error::DimensionMismatch("target and source shapes differ".into()));
    }
    Ok(())
}

/// Seed of the sampling stream for ensemble member `member`.
fn sample_stream(seed: u64, member: u64) -> u64 {
    derive_seed(derive_seed(seed, 0x5A4D_504C), member)
}

/// Acceptance probability with an explicit POVM and sampling stream; trial
/// `t` always uses seed `derive_seed(stream, t)`.
pub fn acceptance_with_povm(
    povm: &Povm,
    target: &DensityMatrix,
    source: &DensityMatrix,
    n: u64,
    eps: f64,
    trials: u64,
    stream: u64,
) -> Result<AcceptanceEstimate> {
    check_acceptance_args(target, source, n, trials)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let dist = outcome_distribution(&povm.probabilities(source)?)?;
    let radius = eps / 2.0;
    let accepted = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let counts = sample_with(&dist, povm.len(), n - 1, derive_seed(stream, t));
            let est = reconstruct(&counts, povm)?;
            let dist = half_trace_norm_hermitian(&(&est - target.matrix()))?;
            Ok(u64::from(dist <= radius))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(AcceptanceEstimate::from_count(accepted, trials))
}

/// Monte-Carlo estimate of the probability that tomography of `n - 1` copies
/// of `source` lands in the `eps / 2` trace ball around `target`. The local
/// POVM is seeded from `seed`.
pub fn acceptance_probability(
    target: &DensityMatrix,
    source: &DensityMatrix,
    n: u64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<AcceptanceEstimate> {
    let povm = local_povm(target, seed)?;
    acceptance_with_povm(&povm, target, source, n, eps, trials, sample_stream(seed, 0))
}

/// Weighted acceptance over an ensemble of sources with one shared POVM;
/// member `i` samples from its own derived stream (member 0's stream is the
/// one `acceptance_probability` uses).
pub fn mixture_acceptance(
    ens: &Ensemble,
    target: &DensityMatrix,
    n: u64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<AcceptanceEstimate> {
    let povm = local_povm(target, seed)?;
    let mut p = 0.0;
    let mut var = 0.0;
    let mut bound = 0.0;
    for (i, (w, member)) in ens.members().iter().enumerate() {
        if *w == 0.0 {
            check_acceptance_args(target, member, n, trials)?;
            continue;
        }
        let est = acceptance_with_povm(&povm, target, member, n, eps, trials, sample_stream(seed, i as u64))?;
        p += w * est.probability;
        var += w * w * est.std_error * est.std_error;
        bound += w * est.std_error_bound;
    }
    Ok(AcceptanceEstimate { probability: p, std_error: var.sqrt(), std_error_bound: bound, trials })
}
