//! Distance geometry of separable versus PPT states: witness lower bounds,
//! the PPT boundary along the segment towards `Φ(d)`, the fidelity bound
//! for PPT states, the finite de Finetti bound and Monte-Carlo farness
//! bounds against explicit separable ansätze.

use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::ppt_test;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, hermitian_eigenvalues, kron_vec, partial_transpose, pure_fidelity, trace_distance,
    BipartiteShape, ComplexMatrix, DensityMatrix, C64, PSD_REL_TOL, ZERO,
};
use crate::rng::{derive_seed, random_unit_vector, seeded};
use crate::states::{self, Ensemble, ProductEnsemble, ProductMember};
use crate::tomography::{acceptance_probability, mixture_acceptance, AcceptanceEstimate};

pub const DEFAULT_BISECTION_TOL: f64 = 1e-6;
/// Slack allowed on distance bounds when they are asserted.
pub const BOUND_SLACK: f64 = 1e-6;
pub const FIDELITY_SLACK: f64 = 1e-8;
pub const TRANSPOSE_IDENTITY_TOL: f64 = 1e-10;
/// Allowed excess of the numeric product overlap over its analytic maximum.
pub const SEP_MAX_SLACK: f64 = 1e-6;

/// `2 dim n / (n + k)`
pub fn definetti_bound(dim: usize, n: usize, k: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("de Finetti bound needs n >= 1".into()));
    }
    Ok(2.0 * dim as f64 * n as f64 / (n + k) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductOptimum {
    pub value: f64,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub starts: usize,
}

/// `(I ⊗ b)^dagger H (I ⊗ b)` on A.
fn contract_b(h: &ComplexMatrix, shape: BipartiteShape, b: &[C64]) -> ComplexMatrix {
    let (da, db) = (shape.dim_a, shape.dim_b);
    ComplexMatrix::from_fn(da, da, |i, k| {
        let mut acc = ZERO;
        for (j, bj) in b.iter().enumerate() {
            for (l, bl) in b.iter().enumerate() {
                acc += bj.conj() * h[(i * db + j, k * db + l)] * bl;
            }
        }
        acc
    })
}

/// `(a ⊗ I)^dagger H (a ⊗ I)` on B.
fn contract_a(h: &ComplexMatrix, shape: BipartiteShape, a: &[C64]) -> ComplexMatrix {
    let db = shape.dim_b;
    ComplexMatrix::from_fn(db, db, |j, l| {
        let mut acc = ZERO;
        for (i, ai) in a.iter().enumerate() {
            for (k, ak) in a.iter().enumerate() {
                acc += ai.conj() * h[(i * db + j, k * db + l)] * ak;
            }
        }
        acc
    })
}

fn extreme_vector(m: &ComplexMatrix, maximize: bool) -> Result<(f64, Vec<C64>)> {
    let eig = hermitian_eig(&m.hermitian_part())?;
    let k = if maximize { 0 } else { eig.values.len() - 1 };
    Ok((eig.values[k], eig.vector(k)))
}

/// Objective value and the optimising local vectors of one start.
type LocalOptimum = (f64, Vec<C64>, Vec<C64>);

/// Extremises `<a,b|H|a,b>` over product unit vectors by alternating exact
/// eigenvector updates from `starts` seeded random initial points.
pub fn optimize_product(
    h: &ComplexMatrix,
    shape: BipartiteShape,
    maximize: bool,
    starts: usize,
    seed: u64,
) -> Result<ProductOptimum> {
    shape.check(h)?;
    if starts == 0 {
        return Err(Error::InvalidArgument("need at least one start".into()));
    }
    let runs: Vec<Result<LocalOptimum>> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeded(derive_seed(seed, s as u64));
            let _ = random_unit_vector(shape.dim_a, &mut rng);
            let mut b = random_unit_vector(shape.dim_b, &mut rng);
            let mut a;
            let mut value = f64::NAN;
            let mut iter = 0;
            loop {
                let (_, va) = extreme_vector(&contract_b(h, shape, &b), maximize)?;
                a = va;
                let (v, vb) = extreme_vector(&contract_a(h, shape, &a), maximize)?;
                b = vb;
                iter += 1;
                let converged = (v - value).abs() <= 1e-14 * v.abs().max(1.0);
                value = v;
                if converged || iter >= 1000 {
                    break;
                }
            }
            Ok((value, a, b))
        })
        .collect();
    let mut best: Option<(f64, Vec<C64>, Vec<C64>)> = None;
    for r in runs {
        let (v, a, b) = r?;
        let better = match &best {
            None => true,
            Some((bv, _, _)) => (maximize && v > *bv) || (!maximize && v < *bv),
        };
        if better {
            best = Some((v, a, b));
        }
    }
    let (value, a, b) = best.expect("starts >= 1");
    Ok(ProductOptimum { value, a, b, starts })
}

#[derive(Clone, Debug, Serialize)]
pub struct SepMaxCheck {
    /// `1/d`, the value used in bounds.
    pub value: f64,
    /// Largest `|<a,b|Φ(d)>|^2` found numerically.
    pub numeric_max: f64,
    pub starts: usize,
}

/// `max over separable sigma of Tr(sigma Φ(d))`, i.e. `1/d`, cross-checked by
/// a multi-start search over product vectors.
pub fn sep_max_overlap_maxent(d: usize, samples: usize, seed: u64) -> Result<SepMaxCheck> {
    let phi = states::max_entangled(d)?;
    let opt = optimize_product(phi.matrix(), phi.shape(), true, samples, seed)?;
    let value = 1.0 / d as f64;
    if opt.value > value + SEP_MAX_SLACK {
        return Err(Error::InvariantViolation(format!(
            "product overlap {} exceeds 1/d = {value} for d = {d}",
            opt.value
        )));
    }
    Ok(SepMaxCheck { value, numeric_max: opt.value, starts: samples })
}

/// Smallest `sum_k |<psi_k|a,b>|^2` over product vectors, i.e. how far the
/// set `{psi_k}` is from admitting an orthogonal product vector.
pub fn min_product_overlap(vectors: &[Vec<C64>], shape: BipartiteShape, starts: usize, seed: u64) -> Result<ProductOptimum> {
    let n = shape.total();
    let mut h = ComplexMatrix::zeros(n, n);
    for v in vectors {
        if v.len() != n {
            return Err(Error::DimensionMismatch(format!("vector length {} vs dimension {n}", v.len())));
        }
        h += &ComplexMatrix::projector(v);
    }
    optimize_product(&h, shape, false, starts, seed)
}

/// Minimum product overlap above which the tiles set is treated as
/// unextendible. The true minimum is about 0.0284; a product vector
/// orthogonal to the whole set would drive it to zero.
pub const UPB_THRESHOLD: f64 = 1e-2;

#[derive(Clone, Debug, Serialize)]
pub struct UpbCertificate {
    pub min_overlap: f64,
    pub threshold: f64,
    pub certified: bool,
    pub starts: usize,
}

pub fn tiles_upb_certificate(starts: usize, seed: u64) -> Result<UpbCertificate> {
    let opt = min_product_overlap(&states::tiles_upb_vectors(), BipartiteShape::square(3)?, starts, seed)?;
    Ok(UpbCertificate {
        min_overlap: opt.value,
        threshold: UPB_THRESHOLD,
        certified: opt.value > UPB_THRESHOLD,
        starts,
    })
}

fn check_unit_interval_operator(w: &ComplexMatrix) -> Result<()> {
    let ev = hermitian_eigenvalues(w)?;
    let scale = ev.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let tol = PSD_REL_TOL * scale;
    let (top, bottom) = (ev[0], *ev.last().expect("non-empty"));
    if bottom < -tol || top > 1.0 + tol {
        return Err(Error::Precondition(format!("witness spectrum [{bottom}, {top}] not inside [0, 1]")));
    }
    Ok(())
}

/// `max(0, Tr(W rho) - sep_max)` for `0 <= W <= I`, a lower bound on the trace
/// distance from `rho` to any separable state when `sep_max` bounds
/// `Tr(W sigma)` over separable `sigma`.
pub fn witness_lower_bound(rho: &DensityMatrix, w: &ComplexMatrix, sep_max: f64) -> Result<f64> {
    if w.rows() != rho.dim() || w.cols() != rho.dim() {
        return Err(Error::DimensionMismatch(format!("witness {}x{} vs state dim {}", w.rows(), w.cols(), rho.dim())));
    }
    check_unit_interval_operator(w)?;
    Ok((rho.matrix().trace_product(w).re - sep_max).max(0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityCheck {
    pub fidelity: f64,
    pub bound: f64,
    pub ok: bool,
    /// `|Tr(sigma Φ) - Tr(sigma^{T_B} Φ^{T_B})|`
    pub transpose_identity_residual: f64,
}

/// `F(sigma, Φ(d)) <= 1/sqrt(d)` for PPT `sigma`.
pub fn fidelity_bound_check(sigma: &DensityMatrix) -> Result<FidelityCheck> {
    let d = sigma
        .shape()
        .local_dim()
        .ok_or_else(|| Error::Precondition("fidelity bound needs dim_a == dim_b".into()))?;
    if !ppt_test(sigma)?.passed {
        return Err(Error::Precondition("state is not PPT; the fidelity bound does not apply".into()));
    }
    let psi = states::max_entangled_vector(d)?;
    let phi = states::max_entangled(d)?;
    let fidelity = pure_fidelity(sigma, &psi)?;
    let direct = sigma.matrix().trace_product(phi.matrix()).re;
    let transposed = sigma.partial_transpose().trace_product(&partial_transpose(phi.matrix(), phi.shape())?).re;
    let residual = (direct - transposed).abs();
    if residual > TRANSPOSE_IDENTITY_TOL {
        return Err(Error::InvariantViolation(format!("partial-transpose trace identity off by {residual:e}")));
    }
    let bound = 1.0 / (d as f64).sqrt();
    Ok(FidelityCheck { fidelity, bound, ok: fidelity <= bound + FIDELITY_SLACK, transpose_identity_residual: residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryResult {
    pub t_star: f64,
    /// Bracket `[t_star, t_star + width]` with the PPT side on the left.
    pub bracket: [f64; 2],
    #[serde(skip)]
    pub boundary_state: DensityMatrix,
    pub distance_from_start: f64,
    pub bound: f64,
    pub bound_ok: bool,
    /// Whether the input was certified separable; only then is a failed
    /// `bound_ok` an invariant violation rather than an observation.
    pub certified_separable: bool,
    pub ppt_margin_left: f64,
    pub ppt_margin_right: f64,
}

/// Bisects the segment `(1 - t) rho + t Φ(d)` for the PPT boundary.
pub fn ppt_boundary_bisect(rho: &DensityMatrix, tol: f64, ensemble: Option<&ProductEnsemble>) -> Result<BoundaryResult> {
    let d = rho
        .shape()
        .local_dim()
        .ok_or_else(|| Error::Precondition("boundary bisection needs dim_a == dim_b".into()))?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bisection tolerance must be positive, got {tol}")));
    }
    if let Some(ens) = ensemble {
        if ens.state().matrix().max_abs_diff(rho.matrix()) > 1e-10 {
            return Err(Error::InvalidArgument("ensemble does not reproduce the state".into()));
        }
    }
    let start = ppt_test(rho)?;
    if !start.passed {
        return Err(Error::Precondition("start state is not PPT".into()));
    }
    let end = ppt_test(&states::segment_state(rho, 1.0)?)?;
    if end.passed {
        return Err(Error::InvariantViolation(format!("Φ({d}) tested PPT")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut m_lo, mut m_hi) = (start.margin, end.margin);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = ppt_test(&states::segment_state(rho, mid)?)?;
        if v.passed {
            lo = mid;
            m_lo = v.margin;
        } else {
            hi = mid;
            m_hi = v.margin;
        }
    }
    let boundary_state = states::segment_state(rho, lo)?;
    let distance = trace_distance(rho, &boundary_state)?;
    let bound = 1.0 / (d as f64).sqrt();
    Ok(BoundaryResult {
        t_star: lo,
        bracket: [lo, hi],
        boundary_state,
        distance_from_start: distance,
        bound,
        bound_ok: distance <= bound + BOUND_SLACK,
        certified_separable: ensemble.is_some(),
        ppt_margin_left: m_lo,
        ppt_margin_right: m_hi,
    })
}

/// Greedy (Gilbert-style) approximation of the closest separable state in
/// Hilbert-Schmidt norm: repeatedly adds the pure product state that best
/// correlates with the residual and line-searches the mixing weight.
pub fn closest_separable_ansatz(rho: &DensityMatrix, iterations: usize, starts: usize, seed: u64) -> Result<ProductEnsemble> {
    let shape = rho.shape();
    let target = rho.matrix();
    let pure = |a: &[C64], b: &[C64]| -> Result<(DensityMatrix, DensityMatrix)> {
        Ok((
            DensityMatrix::pure(a, BipartiteShape::new(shape.dim_a, 1)?)?,
            DensityMatrix::pure(b, BipartiteShape::new(shape.dim_b, 1)?)?,
        ))
    };
    let first = optimize_product(target, shape, true, starts, derive_seed(seed, 0))?;
    let (a0, b0) = pure(&first.a, &first.b)?;
    let mut members = vec![ProductMember { weight: 1.0, a: a0, b: b0 }];
    let mut sigma = ComplexMatrix::projector(&kron_vec(&first.a, &first.b));
    for it in 1..iterations {
        let residual = target - &sigma;
        let opt = optimize_product(&residual, shape, true, starts, derive_seed(seed, it as u64))?;
        let p = ComplexMatrix::projector(&kron_vec(&opt.a, &opt.b));
        let dir = &p - &sigma;
        let denom = dir.trace_product(&dir).re;
        if denom <= 0.0 {
            break;
        }
        let step = (residual.trace_product(&dir).re / denom).clamp(0.0, 1.0);
        if step <= 0.0 {
            continue;
        }
        for m in &mut members {
            m.weight *= 1.0 - step;
        }
        let (a, b) = pure(&opt.a, &opt.b)?;
        members.push(ProductMember { weight: step, a, b });
        sigma = &sigma.scale(1.0 - step) + &p.scale(step);
    }
    members.retain(|m| m.weight > 0.0);
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for m in &mut members {
        m.weight /= total;
    }
    ProductEnsemble::new(members)
}

#[derive(Clone, Debug, Serialize)]
pub struct FarnessPoint {
    pub n: u64,
    pub accept_target: AcceptanceEstimate,
    pub accept_ansatz: AcceptanceEstimate,
    /// `accept_target - accept_ansatz`
    pub lower_bound: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FarnessReport {
    pub scope: &'static str,
    pub eps: f64,
    pub trials: u64,
    /// Trace distance of each ansatz member from the target and whether it is
    /// at least `eps`.
    pub member_distances: Vec<(f64, bool)>,
    pub points: Vec<FarnessPoint>,
}

/// Monte-Carlo lower bounds on the trace distance between `rho^{⊗n}` and the
/// specific separable ansatz `sum_i p_i tau_i^{⊗n}`, for each `n`.
pub fn farness_certificate(
    rho: &DensityMatrix,
    ens: &Ensemble,
    n_list: &[u64],
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<FarnessReport> {
    if ens.shape() != rho.shape() {
        return Err(Error::DimensionMismatch("ansatz and state shapes differ".into()));
    }
    let member_distances = ens
        .members()
        .iter()
        .map(|(_, tau)| trace_distance(tau, rho).map(|t| (t, t >= eps)))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let accept_target = acceptance_probability(rho, rho, n, eps, trials, seed)?;
        let accept_ansatz = mixture_acceptance(ens, rho, n, eps, trials, seed)?;
        points.push(FarnessPoint {
            n,
            lower_bound: accept_target.probability - accept_ansatz.probability,
            std_error: accept_target.std_error.hypot(accept_ansatz.std_error),
            accept_target,
            accept_ansatz,
        });
    }
    Ok(FarnessReport { scope: "vs given ansatz", eps, trials, member_distances, points })
}
