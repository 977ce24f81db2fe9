//! Tensor-product closure of the separability criteria.
//!
//! [`closure_check`] runs a criterion on `rho ⊗ sigma` (regrouped to
//! `AA':BB'`) and, alongside the verdict, checks the algebraic identity that
//! makes closure hold for that criterion. A sub-assertion failure or a failed
//! product verdict is a closure violation, which callers treat as a bug.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::criteria::{
    majorization_gap, renyi_entropy, run_criterion, Criterion, Outcome, RenyiOrder, RunOptions, Verdict,
};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, permute_rows_cols, permute_systems, psd_margin, realign, tensor, trace_norm,
    BipartiteShape, ComplexMatrix, DensityMatrix, Side,
};
use crate::rng::{derive_seed, seeded};
use crate::states::{self, dim_cap, ProductEnsemble};
use crate::symext::{extend_separable, verify_extension};

/// Tolerance on product verdict margins and on every sub-assertion.
pub const CLOSURE_TOL: f64 = 1e-8;
/// Candidate draws per input state before a sweep trial gives up.
pub const MAX_DRAWS: usize = 2000;

/// `rho ⊗ sigma` as a state on `AA':BB'`.
pub fn bipartite_product(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DensityMatrix> {
    states::regrouped_product(&[rho, sigma], dim_cap())
}

/// Regroups an operator on `A B A' B'` to `A A' B B'`.
fn regroup(m: &ComplexMatrix, s: BipartiteShape, t: BipartiteShape) -> Result<ComplexMatrix> {
    permute_systems(m, &[s.dim_a, s.dim_b, t.dim_a, t.dim_b], &[0, 2, 1, 3])
}

#[derive(Clone, Debug, Serialize)]
pub struct SubAssertion {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub ok: bool,
}

impl SubAssertion {
    /// `residual` is a deviation that must not exceed `tol`.
    fn at_most(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        SubAssertion { name: name.into(), residual, tol, ok: residual <= tol }
    }

    /// `value` is a lower-bounded quantity (eigenvalue, prefix-sum gap);
    /// reported as its negative part.
    fn nonneg(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::at_most(name, (-value).max(0.0), tol)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureVerdict {
    pub criterion: Criterion,
    pub input_margins: [f64; 2],
    pub product: Verdict,
    pub sub_assertions: Vec<SubAssertion>,
    pub violation: bool,
}

fn finish(criterion: Criterion, input_margins: [f64; 2], product: Verdict, subs: Vec<SubAssertion>) -> ClosureVerdict {
    let violation = product.outcome == Outcome::Fail || product.margin < -CLOSURE_TOL || subs.iter().any(|s| !s.ok);
    ClosureVerdict { criterion, input_margins, product, sub_assertions: subs, violation }
}

fn require_pass(v: &Verdict, which: &str) -> Result<()> {
    if v.passed {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{which} fails {} (margin {:e})", v.criterion.name(), v.margin)))
    }
}

/// Runs `criterion` on `rho ⊗ sigma` after checking both inputs pass it.
///
/// For the symmetric extension the inputs must be certified feasible; the
/// product verdict then comes from the tensor of their witnesses rather than
/// a fresh solve.
pub fn closure_check(
    criterion: Criterion,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    opts: &RunOptions,
) -> Result<ClosureVerdict> {
    if criterion == Criterion::SymmetricExtension {
        let k = opts.symext_k;
        let mut witnesses = Vec::with_capacity(2);
        for (which, s) in [("rho", rho), ("sigma", sigma)] {
            let res = crate::symext::has_symmetric_extension(s, k, &opts.symext)?;
            match res.witness_extension {
                Some(x) => witnesses.push(x),
                None => {
                    return Err(Error::Precondition(format!("{which} has no certified {k}-extension ({:?})", res.status)))
                }
            }
        }
        return symext_closure(rho, &witnesses[0], sigma, &witnesses[1], k);
    }
    let v_rho = run_criterion(rho, criterion, opts)?;
    let v_sigma = run_criterion(sigma, criterion, opts)?;
    require_pass(&v_rho, "rho")?;
    require_pass(&v_sigma, "sigma")?;
    let product = bipartite_product(rho, sigma)?;
    let verdict = run_criterion(&product, criterion, opts)?;
    let subs = match criterion {
        Criterion::Ppt => ppt_identity(rho, sigma, &product)?,
        Criterion::Reduction => reduction_decomposition(rho, sigma, &product)?,
        Criterion::Entropic2 => entropy_additivity(rho, sigma, &product, RenyiOrder::Two)?,
        Criterion::EntropicVonNeumann => entropy_additivity(rho, sigma, &product, RenyiOrder::VonNeumann)?,
        Criterion::Majorization => majorization_kron(rho, sigma, &product)?,
        Criterion::CrossNorm => realign_factorization(rho, sigma, &product)?,
        Criterion::SymmetricExtension => unreachable!("handled above"),
    };
    Ok(finish(criterion, [v_rho.margin, v_sigma.margin], verdict, subs))
}

fn ppt_identity(rho: &DensityMatrix, sigma: &DensityMatrix, product: &DensityMatrix) -> Result<Vec<SubAssertion>> {
    let expected = regroup(&tensor(&rho.partial_transpose(), &sigma.partial_transpose()), rho.shape(), sigma.shape())?;
    Ok(vec![SubAssertion::at_most(
        "partial transpose factorises",
        product.partial_transpose().max_abs_diff(&expected),
        CLOSURE_TOL,
    )])
}

/// Checks `X⊗Z - Y⊗W = ((X-Y)⊗(Z+W) + (X+Y)⊗(Z-W)) / 2` with both terms
/// PSD, for `X = I⊗rho_B >= Y = rho` (and the A-side analogue), and that
/// `X⊗Z` regroups to the product's own reduction operator.
fn reduction_decomposition(rho: &DensityMatrix, sigma: &DensityMatrix, product: &DensityMatrix) -> Result<Vec<SubAssertion>> {
    let (s, t, p) = (rho.shape(), sigma.shape(), product.shape());
    let mut out = Vec::new();
    for side in [Side::B, Side::A] {
        let big = |st: &DensityMatrix| -> ComplexMatrix {
            let sh = st.shape();
            match side {
                Side::B => tensor(&ComplexMatrix::identity(sh.dim_a), &st.reduced(Side::B)),
                Side::A => tensor(&st.reduced(Side::A), &ComplexMatrix::identity(sh.dim_b)),
            }
        };
        let (x, y) = (big(rho), rho.matrix().clone());
        let (z, w) = (big(sigma), sigma.matrix().clone());
        let term1 = tensor(&(&x - &y), &(&z + &w));
        let term2 = tensor(&(&x + &y), &(&z - &w));
        let lhs = &tensor(&x, &z) - &tensor(&y, &w);
        let rhs = (&term1 + &term2).scale(0.5);
        let tag = if side == Side::B { "B" } else { "A" };
        out.push(SubAssertion::at_most(format!("{tag}-side decomposition identity"), lhs.max_abs_diff(&rhs), CLOSURE_TOL));
        out.push(SubAssertion::nonneg(format!("{tag}-side (X-Y)⊗(Z+W) PSD"), psd_margin(&term1)?, CLOSURE_TOL));
        out.push(SubAssertion::nonneg(format!("{tag}-side (X+Y)⊗(Z-W) PSD"), psd_margin(&term2)?, CLOSURE_TOL));
        let own = match side {
            Side::B => tensor(&ComplexMatrix::identity(p.dim_a), &product.reduced(Side::B)),
            Side::A => tensor(&product.reduced(Side::A), &ComplexMatrix::identity(p.dim_b)),
        };
        out.push(SubAssertion::at_most(
            format!("{tag}-side X⊗Z is the product reduction operator"),
            regroup(&tensor(&x, &z), s, t)?.max_abs_diff(&own),
            CLOSURE_TOL,
        ));
    }
    Ok(out)
}

fn entropy_additivity(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    product: &DensityMatrix,
    order: RenyiOrder,
) -> Result<Vec<SubAssertion>> {
    let ent = |m: &ComplexMatrix| -> Result<f64> { Ok(renyi_entropy(&hermitian_eigenvalues(m)?, order)) };
    let mut out = Vec::new();
    out.push(SubAssertion::at_most(
        "S(AB) additive",
        (ent(product.matrix())? - ent(rho.matrix())? - ent(sigma.matrix())?).abs(),
        1e-9,
    ));
    for (side, tag) in [(Side::A, "S(A) additive"), (Side::B, "S(B) additive")] {
        let diff = ent(&product.reduced(side))? - ent(&rho.reduced(side))? - ent(&sigma.reduced(side))?;
        out.push(SubAssertion::at_most(tag, diff.abs(), 1e-9));
    }
    Ok(out)
}

/// Entries of `x ⊗ y`, sorted non-increasing.
pub fn sorted_kron(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().flat_map(|a| y.iter().map(move |b| a * b)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn max_abs_gap(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()))
}

/// The product spectra are the Kronecker products of the factor spectra, and
/// the Kronecker of the marginal lists majorizes that of the joint lists.
fn majorization_kron(rho: &DensityMatrix, sigma: &DensityMatrix, product: &DensityMatrix) -> Result<Vec<SubAssertion>> {
    let joint = sorted_kron(&rho.eigenvalues(), &sigma.eigenvalues());
    let mut out = vec![SubAssertion::at_most(
        "joint spectrum is the Kronecker of factor spectra",
        max_abs_gap(&product.eigenvalues(), &joint),
        CLOSURE_TOL,
    )];
    for (side, tag) in [(Side::A, "A"), (Side::B, "B")] {
        let kron = sorted_kron(
            &hermitian_eigenvalues(&rho.reduced(side))?,
            &hermitian_eigenvalues(&sigma.reduced(side))?,
        );
        out.push(SubAssertion::at_most(
            format!("{tag} spectrum is the Kronecker of factor spectra"),
            max_abs_gap(&hermitian_eigenvalues(&product.reduced(side))?, &kron),
            CLOSURE_TOL,
        ));
        out.push(SubAssertion::nonneg(format!("{tag} Kronecker prefix sums dominate joint"), majorization_gap(&kron, &joint), CLOSURE_TOL));
    }
    Ok(out)
}

/// Maps `U(rho) ⊗ U(sigma)` onto `U(rho ⊗ sigma)`.
///
/// A realigned row index is `col * d + row` over the A factor, so on the
/// product it reads `(c, c', r, r')` while the tensor of realignments reads
/// `(c, r, c', r')`: the two middle factors swap, on rows (A dims) and on
/// columns (B dims) alike.
pub fn realign_product_permuted(u_rho: &ComplexMatrix, s: BipartiteShape, u_sigma: &ComplexMatrix, t: BipartiteShape) -> Result<ComplexMatrix> {
    let swap = [0, 2, 1, 3];
    permute_rows_cols(
        &tensor(u_rho, u_sigma),
        &[s.dim_a, s.dim_a, t.dim_a, t.dim_a],
        &swap,
        &[s.dim_b, s.dim_b, t.dim_b, t.dim_b],
        &swap,
    )
}

fn realign_factorization(rho: &DensityMatrix, sigma: &DensityMatrix, product: &DensityMatrix) -> Result<Vec<SubAssertion>> {
    let u_rho = realign(rho.matrix(), rho.shape())?;
    let u_sigma = realign(sigma.matrix(), sigma.shape())?;
    let u_prod = realign(product.matrix(), product.shape())?;
    let expected = realign_product_permuted(&u_rho, rho.shape(), &u_sigma, sigma.shape())?;
    Ok(vec![
        SubAssertion::at_most("realignment factorises", u_prod.max_abs_diff(&expected), CLOSURE_TOL),
        SubAssertion::at_most(
            "realigned trace norm multiplicative",
            (trace_norm(&u_prod) - trace_norm(&u_rho) * trace_norm(&u_sigma)).abs(),
            1e-9,
        ),
    ])
}

/// Regroups `X_rho ⊗ X_sigma` from `A B_1..B_k A' B'_1..B'_k` to
/// `AA' (B_1B'_1) .. (B_kB'_k)`.
pub fn tensor_extensions(
    x_rho: &ComplexMatrix,
    s: BipartiteShape,
    x_sigma: &ComplexMatrix,
    t: BipartiteShape,
    k: usize,
) -> Result<ComplexMatrix> {
    let mut dims = vec![s.dim_a];
    dims.extend(std::iter::repeat_n(s.dim_b, k));
    dims.push(t.dim_a);
    dims.extend(std::iter::repeat_n(t.dim_b, k));
    let mut perm = vec![0, k + 1];
    for j in 1..=k {
        perm.push(j);
        perm.push(k + 1 + j);
    }
    permute_systems(&tensor(x_rho, x_sigma), &dims, &perm)
}

/// Verifies that the regrouped tensor of two `k`-extensions extends the
/// product state. Input witnesses are re-verified first; their residuals
/// propagate into the tolerance of the product check.
pub fn symext_closure(
    rho: &DensityMatrix,
    x_rho: &ComplexMatrix,
    sigma: &DensityMatrix,
    x_sigma: &ComplexMatrix,
    k: usize,
) -> Result<ClosureVerdict> {
    let c_rho = verify_extension(rho, k, x_rho)?;
    let c_sigma = verify_extension(sigma, k, x_sigma)?;
    let input_residual = |c: &crate::symext::ExtensionCheck| {
        c.symmetry_residual.max(c.marginal_residual).max(c.hermitian_residual).max(-c.min_eigenvalue)
    };
    let (r1, r2) = (input_residual(&c_rho), input_residual(&c_sigma));
    for (which, r) in [("rho", r1), ("sigma", r2)] {
        if r > 1e-6 {
            return Err(Error::Precondition(format!("{which} witness is not a {k}-extension (residual {r:e})")));
        }
    }
    let product = bipartite_product(rho, sigma)?;
    let x = tensor_extensions(x_rho, rho.shape(), x_sigma, sigma.shape(), k)?;
    let check = verify_extension(&product, k, &x)?;
    let tol = CLOSURE_TOL + 2.0 * (r1 + r2 + r1 * r2);
    let subs = vec![
        SubAssertion::at_most("tensor of witnesses is B-symmetric", check.symmetry_residual, tol),
        SubAssertion::at_most("tensor of witnesses has the product marginal", check.marginal_residual, tol),
        SubAssertion::nonneg("tensor of witnesses is PSD", check.min_eigenvalue, tol),
        SubAssertion::at_most("tensor of witnesses is Hermitian", check.hermitian_residual, tol),
    ];
    let worst = subs.iter().fold(0.0f64, |a, s| a.max(s.residual));
    let verdict = Verdict::new(
        Criterion::SymmetricExtension,
        -worst,
        tol,
        json!({ "k": k, "constructive": true, "check": check }),
    );
    Ok(finish(Criterion::SymmetricExtension, [-r1, -r2], verdict, subs))
}

/// Summary of a closure sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub criterion: Criterion,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub violations: usize,
    pub violating_trials: Vec<usize>,
    pub min_product_margin: f64,
    pub mean_product_margin: f64,
    pub max_sub_residual: f64,
    /// Candidates rejected because they failed the criterion.
    pub rejected_candidates: usize,
}

struct Candidate {
    state: DensityMatrix,
    ensemble: Option<ProductEnsemble>,
}

/// Either a random separable mixture or a Hilbert-Schmidt state diluted
/// with white noise, which reaches entangled states near the PPT boundary.
fn draw_candidate(shape: BipartiteShape, seed: u64, separable_only: bool) -> Result<Candidate> {
    let mut rng = seeded(seed);
    if separable_only || rng.random_bool(0.5) {
        let k = rng.random_range(1..=6);
        let (state, ens) = states::random_separable(shape, k, rng.random())?;
        return Ok(Candidate { state, ensemble: Some(ens) });
    }
    let raw = states::random_density(shape, rng.random());
    let p: f64 = rng.random();
    let noise = DensityMatrix::maximally_mixed(shape);
    Ok(Candidate { state: DensityMatrix::mixture([(p, &raw), (1.0 - p, &noise)])?, ensemble: None })
}

/// First passing candidate from the stream `seed`, and how many were rejected.
fn passing_candidate(criterion: Criterion, shape: BipartiteShape, seed: u64, opts: &RunOptions) -> Result<(Candidate, usize)> {
    let symext = criterion == Criterion::SymmetricExtension;
    for draw in 0..MAX_DRAWS {
        let c = draw_candidate(shape, derive_seed(seed, draw as u64), symext)?;
        if symext {
            return Ok((c, draw));
        }
        if crate::criteria::ppt_test(&c.state)?.passed && run_criterion(&c.state, criterion, opts)?.passed {
            return Ok((c, draw));
        }
    }
    Err(Error::InvalidArgument(format!("no passing {} candidate in {MAX_DRAWS} draws", criterion.name())))
}

fn sweep_trial(criterion: Criterion, seed: u64, opts: &RunOptions) -> Result<(ClosureVerdict, usize)> {
    let shape = BipartiteShape::new(2, 2)?;
    let (a, ra) = passing_candidate(criterion, shape, derive_seed(seed, 0), opts)?;
    let (b, rb) = passing_candidate(criterion, shape, derive_seed(seed, 1), opts)?;
    let verdict = if criterion == Criterion::SymmetricExtension {
        let k = opts.symext_k;
        let wa = extend_separable(a.ensemble.as_ref().expect("separable draw"), k)?;
        let wb = extend_separable(b.ensemble.as_ref().expect("separable draw"), k)?;
        symext_closure(&a.state, &wa, &b.state, &wb, k)?
    } else {
        closure_check(criterion, &a.state, &b.state, opts)?
    };
    Ok((verdict, ra + rb))
}

/// Closure checks on `trials` random passing pairs at `2x2 ⊗ 2x2`. Trial
/// `t` draws from stream `derive_seed(seed, t)`, so results do not depend on
/// scheduling. Symmetric-extension trials use separable pairs and their
/// constructive witnesses.
pub fn closure_sweep(criterion: Criterion, trials: usize, seed: u64, opts: &RunOptions) -> Result<SweepReport> {
    let results: Vec<(ClosureVerdict, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| sweep_trial(criterion, derive_seed(seed, t as u64), opts))
        .collect::<Result<_>>()?;
    let violating_trials: Vec<usize> =
        results.iter().enumerate().filter(|(_, (v, _))| v.violation).map(|(i, _)| i).collect();
    let margins: Vec<f64> = results.iter().map(|(v, _)| v.product.margin).collect();
    Ok(SweepReport {
        criterion,
        trials,
        seed,
        tol: CLOSURE_TOL,
        violations: violating_trials.len(),
        violating_trials,
        min_product_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        mean_product_margin: if trials == 0 { 0.0 } else { margins.iter().sum::<f64>() / trials as f64 },
        max_sub_residual: results
            .iter()
            .flat_map(|(v, _)| v.sub_assertions.iter().map(|s| s.residual))
            .fold(0.0, f64::max),
        rejected_candidates: results.iter().map(|(_, r)| r).sum(),
    })
}
