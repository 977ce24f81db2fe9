//! Symmetric extensions `A:B_1..B_k` of a bipartite state.
//!
//! Feasibility is searched with alternating projections between the affine
//! set of permutation-invariant operators with the right `A:B_1` marginal and
//! a shifted PSD cone whose shift shrinks whenever progress stalls. When `rho` is rank deficient the search is
//! restricted to the subspace that must contain the support of any
//! extension. Infeasibility is only reported together with a checked dual
//! witness `Z` (`sym(Z ⊗ I) >= 0` on the support, `Tr(Z rho) < 0`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, hermitian_eigenvalues, partial_trace, partial_trace_systems, structure, tensor, BipartiteShape,
    ComplexMatrix, DensityMatrix, Side, C64,
};
use crate::states::{check_cap, dim_cap, ProductEnsemble};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_WINDOW: usize = 50;
/// Relative change of the inter-set gap over a window below which the gap
/// counts as stabilised.
pub const PLATEAU_REL_CHANGE: f64 = 1e-3;
/// The cone step starts by clipping eigenvalues at
/// `INTERIOR_SHIFT * lambda_min(rho) / dB^(k-1)` rather than zero, which
/// steers iterates into the interior of the feasible set when it has one.
const INTERIOR_SHIFT: f64 = 1.0;
/// Near the boundary no extension is that far inside the cone, so each
/// plateau without an infeasibility certificate divides the floor by this.
const SHIFT_DECAY: f64 = 4.0;
/// Floors below this fraction of the initial one are dropped to zero.
const SHIFT_CUTOFF: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct ExtensionOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub window: usize,
    /// Starting point; defaults to the symmetrised `rho ⊗ rho_B^{⊗(k-1)}`.
    pub initial: Option<ComplexMatrix>,
    pub cap: usize,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        ExtensionOptions {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            window: DEFAULT_WINDOW,
            initial: None,
            cap: dim_cap(),
        }
    }
}

/// Extension target: `base` on `A:B`, extended to `A:B_1..B_k`.
#[derive(Clone, Debug)]
pub struct ExtensionProblem {
    base: DensityMatrix,
    k: usize,
    dims: Vec<usize>,
    /// Index maps of all `k!` permutations of the B factors.
    perm_maps: Vec<Vec<usize>>,
}

impl ExtensionProblem {
    pub fn new(base: &DensityMatrix, k: usize, cap: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("extension needs k >= 2, got {k}")));
        }
        let shape = base.shape();
        let total = (0..k).try_fold(shape.dim_a, |acc, _| acc.checked_mul(shape.dim_b)).unwrap_or(usize::MAX);
        check_cap(total, cap)?;
        let mut dims = vec![shape.dim_a];
        dims.extend(std::iter::repeat_n(shape.dim_b, k));
        let perm_maps = b_permutations(k)
            .into_iter()
            .map(|p| {
                let full: Vec<usize> = std::iter::once(0).chain(p.iter().map(|&x| x + 1)).collect();
                structure::permutation_index_map(&dims, &full)
            })
            .collect::<Result<_>>()?;
        Ok(ExtensionProblem { base: base.clone(), k, dims, perm_maps })
    }

    pub fn base(&self) -> &DensityMatrix {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn shape(&self) -> BipartiteShape {
        self.base.shape()
    }

    fn check(&self, x: &ComplexMatrix) -> Result<()> {
        let n = self.total_dim();
        if x.rows() != n || x.cols() != n {
            return Err(Error::DimensionMismatch(format!("operator is {}x{}, extension space is {n}", x.rows(), x.cols())));
        }
        Ok(())
    }

    /// `A:B_1` marginal (trace over `B_2..B_k`).
    pub fn marginal(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(x)?;
        let keep = x.rows() / self.shape().dim_b.pow(self.k as u32 - 1);
        Ok(ComplexMatrix::from_fn(keep, keep, |i, j| {
            let t = x.rows() / keep;
            (0..t).map(|s| x[(i * t + s, j * t + s)]).sum()
        }))
    }
}

fn b_permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Average of `P_π X P_π^dagger` over all permutations of the B factors.
pub fn symmetrize_b(x: &ComplexMatrix, problem: &ExtensionProblem) -> Result<ComplexMatrix> {
    problem.check(x)?;
    let n = x.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for map in &problem.perm_maps {
        for i in 0..n {
            let mi = map[i];
            for j in 0..n {
                out[(i, j)] += x[(mi, map[j])];
            }
        }
    }
    Ok(out.scale(1.0 / problem.perm_maps.len() as f64))
}

/// `sum_i p_i a_i ⊗ b_i^{⊗k}`.
pub fn extend_separable(ens: &ProductEnsemble, k: usize) -> Result<ComplexMatrix> {
    extend_separable_capped(ens, k, dim_cap())
}

pub fn extend_separable_capped(ens: &ProductEnsemble, k: usize, cap: usize) -> Result<ComplexMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("extension needs k >= 2, got {k}")));
    }
    let shape = ens.shape();
    let total = (0..k).try_fold(shape.dim_a, |acc, _| acc.checked_mul(shape.dim_b)).unwrap_or(usize::MAX);
    check_cap(total, cap)?;
    let mut out = ComplexMatrix::zeros(total, total);
    for m in ens.members() {
        let mut t = m.a.matrix().clone();
        for _ in 0..k {
            t = tensor(&t, m.b.matrix());
        }
        out += &t.scale(m.weight);
    }
    Ok(out)
}

/// Exact Frobenius projection onto `{X : X = X^dagger, sym(X) = X, marginal(X) = rho}`.
pub fn project_affine(y: &ComplexMatrix, problem: &ExtensionProblem) -> Result<ComplexMatrix> {
    AffineSet { problem, reduced: None }.project(y)
}

/// Frobenius projection onto the PSD cone.
pub fn project_psd(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(&x.hermitian_part())?;
    Ok(eig.reconstruct_with(|v| v.max(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionStatus {
    Feasible,
    InfeasibleEvidence,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct FeasibilityResult {
    pub status: ExtensionStatus,
    /// Final inter-set gap `||P_C - P_L||_F` (or the marginal mismatch when
    /// larger), or the witness's negative-part size when feasible.
    pub residual: f64,
    pub iterations: usize,
    pub witness_extension: Option<ComplexMatrix>,
    /// Normalised `Tr(Z rho)` of the best separating witness found; negative
    /// values certify that no extension exists.
    pub certificate: Option<f64>,
}

/// Independent constraint residuals of a candidate extension.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtensionCheck {
    /// Max over transpositions `(B_1 B_j)` of `||P X P - X||_max`.
    pub symmetry_residual: f64,
    pub marginal_residual: f64,
    pub min_eigenvalue: f64,
    pub hermitian_residual: f64,
}

impl ExtensionCheck {
    pub fn within(&self, tol: f64) -> bool {
        self.symmetry_residual <= tol
            && self.marginal_residual <= tol
            && self.min_eigenvalue >= -tol
            && self.hermitian_residual <= tol
    }
}

/// Re-verifies a candidate through transpositions and a subsystem partial
/// trace, independent of [`symmetrize_b`] and [`ExtensionProblem::marginal`].
pub fn verify_extension(rho: &DensityMatrix, k: usize, x: &ComplexMatrix) -> Result<ExtensionCheck> {
    let shape = rho.shape();
    let mut dims = vec![shape.dim_a];
    dims.extend(std::iter::repeat_n(shape.dim_b, k));
    let mut symmetry_residual: f64 = 0.0;
    for j in 2..=k {
        let mut perm: Vec<usize> = (0..=k).collect();
        perm.swap(1, j);
        let px = structure::permute_systems(x, &dims, &perm)?;
        symmetry_residual = symmetry_residual.max(px.max_abs_diff(x));
    }
    let marginal = partial_trace_systems(x, &dims, &[0, 1])?;
    let hermitian_residual = x.hermitian_deviation();
    let min_eigenvalue = *hermitian_eigenvalues(&x.hermitian_part())?.last().expect("non-empty");
    Ok(ExtensionCheck {
        symmetry_residual,
        marginal_residual: marginal.max_abs_diff(rho.matrix()),
        min_eigenvalue,
        hermitian_residual,
    })
}

fn default_start(problem: &ExtensionProblem) -> Result<ComplexMatrix> {
    let rho = problem.base.matrix();
    let rho_b = partial_trace(rho, problem.shape(), Side::B)?;
    let mut x = rho.clone();
    for _ in 1..problem.k {
        x = tensor(&x, &rho_b);
    }
    symmetrize_b(&x, problem)
}

/// Hermitian operators on `A:B_1` in an orthonormal (Frobenius) real basis.
struct HermitianCoords {
    n: usize,
}

impl HermitianCoords {
    fn len(&self) -> usize {
        self.n * self.n
    }

    fn element(&self, a: usize) -> ComplexMatrix {
        let n = self.n;
        let mut e = ComplexMatrix::zeros(n, n);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        if a < n {
            e[(a, a)] = C64::new(1.0, 0.0);
            return e;
        }
        let idx = a - n;
        let pair = idx / 2;
        // enumerate (j, l) with j < l
        let (mut j, mut rem) = (0, pair);
        while rem >= n - 1 - j {
            rem -= n - 1 - j;
            j += 1;
        }
        let l = j + 1 + rem;
        if idx.is_multiple_of(2) {
            e[(j, l)] = C64::new(s, 0.0);
            e[(l, j)] = C64::new(s, 0.0);
        } else {
            e[(j, l)] = C64::new(0.0, s);
            e[(l, j)] = C64::new(0.0, -s);
        }
        e
    }
}

/// Support data for rank-deficient inputs. Any extension of `rho` lives on
/// the largest B-permutation-invariant subspace of `range(rho) ⊗ H_B^{k-1}`,
/// so the search is restricted to operators compressed onto it.
struct ReducedSupport {
    projector: ComplexMatrix,
    basis: Vec<ComplexMatrix>,
    /// Pseudo-inverse of `Z -> marginal(Π sym(Z ⊗ I) Π)` in `basis` coordinates.
    gram_pinv: Vec<Vec<f64>>,
    /// Smallest non-zero eigenvalue of `rho`.
    smallest: f64,
}

/// Eigenvalues of `rho` below this (relative) count as zero when reducing.
const RANK_TOL: f64 = 1e-11;
const SUPPORT_TOL: f64 = 1e-9;

impl ReducedSupport {
    fn build(problem: &ExtensionProblem) -> Result<Option<Self>> {
        let rho = problem.base.matrix();
        let eig = hermitian_eig(rho)?;
        let top = eig.values[0].abs().max(f64::MIN_POSITIVE);
        let rank = eig.values.iter().filter(|&&v| v > RANK_TOL * top).count();
        if rank == rho.rows() {
            return Ok(None);
        }
        let range_proj = eig.reconstruct_with(|v| if v > RANK_TOL * top { 1.0 } else { 0.0 });
        let rest = problem.shape().dim_b.pow(problem.k as u32 - 1);
        let avg = symmetrize_b(&tensor(&range_proj, &ComplexMatrix::identity(rest)), problem)?;
        let avg_eig = hermitian_eig(&avg)?;
        let projector = avg_eig.reconstruct_with(|v| if v > 1.0 - SUPPORT_TOL { 1.0 } else { 0.0 });

        let coords = HermitianCoords { n: rho.rows() };
        let basis: Vec<ComplexMatrix> = (0..coords.len()).map(|a| coords.element(a)).collect();
        let m = basis.len();
        let mut gram = ComplexMatrix::zeros(m, m);
        for (b, eb) in basis.iter().enumerate() {
            let image = problem.marginal(&compress(&projector, &lift_raw(eb, problem)?))?;
            for (a, ea) in basis.iter().enumerate() {
                gram[(a, b)] = C64::new(ea.trace_product(&image).re, 0.0);
            }
        }
        let g_eig = hermitian_eig(&gram.hermitian_part())?;
        let g_top = g_eig.values[0].abs().max(f64::MIN_POSITIVE);
        let pinv = g_eig.reconstruct_with(|v| if v > 1e-10 * g_top { 1.0 / v } else { 0.0 });
        let gram_pinv = (0..m).map(|a| (0..m).map(|b| pinv[(a, b)].re).collect()).collect();
        let smallest = eig.values[rank - 1];
        Ok(Some(ReducedSupport { projector, basis, gram_pinv, smallest }))
    }

    fn solve(&self, r: &ComplexMatrix) -> ComplexMatrix {
        let coords: Vec<f64> = self.basis.iter().map(|e| e.trace_product(r).re).collect();
        let n = r.rows();
        let mut z = ComplexMatrix::zeros(n, n);
        for (row, e) in self.gram_pinv.iter().zip(&self.basis) {
            let c: f64 = row.iter().zip(&coords).map(|(g, x)| g * x).sum();
            if c != 0.0 {
                z += &e.scale(c);
            }
        }
        z
    }
}

fn compress(p: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    p.matmul(x).matmul(p)
}

/// `sym(Z ⊗ I_{B_2..B_k})`
fn lift_raw(z: &ComplexMatrix, problem: &ExtensionProblem) -> Result<ComplexMatrix> {
    let rest = problem.shape().dim_b.pow(problem.k as u32 - 1);
    symmetrize_b(&tensor(z, &ComplexMatrix::identity(rest)), problem)
}

/// Inverse of `Z -> marginal(sym(Z ⊗ I))` on `A:B_1` operators.
fn invert_marginal_lift(w: &ComplexMatrix, problem: &ExtensionProblem) -> Result<ComplexMatrix> {
    let shape = problem.shape();
    let (db, k) = (shape.dim_b as f64, problem.k as f64);
    let c = db.powi(problem.k as i32 - 2);
    let w_a = partial_trace(w, shape, Side::A)?;
    let z = w - &tensor(&w_a, &ComplexMatrix::identity(shape.dim_b)).scale((k - 1.0) / (k * db));
    Ok(z.scale(k / (c * db)))
}

/// The solver's view of the affine constraint set, possibly restricted to
/// the reduced support.
struct AffineSet<'a> {
    problem: &'a ExtensionProblem,
    reduced: Option<ReducedSupport>,
}

impl AffineSet<'_> {
    fn lift(&self, z: &ComplexMatrix) -> Result<ComplexMatrix> {
        let l = lift_raw(z, self.problem)?;
        Ok(match &self.reduced {
            Some(r) => compress(&r.projector, &l),
            None => l,
        })
    }

    fn solve_marginal(&self, w: &ComplexMatrix) -> Result<ComplexMatrix> {
        match &self.reduced {
            Some(r) => Ok(r.solve(w)),
            None => invert_marginal_lift(w, self.problem),
        }
    }

    fn project(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut s = symmetrize_b(&y.hermitian_part(), self.problem)?;
        if let Some(r) = &self.reduced {
            s = compress(&r.projector, &s);
        }
        let w = self.problem.base.matrix() - &self.problem.marginal(&s)?;
        let z = self.solve_marginal(&w)?;
        Ok((&s + &self.lift(&z)?).hermitian_part())
    }

    /// Projection onto `{X >= floor}` within the support (the plain PSD cone
    /// for `floor = 0`); directions outside the support are zeroed.
    fn project_cone(&self, z: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
        let z = z.hermitian_part();
        match &self.reduced {
            None => Ok(hermitian_eig(&z)?.reconstruct_with(|v| v.max(floor))),
            Some(r) => {
                // push the complement far below the spectrum of z so the two
                // eigenspaces cannot mix
                let far = -(2.0 * z.frobenius_norm() + 1.0);
                let outside = &ComplexMatrix::identity(z.rows()) - &r.projector;
                let eig = hermitian_eig(&(&z + &outside.scale(far)))?;
                Ok(eig.reconstruct_with(|v| if v < 0.5 * far { 0.0 } else { v.max(floor) }))
            }
        }
    }

    /// Tries to turn an affine iterate into a separating witness `Z` with
    /// `Π sym(Z ⊗ I) Π >= 0` on the support and `Tr(Z rho) < 0`, which rules
    /// out every extension. Two candidates are tried: one built from the
    /// negative part of `y`, and the marginal mismatch left when the affine
    /// set on the support is empty. Returns the smallest `Tr(Z rho) / ||Z||_F`.
    fn certificate(&self, y_eig: &crate::linalg::HermitianEigen) -> Result<Option<f64>> {
        let rho = self.problem.base.matrix();
        let neg = y_eig.reconstruct_with(|v| if v < 0.0 { -v } else { 0.0 });
        let from_neg = self.solve_marginal(&self.problem.marginal(&neg)?)?;
        let y = y_eig.reconstruct();
        let mismatch = &self.problem.marginal(&y)? - rho;
        let mut best: Option<f64> = None;
        for z in [from_neg, mismatch] {
            let ev = hermitian_eigenvalues(&self.lift(&z)?)?;
            let shift = (-*ev.last().expect("non-empty")).max(0.0);
            let shifted = &z + &ComplexMatrix::identity(z.rows()).scale(shift);
            let norm = shifted.frobenius_norm();
            if norm <= f64::MIN_POSITIVE {
                continue;
            }
            let value = shifted.trace_product(rho).re / norm;
            best = Some(best.map_or(value, |b: f64| b.min(value)));
        }
        Ok(best)
    }
}

/// Searches for a `k`-copy symmetric extension of `rho`.
pub fn has_symmetric_extension(rho: &DensityMatrix, k: usize, opts: &ExtensionOptions) -> Result<FeasibilityResult> {
    let problem = ExtensionProblem::new(rho, k, opts.cap)?;
    solve(&problem, opts)
}

pub fn solve(problem: &ExtensionProblem, opts: &ExtensionOptions) -> Result<FeasibilityResult> {
    let affine = AffineSet { problem, reduced: ReducedSupport::build(problem)? };
    let mut x = match &opts.initial {
        Some(x0) => {
            problem.check(x0)?;
            x0.clone()
        }
        None => default_start(problem)?,
    };
    let smallest = match &affine.reduced {
        Some(r) => r.smallest,
        None => hermitian_eigenvalues(problem.base.matrix())?.last().copied().unwrap_or(0.0),
    };
    let initial_floor = INTERIOR_SHIFT * smallest.max(0.0) / problem.shape().dim_b.pow(problem.k as u32 - 1) as f64;
    let mut floor = initial_floor;
    let window = opts.window.max(1);
    let mut gaps: Vec<f64> = Vec::with_capacity(opts.max_iters.min(1 << 16));
    let mut certificate = None;

    for iter in 0..opts.max_iters {
        let y = affine.project(&x)?;
        let y_eig = hermitian_eig(&y)?;
        let y_min = *y_eig.values.last().expect("non-empty");
        if y_min >= -opts.tol {
            let check = verify_extension(&problem.base, problem.k, &y)?;
            if check.within(opts.tol) {
                return Ok(FeasibilityResult {
                    status: ExtensionStatus::Feasible,
                    residual: (-y_min).max(0.0),
                    iterations: iter,
                    witness_extension: Some(y),
                    certificate: None,
                });
            }
        }
        x = affine.project_cone(&y, floor)?;
        let gap = (&x - &y).frobenius_norm();
        gaps.push(gap);

        let plateau = gaps.len() > window && {
            let old = gaps[gaps.len() - 1 - window];
            gap > opts.tol && (old - gap).abs() <= PLATEAU_REL_CHANGE * gap
        };
        let last = iter + 1 == opts.max_iters;
        if plateau || last || (iter + 1) % window == 0 {
            certificate = affine.certificate(&y_eig)?;
            if let Some(cert) = certificate.filter(|c| *c < -opts.tol) {
                // on a degenerate support the affine set itself may be empty
                let mismatch = (&problem.marginal(&y)? - problem.base.matrix()).frobenius_norm();
                return Ok(FeasibilityResult {
                    status: ExtensionStatus::InfeasibleEvidence,
                    residual: gap.max(mismatch),
                    iterations: iter + 1,
                    witness_extension: None,
                    certificate: Some(cert),
                });
            }
            if plateau && floor > 0.0 {
                floor = if floor / SHIFT_DECAY > SHIFT_CUTOFF * initial_floor { floor / SHIFT_DECAY } else { 0.0 };
                gaps.clear();
            }
        }
    }
    Ok(FeasibilityResult {
        status: ExtensionStatus::Inconclusive,
        residual: gaps.last().copied().unwrap_or(f64::NAN),
        iterations: opts.max_iters,
        witness_extension: None,
        certificate,
    })
}

/// Traces the last B copy out of a `k`-extension, giving a `(k-1)`-extension.
pub fn reduce_extension(x: &ComplexMatrix, shape: BipartiteShape, k: usize) -> Result<ComplexMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument("cannot reduce below one B copy".into()));
    }
    let mut dims = vec![shape.dim_a];
    dims.extend(std::iter::repeat_n(shape.dim_b, k));
    let keep: Vec<usize> = (0..k).collect();
    partial_trace_systems(x, &dims, &keep)
}
