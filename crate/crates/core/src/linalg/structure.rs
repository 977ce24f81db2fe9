//! Structural maps on tensor-product spaces.

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteShape {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteShape {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::DimensionMismatch("subsystem dimensions must be >= 1".into()));
        }
        Ok(BipartiteShape { dim_a, dim_b })
    }

    pub fn square(d: usize) -> Result<Self> {
        Self::new(d, d)
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// `Some(d)` when `dim_a == dim_b == d`.
    pub fn local_dim(&self) -> Option<usize> {
        (self.dim_a == self.dim_b).then_some(self.dim_a)
    }

    pub fn check(&self, m: &ComplexMatrix) -> Result<()> {
        if m.rows() != self.total() || m.cols() != self.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix does not match shape {}x{}",
                m.rows(),
                m.cols(),
                self.dim_a,
                self.dim_b
            )));
        }
        Ok(())
    }
}

/// Which subsystem of a bipartite cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Kronecker product.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Option<ComplexMatrix> {
    factors.into_iter().fold(None, |acc, m| Some(match acc {
        None => m.clone(),
        Some(t) => tensor(&t, m),
    }))
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!("length {} for {n} systems", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection on 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// For each output index of a reordered register, the input index it reads.
/// Output factor `i` is input factor `perm[i]`.
pub fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    check_permutation(perm, dims.len())?;
    let total: usize = dims.iter().product();
    let mut in_strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        in_strides[s] = in_strides[s + 1] * dims[s + 1];
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..total {
        map.push(digits.iter().zip(perm).map(|(&x, &p)| x * in_strides[p]).sum());
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < out_dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    Ok(map)
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Conjugates `m` by the unitary that reorders tensor factors so that output
/// factor `i` is input factor `perm[i]`.
pub fn permute_systems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if m.rows() != total || m.cols() != total {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix vs subsystem dims {dims:?}",
            m.rows(),
            m.cols()
        )));
    }
    let map = permutation_index_map(dims, perm)?;
    Ok(ComplexMatrix::from_fn(total, total, |i, j| m[(map[i], map[j])]))
}

/// Reorders row and column tensor factors independently; used for
/// rectangular matrices such as realignments.
pub fn permute_rows_cols(
    m: &ComplexMatrix,
    row_dims: &[usize],
    row_perm: &[usize],
    col_dims: &[usize],
    col_perm: &[usize],
) -> Result<ComplexMatrix> {
    let rows: usize = row_dims.iter().product();
    let cols: usize = col_dims.iter().product();
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::DimensionMismatch("row/column dims do not match matrix".into()));
    }
    let rmap = permutation_index_map(row_dims, row_perm)?;
    let cmap = permutation_index_map(col_dims, col_perm)?;
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| m[(rmap[i], cmap[j])]))
}

/// Bipartite partial trace; `keep` names the surviving subsystem.
pub fn partial_trace(m: &ComplexMatrix, shape: BipartiteShape, keep: Side) -> Result<ComplexMatrix> {
    shape.check(m)?;
    let (da, db) = (shape.dim_a, shape.dim_b);
    Ok(match keep {
        Side::A => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Side::B => ComplexMatrix::from_fn(db, db, |k, l| (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()),
    })
}

/// Partial trace over an arbitrary set of factors; `keep` lists surviving
/// factors in the order they should appear in the output.
pub fn partial_trace_systems(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let mut order: Vec<usize> = keep.to_vec();
    order.extend((0..dims.len()).filter(|s| !keep.contains(s)));
    let permuted = permute_systems(m, dims, &order)?;
    let kept: usize = keep.iter().map(|&s| dims[s]).product();
    let traced = permuted.rows() / kept;
    Ok(ComplexMatrix::from_fn(kept, kept, |i, j| {
        (0..traced).map(|t| permuted[(i * traced + t, j * traced + t)]).sum()
    }))
}

/// Transpose on the B factor only.
pub fn partial_transpose(m: &ComplexMatrix, shape: BipartiteShape) -> Result<ComplexMatrix> {
    shape.check(m)?;
    let db = shape.dim_b;
    let n = shape.total();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        m[(i * db + l, j * db + k)]
    }))
}

/// Realignment map with `U(M ⊗ N) = v(M) v(N)^T`, where `v` stacks columns.
/// Output is `dim_a^2 x dim_b^2`.
pub fn realign(m: &ComplexMatrix, shape: BipartiteShape) -> Result<ComplexMatrix> {
    shape.check(m)?;
    let (da, db) = (shape.dim_a, shape.dim_b);
    Ok(ComplexMatrix::from_fn(da * da, db * db, |p, q| {
        // v(M)[col * d + row] = M[row][col]
        let (ca, ra) = (p / da, p % da);
        let (cb, rb) = (q / db, q % db);
        m[(ra * db + rb, ca * db + cb)]
    }))
}

/// Column-stacking vectorisation.
pub fn vectorize(m: &ComplexMatrix) -> Vec<crate::linalg::C64> {
    (0..m.cols()).flat_map(|c| (0..m.rows()).map(move |r| (r, c))).map(|(r, c)| m[(r, c)]).collect()
}
