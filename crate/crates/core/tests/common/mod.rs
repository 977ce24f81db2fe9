//! Reference implementations used as test oracles. They are written from
//! index definitions with explicit loops and share no code with the crate's
//! structural maps.
#![allow(dead_code)]

use sepkit::linalg::{ComplexMatrix, C64};
use sepkit::rng::{ginibre, random_hermitian, random_unitary, seeded};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    ginibre(rows, cols, &mut seeded(seed))
}

pub fn hermitian(d: usize, seed: u64) -> ComplexMatrix {
    random_hermitian(d, &mut seeded(seed))
}

pub fn unitary(d: usize, seed: u64) -> ComplexMatrix {
    random_unitary(d, &mut seeded(seed))
}

/// Kronecker product by a quadruple loop.
pub fn naive_kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Mixed-radix digits of `index`, most significant first.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for s in (0..dims.len()).rev() {
        d[s] = index % dims[s];
        index /= dims[s];
    }
    d
}

pub fn undigits(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

/// `out[i_{perm}; j_{perm}] = m[i; j]`: output factor `s` is input factor
/// `perm[s]`, written as a tensor contraction over multi-indices.
pub fn einsum_permute(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let n: usize = dims.iter().product();
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let rd = digits(r, dims);
        let ro: Vec<usize> = perm.iter().map(|&p| rd[p]).collect();
        for col in 0..n {
            let cd = digits(col, dims);
            let co: Vec<usize> = perm.iter().map(|&p| cd[p]).collect();
            out[(undigits(&ro, &out_dims), undigits(&co, &out_dims))] = m[(r, col)];
        }
    }
    out
}

/// Traces out every factor not in `keep` (kept factors stay in order).
pub fn einsum_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let n: usize = dims.iter().product();
    let kdims: Vec<usize> = keep.iter().map(|&s| dims[s]).collect();
    let k: usize = kdims.iter().product();
    let mut out = ComplexMatrix::zeros(k, k);
    for r in 0..n {
        let rd = digits(r, dims);
        for col in 0..n {
            let cd = digits(col, dims);
            let traced_equal = (0..dims.len()).filter(|s| !keep.contains(s)).all(|s| rd[s] == cd[s]);
            if traced_equal {
                let rk: Vec<usize> = keep.iter().map(|&s| rd[s]).collect();
                let ck: Vec<usize> = keep.iter().map(|&s| cd[s]).collect();
                out[(undigits(&rk, &kdims), undigits(&ck, &kdims))] += m[(r, col)];
            }
        }
    }
    out
}

/// Column-stacked vector of `m`.
pub fn vec_columns(m: &ComplexMatrix) -> Vec<C64> {
    let mut v = Vec::new();
    for col in 0..m.cols() {
        for r in 0..m.rows() {
            v.push(m[(r, col)]);
        }
    }
    v
}

/// `u v^T` (no conjugation).
pub fn outer_t(u: &[C64], v: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
}

pub fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()), "shape");
    let d = a.max_abs_diff(b);
    assert!(d <= tol, "max abs diff {d:e} > {tol:e}");
}
