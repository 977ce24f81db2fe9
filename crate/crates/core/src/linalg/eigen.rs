//! Hermitian eigendecomposition: unitary Householder reduction to a real
//! symmetric tridiagonal matrix followed by implicit-shift QL.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_QL_ITERS: usize = 128;

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Non-increasing.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V f(Λ) V^dagger`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            if fv[k] == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * fv[k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<usize> {
    let n = m.require_square("hermitian_eig")?;
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(m.hermitian_deviation()));
    }
    Ok(n)
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = check_hermitian(m)?;
    let (mut diag, mut sub, q) = tridiagonalize(m, true);
    let q = q.expect("requested reflector accumulation");
    let mut z: Vec<Vec<f64>> = (0..n).map(|k| {
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        c
    }).collect();
    tql(&mut diag, &mut sub, Some(&mut z))?;

    // V = Q Z (phases already folded into Q)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
    let values = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let zk = &z[k];
        for i in 0..n {
            let row = q.row(i);
            let mut acc = ZERO;
            for (qij, &zj) in row.iter().zip(zk) {
                acc += qij * zj;
            }
            vectors[(i, col)] = acc;
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only, non-increasing.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let (mut diag, mut sub, _) = tridiagonalize(m, false);
    tql(&mut diag, &mut sub, None)?;
    diag.sort_by(|a, b| b.total_cmp(a));
    Ok(diag)
}

/// Returns the real diagonal, the real sub-diagonal (`sub[k]` couples `k` and
/// `k + 1`, last entry zero) and optionally the unitary `Q` with
/// `m = Q T Q^dagger`.
fn tridiagonalize(m: &ComplexMatrix, want_q: bool) -> (Vec<f64>, Vec<f64>, Option<ComplexMatrix>) {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut q = want_q.then(|| ComplexMatrix::identity(n));
    let mut sub_c = vec![ZERO; n];

    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let x0 = a[(lo, k)];
        let tail: f64 = (lo + 1..n).map(|i| a[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            sub_c[k] = x0;
            continue;
        }
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;

        for i in lo..n {
            v[i] = a[(i, k)];
        }
        v[lo] -= alpha;
        let vnorm = (lo..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        for vi in v[lo..n].iter_mut() {
            *vi /= vnorm;
        }

        // p = B v over the trailing block
        for i in lo..n {
            let mut acc = ZERO;
            for j in lo..n {
                acc += a[(i, j)] * v[j];
            }
            p[i] = acc;
        }
        let c: f64 = (lo..n).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in lo..n {
            p[i] -= v[i] * c;
        }
        // B <- B - 2 v w^dagger - 2 w v^dagger with w = p - c v
        for i in lo..n {
            let vi2 = v[i] * 2.0;
            let wi2 = p[i] * 2.0;
            for j in lo..n {
                a[(i, j)] -= vi2 * p[j].conj() + wi2 * v[j].conj();
            }
        }
        a[(lo, k)] = alpha;
        a[(k, lo)] = alpha.conj();
        for i in lo + 1..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }
        sub_c[k] = alpha;

        if let Some(q) = q.as_mut() {
            // Q <- Q (I - 2 v v^dagger)
            for i in 0..n {
                let mut s = ZERO;
                for j in lo..n {
                    s += q[(i, j)] * v[j];
                }
                s *= 2.0;
                for j in lo..n {
                    q[(i, j)] -= s * v[j].conj();
                }
            }
        }
    }

    // Rotate the complex sub-diagonal to its modulus with a diagonal unitary.
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut sub = vec![0.0; n];
    let mut phase = vec![ONE; n];
    for k in 0..n.saturating_sub(1) {
        let e = sub_c[k];
        let r = e.norm();
        sub[k] = r;
        phase[k + 1] = if r > 0.0 { phase[k] * (e / r) } else { phase[k] };
    }
    if let Some(q) = q.as_mut() {
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] *= phase[j];
            }
        }
    }
    (diag, sub, q)
}

/// Implicit QL on a symmetric tridiagonal matrix. `z` holds eigenvector
/// columns that are rotated alongside.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Vec<Vec<f64>>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    // Absolute floor so clusters of (near-)zero eigenvalues still deflate.
    let anorm = d.iter().zip(e.iter()).fold(0.0f64, |a, (x, y)| a.max(x.abs() + y.abs()));
    let floor = 1e-2 * f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (left, right) = z.split_at_mut(i + 1);
                    let zi = &mut left[i];
                    let zi1 = &mut right[0];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_hermitian, random_unitary, seeded};

    #[test]
    fn diagonal_sorted_descending() {
        let m = ComplexMatrix::diag_real(&[3.0, 1.0, 2.0]);
        let eig = hermitian_eig(&m).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(hermitian_eig(&rect).is_err());
    }

    #[test]
    fn reconstruction_residual_and_trace() {
        for seed in 0..40 {
            let n = 1 + (seed as usize % 17);
            let h = random_hermitian(n, &mut seeded(seed));
            let eig = hermitian_eig(&h).unwrap();
            let resid = eig.reconstruct().max_abs_diff(&h);
            assert!(resid <= 1e-9 * h.max_abs().max(1e-300), "n={n} resid={resid:e}");
            let sum: f64 = eig.values.iter().sum();
            assert!((sum - h.trace().re).abs() < 1e-9);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            let gram = eig.vectors.adjoint().matmul(&eig.vectors);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_only_matches_full() {
        let h = random_hermitian(12, &mut seeded(5));
        let a = hermitian_eig(&h).unwrap().values;
        let b = hermitian_eigenvalues(&h).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_invariance() {
        for seed in 0..20 {
            let mut rng = seeded(100 + seed);
            let h = random_hermitian(6, &mut rng);
            let u = random_unitary(6, &mut rng);
            let g = u.matmul(&h).matmul(&u.adjoint());
            let a = hermitian_eigenvalues(&h).unwrap();
            let b = hermitian_eigenvalues(&g).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // projector onto a random 3-dimensional subspace of C^8
        let u = random_unitary(8, &mut seeded(9));
        let mut p = ComplexMatrix::zeros(8, 8);
        for k in 0..3 {
            p += &ComplexMatrix::projector(&u.column(k));
        }
        let eig = hermitian_eig(&p).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let want = if k < 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
        assert!(eig.reconstruct().max_abs_diff(&p) < 1e-12);
    }
}
