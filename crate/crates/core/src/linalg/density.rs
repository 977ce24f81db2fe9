use super::eigen::{hermitian_eigenvalues, HERMITIAN_TOL};
use super::matrix::{ComplexMatrix, C64};
use super::structure::{partial_trace, partial_transpose, BipartiteShape, Side};
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-10;
/// Relative spectral tolerance for positive semidefiniteness.
pub const PSD_REL_TOL: f64 = 1e-9;

/// Unit-trace positive semidefinite operator on a bipartite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    shape: BipartiteShape,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, shape: BipartiteShape) -> Result<Self> {
        shape.check(&matrix)?;
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian: ||M - M^dagger||_max = {dev:e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let ev = hermitian_eigenvalues(&matrix)?;
        if !psd_accepts(&ev) {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite: min eigenvalue {:e}",
                ev.last().copied().unwrap_or(0.0)
            )));
        }
        Ok(DensityMatrix { matrix: matrix.hermitian_part(), shape })
    }

    /// Skips the spectral check; for constructions that are PSD with unit
    /// trace by construction (mixtures, tensor products, regroupings).
    pub(crate) fn from_trusted(matrix: ComplexMatrix, shape: BipartiteShape) -> Self {
        debug_assert_eq!(matrix.rows(), shape.total());
        DensityMatrix { matrix, shape }
    }

    /// Normalises `m` by its trace and validates.
    pub fn from_unnormalized(m: ComplexMatrix, shape: BipartiteShape) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState("non-positive trace".into()));
        }
        Self::new(m.scale(1.0 / tr), shape)
    }

    pub fn pure(psi: &[C64], shape: BipartiteShape) -> Result<Self> {
        let mut v = psi.to_vec();
        let n = super::matrix::normalize(&mut v);
        if n == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        if v.len() != shape.total() {
            return Err(Error::DimensionMismatch("state vector length vs shape".into()));
        }
        Ok(DensityMatrix { matrix: ComplexMatrix::projector(&v), shape })
    }

    pub fn maximally_mixed(shape: BipartiteShape) -> Self {
        let n = shape.total();
        DensityMatrix { matrix: ComplexMatrix::identity(n).scale(1.0 / n as f64), shape }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn shape(&self) -> BipartiteShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.total()
    }

    pub fn reduced(&self, keep: Side) -> ComplexMatrix {
        partial_trace(&self.matrix, self.shape, keep).expect("shape checked at construction")
    }

    pub fn reduced_state(&self, keep: Side) -> DensityMatrix {
        let m = self.reduced(keep);
        let d = m.rows();
        DensityMatrix { matrix: m, shape: BipartiteShape { dim_a: d, dim_b: 1 } }
    }

    pub fn partial_transpose(&self) -> ComplexMatrix {
        partial_transpose(&self.matrix, self.shape).expect("shape checked at construction")
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix).expect("density matrices are Hermitian")
    }

    /// Conjugation by a unitary on the full space.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> DensityMatrix {
        let m = u.matmul(&self.matrix).matmul(&u.adjoint()).hermitian_part();
        DensityMatrix { matrix: m, shape: self.shape }
    }

    /// Mixture of states on a common shape; weights must be non-negative and
    /// sum to one.
    pub fn mixture<'a>(items: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Result<DensityMatrix> {
        let mut acc: Option<(ComplexMatrix, BipartiteShape)> = None;
        let mut total = 0.0;
        for (w, s) in items {
            if w < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            total += w;
            match acc.as_mut() {
                None => acc = Some((s.matrix.scale(w), s.shape)),
                Some((m, shape)) => {
                    if *shape != s.shape {
                        return Err(Error::DimensionMismatch("mixture members differ in shape".into()));
                    }
                    *m += &s.matrix.scale(w);
                }
            }
        }
        let (m, shape) = acc.ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        Ok(DensityMatrix { matrix: m, shape })
    }
}

/// Spectrum-based PSD acceptance: `min >= -PSD_REL_TOL * max|eigenvalue|`.
pub fn psd_accepts(eigenvalues: &[f64]) -> bool {
    let scale = eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    min >= -PSD_REL_TOL * scale
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn psd_margin(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.last().copied().unwrap_or(0.0))
}

pub fn is_psd(m: &ComplexMatrix) -> Result<bool> {
    Ok(psd_accepts(&hermitian_eigenvalues(m)?))
}

/// Half the trace norm of a Hermitian difference (or of any Hermitian `x`).
pub fn half_trace_norm_hermitian(x: &ComplexMatrix) -> Result<f64> {
    Ok(0.5 * hermitian_eigenvalues(x)?.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    Ok(half_trace_norm_hermitian(&(rho.matrix() - sigma.matrix()))?.min(1.0))
}

/// `sqrt(<psi|sigma|psi>)` for a unit vector `psi`.
pub fn pure_fidelity(sigma: &DensityMatrix, psi: &[C64]) -> Result<f64> {
    if psi.len() != sigma.dim() {
        return Err(Error::DimensionMismatch("vector length vs state".into()));
    }
    let n = super::matrix::norm(psi);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("vector norm {n} is not 1")));
    }
    Ok(sigma.matrix().expectation(psi).re.clamp(0.0, 1.0).sqrt())
}
