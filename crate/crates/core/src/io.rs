//! Matrix JSON documents.
//!
//! Schema: `{"kind": "density"|"hermitian"|"matrix", "dims": [dA, dB],
//! "re": [[..]], "im": [[..]]}` with `dims` optional. Doubles are written in
//! shortest round-trip form, so write-then-read is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BipartiteShape, ComplexMatrix, DensityMatrix, C64, HERMITIAN_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Density,
    Hermitian,
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub kind: MatrixKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &ComplexMatrix, kind: MatrixKind, dims: Option<[usize; 2]>) -> Result<Self> {
        if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let re = (0..m.rows()).map(|i| m.row(i).iter().map(|z| z.re).collect()).collect();
        let im = (0..m.rows()).map(|i| m.row(i).iter().map(|z| z.im).collect()).collect();
        Ok(MatrixDocument { kind, dims, re, im })
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let s = rho.shape();
        Self::from_matrix(rho.matrix(), MatrixKind::Density, Some([s.dim_a, s.dim_b]))
            .expect("density matrices are finite")
    }

    /// The raw matrix, after checking the document is well formed and that
    /// `kind` and `dims` are consistent with it.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let rows = self.re.len();
        if rows == 0 || self.im.len() != rows {
            return Err(Error::Parse(format!("'re' has {} rows, 'im' has {}", rows, self.im.len())));
        }
        let cols = self.re[0].len();
        if cols == 0 {
            return Err(Error::Parse("empty rows".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (i, (r, m)) in self.re.iter().zip(&self.im).enumerate() {
            if r.len() != cols || m.len() != cols {
                return Err(Error::Parse(format!("row {i} is ragged")));
            }
            data.extend(r.iter().zip(m).map(|(&a, &b)| C64::new(a, b)));
        }
        let m = ComplexMatrix::from_vec(rows, cols, data)?;
        if let Some([a, b]) = self.dims {
            let shape = BipartiteShape::new(a, b)?;
            shape.check(&m)?;
        }
        if self.kind != MatrixKind::Matrix {
            m.require_square("matrix document")?;
            let dev = m.hermitian_deviation();
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(m)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.kind == MatrixKind::Matrix {
            return Err(Error::Parse("kind 'matrix' cannot be read as a state".into()));
        }
        let m = self.to_matrix()?;
        let shape = match self.dims {
            Some([a, b]) => BipartiteShape::new(a, b)?,
            None => BipartiteShape::new(m.rows(), 1)?,
        };
        DensityMatrix::new(m, shape)
    }
}

pub fn to_json_string(doc: &MatrixDocument) -> Result<String> {
    Ok(serde_json::to_string(doc)?)
}

pub fn from_json_str(s: &str) -> Result<MatrixDocument> {
    serde_json::from_str(s).map_err(|e| Error::Parse(format!("matrix document: {e}")))
}

pub fn write_document(path: impl AsRef<Path>, doc: &MatrixDocument) -> Result<()> {
    let mut s = to_json_string(doc)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_document(path: impl AsRef<Path>) -> Result<MatrixDocument> {
    from_json_str(&fs::read_to_string(path)?)
}

pub fn write_density(path: impl AsRef<Path>, rho: &DensityMatrix) -> Result<()> {
    write_document(path, &MatrixDocument::from_density(rho))
}

pub fn read_density(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    read_document(path)?.to_density()
}
