//! Dense complex linear algebra and the structural maps used by every
//! criterion: Kronecker products, subsystem permutations, partial traces,
//! partial transposes and realignment.

pub mod density;
pub mod eigen;
pub mod matrix;
pub mod structure;
pub mod svd;

pub use density::{
    half_trace_norm_hermitian, is_psd, psd_accepts, psd_margin, pure_fidelity, trace_distance, DensityMatrix,
    PSD_REL_TOL,
};
pub use eigen::{hermitian_eig, hermitian_eigenvalues, HermitianEigen, HERMITIAN_TOL};
pub use matrix::{basis_vector, inner, kron_vec, norm, normalize, ComplexMatrix, C64, ONE, ZERO};
pub use structure::{
    inverse_permutation, partial_trace, partial_trace_systems, partial_transpose, permute_rows_cols,
    permute_systems, realign, tensor, tensor_all, vectorize, BipartiteShape, Side,
};
pub use svd::{singular_values, trace_norm};
