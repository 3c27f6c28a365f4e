//! Dense complex linear algebra for small Hermitian problems.

mod eig;
mod matrix;
mod ops;
pub mod random;

pub use eig::{hermitian_eig, hermitian_eigenvalues, EigenDecomposition, DEFAULT_HERMITICITY_TOL};
pub use matrix::{ComplexMatrix, ONE, ZERO};
pub(crate) use matrix::{complex_from_pairs, pairs_from_complex};
pub use ops::{
    matrix_func_on_support, numerical_rank, partial_trace, permute_subsystems, permute_vector,
    psd_eig, support_cutoff, support_basis, support_projector, tensor, tensor_all, tensor_vec, trace_norm_distance,
    unitary_propagator, DEFAULT_RANK_TOL,
};
