//! Orthonormal polynomial bases for independent inputs: univariate
//! families, multi-index sets, Gauss rules and design matrices.

mod design;
mod distribution;
mod index_set;
mod quadrature;
mod univariate;

pub use design::{basis_vector, design_matrix, DesignMatrix, SUPPORT_TOLERANCE};
pub use distribution::{InputDistribution, InputSpace};
pub use index_set::{IndexScheme, MultiIndexSet};
pub use quadrature::{gauss_quadrature, tensor_quadrature, QuadratureRule};
pub use univariate::{PolyFamily, UnivariateBasis};

/// Shorthand for [`MultiIndexSet::build`].
pub fn build_index_set(scheme: IndexScheme, dim: usize, max_degree: usize) -> crate::Result<MultiIndexSet> {
    MultiIndexSet::build(scheme, dim, max_degree)
}
