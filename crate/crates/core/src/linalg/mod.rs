//! Dense linear algebra kernels used by the analyses.

pub mod eigen;
pub mod lu;
pub mod quadrature;

pub use eigen::eigenvalues_dense;
pub use lu::ComplexLu;
pub use quadrature::CompositeRule;
