//! Concrete sampling models: two-parameter gamma, asymmetric triangular,
//! the two-binomial odds ratio, and the mixed-effects error variance.

pub mod gamma;
pub mod triangular;

pub use gamma::GammaModel;
pub use triangular::TriangularModel;
