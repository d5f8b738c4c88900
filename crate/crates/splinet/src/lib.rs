//! Spline spaces with explicit support sets and orthonormal bases.
//!
//! Splines are stored through the values of their derivatives at the knots,
//! which makes Taylor-expansion evaluation, algebra and calculus direct and
//! numerically stable. On top of that representation the crate builds
//! B-spline bases by a recursion on the derivative values, orthonormalizes
//! them (one-sided, two-sided, or the dyadic splinet), and projects both
//! splines and discretized functional data orthogonally onto arbitrary
//! spline spaces.

pub mod bases;
pub mod calculus;
pub mod error;
pub mod family;
pub mod knots;
pub mod projection;
pub mod quadrature;
pub mod spline;
pub mod support;

pub use bases::ortho::{build_splinet, orthonormalize, orthonormalizer, Orthonormalizer};
pub use bases::{build_bsplines, BasisSet, BasisType, DyadicNet, NetPlacement};
pub use calculus::{cross_gramian, gramian, inner_product, integra, norm, norm_squared};
pub use error::SplineError;
pub use family::SplineFamily;
pub use knots::KnotVector;
pub use projection::{
    build_basis, decompose, decompose_onto, project_data, project_splines, CurveSamples,
    DataProjector, DiscreteCurveSet, ProjectionResult,
};
pub use spline::{PiecewisePolynomial, SmoothnessReport, Spline, TOL_SMOOTH};
pub use support::SupportSet;
