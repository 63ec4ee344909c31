//! Numerical toolkit for exposing boundary points of strongly pseudoconvex domains.
//!
//! The crate is organised bottom-up: [`hermpoly`] gives exact second-order calculus for
//! Hermitian polynomial defining functions, [`geometry`] builds local domains and boundary
//! charts, [`peak`] constructs peak functions with a certified decay rate, [`holomap`]
//! composes holomorphic maps with analytic Jacobians, and [`convexify`] assembles the
//! convexifying shear and verifies it. The one-variable engine in [`onevar`] feeds the
//! dumbbell exposers of [`ballexpose`]; [`hull`] holds the maximum-principle demo.

pub mod ballexpose;
pub mod convexify;
pub mod error;
pub mod geometry;
pub mod hermpoly;
pub mod holomap;
pub mod hull;
pub mod linalg;
pub mod onevar;
pub mod peak;
pub mod report;
pub mod sampling;

pub use error::{ExposeError, Result};
pub use geometry::{BoundaryChart, LocalDomain};
pub use hermpoly::{HermitianPolynomial, Jet2, Term};
pub use holomap::{HolomorphicMapExpr, MapPrimitive, ScalarExpr};
pub use num_complex::Complex64 as C64;
pub use onevar::OneVarMap;
pub use peak::PeakFunction;

/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
