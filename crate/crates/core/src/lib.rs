//! Numerical toolkit for doubled-equator bubble configurations of the
//! prescribed scalar curvature problem: expansion constants, lattice sums,
//! energy quadrature, the reduced functional and its critical point, and
//! weighted-norm diagnostics of the ansatz error.

pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod lattice;
pub mod numeric;
pub mod params;
pub mod quadrature;
pub mod reduced;
pub mod validation;

pub use error::{Error, Result};
