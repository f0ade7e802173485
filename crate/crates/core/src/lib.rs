//! Numerical toolkit for the total intrinsic curvature of curves on surfaces.

pub mod analysis;
pub mod bv;
pub mod curve;
pub mod error;
pub mod expr;
pub mod numeric;
pub mod polygonal;
pub mod surface;
pub mod transport;

pub use error::{GeomError, Result};
