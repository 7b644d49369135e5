//! Pairings between divergence-measure fields and BV functions on planar domains,
//! with the geometric, measure and trace machinery needed to evaluate them exactly
//! or by controlled limits.

pub mod cantorlab;
pub mod geometry;
pub mod measures;
pub mod pairing;
pub mod poly;
pub mod quadrature;
pub mod scenes;
pub mod traces;
pub mod vec2;

pub use poly::{Poly2, ScalarExpr, VecPoly};
pub use vec2::Vec2;

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
