//! Closed analytic families of divergence-measure fields and BV functions, with
//! exact decompositions of their derivatives.

mod bv;
mod field;
mod staircase;

pub(crate) use bv::critical_levels;
pub use bv::{
    coarea_check, AbsPiece, BVFunction, BVSpec, CantorPiece, CoareaCheck, DerivativeMeasure,
    JumpPiece, PiecewiseAffineMap, PolyPiece, RepresentativeIntegrand,
};
pub use field::{DMField, Interface, JumpTerm, PreciseValue};
pub use staircase::Staircase;

use crate::cantorlab::CantorError;
use crate::geometry::{CurvePiece, GeometryError, BOUNDARY_TOL};
use crate::measures::MeasureError;
use crate::quadrature::QuadratureError;
use crate::{Vec2, VecPoly};
use thiserror::Error;

/// Half-width of the square inside which unbounded interfaces are represented.
pub const SCENE_EXTENT: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Cantor(#[from] CantorError),
    #[error("point ({x}, {y}) is a corner of a jump region")]
    CornerPoint { x: f64, y: f64 },
    #[error("point ({x}, {y}) is a singular point off the jump set")]
    ThinSingularPoint { x: f64, y: f64 },
    #[error("level {t} is a plateau value; exceptional levels: {plateaus:?}")]
    ExceptionalLevel { t: f64, plateaus: Vec<f64> },
    #[error("unsupported scene: {0}")]
    Unsupported(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

fn near_tol(x: Vec2) -> f64 {
    10.0 * BOUNDARY_TOL * (1.0 + x.norm())
}

/// Merges coincident pieces coming from different sources: each returned piece
/// appears once, carrying the sum of the vector data of every source piece along
/// it, sign-adjusted to its own orientation. Sources are tagged so pieces of one
/// source are never compared with each other.
pub(crate) fn merge_coincident(
    items: Vec<(usize, CurvePiece, VecPoly)>,
) -> Vec<(CurvePiece, VecPoly)> {
    let bounds: Vec<_> = items
        .iter()
        .map(|(_, p, _)| p.bounds().expand(1e-9))
        .collect();
    let mut out = Vec::new();
    for (i, (src, p, v)) in items.iter().enumerate() {
        let others: Vec<usize> = (0..items.len())
            .filter(|&j| items[j].0 != *src && bounds[j].intersects(&bounds[i]))
            .collect();
        if others.is_empty() {
            out.push((*p, v.clone()));
            continue;
        }
        let len = p.length();
        let mut params = Vec::new();
        for &j in &others {
            let q = &items[j].1;
            for e in [q.start_point(), q.end_point()] {
                if p.distance(e) <= near_tol(e) {
                    params.push(p.param_of(e));
                }
            }
        }
        'sub: for sub in p.split(&params, 1e-12 / len) {
            let m = sub.midpoint();
            let t = sub.tangent(0.5);
            let mut acc = v.clone();
            for &j in &others {
                let q = &items[j].1;
                if q.distance(m) > near_tol(m) {
                    continue;
                }
                let tq = q.tangent(q.param_of(m).clamp(0.0, 1.0));
                if tq.cross(t).abs() >= 1e-6 {
                    continue;
                }
                if j < i {
                    continue 'sub;
                }
                acc = if tq.dot(t) > 0.0 {
                    acc.add(&items[j].2)
                } else {
                    acc.sub(&items[j].2)
                };
            }
            out.push((sub, acc));
        }
    }
    out
}
