//! Planar sets of finite perimeter with exact boundary data, and exact clipping
//! against probes.

mod boundary;
mod curves;
mod intervals;
mod rect;
mod region;
mod set;
mod slice;

pub use boundary::{
    ball_area, classify_point, clip_piece, density_estimate, interior_normal, overlap_with,
    perimeter, reduced_boundary, side_flags, DensityEstimate, PointClass, ReducedBoundary,
    BOUNDARY_TOL,
};
pub use curves::{BoundaryCurve, CurvePiece};
pub use intervals::IntervalUnion;
pub use rect::Rect;
pub use region::{decompose, decompose_auto, Cell, Frame, RegionDecomposition};
pub use set::{signed_area, Axis, BoolOp, FinitePerimeterSet, Probe, Side, MAX_BOOLEAN_DEPTH};
pub use slice::{slice, tag_param, EdgeTag, Span};

use crate::quadrature::QuadratureError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("boolean tree depth {depth} exceeds the supported bound {max}")]
    UnsupportedBoolean { depth: usize, max: usize },
    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("region is unbounded")]
    UnboundedRegion,
    #[error("point ({x}, {y}) is not on the reduced boundary")]
    NotOnBoundary { x: f64, y: f64 },
    #[error("point ({x}, {y}) is a corner of the boundary")]
    CornerPoint { x: f64, y: f64 },
    #[error("empty radius schedule")]
    EmptySchedule,
    #[error("invalid radius schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Frame matched to a probe, or an axis-aligned sweep when the set contains
/// product leaves (many parallel lines sweep cheaply but fan out badly in polar cells).
fn probe_frame(set: &FinitePerimeterSet, probe: &Probe) -> Frame {
    let center = match *probe {
        Probe::Ball { center, .. }
        | Probe::HalfBall { center, .. }
        | Probe::Cylinder { center, .. } => center,
        Probe::Box { min, max } => (min + max) * 0.5,
    };
    if let Some(axis) = set.has_product_leaf() {
        return Frame::across(center, axis.unit());
    }
    match *probe {
        Probe::Ball { .. } | Probe::HalfBall { .. } => Frame::Polar { center },
        Probe::Cylinder { normal, .. } => Frame::Cartesian {
            origin: center,
            u: normal.perp(),
            v: normal,
        },
        Probe::Box { .. } => Frame::axis_aligned(center),
    }
}

/// Cells covering `set ∩ probe`.
pub fn clip(set: &FinitePerimeterSet, probe: &Probe) -> Result<RegionDecomposition, GeometryError> {
    probe.validate()?;
    set.check_structure()?;
    let frame = probe_frame(set, probe);
    let mut window = probe.bounds();
    if let Some(b) = set.bounds() {
        window = window.intersect(&b);
    }
    if window.is_empty() {
        return Ok(RegionDecomposition::empty(frame));
    }
    let region = FinitePerimeterSet::intersection(vec![set.clone(), probe.to_set()]);
    decompose(&region, frame, &window)
}

/// Cells covering `set ∩ probe` in an explicit frame.
pub fn clip_in_frame(
    set: &FinitePerimeterSet,
    probe: &Probe,
    frame: Frame,
) -> Result<RegionDecomposition, GeometryError> {
    probe.validate()?;
    set.check_structure()?;
    let mut window = probe.bounds();
    if let Some(b) = set.bounds() {
        window = window.intersect(&b);
    }
    let region = FinitePerimeterSet::intersection(vec![set.clone(), probe.to_set()]);
    decompose(&region, frame, &window)
}

/// Cells covering the probe itself, in its natural frame.
pub fn probe_cells(probe: &Probe) -> Result<RegionDecomposition, GeometryError> {
    probe.validate()?;
    let set = probe.to_set();
    decompose(&set, probe_frame(&set, probe), &probe.bounds())
}
