//! Decomposition of bounded regions into cells swept along one frame coordinate.
//! Inside a cell the slice endpoints stay on fixed boundary curves, so cell areas
//! have closed forms and integrands are smooth on each cell.

use super::curves::BoundaryCurve;
use super::rect::Rect;
use super::set::FinitePerimeterSet;
use super::slice::{slice, tag_param, EdgeTag};
use super::GeometryError;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, QuadratureError};
use crate::vec2::Vec2;
use std::f64::consts::{FRAC_PI_2, TAU};

/// Sweep coordinates. Cartesian points are `origin + s u + t v` with `(u, v)`
/// orthonormal; polar points are `center + ρ (cos θ, sin θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frame {
    Cartesian { origin: Vec2, u: Vec2, v: Vec2 },
    Polar { center: Vec2 },
}

impl Frame {
    pub fn axis_aligned(origin: Vec2) -> Frame {
        Frame::Cartesian {
            origin,
            u: Vec2::E1,
            v: Vec2::E2,
        }
    }

    /// Cartesian frame sweeping across lines perpendicular to `axis_dir`.
    pub fn across(origin: Vec2, axis_dir: Vec2) -> Frame {
        Frame::Cartesian {
            origin,
            u: axis_dir,
            v: axis_dir.perp(),
        }
    }

    fn line(&self, s: f64) -> (Vec2, Vec2) {
        match *self {
            Frame::Cartesian { origin, u, v } => (origin + u * s, v),
            Frame::Polar { center } => (center, Vec2::polar(s)),
        }
    }
}

/// One sweep cell: outer coordinate in `outer`, inner coordinate between the
/// boundary tags `lo` and `hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub outer: (f64, f64),
    pub lo: EdgeTag,
    pub hi: EdgeTag,
    pub area: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionDecomposition {
    pub frame: Frame,
    pub cells: Vec<Cell>,
}

impl RegionDecomposition {
    pub fn empty(frame: Frame) -> Self {
        RegionDecomposition {
            frame,
            cells: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Exact area, summed over cells.
    pub fn area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// Inner coordinate of a cell boundary at outer coordinate `s`.
    pub fn inner(&self, tag: &EdgeTag, s: f64) -> f64 {
        let (o, d) = self.frame.line(s);
        tag_param(tag, o, d).unwrap_or(0.0)
    }

    /// `∫ f dx` over the region to absolute accuracy `abs_tol`.
    pub fn integrate<F>(&self, abs_tol: f64, f: F) -> Result<f64, QuadratureError>
    where
        F: Fn(Vec2) -> f64,
    {
        self.integrate_local(abs_tol, |y, _| f(y))
    }

    /// As [`integrate`](Self::integrate), with `f` also receiving `y` minus the
    /// frame origin, computed without cancellation.
    pub fn integrate_local<F>(&self, abs_tol: f64, f: F) -> Result<f64, QuadratureError>
    where
        F: Fn(Vec2, Vec2) -> f64,
    {
        let total_area = self.area();
        let n = self.cells.len() as f64;
        let mut sum = 0.0;
        for cell in &self.cells {
            if cell.area <= 0.0 {
                continue;
            }
            // half the budget by area, half evenly: sliver cells cannot resolve finer
            // than the rounding of their boundary coordinates
            let tol = abs_tol * 0.5 * (cell.area / total_area + 1.0 / n);
            sum += self.integrate_cell(cell, tol, &f)?;
        }
        Ok(sum)
    }

    fn integrate_cell<F>(&self, cell: &Cell, tol: f64, f: &F) -> Result<f64, QuadratureError>
    where
        F: Fn(Vec2, Vec2) -> f64,
    {
        let (s0, s1) = cell.outer;
        let width = s1 - s0;
        // the outer integrand carries the inner integrals' relative error
        let mut outer_opts = AdaptiveOptions::default()
            .with_abs_tol(0.5 * tol)
            .clustered();
        outer_opts.rel_tol = 1e-12;
        let inner_opts = AdaptiveOptions::default().with_abs_tol(0.25 * tol / width);
        let mut failure = None;
        let v = integrate_adaptive(s0, s1, &outer_opts, |s| {
            let (o, d) = self.frame.line(s);
            let lo = tag_param(&cell.lo, o, d).unwrap_or(0.0);
            let hi = tag_param(&cell.hi, o, d).unwrap_or(0.0);
            if hi <= lo {
                return 0.0;
            }
            let polar = matches!(self.frame, Frame::Polar { .. });
            let base = match self.frame {
                Frame::Cartesian { u, .. } => u * s,
                Frame::Polar { .. } => Vec2::ZERO,
            };
            let r = integrate_adaptive(lo, hi, &inner_opts, |t| {
                let val = f(o + d * t, base + d * t);
                if polar {
                    val * t
                } else {
                    val
                }
            });
            match r {
                Ok(x) => x,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

/// `½ (w √(R² − w²) + R² asin(w / R))`, an antiderivative of `√(R² − w²)`.
fn circle_primitive(w: f64, r: f64) -> f64 {
    let w = w.clamp(-r, r);
    // (r - w)(r + w) and atan2 stay accurate next to w = ±r, where asin(w / r) does not
    let root = ((r - w) * (r + w)).max(0.0).sqrt();
    0.5 * (w * root + r * r * w.atan2(root))
}

/// Antiderivative in `s` of the inner coordinate of a tag (Cartesian), or of
/// `½ ρ²` in `θ` (polar).
fn tag_primitive(frame: &Frame, tag: &EdgeTag, s: f64) -> f64 {
    match (*frame, *tag) {
        (_, EdgeTag::Unbounded) => f64::NAN,
        (Frame::Cartesian { .. }, EdgeTag::Origin) => f64::NAN,
        (Frame::Cartesian { origin, u, v }, EdgeTag::Line { normal, offset }) => {
            let nv = normal.dot(v);
            let alpha = (offset - normal.dot(origin)) / nv;
            let beta = normal.dot(u) / nv;
            alpha * s - 0.5 * beta * s * s
        }
        (
            Frame::Cartesian { origin, u, v },
            EdgeTag::Circle {
                center,
                radius,
                branch,
            },
        ) => {
            let w = center - origin;
            w.dot(v) * s + f64::from(branch) * circle_primitive(s - w.dot(u), radius)
        }
        (Frame::Polar { .. }, EdgeTag::Origin) => 0.0,
        (Frame::Polar { center }, EdgeTag::Line { normal, offset }) => {
            let k = offset - normal.dot(center);
            if k == 0.0 {
                return 0.0;
            }
            0.5 * k * k * (s - normal.angle()).tan()
        }
        (
            Frame::Polar { center },
            EdgeTag::Circle {
                center: m,
                radius,
                branch,
            },
        ) => {
            let w = m - center;
            let p = w.norm();
            let psi = s - w.angle();
            0.5 * radius * radius * s
                + 0.25 * p * p * (2.0 * psi).sin()
                + f64::from(branch) * circle_primitive(p * psi.sin(), radius)
        }
    }
}

fn cell_area(frame: &Frame, cell: &Cell) -> f64 {
    let (a, b) = cell.outer;
    let hi = tag_primitive(frame, &cell.hi, b) - tag_primitive(frame, &cell.hi, a);
    let lo = tag_primitive(frame, &cell.lo, b) - tag_primitive(frame, &cell.lo, a);
    (hi - lo).max(0.0)
}

/// Decomposes a region lying inside `window` into sweep cells in `frame`.
pub fn decompose(
    region: &FinitePerimeterSet,
    frame: Frame,
    window: &Rect,
) -> Result<RegionDecomposition, GeometryError> {
    region.check_structure()?;
    if window.is_empty() {
        return Ok(RegionDecomposition::empty(frame));
    }
    let scale = window.diameter().max(1e-300);
    let win = window.expand(1e-9 * scale);
    let leaves = region.leaves();
    let curves: Vec<Vec<BoundaryCurve>> = leaves.iter().map(|l| l.leaf_curves(&win)).collect();

    let mut points: Vec<Vec2> = Vec::new();
    for leaf in &leaves {
        points.extend(leaf.vertices_in(&win));
    }
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            if parallel_families(leaves[i], leaves[j]) {
                continue;
            }
            for a in &curves[i] {
                for b in &curves[j] {
                    points.extend(a.intersections(b).into_iter().filter(|p| win.contains(*p)));
                }
            }
        }
    }

    let mut crit: Vec<f64> = Vec::new();
    let outer_range;
    match frame {
        Frame::Cartesian { origin, u, v } => {
            crit.extend(points.iter().map(|p| (*p - origin).dot(u)));
            for c in curves.iter().flatten() {
                match *c {
                    BoundaryCurve::Circle { center, radius } => {
                        let m = (center - origin).dot(u);
                        crit.push(m - radius);
                        crit.push(m + radius);
                    }
                    BoundaryCurve::Line { point, dir } if dir.cross(v).abs() < 1e-12 => {
                        crit.push((point - origin).dot(u));
                    }
                    _ => {}
                }
            }
            let proj: Vec<f64> = win.corners().iter().map(|c| (*c - origin).dot(u)).collect();
            let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            crit.retain(|s| *s > lo && *s < hi);
            crit.push(lo);
            crit.push(hi);
            outer_range = (lo, hi);
        }
        Frame::Polar { center } => {
            let tiny = 1e-13 * scale;
            // directions of lines through the center, exact up to their own data
            let radial: Vec<f64> = curves
                .iter()
                .flatten()
                .filter(|c| {
                    !matches!(c, BoundaryCurve::Circle { .. })
                        && c.distance(center)
                            <= (1e-12 * scale).max(64.0 * f64::EPSILON * (1.0 + center.norm()))
                })
                .flat_map(|c| {
                    let d = c.tangent_at(center);
                    [d.angle(), (-d).angle()]
                })
                .collect();
            for p in &points {
                let dist = p.distance(center);
                if dist > tiny {
                    let mut a = (*p - center).angle();
                    // a point computed in absolute coordinates carries angular noise ~ ε|p|/dist
                    let noise = 64.0 * f64::EPSILON * (1.0 + p.norm()) / dist;
                    if let Some(&b) = radial.iter().find(|&&b| angle_gap(a, b) <= noise) {
                        a = b;
                    }
                    crit.push(a);
                }
            }
            for c in curves.iter().flatten() {
                match *c {
                    BoundaryCurve::Circle { center: m, radius } => {
                        let w = m - center;
                        let p = w.norm();
                        if p >= radius * (1.0 - 1e-9) && p > tiny {
                            // a circle through the center: its tangent there, exactly
                            let h = if (p * p - radius * radius).abs()
                                <= 64.0 * f64::EPSILON * radius * radius
                            {
                                FRAC_PI_2
                            } else {
                                (radius / p).min(1.0).asin()
                            };
                            crit.push(w.angle() + h);
                            crit.push(w.angle() - h);
                        }
                    }
                    _ => {
                        if c.distance(center)
                            <= (1e-12 * scale).max(64.0 * f64::EPSILON * (1.0 + center.norm()))
                        {
                            let d = c.tangent_at(center);
                            crit.push(d.angle());
                            crit.push((-d).angle());
                        }
                    }
                }
            }
            for a in crit.iter_mut() {
                *a = a.rem_euclid(TAU);
            }
            crit.sort_by(f64::total_cmp);
            if crit.is_empty() {
                crit.push(0.0);
            }
            let start = crit[0];
            crit.push(start + TAU);
            outer_range = (start, start + TAU);
        }
    }
    crit.sort_by(f64::total_cmp);
    crit.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));

    let polar = matches!(frame, Frame::Polar { .. });
    let inner_range = match frame {
        Frame::Cartesian { origin, v, .. } => {
            let proj: Vec<f64> = win.corners().iter().map(|c| (*c - origin).dot(v)).collect();
            (
                proj.iter().copied().fold(f64::INFINITY, f64::min),
                proj.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        }
        Frame::Polar { center } => (
            0.0,
            win.corners()
                .iter()
                .map(|c| c.distance(center))
                .fold(0.0, f64::max),
        ),
    };

    let mut cells = Vec::new();
    for w in crit.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 || a < outer_range.0 - 1e-12 || b > outer_range.1 + 1e-12 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let (o, d) = frame.line(mid);
        for mut span in slice(region, o, d, inner_range) {
            if polar {
                if span.hi <= 0.0 {
                    continue;
                }
                if span.lo < 0.0 {
                    span.lo = 0.0;
                    span.lo_tag = EdgeTag::Origin;
                }
            }
            if span.lo_tag == EdgeTag::Unbounded || span.hi_tag == EdgeTag::Unbounded {
                return Err(GeometryError::UnboundedRegion);
            }
            let mut cell = Cell {
                outer: (a, b),
                lo: span.lo_tag,
                hi: span.hi_tag,
                area: 0.0,
            };
            cell.area = cell_area(&frame, &cell);
            cells.push(cell);
        }
    }
    Ok(RegionDecomposition { frame, cells })
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Both leaves are products along the same axis, so their boundaries are parallel.
fn parallel_families(a: &FinitePerimeterSet, b: &FinitePerimeterSet) -> bool {
    matches!(
        (a, b),
        (
            FinitePerimeterSet::Product1D { axis: x, .. },
            FinitePerimeterSet::Product1D { axis: y, .. }
        ) if x == y
    )
}

/// Decomposition of a bounded region in a frame suited to its primitives.
pub fn decompose_auto(
    region: &FinitePerimeterSet,
    window: Option<&Rect>,
) -> Result<RegionDecomposition, GeometryError> {
    let bounds = match (region.bounds(), window) {
        (Some(b), Some(w)) => b.intersect(w),
        (Some(b), None) => b,
        (None, Some(w)) => *w,
        (None, None) => return Err(GeometryError::UnboundedRegion),
    };
    let frame = match region.has_product_leaf() {
        Some(axis) => Frame::across(bounds.center(), axis.unit()),
        None => Frame::axis_aligned(bounds.center()),
    };
    decompose(region, frame, &bounds)
}
