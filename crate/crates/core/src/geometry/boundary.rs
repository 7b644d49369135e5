//! Reduced boundaries, normals and point classification.

use super::curves::{BoundaryCurve, CurvePiece};
use super::rect::Rect;
use super::region::{decompose, Frame};
use super::set::{FinitePerimeterSet, Probe};
use super::slice::slice;
use super::GeometryError;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Distance below which a point counts as lying on a boundary curve.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn tol_at(p: Vec2) -> f64 {
    BOUNDARY_TOL * (1.0 + p.norm())
}

/// Whether the set occupies the two sides of `m` along `n`, immediately next to `m`.
pub fn side_flags(set: &FinitePerimeterSet, m: Vec2, n: Vec2) -> (bool, bool) {
    let tol = 10.0 * tol_at(m);
    let spans = slice(set, m, n, (-1e-6, 1e-6));
    let plus = spans.iter().any(|s| s.lo <= tol && s.hi > tol);
    let minus = spans.iter().any(|s| s.lo < -tol && s.hi >= -tol);
    (plus, minus)
}

/// Pieces of the reduced boundary, oriented so the interior normal is the left normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedBoundary {
    pub pieces: Vec<CurvePiece>,
    /// Some piece was cut by the working rectangle of an unbounded set.
    pub truncated: bool,
}

impl ReducedBoundary {
    pub fn length(&self) -> f64 {
        if self.truncated {
            f64::INFINITY
        } else {
            self.pieces.iter().map(|p| p.length()).sum()
        }
    }
}

fn working_rect(set: &FinitePerimeterSet, window: Option<&Probe>) -> Rect {
    if let Some(w) = window {
        return w.bounds().expand(1e-9 * (1.0 + w.bounds().diameter()));
    }
    if let Some(b) = set.bounds() {
        return b.expand(1.0 + 0.01 * b.diameter());
    }
    // unbounded: enclose every bounded feature with room to spare
    let mut acc: Option<Rect> = None;
    for leaf in set.leaves() {
        let r = match leaf {
            FinitePerimeterSet::HalfPlane { normal, offset } => {
                Some(Rect::around(*normal * *offset, 1.0))
            }
            FinitePerimeterSet::Product1D { set1d, axis } if !set1d.is_empty() => {
                let lo = set1d.spans()[0].0;
                let hi = set1d.spans()[set1d.len() - 1].1;
                let (a, b) = if axis.index() == 0 {
                    (Vec2::new(lo, 0.0), Vec2::new(hi, 0.0))
                } else {
                    (Vec2::new(0.0, lo), Vec2::new(0.0, hi))
                };
                Some(Rect::from_points(&[a, b]))
            }
            other => other.bounds(),
        };
        if let Some(r) = r {
            acc = Some(acc.map_or(r, |a| a.union(&r)));
        }
    }
    let r = acc.unwrap_or(Rect::around(Vec2::ZERO, 1.0));
    r.expand(2.0 + r.diameter())
}

/// Reduced boundary of `set` inside the open `window` (whole plane when `None`).
pub fn reduced_boundary(
    set: &FinitePerimeterSet,
    window: Option<&Probe>,
) -> Result<ReducedBoundary, GeometryError> {
    set.check_structure()?;
    if let Some(w) = window {
        w.validate()?;
    }
    let rect = working_rect(set, window);
    let window_set = window.map(|w| w.to_set());
    let leaves = set.leaves();
    let curves: Vec<Vec<BoundaryCurve>> = leaves.iter().map(|l| l.leaf_curves(&rect)).collect();

    let mut cutters: Vec<(usize, BoundaryCurve)> = Vec::new();
    for (i, cs) in curves.iter().enumerate() {
        cutters.extend(cs.iter().map(|c| (i, *c)));
    }
    let extra = leaves.len();
    if let Some(ws) = &window_set {
        for leaf in ws.leaves() {
            cutters.extend(leaf.leaf_curves(&rect).into_iter().map(|c| (extra, c)));
        }
    }
    let corners = rect.corners();
    for k in 0..4 {
        cutters.push((
            extra + 1,
            BoundaryCurve::Segment {
                a: corners[k],
                b: corners[(k + 1) % 4],
            },
        ));
    }
    let product_axis: Vec<Option<usize>> = leaves
        .iter()
        .map(|l| match l {
            FinitePerimeterSet::Product1D { axis, .. } => Some(axis.index()),
            _ => None,
        })
        .collect();
    let cutter_axis = |i: usize| product_axis.get(i).copied().flatten();

    let mut out = ReducedBoundary {
        pieces: Vec::new(),
        truncated: false,
    };
    for (li, cs) in curves.iter().enumerate() {
        for curve in cs {
            let Some(piece) = curve.clip_to(&rect) else {
                continue;
            };
            let mut params = Vec::new();
            for (cj, cut) in &cutters {
                if *cj == li {
                    continue;
                }
                if cutter_axis(li).is_some() && cutter_axis(li) == cutter_axis(*cj) {
                    continue;
                }
                params.extend(piece.intersection_params(cut));
                if let BoundaryCurve::Segment { a, b } = cut {
                    for e in [*a, *b] {
                        if piece.distance(e) <= tol_at(e) {
                            params.push(piece.param_of(e));
                        }
                    }
                }
            }
            let min_gap = 1e-12 / piece.length().max(1e-300);
            for sub in piece.split(&params, min_gap) {
                let m = sub.midpoint();
                let tol = tol_at(m);
                if let Some(ws) = &window_set {
                    if !ws.contains(m) || ws.leaf_boundary_distance(m) <= tol {
                        continue;
                    }
                }
                let (plus, minus) = side_flags(set, m, sub.normal(0.5));
                if plus == minus {
                    continue;
                }
                if curves[..li].iter().flatten().any(|c| c.distance(m) <= tol) {
                    continue;
                }
                let on_rect = (0..4).any(|k| {
                    BoundaryCurve::Segment {
                        a: corners[k],
                        b: corners[(k + 1) % 4],
                    }
                    .distance(sub.start_point())
                    .min(
                        BoundaryCurve::Segment {
                            a: corners[k],
                            b: corners[(k + 1) % 4],
                        }
                        .distance(sub.end_point()),
                    ) <= tol_at(sub.start_point()).max(tol_at(sub.end_point()))
                });
                if window.is_none() && on_rect {
                    out.truncated = true;
                }
                out.pieces.push(if plus { sub } else { sub.reversed() });
            }
        }
    }
    Ok(out)
}

/// `ℋ¹(∂*E ∩ window)`; infinite for unbounded boundaries over the whole plane.
pub fn perimeter(set: &FinitePerimeterSet, window: Option<&Probe>) -> Result<f64, GeometryError> {
    Ok(reduced_boundary(set, window)?.length())
}

/// Measure-theoretic interior normal at a boundary point.
pub fn interior_normal(set: &FinitePerimeterSet, x: Vec2) -> Result<Vec2, GeometryError> {
    set.check_structure()?;
    let tol = tol_at(x);
    let near = Rect::around(x, 1e-6 * (1.0 + x.norm()));
    let mut through: Vec<BoundaryCurve> = Vec::new();
    for leaf in set.leaves() {
        if let FinitePerimeterSet::Polygon { vertices } = leaf {
            if vertices.iter().any(|v| v.distance(x) <= tol) {
                return Err(GeometryError::CornerPoint { x: x.x, y: x.y });
            }
        }
        through.extend(
            leaf.leaf_curves(&near)
                .into_iter()
                .filter(|c| c.distance(x) <= tol),
        );
    }
    let Some(first) = through.first() else {
        return Err(GeometryError::NotOnBoundary { x: x.x, y: x.y });
    };
    let t0 = first.tangent_at(x);
    let n = t0.perp();
    let (plus, minus) = side_flags(set, x, n);
    if plus == minus {
        return Err(GeometryError::NotOnBoundary { x: x.x, y: x.y });
    }
    if through
        .iter()
        .any(|c| c.tangent_at(x).cross(t0).abs() > 1e-9)
    {
        return Err(GeometryError::CornerPoint { x: x.x, y: x.y });
    }
    Ok(if plus { n } else { -n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Interior,
    Exterior,
    MeasureBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub radii: Vec<f64>,
    pub densities: Vec<f64>,
    pub liminf: f64,
    pub limsup: f64,
}

/// Area of `set ∩ B_r(x)` in the frame suited to the set.
pub fn ball_area(set: &FinitePerimeterSet, x: Vec2, r: f64) -> Result<f64, GeometryError> {
    let probe = Probe::Ball {
        center: x,
        radius: r,
    };
    Ok(super::clip(set, &probe)?.area())
}

/// `|E ∩ B_r(x)| / (π r²)` along a decreasing schedule, with the extremes over
/// the finest half.
pub fn density_estimate(
    set: &FinitePerimeterSet,
    x: Vec2,
    radii: &[f64],
) -> Result<DensityEstimate, GeometryError> {
    if radii.is_empty() {
        return Err(GeometryError::EmptySchedule);
    }
    for w in radii.windows(2) {
        if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less) {
            return Err(GeometryError::InvalidSchedule(
                "radii must be strictly decreasing".into(),
            ));
        }
    }
    if radii[radii.len() - 1].partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(GeometryError::InvalidSchedule(
            "radii must be positive".into(),
        ));
    }
    let densities = radii
        .iter()
        .map(|&r| Ok(ball_area(set, x, r)? / (std::f64::consts::PI * r * r)))
        .collect::<Result<Vec<f64>, GeometryError>>()?;
    let tail = &densities[densities.len() / 2..];
    Ok(DensityEstimate {
        radii: radii.to_vec(),
        liminf: tail.iter().copied().fold(f64::INFINITY, f64::min),
        limsup: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        densities,
    })
}

/// Smallest interval or gap among product leaves.
fn product_resolution(set: &FinitePerimeterSet) -> Option<f64> {
    set.leaves()
        .into_iter()
        .filter_map(|l| match l {
            FinitePerimeterSet::Product1D { set1d, .. } => Some(set1d.min_feature()),
            _ => None,
        })
        .reduce(f64::min)
}

/// Density classification into `E¹`, `E⁰` or the measure-theoretic boundary.
pub fn classify_point(set: &FinitePerimeterSet, x: Vec2) -> Result<PointClass, GeometryError> {
    set.check_structure()?;
    let judge = |lo: f64, hi: f64| {
        if lo > 1.0 - 1e-3 {
            PointClass::Interior
        } else if hi < 1e-3 {
            PointClass::Exterior
        } else {
            PointClass::MeasureBoundary
        }
    };
    if let Some(res) = product_resolution(set) {
        let mut radii = Vec::new();
        let mut r = 1.0;
        while r >= 4.0 * res && radii.len() < 60 {
            radii.push(r);
            r *= 0.5;
        }
        if radii.len() >= 2 {
            let est = density_estimate(set, x, &radii)?;
            return Ok(judge(est.liminf, est.limsup));
        }
    }
    let dist = set.leaf_boundary_distance(x);
    if dist > tol_at(x) {
        return Ok(if set.contains(x) {
            PointClass::Interior
        } else {
            PointClass::Exterior
        });
    }
    let r = 1e-6 * (1.0 + x.norm());
    let d = decompose(
        &FinitePerimeterSet::intersection(vec![
            set.clone(),
            FinitePerimeterSet::Disc {
                center: x,
                radius: r,
            },
        ]),
        Frame::Polar { center: x },
        &Rect::around(x, r),
    )?
    .area()
        / (std::f64::consts::PI * r * r);
    Ok(judge(d, d))
}

/// Sub-pieces of `piece` inside the open set.
pub fn clip_piece(piece: &CurvePiece, set: &FinitePerimeterSet) -> Vec<CurvePiece> {
    let len = piece.length();
    if len == 0.0 {
        return Vec::new();
    }
    let near = piece.bounds().expand(1e-9 * (1.0 + len));
    let mut params = Vec::new();
    for leaf in set.leaves() {
        for c in leaf.leaf_curves(&near) {
            params.extend(piece.intersection_params(&c));
            if let BoundaryCurve::Segment { a, b } = c {
                for e in [a, b] {
                    if piece.distance(e) <= tol_at(e) {
                        params.push(piece.param_of(e));
                    }
                }
            }
        }
    }
    piece
        .split(&params, 1e-12 / len)
        .into_iter()
        .filter(|sub| {
            let m = sub.midpoint();
            if set.leaf_boundary_distance(m) <= tol_at(m) {
                let (plus, minus) = side_flags(set, m, sub.normal(0.5));
                plus && minus
            } else {
                set.contains(m)
            }
        })
        .collect()
}

/// Sub-pieces of `piece` lying along any of `curves`.
pub fn overlap_with(piece: &CurvePiece, curves: &[CurvePiece]) -> Vec<CurvePiece> {
    let len = piece.length();
    if len == 0.0 {
        return Vec::new();
    }
    let mut params = Vec::new();
    for c in curves {
        for e in [c.start_point(), c.end_point()] {
            if piece.distance(e) <= tol_at(e) {
                params.push(piece.param_of(e));
            }
        }
        params.extend(piece.intersection_params(&c.as_boundary_curve()));
    }
    piece
        .split(&params, 1e-12 / len)
        .into_iter()
        .filter(|sub| {
            let m = sub.midpoint();
            let t = sub.tangent(0.5);
            curves.iter().any(|c| {
                c.distance(m) <= tol_at(m)
                    && c.tangent(c.param_of(m).clamp(0.0, 1.0)).cross(t).abs() < 1e-6
            })
        })
        .collect()
}
