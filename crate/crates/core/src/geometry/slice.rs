//! Exact one-dimensional slices of sets along lines, with each endpoint tagged by
//! the boundary curve it lies on.

use super::set::{BoolOp, FinitePerimeterSet};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeTag {
    Unbounded,
    /// The origin of a polar ray.
    Origin,
    /// The line `{p : normal · p = offset}`.
    Line {
        normal: Vec2,
        offset: f64,
    },
    /// The near (`branch = -1`) or far (`branch = +1`) crossing of a circle.
    Circle {
        center: Vec2,
        radius: f64,
        branch: i8,
    },
}

/// Parameter interval `(lo, hi)` along a line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_tag: EdgeTag,
    pub hi_tag: EdgeTag,
}

impl Span {
    fn full() -> Span {
        Span {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_tag: EdgeTag::Unbounded,
            hi_tag: EdgeTag::Unbounded,
        }
    }
}

/// Slice of `set` along `origin + t dir`. Spans meeting `range` are guaranteed to
/// be present; others may be omitted.
pub fn slice(set: &FinitePerimeterSet, origin: Vec2, dir: Vec2, range: (f64, f64)) -> Vec<Span> {
    match set {
        FinitePerimeterSet::HalfPlane { normal, offset } => {
            let nd = normal.dot(dir);
            let gap = offset - normal.dot(origin);
            if nd.abs() < 1e-15 {
                return if gap < 0.0 {
                    vec![Span::full()]
                } else {
                    Vec::new()
                };
            }
            let t0 = gap / nd;
            let tag = EdgeTag::Line {
                normal: *normal,
                offset: *offset,
            };
            if nd > 0.0 {
                vec![Span {
                    lo: t0,
                    hi: f64::INFINITY,
                    lo_tag: tag,
                    hi_tag: EdgeTag::Unbounded,
                }]
            } else {
                vec![Span {
                    lo: f64::NEG_INFINITY,
                    hi: t0,
                    lo_tag: EdgeTag::Unbounded,
                    hi_tag: tag,
                }]
            }
        }
        FinitePerimeterSet::Disc { center, radius } => {
            let dd = dir.norm_sq();
            let w = origin - *center;
            let b = w.dot(dir) / dd;
            let foot = w - dir * b;
            let disc = (radius * radius - foot.norm_sq()) / dd;
            if disc <= 0.0 {
                return Vec::new();
            }
            let h = disc.sqrt();
            vec![Span {
                lo: -b - h,
                hi: -b + h,
                lo_tag: EdgeTag::Circle {
                    center: *center,
                    radius: *radius,
                    branch: -1,
                },
                hi_tag: EdgeTag::Circle {
                    center: *center,
                    radius: *radius,
                    branch: 1,
                },
            }]
        }
        FinitePerimeterSet::Polygon { vertices } => slice_polygon(vertices, origin, dir),
        FinitePerimeterSet::Product1D { set1d, axis } => {
            let k = axis.index();
            let o = origin.component(k);
            let d = dir.component(k);
            if d.abs() < 1e-15 {
                return if set1d.contains(o) {
                    vec![Span::full()]
                } else {
                    Vec::new()
                };
            }
            let (x0, x1) = (o + d * range.0, o + d * range.1);
            let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
            let e = axis.unit();
            let mut out: Vec<Span> = set1d
                .indices_meeting(lo, hi)
                .map(|idx| {
                    let (a, b) = set1d.spans()[idx];
                    let ta = (a - o) / d;
                    let tb = (b - o) / d;
                    let tag_a = EdgeTag::Line {
                        normal: e,
                        offset: a,
                    };
                    let tag_b = EdgeTag::Line {
                        normal: -e,
                        offset: -b,
                    };
                    if ta < tb {
                        Span {
                            lo: ta,
                            hi: tb,
                            lo_tag: tag_a,
                            hi_tag: tag_b,
                        }
                    } else {
                        Span {
                            lo: tb,
                            hi: ta,
                            lo_tag: tag_b,
                            hi_tag: tag_a,
                        }
                    }
                })
                .collect();
            if d < 0.0 {
                out.reverse();
            }
            out
        }
        FinitePerimeterSet::Boolean { op, children } => {
            let mut acc = slice(&children[0], origin, dir, range);
            for c in &children[1..] {
                let s = slice(c, origin, dir, range);
                acc = match op {
                    BoolOp::Union => union(&acc, &s),
                    BoolOp::Intersection => intersection(&acc, &s),
                    BoolOp::Difference => intersection(&acc, &complement(&s)),
                };
            }
            acc
        }
    }
}

fn slice_polygon(v: &[Vec2], origin: Vec2, dir: Vec2) -> Vec<Span> {
    let n = v.len();
    let side = dir.perp();
    let mut hits: Vec<(f64, EdgeTag)> = Vec::new();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let fa = side.dot(a - origin);
        let fb = side.dot(b - origin);
        if (fa > 0.0) != (fb > 0.0) {
            let p = a + (b - a) * (fa / (fa - fb));
            let t = (p - origin).dot(dir) / dir.norm_sq();
            let normal = (b - a).perp().normalized();
            hits.push((
                t,
                EdgeTag::Line {
                    normal,
                    offset: normal.dot(a),
                },
            ));
        }
    }
    hits.sort_by(|x, y| x.0.total_cmp(&y.0));
    hits.chunks_exact(2)
        .filter(|c| c[1].0 > c[0].0)
        .map(|c| Span {
            lo: c[0].0,
            hi: c[1].0,
            lo_tag: c[0].1,
            hi_tag: c[1].1,
        })
        .collect()
}

pub fn union(a: &[Span], b: &[Span]) -> Vec<Span> {
    let mut all: Vec<Span> = a.iter().chain(b.iter()).copied().collect();
    all.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut out: Vec<Span> = Vec::with_capacity(all.len());
    for s in all {
        match out.last_mut() {
            Some(last) if s.lo <= last.hi => {
                if s.hi > last.hi {
                    last.hi = s.hi;
                    last.hi_tag = s.hi_tag;
                }
            }
            _ => out.push(s),
        }
    }
    out
}

pub fn intersection(a: &[Span], b: &[Span]) -> Vec<Span> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, y) = (a[i], b[j]);
        let (lo, lo_tag) = if x.lo >= y.lo {
            (x.lo, x.lo_tag)
        } else {
            (y.lo, y.lo_tag)
        };
        let (hi, hi_tag) = if x.hi <= y.hi {
            (x.hi, x.hi_tag)
        } else {
            (y.hi, y.hi_tag)
        };
        if hi > lo {
            out.push(Span {
                lo,
                hi,
                lo_tag,
                hi_tag,
            });
        }
        if x.hi <= y.hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub fn complement(a: &[Span]) -> Vec<Span> {
    let mut out = Vec::with_capacity(a.len() + 1);
    let mut lo = f64::NEG_INFINITY;
    let mut lo_tag = EdgeTag::Unbounded;
    for s in a {
        if s.lo > lo {
            out.push(Span {
                lo,
                hi: s.lo,
                lo_tag,
                hi_tag: s.lo_tag,
            });
        }
        lo = s.hi;
        lo_tag = s.hi_tag;
    }
    if lo < f64::INFINITY {
        out.push(Span {
            lo,
            hi: f64::INFINITY,
            lo_tag,
            hi_tag: EdgeTag::Unbounded,
        });
    }
    out
}

/// Location of a boundary tag along `origin + t dir`, or `None` when the line misses it.
pub fn tag_param(tag: &EdgeTag, origin: Vec2, dir: Vec2) -> Option<f64> {
    match *tag {
        EdgeTag::Unbounded => None,
        EdgeTag::Origin => Some(0.0),
        EdgeTag::Line { normal, offset } => {
            let nd = normal.dot(dir);
            (nd != 0.0).then(|| (offset - normal.dot(origin)) / nd)
        }
        EdgeTag::Circle {
            center,
            radius,
            branch,
        } => {
            let dd = dir.norm_sq();
            let w = origin - center;
            let b = w.dot(dir) / dd;
            let mut c = w.norm_sq() - radius * radius;
            // a line starting on the circle: keep the root at 0 exact
            if c.abs() <= 64.0 * f64::EPSILON * radius * radius {
                c = 0.0;
            }
            let disc = b * b - c / dd;
            Some(-b + f64::from(branch) * disc.max(0.0).sqrt())
        }
    }
}
