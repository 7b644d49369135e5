use super::Rect;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, QuadratureError};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// A primitive boundary curve. Lines carry an orientation whose left normal is
/// the interior normal of the primitive that produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCurve {
    Line { point: Vec2, dir: Vec2 },
    Segment { a: Vec2, b: Vec2 },
    Circle { center: Vec2, radius: f64 },
}

impl BoundaryCurve {
    pub fn distance(&self, p: Vec2) -> f64 {
        match *self {
            BoundaryCurve::Line { point, dir } => (p - point).cross(dir).abs(),
            BoundaryCurve::Segment { a, b } => segment_distance(a, b, p),
            BoundaryCurve::Circle { center, radius } => ((p - center).norm() - radius).abs(),
        }
    }

    /// Unit tangent at a point on the curve (orientation as stored).
    pub fn tangent_at(&self, p: Vec2) -> Vec2 {
        match *self {
            BoundaryCurve::Line { dir, .. } => dir,
            BoundaryCurve::Segment { a, b } => (b - a).normalized(),
            BoundaryCurve::Circle { center, .. } => (p - center).normalized().perp(),
        }
    }

    /// Intersection points, excluding coincident overlaps.
    pub fn intersections(&self, other: &BoundaryCurve) -> Vec<Vec2> {
        let pts = carrier_intersections(&self.carrier(), &other.carrier());
        pts.into_iter()
            .filter(|&p| self.within_extent(p) && other.within_extent(p))
            .collect()
    }

    fn carrier(&self) -> Carrier {
        match *self {
            BoundaryCurve::Line { point, dir } => Carrier::Line { point, dir },
            BoundaryCurve::Segment { a, b } => Carrier::Line {
                point: a,
                dir: (b - a).normalized(),
            },
            BoundaryCurve::Circle { center, radius } => Carrier::Circle { center, radius },
        }
    }

    fn within_extent(&self, p: Vec2) -> bool {
        match *self {
            BoundaryCurve::Segment { a, b } => {
                let d = b - a;
                let t = (p - a).dot(d) / d.norm_sq();
                let tol = 1e-12 * (1.0 + a.norm().max(b.norm())) / d.norm();
                (-tol..=1.0 + tol).contains(&t)
            }
            _ => true,
        }
    }

    /// The curve clipped to a rectangle, as a piece with the stored orientation.
    pub fn clip_to(&self, rect: &Rect) -> Option<CurvePiece> {
        match *self {
            BoundaryCurve::Line { point, dir } => {
                let (t0, t1) = rect.clip_line(point, dir)?;
                Some(CurvePiece::Segment {
                    a: point + dir * t0,
                    b: point + dir * t1,
                })
            }
            BoundaryCurve::Segment { a, b } => {
                let d = b - a;
                let (t0, t1) = rect.clip_line(a, d)?;
                let (t0, t1) = (t0.max(0.0), t1.min(1.0));
                (t1 > t0).then(|| CurvePiece::Segment {
                    a: a + d * t0,
                    b: a + d * t1,
                })
            }
            BoundaryCurve::Circle { center, radius } => {
                let r = Rect::around(center, radius);
                rect.intersects(&r).then_some(CurvePiece::Arc {
                    center,
                    radius,
                    start: 0.0,
                    sweep: TAU,
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Carrier {
    Line { point: Vec2, dir: Vec2 },
    Circle { center: Vec2, radius: f64 },
}

fn carrier_intersections(a: &Carrier, b: &Carrier) -> Vec<Vec2> {
    match (*a, *b) {
        (Carrier::Line { point: p1, dir: d1 }, Carrier::Line { point: p2, dir: d2 }) => {
            let den = d1.cross(d2);
            if den.abs() < 1e-13 {
                return Vec::new();
            }
            let t = (p2 - p1).cross(d2) / den;
            vec![p1 + d1 * t]
        }
        (Carrier::Line { point, dir }, Carrier::Circle { center, radius })
        | (Carrier::Circle { center, radius }, Carrier::Line { point, dir }) => {
            line_circle(point, dir, center, radius)
        }
        (
            Carrier::Circle {
                center: c1,
                radius: r1,
            },
            Carrier::Circle {
                center: c2,
                radius: r2,
            },
        ) => {
            let dvec = c2 - c1;
            let d = dvec.norm();
            let scale = r1.max(r2);
            if d < 1e-14 * scale {
                return Vec::new();
            }
            let tol = 1e-12 * scale;
            if d > r1 + r2 + tol || d < (r1 - r2).abs() - tol {
                return Vec::new();
            }
            let e = dvec / d;
            let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
            let h2 = r1 * r1 - a * a;
            let base = c1 + e * a;
            if h2 <= (tol * scale).max(0.0) {
                return vec![base];
            }
            let h = h2.sqrt();
            vec![base + e.perp() * h, base - e.perp() * h]
        }
    }
}

/// Intersections of the line `point + t dir` (unit `dir`) with a circle.
fn line_circle(point: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Vec<Vec2> {
    let w = point - center;
    let b = w.dot(dir);
    let foot = point - dir * b;
    let dist2 = (foot - center).norm_sq();
    let disc = radius * radius - dist2;
    let tol = 1e-12 * radius * radius;
    if disc < -tol {
        Vec::new()
    } else if disc <= tol {
        vec![foot]
    } else {
        let h = disc.sqrt();
        vec![foot - dir * h, foot + dir * h]
    }
}

fn segment_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
    (a + d * t).distance(p)
}

/// An oriented segment or circular arc. Its normal is the left normal of the
/// direction of travel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvePiece {
    Segment {
        a: Vec2,
        b: Vec2,
    },
    /// Points `center + radius * (cos θ, sin θ)` for θ from `start` to `start + sweep`.
    Arc {
        center: Vec2,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl CurvePiece {
    pub fn length(&self) -> f64 {
        match *self {
            CurvePiece::Segment { a, b } => a.distance(b),
            CurvePiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point at parameter `t` in `[0, 1]` (proportional to arc length).
    pub fn point(&self, t: f64) -> Vec2 {
        match *self {
            CurvePiece::Segment { a, b } => a + (b - a) * t,
            CurvePiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + Vec2::polar(start + t * sweep) * radius,
        }
    }

    pub fn tangent(&self, t: f64) -> Vec2 {
        match *self {
            CurvePiece::Segment { a, b } => (b - a).normalized(),
            CurvePiece::Arc { start, sweep, .. } => {
                Vec2::polar(start + t * sweep).perp() * sweep.signum()
            }
        }
    }

    pub fn normal(&self, t: f64) -> Vec2 {
        self.tangent(t).perp()
    }

    pub fn start_point(&self) -> Vec2 {
        self.point(0.0)
    }

    pub fn end_point(&self) -> Vec2 {
        self.point(1.0)
    }

    pub fn midpoint(&self) -> Vec2 {
        self.point(0.5)
    }

    pub fn reversed(&self) -> CurvePiece {
        match *self {
            CurvePiece::Segment { a, b } => CurvePiece::Segment { a: b, b: a },
            CurvePiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => CurvePiece::Arc {
                center,
                radius,
                start: start + sweep,
                sweep: -sweep,
            },
        }
    }

    /// Sub-piece between parameters `t0 < t1`.
    pub fn sub(&self, t0: f64, t1: f64) -> CurvePiece {
        match *self {
            CurvePiece::Segment { .. } => CurvePiece::Segment {
                a: self.point(t0),
                b: self.point(t1),
            },
            CurvePiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => CurvePiece::Arc {
                center,
                radius,
                start: start + t0 * sweep,
                sweep: (t1 - t0) * sweep,
            },
        }
    }

    /// Parameter of the closest point on the carrier, not clamped.
    pub fn param_of(&self, p: Vec2) -> f64 {
        match *self {
            CurvePiece::Segment { a, b } => {
                let d = b - a;
                (p - a).dot(d) / d.norm_sq()
            }
            CurvePiece::Arc {
                center,
                start,
                sweep,
                ..
            } => {
                let theta = (p - center).angle();
                let mut off = (theta - start) * sweep.signum();
                off = off.rem_euclid(TAU);
                // points just before the start wrap to ~2π; map them back
                if off > sweep.abs() + 0.5 * (TAU - sweep.abs()) {
                    off -= TAU;
                }
                off / sweep.abs()
            }
        }
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        let t = self.param_of(p).clamp(0.0, 1.0);
        self.point(t).distance(p)
    }

    /// Splits at the given parameters; those within `min_gap` of each other or of
    /// the ends are merged.
    pub fn split(&self, params: &[f64], min_gap: f64) -> Vec<CurvePiece> {
        let mut ts: Vec<f64> = params
            .iter()
            .copied()
            .filter(|t| *t > min_gap && *t < 1.0 - min_gap)
            .collect();
        ts.sort_by(f64::total_cmp);
        let mut cuts = vec![0.0];
        for t in ts {
            if t - cuts.last().unwrap() > min_gap {
                cuts.push(t);
            }
        }
        cuts.push(1.0);
        cuts.windows(2).map(|w| self.sub(w[0], w[1])).collect()
    }

    /// The carrier as a primitive curve, used for intersections.
    pub fn as_boundary_curve(&self) -> BoundaryCurve {
        match *self {
            CurvePiece::Segment { a, b } => BoundaryCurve::Segment { a, b },
            CurvePiece::Arc { center, radius, .. } => BoundaryCurve::Circle { center, radius },
        }
    }

    /// Intersection parameters with a primitive curve.
    pub fn intersection_params(&self, other: &BoundaryCurve) -> Vec<f64> {
        let tol = 1e-10;
        self.as_boundary_curve()
            .intersections(other)
            .into_iter()
            .map(|p| self.param_of(p))
            .filter(|t| *t > -tol && *t < 1.0 + tol)
            .collect()
    }

    /// Image under `p -> (p - x) / r`.
    pub fn map_homothety(&self, x: Vec2, r: f64) -> CurvePiece {
        match *self {
            CurvePiece::Segment { a, b } => CurvePiece::Segment {
                a: (a - x) / r,
                b: (b - x) / r,
            },
            CurvePiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => CurvePiece::Arc {
                center: (center - x) / r,
                radius: radius / r,
                start,
                sweep,
            },
        }
    }

    /// Line integral `∫ f(p, normal) dℋ¹` over the piece.
    pub fn integrate<F>(&self, abs_tol: f64, mut f: F) -> Result<f64, QuadratureError>
    where
        F: FnMut(Vec2, Vec2) -> f64,
    {
        let len = self.length();
        if len == 0.0 {
            return Ok(0.0);
        }
        let opts = AdaptiveOptions::default().with_abs_tol(abs_tol / len);
        let v = integrate_adaptive(0.0, 1.0, &opts, |t| f(self.point(t), self.normal(t)))?;
        Ok(v * len)
    }

    /// Bounding rectangle (loose for arcs).
    pub fn bounds(&self) -> Rect {
        match *self {
            CurvePiece::Segment { a, b } => Rect::from_points(&[a, b]),
            CurvePiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let mut pts = vec![self.point(0.0), self.point(1.0)];
                let (lo, hi) = if sweep >= 0.0 {
                    (start, start + sweep)
                } else {
                    (start + sweep, start)
                };
                let mut k = (lo / (0.5 * PI)).ceil();
                while k * 0.5 * PI <= hi {
                    pts.push(center + Vec2::polar(k * 0.5 * PI) * radius);
                    k += 1.0;
                }
                Rect::from_points(&pts)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_circle_crossing() {
        let a = BoundaryCurve::Circle {
            center: Vec2::ZERO,
            radius: 1.0,
        };
        let b = BoundaryCurve::Circle {
            center: Vec2::new(1.0, 0.0),
            radius: 1.0,
        };
        let pts = a.intersections(&b);
        assert_eq!(pts.len(), 2);
        for p in pts {
            assert!((p.x - 0.5).abs() < 1e-14);
            assert!((p.y.abs() - 0.75f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn arc_params_round_trip() {
        let arc = CurvePiece::Arc {
            center: Vec2::new(1.0, 2.0),
            radius: 2.0,
            start: 3.0,
            sweep: -2.5,
        };
        for t in [0.0, 0.2, 0.77, 1.0] {
            assert!((arc.param_of(arc.point(t)) - t).abs() < 1e-12);
        }
        let n = arc.normal(0.3);
        let radial = (arc.point(0.3) - Vec2::new(1.0, 2.0)).normalized();
        assert!(
            (n - radial).norm() < 1e-14,
            "clockwise arcs have outward left normal"
        );
    }

    #[test]
    fn split_drops_tiny_pieces() {
        let s = CurvePiece::Segment {
            a: Vec2::ZERO,
            b: Vec2::new(1.0, 0.0),
        };
        let parts = s.split(&[0.5, 0.5 + 1e-15, 1e-16, 0.25], 1e-12);
        assert_eq!(parts.len(), 3);
        let total: f64 = parts.iter().map(|p| p.length()).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
