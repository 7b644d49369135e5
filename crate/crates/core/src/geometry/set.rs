use super::curves::BoundaryCurve;
use super::intervals::IntervalUnion;
use super::rect::Rect;
use super::GeometryError;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Largest supported nesting of boolean operations.
pub const MAX_BOOLEAN_DEPTH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }

    pub fn unit(self) -> Vec2 {
        Vec2::axis(self.index())
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X1 => Axis::X2,
            Axis::X2 => Axis::X1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoolOp {
    Union,
    Intersection,
    /// First child minus the union of the others.
    Difference,
}

/// Open planar set with piecewise analytic boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "SetSpec", into = "SetSpec")]
pub enum FinitePerimeterSet {
    /// `{p : normal · p > offset}`
    HalfPlane {
        normal: Vec2,
        offset: f64,
    },
    Disc {
        center: Vec2,
        radius: f64,
    },
    /// Simple polygon, vertices counterclockwise.
    Polygon {
        vertices: Vec<Vec2>,
    },
    /// `{p : p[axis] ∈ set1d}`
    Product1D {
        set1d: IntervalUnion,
        axis: Axis,
    },
    Boolean {
        op: BoolOp,
        children: Vec<FinitePerimeterSet>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SetSpec {
    HalfPlane {
        normal: Vec2,
        offset: f64,
    },
    Disc {
        center: Vec2,
        radius: f64,
    },
    Polygon {
        vertices: Vec<Vec2>,
    },
    Rectangle {
        min: Vec2,
        max: Vec2,
    },
    #[serde(rename = "product1d")]
    Product1D {
        set1d: IntervalUnion,
        axis: Axis,
    },
    Boolean {
        op: BoolOp,
        children: Vec<SetSpec>,
    },
}

impl TryFrom<SetSpec> for FinitePerimeterSet {
    type Error = GeometryError;

    fn try_from(spec: SetSpec) -> Result<Self, GeometryError> {
        let set = match spec {
            SetSpec::HalfPlane { normal, offset } => Self::half_plane(normal, offset)?,
            SetSpec::Disc { center, radius } => Self::disc(center, radius)?,
            SetSpec::Polygon { vertices } => Self::polygon(vertices)?,
            SetSpec::Rectangle { min, max } => Self::rectangle(min, max)?,
            SetSpec::Product1D { set1d, axis } => Self::Product1D { set1d, axis },
            SetSpec::Boolean { op, children } => {
                let children = children
                    .into_iter()
                    .map(Self::try_from)
                    .collect::<Result<Vec<_>, _>>()?;
                let set = Self::Boolean { op, children };
                set.check_structure()?;
                set
            }
        };
        Ok(set)
    }
}

impl From<FinitePerimeterSet> for SetSpec {
    fn from(s: FinitePerimeterSet) -> Self {
        match s {
            FinitePerimeterSet::HalfPlane { normal, offset } => {
                SetSpec::HalfPlane { normal, offset }
            }
            FinitePerimeterSet::Disc { center, radius } => SetSpec::Disc { center, radius },
            FinitePerimeterSet::Polygon { vertices } => SetSpec::Polygon { vertices },
            FinitePerimeterSet::Product1D { set1d, axis } => SetSpec::Product1D { set1d, axis },
            FinitePerimeterSet::Boolean { op, children } => SetSpec::Boolean {
                op,
                children: children.into_iter().map(SetSpec::from).collect(),
            },
        }
    }
}

fn unit(v: Vec2, what: &str) -> Result<Vec2, GeometryError> {
    let n = v.norm();
    if !v.is_finite() || (n - 1.0).abs() > 1e-9 {
        return Err(GeometryError::InvalidSet(format!(
            "{what} must be a unit vector, got ({}, {})",
            v.x, v.y
        )));
    }
    Ok(v / n)
}

impl FinitePerimeterSet {
    pub fn half_plane(normal: Vec2, offset: f64) -> Result<Self, GeometryError> {
        let normal = unit(normal, "half-plane normal")?;
        if !offset.is_finite() {
            return Err(GeometryError::InvalidSet("half-plane offset".into()));
        }
        Ok(Self::HalfPlane { normal, offset })
    }

    pub fn disc(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(GeometryError::InvalidSet(format!(
                "disc radius must be positive, got {radius}"
            )));
        }
        Ok(Self::Disc { center, radius })
    }

    /// Validates simplicity; clockwise input is reversed.
    pub fn polygon(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 || vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidSet(
                "polygon needs at least three finite vertices".into(),
            ));
        }
        let area = signed_area(&vertices);
        let scale = Rect::from_points(&vertices).diameter();
        if area.abs() <= 1e-14 * scale * scale {
            return Err(GeometryError::InvalidSet("polygon has zero area".into()));
        }
        if !is_simple(&vertices) {
            return Err(GeometryError::InvalidSet("polygon is not simple".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self::Polygon { vertices })
    }

    pub fn rectangle(min: Vec2, max: Vec2) -> Result<Self, GeometryError> {
        if !(min.x < max.x && min.y < max.y) {
            return Err(GeometryError::InvalidSet(
                "rectangle corners out of order".into(),
            ));
        }
        Self::polygon(Rect::new(min, max).corners().to_vec())
    }

    pub fn product(set1d: IntervalUnion, axis: Axis) -> Self {
        Self::Product1D { set1d, axis }
    }

    pub fn union(children: Vec<Self>) -> Self {
        Self::Boolean {
            op: BoolOp::Union,
            children,
        }
    }

    pub fn intersection(children: Vec<Self>) -> Self {
        Self::Boolean {
            op: BoolOp::Intersection,
            children,
        }
    }

    pub fn difference(a: Self, b: Self) -> Self {
        Self::Boolean {
            op: BoolOp::Difference,
            children: vec![a, b],
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::Boolean { children, .. } => {
                1 + children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Checks the boolean depth bound and child counts.
    pub fn check_structure(&self) -> Result<(), GeometryError> {
        let depth = self.depth();
        if depth > MAX_BOOLEAN_DEPTH {
            return Err(GeometryError::UnsupportedBoolean {
                depth,
                max: MAX_BOOLEAN_DEPTH,
            });
        }
        self.check_children()
    }

    fn check_children(&self) -> Result<(), GeometryError> {
        if let Self::Boolean { op, children } = self {
            let need = if *op == BoolOp::Difference { 2 } else { 1 };
            if children.len() < need {
                return Err(GeometryError::InvalidSet(format!(
                    "{op:?} needs at least {need} children"
                )));
            }
            for c in children {
                c.check_children()?;
            }
        }
        Ok(())
    }

    /// Pointwise membership in the open set.
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Self::HalfPlane { normal, offset } => normal.dot(p) > *offset,
            Self::Disc { center, radius } => (p - *center).norm_sq() < radius * radius,
            Self::Polygon { vertices } => polygon_contains(vertices, p),
            Self::Product1D { set1d, axis } => set1d.contains(p.component(axis.index())),
            Self::Boolean { op, children } => match op {
                BoolOp::Union => children.iter().any(|c| c.contains(p)),
                BoolOp::Intersection => children.iter().all(|c| c.contains(p)),
                BoolOp::Difference => {
                    children[0].contains(p) && !children[1..].iter().any(|c| c.contains(p))
                }
            },
        }
    }

    /// Primitive leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&FinitePerimeterSet> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a FinitePerimeterSet>) {
        match self {
            Self::Boolean { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
            leaf => out.push(leaf),
        }
    }

    pub fn has_product_leaf(&self) -> Option<Axis> {
        self.leaves().into_iter().find_map(|l| match l {
            Self::Product1D { axis, .. } => Some(*axis),
            _ => None,
        })
    }

    /// Bounding rectangle, or `None` when the set may be unbounded.
    pub fn bounds(&self) -> Option<Rect> {
        match self {
            Self::HalfPlane { .. } | Self::Product1D { .. } => None,
            Self::Disc { center, radius } => Some(Rect::around(*center, *radius)),
            Self::Polygon { vertices } => Some(Rect::from_points(vertices)),
            Self::Boolean { op, children } => match op {
                BoolOp::Union => {
                    let mut acc: Option<Rect> = None;
                    for c in children {
                        let b = c.bounds()?;
                        acc = Some(acc.map_or(b, |a| a.union(&b)));
                    }
                    acc
                }
                BoolOp::Intersection => children
                    .iter()
                    .filter_map(|c| c.bounds())
                    .reduce(|a, b| a.intersect(&b)),
                BoolOp::Difference => children[0].bounds(),
            },
        }
    }

    /// Image under the homothety `p -> (p - x) / r`.
    pub fn map_homothety(&self, x: Vec2, r: f64) -> FinitePerimeterSet {
        match self {
            Self::HalfPlane { normal, offset } => Self::HalfPlane {
                normal: *normal,
                offset: (offset - normal.dot(x)) / r,
            },
            Self::Disc { center, radius } => Self::Disc {
                center: (*center - x) / r,
                radius: radius / r,
            },
            Self::Polygon { vertices } => Self::Polygon {
                vertices: vertices.iter().map(|v| (*v - x) / r).collect(),
            },
            Self::Product1D { set1d, axis } => Self::Product1D {
                set1d: set1d.map_affine(-x.component(axis.index()) / r, 1.0 / r),
                axis: *axis,
            },
            Self::Boolean { op, children } => Self::Boolean {
                op: *op,
                children: children.iter().map(|c| c.map_homothety(x, r)).collect(),
            },
        }
    }

    /// Boundary curves of a primitive that meet `window`, oriented so that the left
    /// normal points into the primitive. Empty for boolean nodes.
    pub fn leaf_curves(&self, window: &Rect) -> Vec<BoundaryCurve> {
        match self {
            Self::HalfPlane { normal, offset } => {
                let point = *normal * *offset;
                let dir = Vec2::new(normal.y, -normal.x);
                if window.clip_line(point, dir).is_some() {
                    vec![BoundaryCurve::Line { point, dir }]
                } else {
                    Vec::new()
                }
            }
            Self::Disc { center, radius } => {
                if window.intersects(&Rect::around(*center, *radius)) {
                    vec![BoundaryCurve::Circle {
                        center: *center,
                        radius: *radius,
                    }]
                } else {
                    Vec::new()
                }
            }
            Self::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| BoundaryCurve::Segment {
                        a: vertices[i],
                        b: vertices[(i + 1) % n],
                    })
                    .filter(|c| c.clip_to(window).is_some())
                    .collect()
            }
            Self::Product1D { set1d, axis } => {
                let k = axis.index();
                let (lo, hi) = (window.min.component(k), window.max.component(k));
                let e = axis.unit();
                let mid = window.center();
                let mut out = Vec::new();
                for idx in set1d.indices_meeting(lo, hi) {
                    let (a, b) = set1d.spans()[idx];
                    for (x, n) in [(a, e), (b, -e)] {
                        if x >= lo && x <= hi {
                            let mut point = mid;
                            if k == 0 {
                                point.x = x;
                            } else {
                                point.y = x;
                            }
                            out.push(BoundaryCurve::Line {
                                point,
                                dir: Vec2::new(n.y, -n.x),
                            });
                        }
                    }
                }
                out
            }
            Self::Boolean { .. } => Vec::new(),
        }
    }

    /// Distance from `p` to the boundary of a primitive.
    pub fn leaf_boundary_distance(&self, p: Vec2) -> f64 {
        match self {
            Self::HalfPlane { normal, offset } => (normal.dot(p) - offset).abs(),
            Self::Disc { center, radius } => ((p - *center).norm() - radius).abs(),
            Self::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        BoundaryCurve::Segment {
                            a: vertices[i],
                            b: vertices[(i + 1) % n],
                        }
                        .distance(p)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            Self::Product1D { set1d, axis } => {
                set1d.distance_to_endpoint(p.component(axis.index()))
            }
            Self::Boolean { children, .. } => children
                .iter()
                .map(|c| c.leaf_boundary_distance(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Polygon vertices lying in `window`.
    pub fn vertices_in(&self, window: &Rect) -> Vec<Vec2> {
        match self {
            Self::Polygon { vertices } => vertices
                .iter()
                .copied()
                .filter(|v| window.contains(*v))
                .collect(),
            _ => Vec::new(),
        }
    }
}

pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn segments_touch(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (o1, o2, o3, o4) = (
        orient(a, b, c),
        orient(a, b, d),
        orient(c, d, a),
        orient(c, d, b),
    );
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

fn is_simple(v: &[Vec2]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn polygon_contains(v: &[Vec2], p: Vec2) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Which half of a ball a half-ball probe keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `(y - x) · ν > 0`
    #[serde(alias = "i")]
    Interior,
    /// `(y - x) · ν < 0`
    #[serde(alias = "e")]
    Exterior,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Interior => 1.0,
            Side::Exterior => -1.0,
        }
    }
}

/// Windows used for averaging and localisation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Probe {
    Ball {
        center: Vec2,
        radius: f64,
    },
    HalfBall {
        center: Vec2,
        radius: f64,
        normal: Vec2,
        side: Side,
    },
    /// `{|(y - x)·ν| < r, |(y - x)·ν⊥| < ρ}`
    Cylinder {
        center: Vec2,
        normal: Vec2,
        r: f64,
        rho: f64,
    },
    Box {
        min: Vec2,
        max: Vec2,
    },
}

impl Probe {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: String| Err(GeometryError::DegenerateProbe(m));
        match *self {
            Probe::Ball { radius, center } | Probe::HalfBall { radius, center, .. } => {
                if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return bad(format!("radius must be positive, got {radius}"));
                }
            }
            Probe::Cylinder { r, rho, center, .. } => {
                if !(r > 0.0 && rho > 0.0 && r.is_finite() && rho.is_finite())
                    || !center.is_finite()
                {
                    return bad(format!(
                        "cylinder widths must be positive, got r={r}, rho={rho}"
                    ));
                }
            }
            Probe::Box { min, max } => {
                if !(min.x < max.x && min.y < max.y) {
                    return bad("box corners out of order".into());
                }
            }
        }
        if let Probe::HalfBall { normal, .. } | Probe::Cylinder { normal, .. } = *self {
            if (normal.norm() - 1.0).abs() > 1e-9 {
                return bad("probe normal must be a unit vector".into());
            }
        }
        Ok(())
    }

    pub fn to_set(&self) -> FinitePerimeterSet {
        match *self {
            Probe::Ball { center, radius } => FinitePerimeterSet::Disc { center, radius },
            Probe::HalfBall {
                center,
                radius,
                normal,
                side,
            } => {
                let n = normal.normalized() * side.sign();
                FinitePerimeterSet::intersection(vec![
                    FinitePerimeterSet::Disc { center, radius },
                    FinitePerimeterSet::HalfPlane {
                        normal: n,
                        offset: n.dot(center),
                    },
                ])
            }
            Probe::Cylinder {
                center,
                normal,
                r,
                rho,
            } => {
                let z = normal.normalized();
                let t = z.perp();
                FinitePerimeterSet::Polygon {
                    vertices: vec![
                        center - z * r - t * rho,
                        center + z * r - t * rho,
                        center + z * r + t * rho,
                        center - z * r + t * rho,
                    ],
                }
            }
            Probe::Box { min, max } => FinitePerimeterSet::Polygon {
                vertices: Rect::new(min, max).corners().to_vec(),
            },
        }
    }

    pub fn bounds(&self) -> Rect {
        match *self {
            Probe::Ball { center, radius } | Probe::HalfBall { center, radius, .. } => {
                Rect::around(center, radius)
            }
            Probe::Cylinder { .. } => match self.to_set() {
                FinitePerimeterSet::Polygon { vertices } => Rect::from_points(&vertices),
                _ => unreachable!(),
            },
            Probe::Box { min, max } => Rect::new(min, max),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Probe::Ball { radius, .. } => std::f64::consts::PI * radius * radius,
            Probe::HalfBall { radius, .. } => 0.5 * std::f64::consts::PI * radius * radius,
            Probe::Cylinder { r, rho, .. } => 4.0 * r * rho,
            Probe::Box { min, max } => (max.x - min.x) * (max.y - min.y),
        }
    }
}
