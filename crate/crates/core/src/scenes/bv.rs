use super::field::{region_boundary, vanishes_on};
use super::staircase::Staircase;
use super::{near_tol, SceneError, SCENE_EXTENT};
use crate::geometry::{
    clip_piece, reduced_boundary, Axis, BoolOp, CurvePiece, FinitePerimeterSet, IntervalUnion,
    Probe,
};
use crate::measures::{
    AcPart, CantorLinePart, Component, CurveDensity, CurvePart, Integrand, MeasureRep, PartTag,
};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};
use crate::{Poly2, ScalarExpr, Vec2, VecPoly};
use serde::{Deserialize, Serialize};

/// A continuous monotone piecewise-affine map of the line, given by its knots and
/// extended affinely beyond the first and last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseAffineMap {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseAffineMap {
    type Error = String;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self, String> {
        PiecewiseAffineMap::new(knots)
    }
}

impl From<PiecewiseAffineMap> for Vec<(f64, f64)> {
    fn from(m: PiecewiseAffineMap) -> Self {
        m.knots
    }
}

impl PiecewiseAffineMap {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, String> {
        if knots.len() < 2 {
            return Err("a piecewise-affine map needs at least two knots".into());
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err("knots must be finite".into());
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("knot abscissae must increase strictly".into());
        }
        let up = knots.windows(2).all(|w| w[1].1 >= w[0].1);
        let down = knots.windows(2).all(|w| w[1].1 <= w[0].1);
        if !(up || down) {
            return Err("map must be monotone".into());
        }
        Ok(PiecewiseAffineMap { knots })
    }

    pub fn identity() -> Self {
        PiecewiseAffineMap {
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_increasing(&self) -> bool {
        self.knots[self.knots.len() - 1].1 >= self.knots[0].1
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        self.knots[1..n - 1].partition_point(|k| k.0 <= t)
    }

    fn seg_slope(&self, i: usize) -> f64 {
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        (b.1 - a.1) / (b.0 - a.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let a = self.knots[i];
        a.1 + self.seg_slope(i) * (t - a.0)
    }

    /// Slope of the segment containing `t` (right-continuous at knots).
    pub fn slope(&self, t: f64) -> f64 {
        self.seg_slope(self.segment(t))
    }

    /// Values taken on whole intervals.
    pub fn flat_values(&self) -> Vec<f64> {
        (0..self.knots.len() - 1)
            .filter(|&i| self.seg_slope(i) == 0.0)
            .map(|i| self.knots[i].1)
            .collect()
    }

    /// The unique `τ` with `g(τ) = t`, or `±∞` when `t` lies beyond a flat end.
    /// `None` when `t` is a flat value.
    pub fn solve(&self, t: f64) -> Option<f64> {
        if self.flat_values().contains(&t) {
            return None;
        }
        let sign = if self.is_increasing() { 1.0 } else { -1.0 };
        let n = self.knots.len();
        for i in 0..n - 1 {
            let s = self.seg_slope(i);
            if s == 0.0 {
                continue;
            }
            let tau = self.knots[i].0 + (t - self.knots[i].1) / s;
            let lo_ok = i == 0 || tau >= self.knots[i].0;
            let hi_ok = i == n - 2 || tau <= self.knots[i + 1].0;
            if lo_ok && hi_ok {
                return Some(tau);
            }
        }
        // every segment flat, or t beyond a flat end
        let below = sign * (t - self.knots[0].1) < 0.0;
        Some(
            if below {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            } * sign,
        )
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PiecewiseAffineMap) -> PiecewiseAffineMap {
        let mut ts: Vec<f64> = inner.knots.iter().map(|k| k.0).collect();
        for &(s, _) in &self.knots {
            if let Some(tau) = inner.solve(s) {
                if tau.is_finite() {
                    ts.push(tau);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
        if ts.len() == 1 {
            ts.push(ts[0] + 1.0);
        }
        PiecewiseAffineMap {
            knots: ts
                .into_iter()
                .map(|t| (t, self.eval(inner.eval(t))))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyPiece {
    pub region: FinitePerimeterSet,
    pub value: Poly2,
}

fn one() -> f64 {
    1.0
}

/// Declarative description of a BV function; zero off the listed pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BVSpec {
    /// Polynomials on pairwise disjoint regions.
    PiecewisePoly {
        pieces: Vec<PolyPiece>,
    },
    Characteristic {
        set: FinitePerimeterSet,
    },
    /// `F_d((x_axis − origin)/scale)`.
    Staircase {
        lambda: f64,
        depth: u32,
        axis: Axis,
        #[serde(default)]
        origin: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `outer ∘ inner`; the inner function must be piecewise affine or a staircase.
    AffineCompose {
        outer: PiecewiseAffineMap,
        inner: Box<BVSpec>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Form {
    Pieces(Vec<PolyPiece>),
    Stair(Staircase, PiecewiseAffineMap),
}

/// A jump curve oriented so the left normal is `ν_u`, pointing to the larger trace
/// `plus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPiece {
    pub piece: CurvePiece,
    pub plus: Poly2,
    pub minus: Poly2,
}

impl JumpPiece {
    pub fn jump(&self) -> Poly2 {
        self.plus.sub(&self.minus)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BVSpec", into = "BVSpec")]
pub struct BVFunction {
    spec: BVSpec,
    form: Form,
    jumps: Vec<JumpPiece>,
    singular: Vec<Vec2>,
}

impl TryFrom<BVSpec> for BVFunction {
    type Error = SceneError;

    fn try_from(spec: BVSpec) -> Result<Self, SceneError> {
        BVFunction::new(spec)
    }
}

impl From<BVFunction> for BVSpec {
    fn from(u: BVFunction) -> Self {
        u.spec
    }
}

fn normalize(spec: &BVSpec) -> Result<Form, SceneError> {
    match spec {
        BVSpec::PiecewisePoly { pieces } => {
            for p in pieces {
                p.region.check_structure()?;
            }
            Ok(Form::Pieces(pieces.clone()))
        }
        BVSpec::Characteristic { set } => {
            set.check_structure()?;
            Ok(Form::Pieces(vec![PolyPiece {
                region: set.clone(),
                value: Poly2::constant(1.0),
            }]))
        }
        BVSpec::Staircase {
            lambda,
            depth,
            axis,
            origin,
            scale,
        } => Ok(Form::Stair(
            Staircase::new(*lambda, *depth, *axis, *origin, *scale)?,
            PiecewiseAffineMap::identity(),
        )),
        BVSpec::AffineCompose { outer, inner } => match normalize(inner)? {
            Form::Stair(s, h) => {
                let g = outer.compose(&h);
                for &(tau, _) in g.knots() {
                    if tau > 0.0 && tau < 1.0 && !s.is_plateau(tau) {
                        return Err(SceneError::Unsupported(format!(
                            "outer map kink at staircase level {tau} is not a plateau value"
                        )));
                    }
                }
                Ok(Form::Stair(s, g))
            }
            Form::Pieces(ps) => {
                let mut out = Vec::new();
                for p in ps {
                    out.extend(compose_piece(outer, &p)?);
                }
                Ok(Form::Pieces(out))
            }
        },
    }
}

fn compose_piece(g: &PiecewiseAffineMap, p: &PolyPiece) -> Result<Vec<PolyPiece>, SceneError> {
    if p.value.total_degree() > 1 {
        return Err(SceneError::Unsupported(
            "composition needs an affine or constant inner function".into(),
        ));
    }
    let grad = p.value.gradient().eval(Vec2::ZERO);
    let b = p.value.eval(Vec2::ZERO);
    if grad.norm() == 0.0 {
        return Ok(vec![PolyPiece {
            region: p.region.clone(),
            value: Poly2::constant(g.eval(b)),
        }]);
    }
    let a = grad.norm();
    let n = grad / a;
    let range = p.region.bounds().map(|r| {
        let vals: Vec<f64> = r.corners().iter().map(|&c| p.value.eval(c)).collect();
        (
            vals.iter().copied().fold(f64::INFINITY, f64::min),
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    let k = g.knots();
    let mut out = Vec::new();
    for j in 0..=k.len() {
        let lo = if j == 0 {
            f64::NEG_INFINITY
        } else {
            k[j - 1].0
        };
        let hi = if j == k.len() { f64::INFINITY } else { k[j].0 };
        if let Some((vmin, vmax)) = range {
            if hi <= vmin || lo >= vmax {
                continue;
            }
        }
        let seg = j.saturating_sub(1).min(k.len() - 2);
        let s = (k[seg + 1].1 - k[seg].1) / (k[seg + 1].0 - k[seg].0);
        let value = p
            .value
            .scale(s)
            .add(&Poly2::constant(k[seg].1 - s * k[seg].0));
        let mut parts = vec![p.region.clone()];
        if lo.is_finite() {
            parts.push(FinitePerimeterSet::HalfPlane {
                normal: n,
                offset: (lo - b) / a,
            });
        }
        if hi.is_finite() {
            parts.push(FinitePerimeterSet::HalfPlane {
                normal: -n,
                offset: -(hi - b) / a,
            });
        }
        let region = if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            FinitePerimeterSet::intersection(parts)
        };
        out.push(PolyPiece { region, value });
    }
    Ok(out)
}

fn piece_jumps(pieces: &[PolyPiece]) -> Result<Vec<JumpPiece>, SceneError> {
    let boundaries: Vec<Vec<CurvePiece>> = pieces
        .iter()
        .map(|p| region_boundary(&p.region))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (k, piece) in pieces.iter().enumerate() {
        let mut ends = Vec::new();
        for (j, bs) in boundaries.iter().enumerate() {
            if j != k {
                for b in bs {
                    ends.push(b.start_point());
                    ends.push(b.end_point());
                }
            }
        }
        for b in &boundaries[k] {
            let len = b.length();
            let params: Vec<f64> = ends
                .iter()
                .filter(|&&e| b.distance(e) <= near_tol(e))
                .map(|&e| b.param_of(e))
                .collect();
            for sub in b.split(&params, 1e-12 / len) {
                let m = sub.midpoint();
                let nu = sub.normal(0.5);
                let outside = m - nu * (1e-8 * (1.0 + m.norm()));
                let other = pieces.iter().position(|p| p.region.contains(outside));
                if matches!(other, Some(j) if j < k) {
                    continue;
                }
                let out_val = other.map_or(Poly2::zero(), |j| pieces[j].value.clone());
                let diff = piece.value.sub(&out_val);
                if vanishes_on(&sub, |x, _| diff.eval(x)) {
                    continue;
                }
                if diff.eval(m) > 0.0 {
                    out.push(JumpPiece {
                        piece: sub,
                        plus: piece.value.clone(),
                        minus: out_val,
                    });
                } else {
                    out.push(JumpPiece {
                        piece: sub.reversed(),
                        plus: out_val,
                        minus: piece.value.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Endpoints of jump pieces where the jump curve does not continue smoothly with
/// the same jump.
fn singular_points(jumps: &[JumpPiece]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::new();
    for (i, jp) in jumps.iter().enumerate() {
        for (e, t_end) in [(jp.piece.start_point(), 0.0), (jp.piece.end_point(), 1.0)] {
            let own = jp.jump().eval(e);
            if own.abs() <= 1e-12 {
                continue;
            }
            let tan = jp.piece.tangent(t_end);
            let mut partners = 0;
            let mut smooth = true;
            for (j, other) in jumps.iter().enumerate() {
                for (f, s_end) in [
                    (other.piece.start_point(), 0.0),
                    (other.piece.end_point(), 1.0),
                ] {
                    if j == i && s_end == t_end {
                        continue;
                    }
                    if (f - e).norm() <= near_tol(e) {
                        partners += 1;
                        let t2 = other.piece.tangent(s_end);
                        let v2 = other.jump().eval(f);
                        if t2.cross(tan).abs() > 1e-9
                            || (v2 - own).abs() > 1e-12 * (1.0 + own.abs())
                        {
                            smooth = false;
                        }
                    }
                }
            }
            if (partners != 1 || !smooth) && !out.iter().any(|p| (*p - e).norm() <= near_tol(e)) {
                out.push(e);
            }
        }
    }
    out
}

/// `D^a u` on one region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsPiece {
    pub region: FinitePerimeterSet,
    pub gradient: VecPoly,
}

/// `direction · part` for a (signed-weight) Cantor-line measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorPiece {
    pub part: CantorLinePart,
    pub direction: Vec2,
}

/// `Du = D^a u + D^j u + D^c u`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivativeMeasure {
    pub absolute: Vec<AbsPiece>,
    pub jump: Vec<JumpPiece>,
    pub cantor: Vec<CantorPiece>,
}

impl DerivativeMeasure {
    /// `D_i u` as a scalar measure.
    pub fn component(&self, i: usize) -> MeasureRep {
        let e = Vec2::axis(i);
        let mut m = MeasureRep::zero();
        for a in &self.absolute {
            let g = if i == 0 { &a.gradient.x } else { &a.gradient.y };
            if !g.is_zero() {
                m.components.push(Component::Ac(AcPart {
                    density: ScalarExpr::Poly(g.clone()),
                    support: Some(a.region.clone()),
                }));
            }
        }
        for j in &self.jump {
            m.components.push(Component::Curve(CurvePart {
                pieces: vec![j.piece],
                density: CurveDensity::flux(VecPoly::from_direction(e, &j.jump())),
            }));
        }
        for c in &self.cantor {
            let s = c.direction.dot(e);
            if s != 0.0 {
                m.components.push(Component::Cantor(CantorLinePart {
                    weight: c.part.weight.scale(s),
                    ..c.part.clone()
                }));
            }
        }
        m
    }

    /// `|Du|`.
    pub fn variation(&self) -> MeasureRep {
        let mut m = MeasureRep::zero();
        for a in &self.absolute {
            m.components.push(Component::Ac(AcPart {
                density: ScalarExpr::Norm {
                    field: a.gradient.clone(),
                    factor: 1.0,
                },
                support: Some(a.region.clone()),
            }));
        }
        for j in &self.jump {
            m.components.push(Component::Curve(CurvePart {
                pieces: vec![j.piece],
                density: CurveDensity {
                    scalar: j.jump(),
                    normal: VecPoly::zero(),
                    absolute: true,
                },
            }));
        }
        for c in &self.cantor {
            m.components.push(Component::Cantor(CantorLinePart {
                weight: c.part.weight.scale(c.direction.norm()).abs(),
                ..c.part.clone()
            }));
        }
        m
    }

    pub fn part(&self, tag: PartTag) -> DerivativeMeasure {
        DerivativeMeasure {
            absolute: if tag == PartTag::Absolute {
                self.absolute.clone()
            } else {
                Vec::new()
            },
            jump: if tag == PartTag::Jump {
                self.jump.clone()
            } else {
                Vec::new()
            },
            cantor: if tag == PartTag::Cantor {
                self.cantor.clone()
            } else {
                Vec::new()
            },
        }
    }
}

fn plane() -> FinitePerimeterSet {
    FinitePerimeterSet::union(vec![
        FinitePerimeterSet::HalfPlane {
            normal: Vec2::E1,
            offset: 0.0,
        },
        FinitePerimeterSet::HalfPlane {
            normal: -Vec2::E1,
            offset: 0.0,
        },
    ])
}

fn empty_set() -> FinitePerimeterSet {
    FinitePerimeterSet::product(IntervalUnion::default(), Axis::X1)
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + b.abs())
}

impl BVFunction {
    pub fn new(spec: BVSpec) -> Result<Self, SceneError> {
        let form = normalize(&spec)?;
        let jumps = match &form {
            Form::Pieces(ps) => piece_jumps(ps)?,
            Form::Stair(..) => Vec::new(),
        };
        let singular = singular_points(&jumps);
        Ok(BVFunction {
            spec,
            form,
            jumps,
            singular,
        })
    }

    pub fn characteristic(set: FinitePerimeterSet) -> Result<Self, SceneError> {
        Self::new(BVSpec::Characteristic { set })
    }

    pub fn piecewise(pieces: Vec<PolyPiece>) -> Result<Self, SceneError> {
        Self::new(BVSpec::PiecewisePoly { pieces })
    }

    pub fn polynomial_on(region: FinitePerimeterSet, value: Poly2) -> Result<Self, SceneError> {
        Self::piecewise(vec![PolyPiece { region, value }])
    }

    pub fn staircase(lambda: f64, depth: u32, axis: Axis) -> Result<Self, SceneError> {
        Self::new(BVSpec::Staircase {
            lambda,
            depth,
            axis,
            origin: 0.0,
            scale: 1.0,
        })
    }

    pub fn spec(&self) -> &BVSpec {
        &self.spec
    }

    /// Regions and polynomials after normalization, when the function is piecewise polynomial.
    pub fn poly_pieces(&self) -> Option<&[PolyPiece]> {
        match &self.form {
            Form::Pieces(p) => Some(p),
            Form::Stair(..) => None,
        }
    }

    pub fn staircase_form(&self) -> Option<(&Staircase, &PiecewiseAffineMap)> {
        match &self.form {
            Form::Stair(s, g) => Some((s, g)),
            Form::Pieces(_) => None,
        }
    }

    /// `J_u`.
    pub fn jump_set(&self) -> &[JumpPiece] {
        &self.jumps
    }

    /// `S_u ∖ J_u`.
    pub fn singular_points(&self) -> &[Vec2] {
        &self.singular
    }

    /// Value at points off `S_u`.
    pub fn eval(&self, x: Vec2) -> f64 {
        match &self.form {
            Form::Stair(s, g) => g.eval(s.eval(x)),
            Form::Pieces(ps) => {
                if let Some(p) = ps.iter().find(|p| p.region.contains(x)) {
                    return p.value.eval(x);
                }
                // on an internal boundary: average the neighbouring values
                let eps = 1e-8 * (1.0 + x.norm());
                let vals: Vec<f64> = (0..8)
                    .map(|i| {
                        let y =
                            x + Vec2::polar(std::f64::consts::FRAC_PI_4 * (i as f64 + 0.5)) * eps;
                        ps.iter()
                            .find(|p| p.region.contains(y))
                            .map_or(0.0, |p| p.value.eval(y))
                    })
                    .collect();
                vals.iter().sum::<f64>() / 8.0
            }
        }
    }

    fn jump_at(&self, x: Vec2) -> Option<&JumpPiece> {
        self.jumps
            .iter()
            .find(|j| j.piece.distance(x) <= near_tol(x))
    }

    /// `(u⁺, u⁻, ν_u)` when `x ∈ J_u`.
    pub fn one_sided(&self, x: Vec2) -> Option<(f64, f64, Vec2)> {
        let j = self.jump_at(x)?;
        let t = j.piece.param_of(x).clamp(0.0, 1.0);
        Some((j.plus.eval(x), j.minus.eval(x), j.piece.normal(t)))
    }

    /// `u^λ(x) = (1 − λ) u⁻ + λ u⁺` on `J_u`, the approximate limit elsewhere.
    pub fn representative_value(&self, x: Vec2, lambda: f64) -> Result<f64, SceneError> {
        if self
            .singular
            .iter()
            .any(|p| (*p - x).norm() <= 1e-9 * (1.0 + x.norm()))
        {
            return Err(SceneError::ThinSingularPoint { x: x.x, y: x.y });
        }
        Ok(match self.one_sided(x) {
            Some((plus, minus, _)) => (1.0 - lambda) * minus + lambda * plus,
            None => self.eval(x),
        })
    }

    /// `∇u` off the singular parts.
    pub fn gradient(&self, x: Vec2) -> Vec2 {
        match &self.form {
            Form::Pieces(ps) => ps
                .iter()
                .find(|p| p.region.contains(x))
                .map_or(Vec2::ZERO, |p| p.value.gradient().eval(x)),
            Form::Stair(..) => Vec2::ZERO,
        }
    }

    /// Levels taken on sets of positive measure.
    pub fn plateau_values(&self) -> Vec<f64> {
        let mut v = match &self.form {
            Form::Pieces(ps) => {
                let mut v: Vec<f64> = ps
                    .iter()
                    .filter(|p| p.value.total_degree() == 0)
                    .map(|p| p.value.constant_term())
                    .collect();
                v.push(0.0);
                v
            }
            Form::Stair(s, g) => {
                let mut v: Vec<f64> = s.plateau_values().into_iter().map(|t| g.eval(t)).collect();
                v.extend(g.flat_values());
                v
            }
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// `{u > t}`.
    pub fn level_set(&self, t: f64) -> Result<FinitePerimeterSet, SceneError> {
        let plateaus = self.plateau_values();
        if plateaus.iter().any(|&p| same_level(t, p)) {
            return Err(SceneError::ExceptionalLevel { t, plateaus });
        }
        match &self.form {
            Form::Pieces(ps) => {
                let mut parts = Vec::new();
                for p in ps {
                    match p.value.total_degree() {
                        0 => {
                            if p.value.constant_term() > t {
                                parts.push(p.region.clone());
                            }
                        }
                        1 => {
                            let g = p.value.gradient().eval(Vec2::ZERO);
                            let b = p.value.eval(Vec2::ZERO);
                            parts.push(FinitePerimeterSet::intersection(vec![
                                p.region.clone(),
                                FinitePerimeterSet::HalfPlane {
                                    normal: g / g.norm(),
                                    offset: (t - b) / g.norm(),
                                },
                            ]));
                        }
                        _ => {
                            return Err(SceneError::Unsupported(
                                "level sets need piecewise affine functions".into(),
                            ))
                        }
                    }
                }
                if 0.0 > t {
                    parts.push(FinitePerimeterSet::Boolean {
                        op: BoolOp::Difference,
                        children: std::iter::once(plane())
                            .chain(ps.iter().map(|p| p.region.clone()))
                            .collect(),
                    });
                }
                Ok(match parts.len() {
                    0 => empty_set(),
                    1 => parts.pop().unwrap(),
                    _ => FinitePerimeterSet::union(parts),
                })
            }
            Form::Stair(s, g) => {
                let tau = g.solve(t).ok_or_else(|| SceneError::ExceptionalLevel {
                    t,
                    plateaus: plateaus.clone(),
                })?;
                let up = g.is_increasing();
                // {F > τ} when g increases, {F < τ} otherwise
                let whole = if up { tau < 0.0 } else { tau > 1.0 };
                let none = if up { tau >= 1.0 } else { tau <= 0.0 };
                if whole {
                    return Ok(plane());
                }
                if none {
                    return Ok(empty_set());
                }
                let c = s
                    .level_coordinate(tau)
                    .ok_or_else(|| SceneError::ExceptionalLevel {
                        t,
                        plateaus: plateaus.clone(),
                    })?;
                let e = s.axis.unit();
                Ok(if up {
                    FinitePerimeterSet::HalfPlane {
                        normal: e,
                        offset: c,
                    }
                } else {
                    FinitePerimeterSet::HalfPlane {
                        normal: -e,
                        offset: -c,
                    }
                })
            }
        }
    }

    /// `Du⌊domain` split into its absolutely continuous, jump and Cantor parts.
    /// Staircases need a bounded domain, which fixes the transverse band.
    pub fn derivative_measure(
        &self,
        domain: Option<&FinitePerimeterSet>,
    ) -> Result<DerivativeMeasure, SceneError> {
        let within = |r: &FinitePerimeterSet| match domain {
            Some(d) => FinitePerimeterSet::intersection(vec![r.clone(), d.clone()]),
            None => r.clone(),
        };
        let mut dm = DerivativeMeasure::default();
        match &self.form {
            Form::Pieces(ps) => {
                for p in ps {
                    let g = p.value.gradient();
                    if !g.is_zero() {
                        dm.absolute.push(AbsPiece {
                            region: within(&p.region),
                            gradient: g,
                        });
                    }
                }
                for j in &self.jumps {
                    let pieces = match domain {
                        Some(d) => clip_piece(&j.piece, d),
                        None => vec![j.piece],
                    };
                    dm.jump.extend(pieces.into_iter().map(|piece| JumpPiece {
                        piece,
                        plus: j.plus.clone(),
                        minus: j.minus.clone(),
                    }));
                }
            }
            Form::Stair(s, g) => {
                let d = domain.ok_or_else(|| {
                    SceneError::Invalid("staircase derivatives need a bounded domain".into())
                })?;
                let b = d.bounds().ok_or_else(|| {
                    SceneError::Invalid("staircase domain must be bounded".into())
                })?;
                let k = s.axis.index();
                let band = (b.min.component(1 - k), b.max.component(1 - k));
                let n = 1u64 << s.depth;
                let mut cuts = vec![-SCENE_EXTENT];
                let mut slopes = Vec::new();
                let inner: Vec<f64> = g
                    .knots()
                    .iter()
                    .map(|k| k.0)
                    .filter(|&t| t > 0.0 && t < 1.0)
                    .collect();
                let mut prev = 0.0;
                for &tau in &inner {
                    slopes.push(g.slope(0.5 * (prev + tau)));
                    cuts.push(s.plateau_point((tau * n as f64).round() as u64));
                    prev = tau;
                }
                slopes.push(g.slope(0.5 * (prev + 1.0)));
                cuts.push(SCENE_EXTENT);
                for (i, &slope) in slopes.iter().enumerate() {
                    if slope == 0.0 {
                        continue;
                    }
                    let slab = FinitePerimeterSet::product(
                        IntervalUnion::from_unsorted(vec![(cuts[i], cuts[i + 1])]),
                        s.axis,
                    );
                    dm.cantor.push(CantorPiece {
                        part: CantorLinePart {
                            profile: s.measure(),
                            axis: s.axis,
                            band,
                            weight: ScalarExpr::constant(slope),
                            window: Some(if slopes.len() == 1 {
                                d.clone()
                            } else {
                                FinitePerimeterSet::intersection(vec![d.clone(), slab])
                            }),
                        },
                        direction: s.axis.unit(),
                    });
                }
            }
        }
        Ok(dm)
    }

    /// Smoothness pieces for quadrature (`None`: treat as continuous everywhere).
    pub fn integration_pieces(&self) -> Option<Vec<FinitePerimeterSet>> {
        self.poly_pieces()
            .map(|ps| ps.iter().map(|p| p.region.clone()).collect())
    }
}

/// `u^λ`, evaluated on curves through its one-sided traces.
pub struct RepresentativeIntegrand<'a> {
    pub u: &'a BVFunction,
    pub lambda: f64,
}

impl Integrand for RepresentativeIntegrand<'_> {
    fn pieces(&self) -> Option<Vec<FinitePerimeterSet>> {
        self.u.integration_pieces()
    }

    fn value(&self, x: Vec2) -> f64 {
        self.u.eval(x)
    }

    fn value_on_curve(&self, x: Vec2, _normal: Vec2) -> f64 {
        self.u
            .representative_value(x, self.lambda)
            .unwrap_or_else(|_| self.u.eval(x))
    }
}

impl Integrand for ScalarExpr {
    fn pieces(&self) -> Option<Vec<FinitePerimeterSet>> {
        None
    }

    fn value(&self, x: Vec2) -> f64 {
        self.eval(x)
    }
}

/// Both sides of `∫ g d|Du| = ∫ ∫_{∂*{u>t}} g dℋ¹ dt` on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `(t, weight, ∫_{∂*E_t ∩ W} g)` for fixed-node rules; empty for adaptive ones.
    pub levels: Vec<(f64, f64, f64)>,
}

/// `∫_{∂*E ∩ W} g dℋ¹`.
pub(crate) fn boundary_integral<F>(
    e: &FinitePerimeterSet,
    window: &FinitePerimeterSet,
    tol: f64,
    f: F,
) -> Result<f64, SceneError>
where
    F: Fn(Vec2, Vec2) -> f64,
{
    let b = window
        .bounds()
        .ok_or_else(|| SceneError::Invalid("coarea window must be bounded".into()))?;
    let rb = reduced_boundary(
        e,
        Some(&Probe::Box {
            min: b.min,
            max: b.max,
        }),
    )?;
    let mut total = 0.0;
    for p in &rb.pieces {
        for sub in clip_piece(p, window) {
            total += sub.integrate(tol, &f)?;
        }
    }
    Ok(total)
}

/// Levels at which the shape of `∂*{u > t}` inside the window can change: plateaus
/// and the values of `u` at corners, extreme points and mutual crossings of the
/// boundaries of its pieces, the window and the `extra` sets.
pub(crate) fn critical_levels(
    u: &BVFunction,
    window: &FinitePerimeterSet,
    extra: &[FinitePerimeterSet],
) -> Vec<f64> {
    let mut out = u.plateau_values();
    let Some(ps) = u.poly_pieces() else {
        return out;
    };
    let wb = window
        .bounds()
        .unwrap_or_else(|| crate::geometry::Rect::around(Vec2::ZERO, SCENE_EXTENT));
    for p in ps {
        if p.value.total_degree() != 1 {
            continue;
        }
        let g = p.value.gradient().eval(Vec2::ZERO);
        let dir = g / g.norm();
        let mut pts = Vec::new();
        let mut curves = Vec::new();
        for s in [&p.region, window].into_iter().chain(extra) {
            pts.extend(s.vertices_in(&wb));
            for leaf in s.leaves() {
                if let FinitePerimeterSet::Disc { center, radius } = leaf {
                    pts.push(*center + dir * *radius);
                    pts.push(*center - dir * *radius);
                }
                curves.extend(leaf.leaf_curves(&wb));
            }
        }
        for (i, c) in curves.iter().enumerate() {
            for d in &curves[i + 1..] {
                pts.extend(c.intersections(d));
            }
        }
        out.extend(pts.into_iter().map(|x| p.value.eval(x)));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| same_level(*a, *b));
    out
}

/// Coarea identity for `u` weighted by `g ≥ 0` on the open window. Staircases use
/// `2^d` midpoint levels; piecewise-affine functions integrate adaptively between
/// critical levels.
pub fn coarea_check(
    u: &BVFunction,
    g: &ScalarExpr,
    window: &FinitePerimeterSet,
    tol: f64,
) -> Result<CoareaCheck, SceneError> {
    let lhs = u
        .derivative_measure(Some(window))?
        .variation()
        .integrate(g, tol)?;
    let per = |t: f64| -> Result<f64, SceneError> {
        let e = u.level_set(t)?;
        boundary_integral(&e, window, 0.1 * tol, |x, _| g.eval(x))
    };
    let mut levels = Vec::new();
    let rhs = match u.staircase_form() {
        Some((s, map)) => {
            let n = 1u64 << s.depth;
            let mut sum = 0.0;
            for i in 0..n {
                let tau = (i as f64 + 0.5) / n as f64;
                let t = map.eval(tau);
                let w = map.slope(tau).abs() / n as f64;
                if w == 0.0 {
                    continue;
                }
                let v = per(t)?;
                levels.push((t, w, v));
                sum += w * v;
            }
            sum
        }
        None => {
            let crit = critical_levels(u, window, &[]);
            let opts = AdaptiveOptions::default().with_abs_tol(tol).clustered();
            let mut sum = 0.0;
            for w in crit.windows(2) {
                let mut failure = None;
                let v = integrate_adaptive(w[0], w[1], &opts, |t| match per(t) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                sum += v;
            }
            sum
        }
    };
    Ok(CoareaCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / (1.0 + lhs.abs()),
        levels,
    })
}
