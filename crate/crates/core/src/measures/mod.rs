//! Signed Radon measures built from absolutely continuous, curve-carried and
//! Cantor-line components.

mod test_fn;

pub use test_fn::{default_suite, TestFunction};

use crate::cantorlab::CantorConstruction;
use crate::geometry::{
    clip_piece, decompose_auto, overlap_with, Axis, BoolOp, CurvePiece, FinitePerimeterSet,
    GeometryError, IntervalUnion, Probe,
};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, GaussRule, QuadratureError};
use crate::{Poly2, ScalarExpr, Vec2, VecPoly};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

/// Default absolute tolerance for measure evaluations.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("window boundary x{axis} = {at} cuts a surviving Cantor interval of length {length:e}; raise the depth")]
    DepthInsufficient { axis: usize, at: f64, length: f64 },
    #[error("integration region is unbounded")]
    Unbounded,
    #[error("invalid measure: {0}")]
    Invalid(String),
}

/// A scalar function integrated against measures: smooth on each of its pieces
/// and zero off their union (`None` means smooth on the whole plane).
pub trait Integrand {
    fn pieces(&self) -> Option<Vec<FinitePerimeterSet>>;
    fn value(&self, x: Vec2) -> f64;
    /// Value used on curve-carried parts; `normal` is the orientation of the piece.
    fn value_on_curve(&self, x: Vec2, _normal: Vec2) -> f64 {
        self.value(x)
    }
}

impl Integrand for TestFunction {
    fn pieces(&self) -> Option<Vec<FinitePerimeterSet>> {
        Some(TestFunction::pieces(self))
    }

    fn value(&self, x: Vec2) -> f64 {
        self.eval(x)
    }
}

/// The constant 1.
pub struct Unit;

impl Integrand for Unit {
    fn pieces(&self) -> Option<Vec<FinitePerimeterSet>> {
        None
    }

    fn value(&self, _x: Vec2) -> f64 {
        1.0
    }
}

/// Pointwise product of two integrands.
pub struct Product<'a, F: ?Sized, G: ?Sized>(pub &'a F, pub &'a G);

impl<F: Integrand + ?Sized, G: Integrand + ?Sized> Integrand for Product<'_, F, G> {
    fn pieces(&self) -> Option<Vec<FinitePerimeterSet>> {
        match (self.0.pieces(), self.1.pieces()) {
            (None, None) => None,
            (Some(p), None) | (None, Some(p)) => Some(p),
            (Some(a), Some(b)) => Some(
                a.iter()
                    .flat_map(|p| {
                        b.iter().map(move |q| {
                            FinitePerimeterSet::intersection(vec![p.clone(), q.clone()])
                        })
                    })
                    .collect(),
            ),
        }
    }

    fn value(&self, x: Vec2) -> f64 {
        self.0.value(x) * self.1.value(x)
    }

    fn value_on_curve(&self, x: Vec2, normal: Vec2) -> f64 {
        self.0.value_on_curve(x, normal) * self.1.value_on_curve(x, normal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcPart {
    pub density: ScalarExpr,
    /// `None` is the whole plane.
    pub support: Option<FinitePerimeterSet>,
}

/// Density along a curve: `scalar(x) + normal(x) · ν(x)` where `ν` is the left
/// normal of the piece, optionally in absolute value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDensity {
    pub scalar: Poly2,
    pub normal: VecPoly,
    pub absolute: bool,
}

impl CurveDensity {
    pub fn constant(c: f64) -> Self {
        CurveDensity {
            scalar: Poly2::constant(c),
            normal: VecPoly::zero(),
            absolute: false,
        }
    }

    /// `F(x) · ν(x)`.
    pub fn flux(field: VecPoly) -> Self {
        CurveDensity {
            scalar: Poly2::zero(),
            normal: field,
            absolute: false,
        }
    }

    pub fn eval(&self, x: Vec2, nu: Vec2) -> f64 {
        let v = self.scalar.eval(x) + self.normal.eval(x).dot(nu);
        if self.absolute {
            v.abs()
        } else {
            v
        }
    }

    pub fn abs(&self) -> Self {
        CurveDensity {
            absolute: true,
            ..self.clone()
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        assert!(
            !self.absolute || s >= 0.0,
            "negative scaling of an absolute density"
        );
        CurveDensity {
            scalar: self.scalar.scale(s),
            normal: self.normal.scale(s),
            absolute: self.absolute,
        }
    }

    pub fn compose_affine(&self, center: Vec2, scale: f64) -> Self {
        CurveDensity {
            scalar: self.scalar.compose_affine(center, scale),
            normal: self.normal.compose_affine(center, scale),
            absolute: self.absolute,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero() && self.normal.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePart {
    pub pieces: Vec<CurvePiece>,
    pub density: CurveDensity,
}

/// The depth-`depth` approximation of the Cantor measure of `C_λ`, placed on
/// `origin + scale · [0, 1]`: each of the `2^depth` surviving intervals carries
/// mass `2^-depth`, spread uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorMeasure1D {
    pub lambda: f64,
    pub depth: u32,
    #[serde(default)]
    pub origin: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl CantorMeasure1D {
    pub fn new(lambda: f64, depth: u32) -> Self {
        CantorMeasure1D {
            lambda,
            depth,
            origin: 0.0,
            scale: 1.0,
        }
    }

    pub fn construction(&self) -> Result<CantorConstruction, MeasureError> {
        CantorConstruction::build(self.lambda, self.depth)
            .map_err(|e| MeasureError::Invalid(e.to_string()))
    }

    pub fn strips(&self) -> Result<IntervalUnion, MeasureError> {
        let c = self.construction()?;
        Ok(c.surviving(self.depth).map_affine(self.origin, self.scale))
    }

    pub fn strip_length(&self) -> f64 {
        ((1.0 - self.lambda) / 2.0).powi(self.depth as i32) * self.scale.abs()
    }

    pub fn strip_mass(&self) -> f64 {
        0.5f64.powi(self.depth as i32)
    }
}

/// `weight(x) · (μ_C ⊗ ℋ¹⌊band)` with `μ_C` along `axis` and the band in the
/// other coordinate, restricted to `window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorLinePart {
    pub profile: CantorMeasure1D,
    pub axis: Axis,
    pub band: (f64, f64),
    pub weight: ScalarExpr,
    pub window: Option<FinitePerimeterSet>,
}

impl CantorLinePart {
    fn region(&self) -> FinitePerimeterSet {
        let slab = FinitePerimeterSet::product(
            IntervalUnion::from_unsorted(vec![self.band]),
            self.axis.other(),
        );
        match &self.window {
            Some(w) => FinitePerimeterSet::intersection(vec![slab, w.clone()]),
            None => slab,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Ac(AcPart),
    Curve(CurvePart),
    Cantor(CantorLinePart),
}

/// Which part of a Lebesgue decomposition a component belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartTag {
    Absolute,
    Jump,
    Cantor,
}

impl Component {
    pub fn tag(&self) -> PartTag {
        match self {
            Component::Ac(_) => PartTag::Absolute,
            Component::Curve(_) => PartTag::Jump,
            Component::Cantor(_) => PartTag::Cantor,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureRep {
    pub components: Vec<Component>,
}

fn gauss3() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(3))
}

/// Coordinates of the boundary lines of `set` perpendicular to `axis`.
fn perpendicular_cuts(set: &FinitePerimeterSet, axis: Axis, range: (f64, f64)) -> Vec<f64> {
    let k = axis.index();
    let mut out = Vec::new();
    for leaf in set.leaves() {
        match leaf {
            FinitePerimeterSet::HalfPlane { normal, offset } => {
                if normal.component(1 - k).abs() < 1e-14 {
                    out.push(offset / normal.component(k));
                }
            }
            FinitePerimeterSet::Polygon { vertices } => {
                let n = vertices.len();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a.component(k) - b.component(k)).abs() < 1e-14 {
                        out.push(a.component(k));
                    }
                }
            }
            FinitePerimeterSet::Product1D { set1d, axis: a } if *a == axis => {
                for idx in set1d.indices_meeting(range.0, range.1) {
                    let (lo, hi) = set1d.spans()[idx];
                    out.push(lo);
                    out.push(hi);
                }
            }
            _ => {}
        }
    }
    out
}

impl MeasureRep {
    pub fn zero() -> Self {
        MeasureRep::default()
    }

    pub fn lebesgue(support: Option<FinitePerimeterSet>) -> Self {
        Self::absolutely_continuous(ScalarExpr::constant(1.0), support)
    }

    pub fn absolutely_continuous(density: ScalarExpr, support: Option<FinitePerimeterSet>) -> Self {
        MeasureRep {
            components: vec![Component::Ac(AcPart { density, support })],
        }
    }

    pub fn on_curves(pieces: Vec<CurvePiece>, density: CurveDensity) -> Self {
        MeasureRep {
            components: vec![Component::Curve(CurvePart { pieces, density })],
        }
    }

    pub fn cantor(part: CantorLinePart) -> Self {
        MeasureRep {
            components: vec![Component::Cantor(part)],
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(mut self, other: MeasureRep) -> Self {
        self.components.extend(other.components);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Components of one part.
    pub fn part(&self, tag: PartTag) -> MeasureRep {
        MeasureRep {
            components: self
                .components
                .iter()
                .filter(|c| c.tag() == tag)
                .cloned()
                .collect(),
        }
    }

    /// Multiplication by a constant; negative factors need signed densities.
    pub fn scale(&self, s: f64) -> Self {
        MeasureRep {
            components: self
                .components
                .iter()
                .map(|c| match c {
                    Component::Ac(a) => Component::Ac(AcPart {
                        density: a.density.scale(s),
                        support: a.support.clone(),
                    }),
                    Component::Curve(cp) => Component::Curve(CurvePart {
                        pieces: cp.pieces.clone(),
                        density: cp.density.scale(s),
                    }),
                    Component::Cantor(cl) => Component::Cantor(CantorLinePart {
                        weight: cl.weight.scale(s),
                        ..cl.clone()
                    }),
                })
                .collect(),
        }
    }

    /// `μ⌊E` for an open set `E`.
    pub fn restrict(&self, e: &FinitePerimeterSet) -> Self {
        let and = |s: &Option<FinitePerimeterSet>| match s {
            Some(s) => FinitePerimeterSet::intersection(vec![s.clone(), e.clone()]),
            None => e.clone(),
        };
        MeasureRep {
            components: self
                .components
                .iter()
                .map(|c| match c {
                    Component::Ac(a) => Component::Ac(AcPart {
                        density: a.density.clone(),
                        support: Some(and(&a.support)),
                    }),
                    Component::Curve(cp) => Component::Curve(CurvePart {
                        pieces: cp.pieces.iter().flat_map(|p| clip_piece(p, e)).collect(),
                        density: cp.density.clone(),
                    }),
                    Component::Cantor(cl) => Component::Cantor(CantorLinePart {
                        window: Some(and(&cl.window)),
                        ..cl.clone()
                    }),
                })
                .collect(),
        }
    }

    /// `|μ|`, exact when curve components are pairwise disjoint; overlapping
    /// absolutely continuous components are combined before taking absolute values.
    pub fn variation(&self) -> Self {
        let mut out = MeasureRep::zero();
        let acs: Vec<&AcPart> = self
            .components
            .iter()
            .filter_map(|c| match c {
                Component::Ac(a) => Some(a),
                _ => None,
            })
            .collect();
        out.components.extend(overlay_abs(&acs));
        for c in &self.components {
            match c {
                Component::Ac(_) => {}
                Component::Curve(cp) => out.components.push(Component::Curve(CurvePart {
                    pieces: cp.pieces.clone(),
                    density: cp.density.abs(),
                })),
                Component::Cantor(cl) => out.components.push(Component::Cantor(CantorLinePart {
                    weight: cl.weight.abs(),
                    ..cl.clone()
                })),
            }
        }
        out
    }

    /// `μ(B)` for an open set `B`.
    pub fn eval_on(&self, b: &FinitePerimeterSet, tol: f64) -> Result<f64, MeasureError> {
        for c in &self.components {
            if let Component::Cantor(cl) = c {
                check_depth(cl, b)?;
            }
        }
        self.restrict(b).integrate(&Unit, tol)
    }

    pub fn eval_on_probe(&self, probe: &Probe, tol: f64) -> Result<f64, MeasureError> {
        probe.validate()?;
        self.eval_on(&probe.to_set(), tol)
    }

    /// `|μ|(window)`.
    pub fn total_variation(
        &self,
        window: &FinitePerimeterSet,
        tol: f64,
    ) -> Result<f64, MeasureError> {
        self.variation().eval_on(window, tol)
    }

    /// Mass carried by the given curves; only curve components can charge them.
    pub fn eval_on_curves(&self, curves: &[CurvePiece], tol: f64) -> Result<f64, MeasureError> {
        let mut total = 0.0;
        for c in &self.components {
            if let Component::Curve(cp) = c {
                for p in &cp.pieces {
                    for sub in overlap_with(p, curves) {
                        total += sub.integrate(tol, |x, n| cp.density.eval(x, n))?;
                    }
                }
            }
        }
        Ok(total)
    }

    /// `μ⌊Γ` for a union of curves: the curve components cut down to their overlap
    /// with `curves`.
    pub fn restrict_to_curves(&self, curves: &[CurvePiece]) -> Self {
        let mut out = MeasureRep::zero();
        for c in &self.components {
            if let Component::Curve(cp) = c {
                let pieces: Vec<CurvePiece> = cp
                    .pieces
                    .iter()
                    .flat_map(|p| overlap_with(p, curves))
                    .collect();
                if !pieces.is_empty() {
                    out.components.push(Component::Curve(CurvePart {
                        pieces,
                        density: cp.density.clone(),
                    }));
                }
            }
        }
        out
    }

    /// `∫ φ dμ`.
    pub fn pair_test(&self, phi: &TestFunction, tol: f64) -> Result<f64, MeasureError> {
        self.integrate(phi, tol)
    }

    /// `∫ f dμ` over the plane.
    pub fn integrate<I: Integrand + ?Sized>(&self, f: &I, tol: f64) -> Result<f64, MeasureError> {
        let pieces = f.pieces();
        let n = self.components.len().max(1) as f64;
        let mut total = 0.0;
        for c in &self.components {
            total += match c {
                Component::Ac(a) => integrate_ac(a, f, pieces.as_deref(), tol / n)?,
                Component::Curve(cp) => integrate_curve(cp, f, pieces.as_deref(), tol / n)?,
                Component::Cantor(cl) => integrate_cantor(cl, f, pieces.as_deref(), tol / n)?,
            };
        }
        Ok(total)
    }

    /// `r^{-α} Φ_{x,r#} μ` restricted to the open unit ball, with `Φ_{x,r}(y) = (y - x)/r`.
    pub fn pushforward_homothety(&self, x: Vec2, r: f64, alpha: f64) -> MeasureRep {
        assert!(r > 0.0, "homothety ratio must be positive");
        let ball = FinitePerimeterSet::Disc {
            center: Vec2::ZERO,
            radius: 1.0,
        };
        let within = |s: Option<&FinitePerimeterSet>| match s {
            Some(s) => FinitePerimeterSet::intersection(vec![s.map_homothety(x, r), ball.clone()]),
            None => ball.clone(),
        };
        let comps = self
            .components
            .iter()
            .map(|c| match c {
                Component::Ac(a) => Component::Ac(AcPart {
                    density: a.density.compose_affine(x, r).scale(r.powf(2.0 - alpha)),
                    support: Some(within(a.support.as_ref())),
                }),
                Component::Curve(cp) => Component::Curve(CurvePart {
                    pieces: cp
                        .pieces
                        .iter()
                        .flat_map(|p| clip_piece(&p.map_homothety(x, r), &ball))
                        .collect(),
                    density: cp.density.compose_affine(x, r).scale(r.powf(1.0 - alpha)),
                }),
                Component::Cantor(cl) => {
                    let k = cl.axis.index();
                    let o = x.component(1 - k);
                    Component::Cantor(CantorLinePart {
                        profile: CantorMeasure1D {
                            origin: (cl.profile.origin - x.component(k)) / r,
                            scale: cl.profile.scale / r,
                            ..cl.profile.clone()
                        },
                        axis: cl.axis,
                        band: ((cl.band.0 - o) / r, (cl.band.1 - o) / r),
                        weight: cl.weight.compose_affine(x, r).scale(r.powf(1.0 - alpha)),
                        window: Some(within(cl.window.as_ref())),
                    })
                }
            })
            .collect();
        MeasureRep { components: comps }
    }
}

/// `max_φ |∫φ dμ - ∫φ dγ| / (1 + ‖φ‖∞)` over the suite.
pub fn weakstar_gap(
    mu: &MeasureRep,
    gamma: &MeasureRep,
    suite: &[TestFunction],
    tol: f64,
) -> Result<f64, MeasureError> {
    if suite.is_empty() {
        return Err(MeasureError::Invalid("empty test-function suite".into()));
    }
    let mut gap: f64 = 0.0;
    for phi in suite {
        let d = mu.pair_test(phi, tol)? - gamma.pair_test(phi, tol)?;
        gap = gap.max(d.abs() / (1.0 + phi.sup_norm()));
    }
    Ok(gap)
}

fn check_depth(cl: &CantorLinePart, b: &FinitePerimeterSet) -> Result<(), MeasureError> {
    let strips = cl.profile.strips()?;
    let (lo, hi) = match (strips.spans().first(), strips.spans().last()) {
        (Some(f), Some(l)) => (f.0, l.1),
        _ => return Ok(()),
    };
    let len = cl.profile.strip_length();
    for c in perpendicular_cuts(b, cl.axis, (lo, hi)) {
        let tol = 1e-12 * (1.0 + c.abs());
        let k = strips.spans().partition_point(|s| s.1 <= c);
        if let Some(&(a, e)) = strips.spans().get(k) {
            if c > a + tol && c < e - tol {
                return Err(MeasureError::DepthInsufficient {
                    axis: cl.axis.index() + 1,
                    at: c,
                    length: len,
                });
            }
        }
    }
    Ok(())
}

fn region_and(
    a: Option<&FinitePerimeterSet>,
    b: Option<&FinitePerimeterSet>,
) -> Option<FinitePerimeterSet> {
    match (a, b) {
        (Some(a), Some(b)) => Some(FinitePerimeterSet::intersection(vec![a.clone(), b.clone()])),
        (Some(a), None) | (None, Some(a)) => Some(a.clone()),
        (None, None) => None,
    }
}

fn integrate_ac<I: Integrand + ?Sized>(
    a: &AcPart,
    f: &I,
    pieces: Option<&[FinitePerimeterSet]>,
    tol: f64,
) -> Result<f64, MeasureError> {
    let regions: Vec<Option<FinitePerimeterSet>> = match pieces {
        Some(ps) => ps
            .iter()
            .map(|p| region_and(a.support.as_ref(), Some(p)))
            .collect(),
        None => vec![a.support.clone()],
    };
    let m = regions.len().max(1) as f64;
    let mut total = 0.0;
    for region in regions {
        let region = region.ok_or(MeasureError::Unbounded)?;
        let dec = match decompose_auto(&region, None) {
            Ok(d) => d,
            Err(GeometryError::UnboundedRegion) => return Err(MeasureError::Unbounded),
            Err(e) => return Err(e.into()),
        };
        if dec.is_empty() {
            continue;
        }
        total += dec.integrate(tol / m, |x| a.density.eval(x) * f.value(x))?;
    }
    Ok(total)
}

fn integrate_curve<I: Integrand + ?Sized>(
    cp: &CurvePart,
    f: &I,
    pieces: Option<&[FinitePerimeterSet]>,
    tol: f64,
) -> Result<f64, MeasureError> {
    let total_len: f64 = cp.pieces.iter().map(|p| p.length()).sum();
    let mut total = 0.0;
    for p in &cp.pieces {
        let len = p.length();
        if len == 0.0 {
            continue;
        }
        let mut params = Vec::new();
        if let Some(ps) = pieces {
            let near = p.bounds().expand(1e-9 * (1.0 + len));
            for s in ps {
                if let Some(b) = s.bounds() {
                    if !b.intersects(&near) {
                        continue;
                    }
                }
                for leaf in s.leaves() {
                    for c in leaf.leaf_curves(&near) {
                        params.extend(p.intersection_params(&c));
                    }
                }
            }
        }
        for sub in p.split(&params, 1e-12 / len) {
            let t = tol * sub.length() / total_len;
            total += sub.integrate(t, |x, n| cp.density.eval(x, n) * f.value_on_curve(x, n))?;
        }
    }
    Ok(total)
}

fn integrate_cantor<I: Integrand + ?Sized>(
    cl: &CantorLinePart,
    f: &I,
    pieces: Option<&[FinitePerimeterSet]>,
    tol: f64,
) -> Result<f64, MeasureError> {
    let base = cl.region();
    let regions: Vec<FinitePerimeterSet> = match pieces {
        Some(ps) => ps
            .iter()
            .map(|p| FinitePerimeterSet::intersection(vec![base.clone(), p.clone()]))
            .collect(),
        None => vec![base],
    };
    let strips = cl.profile.strips()?;
    let density = cl.profile.strip_mass() / cl.profile.strip_length();
    let k = cl.axis.index();
    let e_axis = cl.axis.unit();
    let e_other = cl.axis.other().unit();
    let rule = gauss3();
    let band_len = (cl.band.1 - cl.band.0).abs().max(1e-300);
    let inner_tol =
        tol / (band_len * density * cl.profile.strip_length() * strips.len().max(1) as f64);
    let opts = AdaptiveOptions::default().with_abs_tol(inner_tol.max(1e-15));
    let mut total = 0.0;
    for region in &regions {
        let (lo, hi) = match region.bounds() {
            Some(b) => (b.min.component(k), b.max.component(k)),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        for idx in strips.indices_meeting(lo, hi) {
            let (a, b) = strips.spans()[idx];
            let h = 0.5 * (b - a);
            let m = 0.5 * (a + b);
            let mut strip = 0.0;
            for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                let xa = m + h * node;
                let origin = e_axis * xa;
                let spans = crate::geometry::slice(region, origin, e_other, cl.band);
                let mut line = 0.0;
                for s in spans {
                    if !(s.lo.is_finite() && s.hi.is_finite()) {
                        return Err(MeasureError::Unbounded);
                    }
                    line += integrate_adaptive(s.lo, s.hi, &opts, |q| {
                        let p = origin + e_other * q;
                        cl.weight.eval(p) * f.value(p)
                    })?;
                }
                strip += w * line;
            }
            total += strip * h * density;
        }
    }
    Ok(total)
}

/// Absolute value of a sum of overlapping absolutely continuous parts, expanded
/// over the cells of their overlay.
fn overlay_abs(parts: &[&AcPart]) -> Vec<Component> {
    if parts.len() == 1 {
        return vec![Component::Ac(AcPart {
            density: parts[0].density.abs(),
            support: parts[0].support.clone(),
        })];
    }
    let mut out = Vec::new();
    let n = parts.len();
    for mask in 1u32..(1 << n) {
        let inside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let outside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        if outside.iter().any(|&i| parts[i].support.is_none()) {
            continue;
        }
        let mut region: Option<FinitePerimeterSet> = None;
        for &i in &inside {
            region = region_and(region.as_ref(), parts[i].support.as_ref());
        }
        let mut poly: Option<Poly2> = Some(Poly2::zero());
        for &i in &inside {
            poly = match (&poly, &parts[i].density) {
                (Some(acc), ScalarExpr::Poly(p)) => Some(acc.add(p)),
                _ => None,
            };
        }
        let Some(poly) = poly else {
            // non-polynomial densities are already nonnegative
            for &i in &inside {
                out.push(Component::Ac(AcPart {
                    density: parts[i].density.abs(),
                    support: parts[i].support.clone(),
                }));
            }
            return out;
        };
        let removed: Vec<FinitePerimeterSet> = outside
            .iter()
            .map(|&i| parts[i].support.clone().unwrap())
            .collect();
        let support = match (region, removed.is_empty()) {
            (r, true) => r,
            (Some(r), false) => Some(difference_many(r, removed)),
            (None, false) => {
                // the plane up to a null line
                let plane = FinitePerimeterSet::union(vec![
                    FinitePerimeterSet::HalfPlane {
                        normal: Vec2::E1,
                        offset: 0.0,
                    },
                    FinitePerimeterSet::HalfPlane {
                        normal: Vec2::E1 * -1.0,
                        offset: 0.0,
                    },
                ]);
                Some(difference_many(plane, removed))
            }
        };
        if !poly.is_zero() {
            out.push(Component::Ac(AcPart {
                density: ScalarExpr::Poly(poly).abs(),
                support,
            }));
        }
    }
    out
}

fn difference_many(a: FinitePerimeterSet, rest: Vec<FinitePerimeterSet>) -> FinitePerimeterSet {
    FinitePerimeterSet::Boolean {
        op: BoolOp::Difference,
        children: std::iter::once(a).chain(rest).collect(),
    }
}
