//! The pairing `(A, Du)` between a divergence-measure field and a BV function:
//! from its distributional definition, from its analytic decomposition and from
//! averaged-trace densities, with Gauss–Green, coarea and blow-up checks built on
//! top.

use crate::geometry::{
    clip_piece, decompose_auto, interior_normal, overlap_with, reduced_boundary, slice,
    BoundaryCurve, CurvePiece, FinitePerimeterSet, GeometryError, Probe, BOUNDARY_TOL,
};
use crate::measures::{
    weakstar_gap, AcPart, CantorLinePart, Component, CurveDensity, CurvePart, MeasureError,
    MeasureRep, PartTag, Product, TestFunction, Unit,
};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, QuadratureError};
use crate::scenes::{
    critical_levels, BVFunction, DMField, JumpTerm, RepresentativeIntegrand, SceneError,
};
use crate::traces::{
    cyl_trace, halfball_traces, node_integral, CylinderSchedule, RadiusSchedule, TraceError,
};
use crate::{Poly2, ScalarExpr, Vec2, VecPoly};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairingError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("point ({x}, {y}) is not on the support of |Du|")]
    NotOnSupport { x: f64, y: f64 },
    #[error("point ({x}, {y}) is not on the jump set of u")]
    NotOnJumpSet { x: f64, y: f64 },
    #[error(
        "the averaged trace vanishes at ({x}, {y}); blow-ups are only compared where it does not"
    )]
    ZeroTrace { x: f64, y: f64 },
    #[error("one-sided traces of u are not available at ({x}, {y})")]
    TraceUnavailable { x: f64, y: f64 },
    #[error("the jump sets of u and Div A overlap along a length of {length:e}")]
    HypothesisViolated { length: f64 },
    #[error("invalid pairing input: {0}")]
    Invalid(String),
}

impl From<MeasureError> for PairingError {
    fn from(e: MeasureError) -> Self {
        PairingError::Scene(e.into())
    }
}

impl From<GeometryError> for PairingError {
    fn from(e: GeometryError) -> Self {
        PairingError::Scene(e.into())
    }
}

impl From<QuadratureError> for PairingError {
    fn from(e: QuadratureError) -> Self {
        PairingError::Scene(e.into())
    }
}

/// How normal traces of `A` are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMethod {
    /// One-sided limits of the polynomial branches of `A`.
    Analytic,
    /// Limits of half-ball averages.
    Halfball,
    /// Double limits of cylinder averages; these see `Tr*` only.
    Cylinder,
}

/// Warnings attached to samples and ledgers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SampleFlag {
    /// The cylinder formula was used at a point of `Θ_A ∩ J_u`, where it does not
    /// represent the pairing density.
    MethodInvalidHere { x: f64, y: f64 },
}

/// Radius schedules for the numerical trace methods.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSettings {
    #[serde(default)]
    pub halfball: RadiusSchedule,
    #[serde(default)]
    pub cylinder: CylinderSchedule,
}

/// Default absolute tolerance for pairing integrals.
pub const PAIRING_TOL: f64 = 1e-10;

fn side_eps(x: Vec2) -> f64 {
    1e-8 * (1.0 + x.norm())
}

fn near(x: Vec2) -> f64 {
    10.0 * BOUNDARY_TOL * (1.0 + x.norm())
}

/// `(A₊(x)·ν, A₋(x)·ν)`, the branches of `A` on the side `ν` points into and on
/// the other side.
pub fn analytic_traces(a: &DMField, x: Vec2, nu: Vec2) -> (f64, f64) {
    let e = side_eps(x);
    (
        a.branch_at(x + nu * e).eval(x).dot(nu),
        a.branch_at(x - nu * e).eval(x).dot(nu),
    )
}

/// Sub-pieces of `piece` along which both one-sided branches of `A` are single
/// polynomials, with the branches `(A₊, A₋)` relative to the left normal.
pub fn sided_branches(a: &DMField, piece: &CurvePiece) -> Vec<(CurvePiece, VecPoly, VecPoly)> {
    let len = piece.length();
    if len == 0.0 {
        return Vec::new();
    }
    let bounds = piece.bounds().expand(1e-9 * (1.0 + len));
    let mut params = Vec::new();
    for t in a.jumps() {
        if let Some(b) = t.region.bounds() {
            if !b.intersects(&bounds) {
                continue;
            }
        }
        for leaf in t.region.leaves() {
            for c in leaf.leaf_curves(&bounds) {
                params.extend(piece.intersection_params(&c));
                if let BoundaryCurve::Segment { a: p, b: q } = c {
                    for e in [p, q] {
                        if piece.distance(e) <= near(e) {
                            params.push(piece.param_of(e));
                        }
                    }
                }
            }
        }
    }
    piece
        .split(&params, 1e-12 / len)
        .into_iter()
        .map(|sub| {
            let m = sub.midpoint();
            let n = sub.normal(0.5);
            let e = side_eps(m);
            let plus = a.branch_at(m + n * e);
            let minus = a.branch_at(m - n * e);
            (sub, plus, minus)
        })
        .collect()
}

fn weight_times(w: &ScalarExpr, q: &Poly2) -> Result<ScalarExpr, PairingError> {
    match w {
        ScalarExpr::Poly(p) => Ok(ScalarExpr::Poly(p.mul(q))),
        _ => Err(PairingError::Invalid(
            "Cantor weights must be polynomial".into(),
        )),
    }
}

/// `(A, Du)` split into its absolutely continuous, jump and Cantor parts, on
/// `domain` (required for staircases).
pub fn pairing_analytic(
    a: &DMField,
    u: &BVFunction,
    domain: Option<&FinitePerimeterSet>,
) -> Result<MeasureRep, PairingError> {
    pairing_analytic_lambda(a, u, domain, 0.5)
}

/// The λ-pairing: as [`pairing_analytic`] with the jump density
/// `((1 − λ) Tr⁺ + λ Tr⁻)(u⁺ − u⁻)` on `J_u`.
pub fn pairing_analytic_lambda(
    a: &DMField,
    u: &BVFunction,
    domain: Option<&FinitePerimeterSet>,
    lambda: f64,
) -> Result<MeasureRep, PairingError> {
    let du = u.derivative_measure(domain)?;
    let mut m = MeasureRep::zero();
    for piece in &du.absolute {
        let g = &piece.gradient;
        let base = a.smooth().dot(g);
        if !base.is_zero() {
            m.components.push(Component::Ac(AcPart {
                density: ScalarExpr::Poly(base),
                support: Some(piece.region.clone()),
            }));
        }
        for t in a.jumps() {
            let d = g.dot_const(t.coefficient).mul(&t.modulation);
            if !d.is_zero() {
                m.components.push(Component::Ac(AcPart {
                    density: ScalarExpr::Poly(d),
                    support: Some(FinitePerimeterSet::intersection(vec![
                        piece.region.clone(),
                        t.region.clone(),
                    ])),
                }));
            }
        }
    }
    for j in &du.jump {
        let jump = j.jump();
        for (sub, plus, minus) in sided_branches(a, &j.piece) {
            let w = plus
                .scale(1.0 - lambda)
                .add(&minus.scale(lambda))
                .mul_scalar(&jump);
            if !w.is_zero() {
                m.components.push(Component::Curve(CurvePart {
                    pieces: vec![sub],
                    density: CurveDensity::flux(w),
                }));
            }
        }
    }
    for c in &du.cantor {
        let e = c.direction;
        let base = a.smooth().dot_const(e);
        if !base.is_zero() {
            m.components.push(Component::Cantor(CantorLinePart {
                weight: weight_times(&c.part.weight, &base)?,
                ..c.part.clone()
            }));
        }
        // the Cantor part does not charge interfaces, so Ã is the branch on either side
        for t in a.jumps() {
            let s = t.coefficient.dot(e);
            if s == 0.0 {
                continue;
            }
            let window = match &c.part.window {
                Some(w) => FinitePerimeterSet::intersection(vec![w.clone(), t.region.clone()]),
                None => t.region.clone(),
            };
            m.components.push(Component::Cantor(CantorLinePart {
                weight: weight_times(&c.part.weight, &t.modulation.scale(s))?,
                window: Some(window),
                ..c.part.clone()
            }));
        }
    }
    Ok(m)
}

/// `−∫ u^λ φ dDiv A − ∫ u A·∇φ dx`; `λ = 1/2` gives the standard pairing.
pub fn pairing_distributional(
    a: &DMField,
    u: &BVFunction,
    phi: &TestFunction,
    lambda: Option<f64>,
    tol: f64,
) -> Result<f64, PairingError> {
    let rep = RepresentativeIntegrand {
        u,
        lambda: lambda.unwrap_or(0.5),
    };
    let first = a.divergence().integrate(&Product(&rep, phi), 0.5 * tol)?;
    let second = field_gradient_integral(a, u, phi, 0.5 * tol)?;
    Ok(-first - second)
}

/// `∫ u A·∇φ dx`.
fn field_gradient_integral(
    a: &DMField,
    u: &BVFunction,
    phi: &TestFunction,
    tol: f64,
) -> Result<f64, PairingError> {
    if let Some((s, g)) = u.staircase_form() {
        return staircase_gradient_integral(a, s, g, phi, tol);
    }
    let pieces = u.poly_pieces().unwrap_or(&[]);
    let supports = phi.pieces();
    let n = (pieces.len() * supports.len() * (1 + a.jumps().len())).max(1) as f64;
    let mut total = 0.0;
    for p in pieces {
        for s in &supports {
            let window = s.bounds();
            let mut add =
                |region: FinitePerimeterSet, f: &dyn Fn(Vec2) -> f64| -> Result<(), PairingError> {
                    let dec = decompose_auto(&region, window.as_ref())?;
                    if !dec.is_empty() {
                        total += dec.integrate(tol / n, |y| p.value.eval(y) * f(y))?;
                    }
                    Ok(())
                };
            let base = FinitePerimeterSet::intersection(vec![p.region.clone(), s.clone()]);
            if !a.smooth().is_zero() {
                add(base.clone(), &|y| a.smooth().eval(y).dot(phi.grad(y)))?;
            }
            for t in a.jumps() {
                let c = t.coefficient;
                let region = FinitePerimeterSet::intersection(vec![base.clone(), t.region.clone()]);
                add(region, &|y| t.modulation.eval(y) * c.dot(phi.grad(y)))?;
            }
        }
    }
    Ok(total)
}

/// `∫ u A·∇φ` for a staircase `u`, by slices across its axis: `u` is constant on
/// the removed intervals and affine on the surviving ones.
fn staircase_gradient_integral(
    a: &DMField,
    s: &crate::scenes::Staircase,
    g: &crate::scenes::PiecewiseAffineMap,
    phi: &TestFunction,
    tol: f64,
) -> Result<f64, PairingError> {
    let k = s.axis.index();
    let along = s.axis.unit();
    let across = s.axis.other().unit();
    let supports = phi.pieces();
    let mut total = 0.0;
    for sup in &supports {
        let b = sup
            .bounds()
            .ok_or_else(|| PairingError::Invalid("test function support must be bounded".into()))?;
        let (lo, hi) = (b.min.component(k), b.max.component(k));
        let band = (b.min.component(1 - k), b.max.component(1 - k));
        let mut regions: Vec<(FinitePerimeterSet, Option<&JumpTerm>)> = Vec::new();
        if !a.smooth().is_zero() {
            regions.push((sup.clone(), None));
        }
        for t in a.jumps() {
            regions.push((
                FinitePerimeterSet::intersection(vec![sup.clone(), t.region.clone()]),
                Some(t),
            ));
        }
        let line = |xa: f64| -> Result<f64, PairingError> {
            let origin = along * xa;
            let mut acc = 0.0;
            for (region, term) in &regions {
                for span in slice(region, origin, across, band) {
                    let (l, h) = (span.lo.max(band.0), span.hi.min(band.1));
                    if h <= l {
                        continue;
                    }
                    let opts =
                        AdaptiveOptions::default().with_abs_tol(1e-3 * tol / (hi - lo).max(1e-300));
                    acc += integrate_adaptive(l, h, &opts, |q| {
                        let y = origin + across * q;
                        let f = match term {
                            None => a.smooth().eval(y),
                            Some(t) => t.coefficient * t.modulation.eval(y),
                        };
                        f.dot(phi.grad(y))
                    })?;
                }
            }
            Ok(acc)
        };
        let mut cuts = vec![lo, hi];
        for &(p, q) in s.strips().spans() {
            cuts.push(s.origin + s.scale * p);
            cuts.push(s.origin + s.scale * q);
        }
        cuts.retain(|c| *c >= lo && *c <= hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces: Vec<(f64, f64)> = cuts
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|w| w.1 > w.0)
            .collect();
        let m = pieces.len().max(1) as f64;
        let opts = AdaptiveOptions::default().with_abs_tol(tol / m);
        let parts = pieces
            .par_iter()
            .map(|&(p, q)| {
                let mut failure = None;
                let v = integrate_adaptive(p, q, &opts, |xa| {
                    let uval = g.eval(s.eval(along * xa));
                    if uval == 0.0 {
                        return 0.0;
                    }
                    match line(xa) {
                        Ok(v) => uval * v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                })?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            })
            .collect::<Result<Vec<f64>, PairingError>>()?;
        total += parts.iter().sum::<f64>();
    }
    Ok(total)
}

/// Where a density sample sits on the support of `|Du|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    Absolute,
    Jump,
    Cantor,
}

/// One sample of `θ_λ(A, Du, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSample {
    pub x: Vec2,
    pub normal: Vec2,
    pub carrier: Carrier,
    pub method: TraceMethod,
    pub lambda: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<SampleFlag>,
}

/// The normal `ν_u(x)` of the part of `|Du|` carrying `x`.
fn carrier_at(u: &BVFunction, x: Vec2) -> Result<(Carrier, Vec2), PairingError> {
    if let Some((_, _, nu)) = u.one_sided(x) {
        return Ok((Carrier::Jump, nu));
    }
    if let Some((s, _)) = u.staircase_form() {
        if s.on_support(x) {
            // the level set through x carries the trace
            let e = u.level_set(u.eval(x))?;
            return Ok((Carrier::Cantor, interior_normal(&e, x)?));
        }
        return Err(PairingError::NotOnSupport { x: x.x, y: x.y });
    }
    let g = u.gradient(x);
    if g.norm() > 0.0 {
        return Ok((Carrier::Absolute, g / g.norm()));
    }
    Err(PairingError::NotOnSupport { x: x.x, y: x.y })
}

/// Whether `x` lies on `Θ_A`.
pub fn on_field_jump_set(a: &DMField, x: Vec2) -> bool {
    a.jump_set().iter().any(|p| p.distance(x) <= near(x))
}

/// `θ_λ(A, Du, x) = (1 − λ) Tr⁺ + λ Tr⁻` with `ν = ν_u(x)`. The cylinder method
/// returns `Cyl[A·ν](x)` whatever `λ`, flagged on `Θ_A ∩ J_u`.
pub fn theta_density(
    a: &DMField,
    u: &BVFunction,
    x: Vec2,
    method: TraceMethod,
    lambda: f64,
    settings: &TraceSettings,
) -> Result<ThetaSample, PairingError> {
    let (carrier, nu) = carrier_at(u, x)?;
    let mut sample = ThetaSample {
        x,
        normal: nu,
        carrier,
        method,
        lambda,
        value: 0.0,
        error_estimate: 0.0,
        converged: true,
        flag: None,
    };
    match method {
        TraceMethod::Analytic => {
            let (p, m) = analytic_traces(a, x, nu);
            sample.value = (1.0 - lambda) * p + lambda * m;
        }
        TraceMethod::Halfball => {
            let tr = halfball_traces(a, x, nu, &settings.halfball)?;
            sample.value = (1.0 - lambda) * tr.plus.value + lambda * tr.minus.value;
            sample.error_estimate = (1.0 - lambda).abs() * tr.plus.error_estimate
                + lambda.abs() * tr.minus.error_estimate;
        }
        TraceMethod::Cylinder => {
            let est = cyl_trace(a, x, nu, &settings.cylinder)?;
            let value = est.require("cylinder trace")?;
            sample.value = value;
            sample.error_estimate = est.error_estimate;
            if carrier == Carrier::Jump && on_field_jump_set(a, x) {
                sample.flag = Some(SampleFlag::MethodInvalidHere { x: x.x, y: x.y });
            }
        }
    }
    Ok(sample)
}

/// Which Gauss–Green formula a ledger checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussGreenVariant {
    /// Integrals over `E¹`, boundary term with `u^i` and `Tr⁺`.
    Interior,
    /// Integrals over `E¹ ∪ ∂*E`, boundary term with `u^e` and `Tr⁻`.
    Closure,
}

/// `volume + pairing + boundary = 0`, with the residual
/// `|volume + pairing + boundary| / (1 + max |term|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussGreenLedger {
    pub variant: GaussGreenVariant,
    pub trace_method: TraceMethod,
    pub volume: f64,
    pub pairing: f64,
    pub boundary: f64,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<SampleFlag>,
}

impl GaussGreenLedger {
    fn new(
        variant: GaussGreenVariant,
        trace_method: TraceMethod,
        volume: f64,
        pairing: f64,
        boundary: f64,
    ) -> Self {
        let scale = volume.abs().max(pairing.abs()).max(boundary.abs());
        GaussGreenLedger {
            variant,
            trace_method,
            volume,
            pairing,
            boundary,
            residual: (volume + pairing + boundary).abs() / (1.0 + scale),
            flags: Vec::new(),
        }
    }
}

/// The one-sided trace of `u` on the side `ν` points into.
fn u_side(u: &BVFunction, x: Vec2, nu: Vec2) -> Result<f64, PairingError> {
    if u.singular_points().iter().any(|p| p.distance(x) <= near(x)) {
        return Err(PairingError::TraceUnavailable { x: x.x, y: x.y });
    }
    Ok(match u.one_sided(x) {
        Some((plus, minus, nu_u)) => {
            if nu_u.dot(nu) > 0.0 {
                plus
            } else {
                minus
            }
        }
        None => u.eval(x),
    })
}

fn bounded_boundary(e: &FinitePerimeterSet) -> Result<Vec<CurvePiece>, PairingError> {
    let rb = reduced_boundary(e, None)?;
    if rb.truncated {
        return Err(PairingError::Invalid("the set must be bounded".into()));
    }
    Ok(rb.pieces)
}

/// A box around `e`, used as the domain when `Du` is needed on `Ē`.
fn enclosing_box(e: &FinitePerimeterSet) -> Result<FinitePerimeterSet, PairingError> {
    let b = e
        .bounds()
        .ok_or_else(|| PairingError::Invalid("the set must be bounded".into()))?
        .expand(0.25);
    Ok(Probe::Box {
        min: b.min,
        max: b.max,
    }
    .to_set())
}

/// `∫_Γ w(x) Tr(x) dℋ¹` over the oriented pieces `Γ`, where `Tr` is the trace on
/// the side of the left normal (`interior`) or the other side.
fn boundary_trace_integral<W>(
    a: &DMField,
    pieces: &[CurvePiece],
    interior: bool,
    method: TraceMethod,
    settings: &TraceSettings,
    tol: f64,
    w: W,
) -> Result<(f64, Vec<SampleFlag>), PairingError>
where
    W: Fn(Vec2, Vec2) -> Result<f64, PairingError> + Sync,
{
    let subs: Vec<(CurvePiece, VecPoly, VecPoly)> =
        pieces.iter().flat_map(|p| sided_branches(a, p)).collect();
    let mut flags = Vec::new();
    let mut total = 0.0;
    match method {
        TraceMethod::Analytic => {
            let len: f64 = subs.iter().map(|s| s.0.length()).sum::<f64>().max(1e-300);
            for (sub, plus, minus) in &subs {
                let branch = if interior { plus } else { minus };
                let mut failure = None;
                total += sub.integrate(tol * sub.length() / len, |x, n| match w(x, n) {
                    Ok(v) => v * branch.eval(x).dot(n),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
            }
        }
        TraceMethod::Halfball => {
            let curves: Vec<CurvePiece> = subs.iter().map(|s| s.0).collect();
            total = node_integral(&curves, |x, n| {
                let tr = halfball_traces(a, x, n, &settings.halfball)?;
                let t = if interior {
                    tr.plus.value
                } else {
                    tr.minus.value
                };
                w(x, n).map(|v| v * t).map_err(to_trace_error)
            })?;
        }
        TraceMethod::Cylinder => {
            let curves: Vec<CurvePiece> = subs.iter().map(|s| s.0).collect();
            for c in &curves {
                let x = c.midpoint();
                if on_field_jump_set(a, x) {
                    flags.push(SampleFlag::MethodInvalidHere { x: x.x, y: x.y });
                }
            }
            total = node_integral(&curves, |x, n| {
                let t = cyl_trace(a, x, n, &settings.cylinder)?.require("cylinder trace")?;
                w(x, n).map(|v| v * t).map_err(to_trace_error)
            })?;
        }
    }
    Ok((total, flags))
}

fn to_trace_error(e: PairingError) -> TraceError {
    match e {
        PairingError::Trace(t) => t,
        PairingError::Scene(s) => TraceError::Scene(s),
        other => TraceError::Scene(SceneError::Invalid(other.to_string())),
    }
}

/// Gauss–Green ledger on the bounded set `E`.
///
/// Interior: `∫_{E¹} u* dDiv A + (A, Du)(E¹) + ∫_{∂*E} u^i Tr⁺ dℋ¹ = 0`.
/// Closure: `∫_{E¹∪∂*E} u* dDiv A + (A, Du)(E¹ ∪ ∂*E) + ∫_{∂*E} u^e Tr⁻ dℋ¹ = 0`.
/// `E¹` is represented by the open set `E`, and `ν` is the interior normal.
pub fn gauss_green(
    a: &DMField,
    u: &BVFunction,
    e: &FinitePerimeterSet,
    variant: GaussGreenVariant,
    trace_method: TraceMethod,
    settings: &TraceSettings,
    tol: f64,
) -> Result<GaussGreenLedger, PairingError> {
    let boundary = bounded_boundary(e)?;
    let rep = RepresentativeIntegrand { u, lambda: 0.5 };
    let t3 = tol / 3.0;
    let mut volume = a.divergence().restrict(e).integrate(&rep, 0.5 * t3)?;
    let mut pairing = pairing_analytic(a, u, Some(e))?.integrate(&Unit, 0.5 * t3)?;
    if variant == GaussGreenVariant::Closure {
        volume += a
            .divergence()
            .restrict_to_curves(&boundary)
            .integrate(&rep, 0.5 * t3)?;
        let around = enclosing_box(e)?;
        pairing += pairing_analytic(a, u, Some(&around))?
            .restrict_to_curves(&boundary)
            .integrate(&Unit, 0.5 * t3)?;
    }
    let interior = variant == GaussGreenVariant::Interior;
    let (b, flags) = boundary_trace_integral(
        a,
        &boundary,
        interior,
        trace_method,
        settings,
        t3,
        |x, n| u_side(u, x, if interior { n } else { -n }),
    )?;
    let mut ledger = GaussGreenLedger::new(variant, trace_method, volume, pairing, b);
    ledger.flags = flags;
    Ok(ledger)
}

/// `Â = A χ_Ω`.
pub fn zero_extension(a: &DMField, omega: &FinitePerimeterSet) -> Result<DMField, PairingError> {
    let mut jumps = Vec::new();
    let s = a.smooth();
    for (c, q) in [(Vec2::E1, &s.x), (Vec2::E2, &s.y)] {
        if !q.is_zero() {
            jumps.push(JumpTerm {
                coefficient: c,
                region: omega.clone(),
                modulation: q.clone(),
            });
        }
    }
    for t in a.jumps() {
        jumps.push(JumpTerm {
            region: FinitePerimeterSet::intersection(vec![t.region.clone(), omega.clone()]),
            ..t.clone()
        });
    }
    Ok(DMField::new(VecPoly::zero(), jumps)?)
}

/// `∫_Ω u* dDiv A + ∫_Ω Cyl[A·ν_u] d|Du| + ∫_{∂Ω} u^i Tr⁺(Â, ∂Ω) dℋ¹ = 0` with
/// `Â` the zero extension of `A`. Needs `ℋ¹(Θ_A ∩ J_u) = 0`. Off `J_u` the
/// cylinder density is the value of `A·ν_u` at continuity points; on `J_u` it is
/// computed by `method` (cylinder averages, or `Tr*`, which it equals there). The
/// boundary trace comes from half-ball averages of `Â` unless `method` is analytic.
pub fn zero_extension_gauss_green(
    a: &DMField,
    u: &BVFunction,
    omega: &FinitePerimeterSet,
    method: TraceMethod,
    settings: &TraceSettings,
    tol: f64,
) -> Result<GaussGreenLedger, PairingError> {
    let du = u.derivative_measure(Some(omega))?;
    let mut overlap = 0.0;
    for j in &du.jump {
        overlap += overlap_with(&j.piece, a.jump_set())
            .iter()
            .map(|p| p.length())
            .sum::<f64>();
    }
    if overlap > 1e-12 {
        return Err(PairingError::HypothesisViolated { length: overlap });
    }
    let boundary = bounded_boundary(omega)?;
    let rep = RepresentativeIntegrand { u, lambda: 0.5 };
    let t3 = tol / 3.0;
    let volume = a.divergence().restrict(omega).integrate(&rep, t3)?;
    let analytic = pairing_analytic(a, u, Some(omega))?;
    let mut pairing = analytic
        .part(PartTag::Absolute)
        .integrate(&Unit, 0.5 * t3)?
        + analytic.part(PartTag::Cantor).integrate(&Unit, 0.5 * t3)?;
    let jump_pieces: Vec<(CurvePiece, Poly2)> =
        du.jump.iter().map(|j| (j.piece, j.jump())).collect();
    pairing += match method {
        TraceMethod::Analytic => analytic.part(PartTag::Jump).integrate(&Unit, 0.5 * t3)?,
        TraceMethod::Halfball | TraceMethod::Cylinder => {
            let mut acc = 0.0;
            for (piece, jump) in &jump_pieces {
                acc += node_integral(std::slice::from_ref(piece), |x, n| {
                    let t = match method {
                        TraceMethod::Cylinder => {
                            cyl_trace(a, x, n, &settings.cylinder)?.require("cylinder trace")?
                        }
                        _ => halfball_traces(a, x, n, &settings.halfball)?.star,
                    };
                    Ok(t * jump.eval(x))
                })?;
            }
            acc
        }
    };
    let ext = zero_extension(a, omega)?;
    let bmethod = match method {
        TraceMethod::Analytic => TraceMethod::Analytic,
        _ => TraceMethod::Halfball,
    };
    let (b, _) = boundary_trace_integral(&ext, &boundary, true, bmethod, settings, t3, |x, n| {
        u_side(u, x, n)
    })?;
    Ok(GaussGreenLedger::new(
        GaussGreenVariant::Interior,
        method,
        volume,
        pairing,
        b,
    ))
}

/// `θ(A, Du, x)` against `θ(A, Dχ_{E_t}, x)` at `t = ũ(x)`, both from analytic
/// traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTransfer {
    pub x: Vec2,
    pub level: f64,
    pub theta_u: f64,
    pub theta_level: f64,
}

/// Both sides of `(A, Du)(B) = ∫ (A, Dχ_{u>t})(B) dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaPairing {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `(t, weight, (A, Dχ_{E_t})(B))` for fixed-node rules.
    pub levels: Vec<(f64, f64, f64)>,
    pub transfer: Vec<DensityTransfer>,
}

/// `(A, Dχ_E)(B) = ∫_{∂*E ∩ B} Tr*(A, ∂*E) dℋ¹`.
pub fn characteristic_pairing(
    a: &DMField,
    e: &FinitePerimeterSet,
    b: &FinitePerimeterSet,
    tol: f64,
) -> Result<f64, PairingError> {
    let bb = b
        .bounds()
        .ok_or_else(|| PairingError::Invalid("coarea window must be bounded".into()))?;
    let rb = reduced_boundary(
        e,
        Some(&Probe::Box {
            min: bb.min,
            max: bb.max,
        }),
    )?;
    let mut total = 0.0;
    for p in &rb.pieces {
        for sub in clip_piece(p, b) {
            for (s, plus, minus) in sided_branches(a, &sub) {
                total += s.integrate(tol, |x, n| 0.5 * (plus.eval(x) + minus.eval(x)).dot(n))?;
            }
        }
    }
    Ok(total)
}

fn transfer_samples(
    a: &DMField,
    u: &BVFunction,
    b: &FinitePerimeterSet,
) -> Result<Vec<DensityTransfer>, PairingError> {
    let mut out = Vec::new();
    let star = |x: Vec2, nu: Vec2| {
        let (p, m) = analytic_traces(a, x, nu);
        0.5 * (p + m)
    };
    let level_theta = |x: Vec2, t: f64| -> Result<f64, PairingError> {
        let e = u.level_set(t)?;
        Ok(star(x, interior_normal(&e, x)?))
    };
    let du = u.derivative_measure(Some(b))?;
    for j in du.jump.iter().take(3) {
        let x = j.piece.midpoint();
        let (plus, minus, nu) = match u.one_sided(x) {
            Some(v) => v,
            None => continue,
        };
        let t = 0.5 * (plus + minus);
        out.push(DensityTransfer {
            x,
            level: t,
            theta_u: star(x, nu),
            theta_level: level_theta(x, t)?,
        });
    }
    let Some(bounds) = b.bounds() else {
        return Ok(out);
    };
    let grid = |f: &dyn Fn(Vec2) -> bool| -> Option<Vec2> {
        let n = 9;
        for i in 1..n {
            for k in 1..n {
                let x = Vec2::new(
                    bounds.min.x + bounds.width() * (i as f64 + 0.37) / n as f64,
                    bounds.min.y + bounds.height() * (k as f64 + 0.41) / n as f64,
                );
                if b.contains(x) && f(x) {
                    return Some(x);
                }
            }
        }
        None
    };
    let clear = |x: Vec2| a.interfaces().iter().all(|i| i.piece.distance(x) > 1e-6);
    if let Some((s, _)) = u.staircase_form() {
        if let Some(x) = grid(&|x| s.on_support(x) && clear(x)) {
            if let Ok((_, nu)) = carrier_at(u, x) {
                let t = u.eval(x);
                out.push(DensityTransfer {
                    x,
                    level: t,
                    theta_u: star(x, nu),
                    theta_level: level_theta(x, t)?,
                });
            }
        }
    } else if let Some(x) = grid(&|x| u.gradient(x).norm() > 0.0 && clear(x)) {
        let g = u.gradient(x);
        let t = u.eval(x);
        out.push(DensityTransfer {
            x,
            level: t,
            theta_u: a.eval(x).dot(g / g.norm()),
            theta_level: level_theta(x, t)?,
        });
    }
    Ok(out)
}

/// Coarea check for the pairing on the open window `B`. Staircases use `2^d`
/// midpoint levels; piecewise-affine functions integrate adaptively between the
/// levels where the level-set boundary changes shape.
pub fn coarea_pairing_check(
    a: &DMField,
    u: &BVFunction,
    b: &FinitePerimeterSet,
    tol: f64,
) -> Result<CoareaPairing, PairingError> {
    let lhs = pairing_analytic(a, u, Some(b))?.integrate(&Unit, tol)?;
    let per = |t: f64| -> Result<f64, PairingError> {
        let e = u.level_set(t)?;
        characteristic_pairing(a, &e, b, 0.1 * tol)
    };
    let mut levels = Vec::new();
    let rhs = match u.staircase_form() {
        Some((s, map)) => {
            let n = 1u64 << s.depth;
            let nodes: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let tau = (i as f64 + 0.5) / n as f64;
                    (map.eval(tau), map.slope(tau).abs() / n as f64)
                })
                .filter(|&(_, w)| w != 0.0)
                .collect();
            let vals = nodes
                .par_iter()
                .map(|&(t, _)| per(t))
                .collect::<Result<Vec<f64>, PairingError>>()?;
            let mut sum = 0.0;
            for (&(t, w), v) in nodes.iter().zip(vals) {
                levels.push((t, w, v));
                sum += w * v;
            }
            sum
        }
        None => {
            let extra: Vec<FinitePerimeterSet> =
                a.jumps().iter().map(|t| t.region.clone()).collect();
            let crit = critical_levels(u, b, &extra);
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
    Ok(CoareaPairing {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / (1.0 + lhs.abs()),
        levels,
        transfer: transfer_samples(a, u, b)?,
    })
}

/// Weak-∗ gaps of rescaled pairings against their candidate tangent measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupCheck {
    pub x: Vec2,
    pub normal: Vec2,
    /// `Tr*(A, J_u)(x)`.
    pub trace_star: f64,
    /// `Tr*(x)(u⁺ − u⁻)`, the density of the candidate along `ν^⊥`.
    pub candidate_density: f64,
    pub alpha: f64,
    /// `(r, gap of r^{-α} Φ_{x,r#}μ, gap of Φ_{x,r#}μ / |μ|(B_r(x)))`, coarsest first.
    pub rows: Vec<(f64, f64, f64)>,
}

impl BlowupCheck {
    /// Whether the `r^{-α}` gaps strictly decrease over the finest `k` radii.
    pub fn monotone_tail(&self, k: usize) -> bool {
        tail_decreasing(self.rows.iter().map(|r| r.1).collect(), k)
    }

    /// Same for the mass-normalised gaps.
    pub fn mass_monotone_tail(&self, k: usize) -> bool {
        tail_decreasing(self.rows.iter().map(|r| r.2).collect(), k)
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.1)
    }
}

fn tail_decreasing(v: Vec<f64>, k: usize) -> bool {
    v.len() >= k && v[v.len() - k..].windows(2).all(|w| w[1] < w[0])
}

/// `Tr*(x)(u⁺ − u⁻) ℋ¹` on the line through the origin with normal `ν`, inside
/// the unit ball.
fn flat_candidate(nu: Vec2, density: Poly2) -> MeasureRep {
    let t = -nu.perp();
    MeasureRep::on_curves(
        vec![CurvePiece::Segment { a: -t, b: t }],
        CurveDensity {
            scalar: density,
            normal: VecPoly::zero(),
            absolute: false,
        },
    )
}

/// Blow-ups of `(A, Du)^j` at a jump point `x`: `r^{-α} Φ_{x,r#}` and the
/// mass-normalised `Φ_{x,r#}/|μ|(B_r(x))`, each compared on `suite` with the
/// corresponding flat candidate.
pub fn tangent_blowup_check(
    a: &DMField,
    u: &BVFunction,
    x: Vec2,
    alpha: f64,
    radii: &RadiusSchedule,
    suite: &[TestFunction],
    tol: f64,
) -> Result<BlowupCheck, PairingError> {
    radii.validate()?;
    let (plus, minus, nu) = u
        .one_sided(x)
        .ok_or(PairingError::NotOnJumpSet { x: x.x, y: x.y })?;
    let (tp, tm) = analytic_traces(a, x, nu);
    let star = 0.5 * (tp + tm);
    if star.abs() <= 1e-12 {
        return Err(PairingError::ZeroTrace { x: x.x, y: x.y });
    }
    let c = star * (plus - minus);
    let window = FinitePerimeterSet::Disc {
        center: x,
        radius: 1.5 * radii.r0,
    };
    let mu = pairing_analytic(a, u, Some(&window))?.part(PartTag::Jump);
    let candidate = flat_candidate(nu, Poly2::constant(c));
    let unit = flat_candidate(nu, Poly2::constant(c.signum() * 0.5));
    let variation = mu.variation();
    let rows = radii
        .radii()
        .into_par_iter()
        .map(|r| {
            let scaled = mu.pushforward_homothety(x, r, alpha);
            let gap = weakstar_gap(&scaled, &candidate, suite, tol)?;
            let mass = variation.eval_on(
                &FinitePerimeterSet::Disc {
                    center: x,
                    radius: r,
                },
                tol * r,
            )?;
            let normed = mu.pushforward_homothety(x, r, 0.0).scale(1.0 / mass);
            let gap_mass = weakstar_gap(&normed, &unit, suite, tol)?;
            Ok((r, gap, gap_mass))
        })
        .collect::<Result<Vec<_>, PairingError>>()?;
    Ok(BlowupCheck {
        x,
        normal: nu,
        trace_star: star,
        candidate_density: c,
        alpha,
        rows,
    })
}

/// Blow-ups of `f ℋ¹⌊L` at `x ∈ L` against `f(x) ℋ¹⌊(L − x)`: `(r, gap)` rows.
pub fn lebesgue_point_check(
    f: &Poly2,
    line: &CurvePiece,
    x: Vec2,
    radii: &RadiusSchedule,
    suite: &[TestFunction],
    tol: f64,
) -> Result<Vec<(f64, f64)>, PairingError> {
    radii.validate()?;
    if line.distance(x) > near(x) {
        return Err(PairingError::Invalid(
            "the point must lie on the line".into(),
        ));
    }
    let mu = MeasureRep::on_curves(
        vec![*line],
        CurveDensity {
            scalar: f.clone(),
            normal: VecPoly::zero(),
            absolute: false,
        },
    );
    let nu = line.normal(line.param_of(x).clamp(0.0, 1.0));
    let candidate = flat_candidate(nu, Poly2::constant(f.eval(x)));
    radii
        .radii()
        .into_par_iter()
        .map(|r| {
            let scaled = mu.pushforward_homothety(x, r, 1.0);
            Ok((r, weakstar_gap(&scaled, &candidate, suite, tol)?))
        })
        .collect()
}

/// Distributional against analytic value for one test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub test: TestFunction,
    pub distributional: f64,
    pub analytic: f64,
    pub difference: f64,
}

/// Pairing computed every way for one scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub lambda: f64,
    pub analytic: MeasureRep,
    pub comparisons: Vec<MethodComparison>,
    pub samples: Vec<ThetaSample>,
}

impl PairingResult {
    pub fn max_difference(&self) -> f64 {
        self.comparisons
            .iter()
            .map(|c| c.difference)
            .fold(0.0, f64::max)
    }
}

/// Analytic pairing on `domain`, compared with the distributional definition on
/// each test function, plus density samples at `points` by each of `methods`.
#[allow(clippy::too_many_arguments)]
pub fn pairing_result(
    a: &DMField,
    u: &BVFunction,
    domain: Option<&FinitePerimeterSet>,
    lambda: f64,
    tests: &[TestFunction],
    points: &[Vec2],
    methods: &[TraceMethod],
    settings: &TraceSettings,
    tol: f64,
) -> Result<PairingResult, PairingError> {
    let analytic = pairing_analytic_lambda(a, u, domain, lambda)?;
    let comparisons = tests
        .par_iter()
        .map(|phi| {
            let d = pairing_distributional(a, u, phi, Some(lambda), tol)?;
            let m = analytic.pair_test(phi, tol)?;
            Ok(MethodComparison {
                test: phi.clone(),
                distributional: d,
                analytic: m,
                difference: (d - m).abs(),
            })
        })
        .collect::<Result<Vec<_>, PairingError>>()?;
    let mut samples = Vec::new();
    for &x in points {
        for &m in methods {
            samples.push(theta_density(a, u, x, m, lambda, settings)?);
        }
    }
    Ok(PairingResult {
        lambda,
        analytic,
        comparisons,
        samples,
    })
}
