//! Weak normal traces of divergence-measure fields, obtained as limits of
//! half-ball and cylindrical averages.
//!
//! Sign conventions: `Tr⁺(A, Σ)` is the trace on the side `ν` points into and
//! `Tr⁻` the trace on the other side, both measured against `ν`. The half-ball
//! averages return `+Tr⁺` on side `i` and `−Tr⁻` on side `e`.

use crate::geometry::{CurvePiece, GeometryError, Probe, Side};
use crate::quadrature::gauss16;
use crate::scenes::{DMField, SceneError};
use crate::Vec2;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Smallest radius any schedule may reach.
pub const RADIUS_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("extrapolation needs at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("{what} did not converge: value {value}, fitted order {order}, error estimate {error_estimate:e}")]
    NotConverged {
        what: String,
        value: f64,
        order: f64,
        error_estimate: f64,
    },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl From<GeometryError> for TraceError {
    fn from(e: GeometryError) -> Self {
        TraceError::Scene(e.into())
    }
}

/// Geometric radii `r₀ qⁱ`, `i < count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSchedule {
    pub r0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        RadiusSchedule {
            r0: 0.1,
            ratio: 0.5,
            count: 10,
        }
    }
}

impl RadiusSchedule {
    pub fn new(r0: f64, ratio: f64, count: usize) -> Result<Self, TraceError> {
        let s = RadiusSchedule { r0, ratio, count };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: String| Err(TraceError::InvalidSchedule(m));
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad(format!("r0 must be positive, got {}", self.r0));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return bad(format!("ratio must lie in (0, 1), got {}", self.ratio));
        }
        if self.count < 4 {
            return bad(format!("need at least 4 radii, got {}", self.count));
        }
        if self.finest() < RADIUS_FLOOR {
            return bad(format!(
                "finest radius {:e} is below {RADIUS_FLOOR:e}",
                self.finest()
            ));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.r0 * self.ratio.powi(i as i32))
            .collect()
    }

    pub fn finest(&self) -> f64 {
        self.r0 * self.ratio.powi(self.count as i32 - 1)
    }

    /// Same ratio and count, starting at `r0`.
    pub fn starting_at(&self, r0: f64) -> Self {
        RadiusSchedule { r0, ..*self }
    }
}

/// Double schedule for cylinders: an outer `ρ` schedule, and for each `ρ` the
/// inner radii `r_scale · ρ² · qⁱ` so that `r ≪ ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSchedule {
    pub rho: RadiusSchedule,
    #[serde(default = "one")]
    pub r_scale: f64,
    #[serde(default = "half")]
    pub r_ratio: f64,
    #[serde(default = "ten")]
    pub r_count: usize,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn ten() -> usize {
    10
}

impl Default for CylinderSchedule {
    fn default() -> Self {
        CylinderSchedule {
            rho: RadiusSchedule {
                r0: 0.2,
                ratio: 0.5,
                count: 6,
            },
            r_scale: 1.0,
            r_ratio: 0.5,
            r_count: 10,
        }
    }
}

impl CylinderSchedule {
    pub fn inner(&self, rho: f64) -> RadiusSchedule {
        RadiusSchedule {
            r0: self.r_scale * rho * rho,
            ratio: self.r_ratio,
            count: self.r_count,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        self.rho.validate()?;
        if !(self.r_scale > 0.0 && self.r_scale.is_finite()) {
            return Err(TraceError::InvalidSchedule(format!(
                "r_scale must be positive, got {}",
                self.r_scale
            )));
        }
        self.inner(self.rho.finest()).validate()
    }
}

/// Result of fitting `v(r) = L + C rᵖ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    #[serde(with = "order_serde")]
    pub order: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// A limit of averages together with the data it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub value: f64,
    /// `(radius, average)`, coarsest first.
    pub samples: Vec<(f64, f64)>,
    /// Fitted convergence order; infinite for constant samples.
    #[serde(with = "order_serde")]
    pub order: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

impl TraceEstimate {
    fn from_fit(samples: Vec<(f64, f64)>, fit: Extrapolation) -> Self {
        TraceEstimate {
            value: fit.limit,
            samples,
            order: fit.order,
            error_estimate: fit.error_estimate,
            converged: fit.converged,
        }
    }

    /// The value, or `NotConverged` naming `what`.
    pub fn require(&self, what: &str) -> Result<f64, TraceError> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(TraceError::NotConverged {
                what: what.to_string(),
                value: self.value,
                order: self.order,
                error_estimate: self.error_estimate,
            })
        }
    }

    /// The estimate for `−A`, or for the opposite orientation.
    pub fn negated(&self) -> Self {
        TraceEstimate {
            value: -self.value,
            samples: self.samples.iter().map(|&(r, v)| (r, -v)).collect(),
            ..self.clone()
        }
    }
}

mod order_serde {
    use super::*;

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(p) => Ok(p),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad order `{t}`"))),
        }
    }
}

const MIN_ORDER: f64 = 0.5;
const FIT_TOL: f64 = 1e-3;
const FLAT_TOL: f64 = 1e-9;
// square-root convergence with a negative next-order term fits slightly below 1/2
const ORDER_SLACK: f64 = 0.01;

/// Least-squares fit of `L + C rᵖ` to the finest half of the samples (at least
/// three), by scanning `p` and solving the linear problem for each.
pub fn extrapolate(samples: &[(f64, f64)]) -> Result<Extrapolation, TraceError> {
    if samples.len() < 4 {
        return Err(TraceError::InsufficientSamples {
            got: samples.len(),
            need: 4,
        });
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = pts.len().div_ceil(2).max(3);
    let pts = &pts[..m];
    let finest = pts[0].1;
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    let spread = hi - lo;
    if spread <= 1e-14 * (1.0 + finest.abs()) {
        return Ok(Extrapolation {
            limit: finest,
            order: f64::INFINITY,
            error_estimate: spread,
            converged: true,
        });
    }
    let rmax = pts[m - 1].0;
    let xs: Vec<f64> = pts.iter().map(|p| p.0 / rmax).collect();
    let vs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = |p: f64| linear_fit(&xs, &vs, p);

    let mut best = (MIN_ORDER, fit(MIN_ORDER));
    let mut p = 0.05;
    while p <= 6.0 + 1e-12 {
        let f = fit(p);
        if f.2 < best.1 .2 {
            best = (p, f);
        }
        p += 0.005;
    }
    // golden-section polish inside the winning grid cell
    let (mut a, mut b) = ((best.0 - 0.005).max(0.05), (best.0 + 0.005).min(6.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if fit(c).2 < fit(d).2 {
            b = d;
        } else {
            a = c;
        }
    }
    let pm = 0.5 * (a + b);
    let fm = fit(pm);
    if fm.2 < best.1 .2 {
        best = (pm, fm);
    }
    let (order, (limit, c, rms)) = best;
    let xmin = xs[0];
    let error_estimate = c.abs() * xmin.powf(order) + rms;
    let fitted = rms < FIT_TOL * (1.0 + limit.abs()) && order + ORDER_SLACK >= MIN_ORDER;
    if fitted {
        return Ok(Extrapolation {
            limit,
            order,
            error_estimate,
            converged: true,
        });
    }
    if spread <= FLAT_TOL * (1.0 + finest.abs()) {
        return Ok(Extrapolation {
            limit: finest,
            order,
            error_estimate: spread,
            converged: true,
        });
    }
    Ok(Extrapolation {
        limit,
        order,
        error_estimate,
        converged: false,
    })
}

/// `(L, C, rms)` for the basis `1, xᵖ`.
fn linear_fit(xs: &[f64], vs: &[f64], p: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let b: Vec<f64> = xs.iter().map(|x| x.powf(p)).collect();
    let bm = b.iter().sum::<f64>() / n;
    let vm = vs.iter().sum::<f64>() / n;
    let sbb: f64 = b.iter().map(|bi| (bi - bm) * (bi - bm)).sum();
    let sbv: f64 = b.iter().zip(vs).map(|(bi, vi)| (bi - bm) * (vi - vm)).sum();
    let c = if sbb > 0.0 { sbv / sbb } else { 0.0 };
    let l = vm - c * bm;
    let ss: f64 = b
        .iter()
        .zip(vs)
        .map(|(bi, vi)| (vi - l - c * bi).powi(2))
        .sum();
    (l, c, (ss / n).sqrt())
}

/// `(2/(ω₁ r²)) ∫_{B_r^side(x,ν)} A(y)·(y−x)/|y−x| dy` with `ω₁ = 2`.
pub fn halfball_average(
    a: &DMField,
    x: Vec2,
    nu: Vec2,
    r: f64,
    side: Side,
) -> Result<f64, TraceError> {
    let probe = Probe::HalfBall {
        center: x,
        radius: r,
        normal: nu,
        side,
    };
    let tol = 1e-12 * r * r;
    let v = a.probe_integral(&probe, tol, |d| {
        let n = d.norm();
        if n == 0.0 {
            Vec2::ZERO
        } else {
            d / n
        }
    })?;
    Ok(v / (r * r))
}

/// `Tr⁺`, `Tr⁻` and `Tr* = (Tr⁺ + Tr⁻)/2` from half-ball averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfBallTraces {
    pub plus: TraceEstimate,
    pub minus: TraceEstimate,
    pub star: f64,
}

impl HalfBallTraces {
    pub fn converged(&self) -> bool {
        self.plus.converged && self.minus.converged
    }

    pub fn jump(&self) -> f64 {
        self.plus.value - self.minus.value
    }

    fn require(self) -> Result<Self, TraceError> {
        self.plus.require("Tr+ half-ball limit")?;
        self.minus.require("Tr- half-ball limit")?;
        Ok(self)
    }
}

/// Both one-sided limits, with convergence reported in the flags rather than as
/// errors.
pub fn halfball_estimates(
    a: &DMField,
    x: Vec2,
    nu: Vec2,
    schedule: &RadiusSchedule,
) -> Result<HalfBallTraces, TraceError> {
    schedule.validate()?;
    let nu = nu.normalized();
    let radii = schedule.radii();
    let rows: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            Ok((
                halfball_average(a, x, nu, r, Side::Interior)?,
                -halfball_average(a, x, nu, r, Side::Exterior)?,
            ))
        })
        .collect::<Result<_, TraceError>>()?;
    let plus: Vec<_> = radii.iter().zip(&rows).map(|(&r, v)| (r, v.0)).collect();
    let minus: Vec<_> = radii.iter().zip(&rows).map(|(&r, v)| (r, v.1)).collect();
    let fp = extrapolate(&plus)?;
    let fm = extrapolate(&minus)?;
    let plus = TraceEstimate::from_fit(plus, fp);
    let minus = TraceEstimate::from_fit(minus, fm);
    let star = 0.5 * (plus.value + minus.value);
    Ok(HalfBallTraces { plus, minus, star })
}

/// As [`halfball_estimates`], failing with `NotConverged` if either side does.
pub fn halfball_traces(
    a: &DMField,
    x: Vec2,
    nu: Vec2,
    schedule: &RadiusSchedule,
) -> Result<HalfBallTraces, TraceError> {
    halfball_estimates(a, x, nu, schedule)?.require()
}

/// Relative accuracy for averages over a probe of width `r` at `x`: boundary
/// coordinates carry absolute rounding of order `ε|x|`.
fn thin_tol(x: Vec2, r: f64) -> f64 {
    1e-12f64.max(100.0 * f64::EPSILON * (1.0 + x.norm()) / r)
}

/// `(1/|C_{r,ρ}|) ∫_{C_{r,ρ}(x,ζ)} A·ζ dy`.
pub fn cyl_average(a: &DMField, x: Vec2, zeta: Vec2, r: f64, rho: f64) -> Result<f64, TraceError> {
    let zeta = zeta.normalized();
    let probe = Probe::Cylinder {
        center: x,
        normal: zeta,
        r,
        rho,
    };
    let area = 4.0 * r * rho;
    let v = a.probe_integral(&probe, area * thin_tol(x, r), |_| zeta)?;
    Ok(v / area)
}

/// Inner limits `lim_{r→0}` of the cylinder averages, one per `ρ`.
pub fn cyl_inner_limits(
    a: &DMField,
    x: Vec2,
    zeta: Vec2,
    schedule: &CylinderSchedule,
) -> Result<Vec<(f64, TraceEstimate)>, TraceError> {
    schedule.validate()?;
    schedule
        .rho
        .radii()
        .into_par_iter()
        .map(|rho| {
            let samples = schedule
                .inner(rho)
                .radii()
                .into_iter()
                .map(|r| Ok((r, cyl_average(a, x, zeta, r, rho)?)))
                .collect::<Result<Vec<_>, TraceError>>()?;
            let fit = extrapolate(&samples)?;
            Ok((rho, TraceEstimate::from_fit(samples, fit)))
        })
        .collect()
}

/// `lim_{ρ→0} lim_{r→0}` of the cylinder averages. The samples are the inner
/// limits against `ρ`; `converged` requires every stage to converge.
pub fn cyl_trace(
    a: &DMField,
    x: Vec2,
    zeta: Vec2,
    schedule: &CylinderSchedule,
) -> Result<TraceEstimate, TraceError> {
    let inner = cyl_inner_limits(a, x, zeta, schedule)?;
    let samples: Vec<(f64, f64)> = inner.iter().map(|(rho, e)| (*rho, e.value)).collect();
    let fit = extrapolate(&samples)?;
    let mut est = TraceEstimate::from_fit(samples, fit);
    est.converged &= inner.iter().all(|(_, e)| e.converged);
    Ok(est)
}

/// `(1/r) ∫ A·ν` over the one-sided cylinder `{0 < (y−x)·ν < r, |(y−x)·ν⊥| < ρ}`.
pub fn one_sided_cyl_integral(
    a: &DMField,
    x: Vec2,
    nu: Vec2,
    r: f64,
    rho: f64,
) -> Result<f64, TraceError> {
    let nu = nu.normalized();
    let probe = Probe::Cylinder {
        center: x + nu * (0.5 * r),
        normal: nu,
        r: 0.5 * r,
        rho,
    };
    let v = a.probe_integral(&probe, 2.0 * r * rho * thin_tol(x, r), |_| nu)?;
    Ok(v / r)
}

/// `lhs`, `rhs` and `|lhs − rhs| / (1 + |lhs|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        IdentityCheck {
            lhs,
            rhs,
            residual: (lhs - rhs).abs() / (1.0 + lhs.abs()),
        }
    }
}

/// Gauss nodes on a piece with their `ℋ¹` weights.
pub(crate) fn gauss_nodes(piece: &CurvePiece) -> Vec<(f64, f64)> {
    let rule = gauss16();
    let len = piece.length();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(s, w)| (0.5 * (s + 1.0), 0.5 * w * len))
        .collect()
}

/// `∫_Σ f dℋ¹` by the 16-point rule on every piece, evaluating `f(x, ν)` in
/// parallel.
pub(crate) fn node_integral<F>(sigma: &[CurvePiece], f: F) -> Result<f64, TraceError>
where
    F: Fn(Vec2, Vec2) -> Result<f64, TraceError> + Sync,
{
    let jobs: Vec<(Vec2, Vec2, f64)> = sigma
        .iter()
        .flat_map(|p| {
            gauss_nodes(p)
                .into_iter()
                .map(move |(t, w)| (p.point(t), p.normal(t), w))
        })
        .collect();
    let vals = jobs
        .par_iter()
        .map(|&(x, n, w)| Ok(w * f(x, n)?))
        .collect::<Result<Vec<f64>, TraceError>>()?;
    Ok(vals.iter().sum())
}

/// Compares `Div A(Σ)` with `∫_Σ (Tr⁺ − Tr⁻) dℋ¹`, the traces taken by half-ball
/// limits at Gauss nodes with `ν` the left normal of each piece.
pub fn trace_jump_check(
    a: &DMField,
    sigma: &[CurvePiece],
    schedule: &RadiusSchedule,
) -> Result<IdentityCheck, TraceError> {
    let lhs = a
        .divergence()
        .eval_on_curves(sigma, 1e-12)
        .map_err(SceneError::from)?;
    let rhs = node_integral(sigma, |x, n| Ok(halfball_traces(a, x, n, schedule)?.jump()))?;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// On the line through `x` with normal `ν`: `∫_{T∩B_ρ} Tr⁺ dℋ¹` from half-ball
/// limits against `lim_{r→0} (1/r) ∫_{one-sided cylinder} A·ν`.
pub fn hyperplane_average_identity(
    a: &DMField,
    x: Vec2,
    nu: Vec2,
    rho: f64,
    schedule: &RadiusSchedule,
) -> Result<IdentityCheck, TraceError> {
    let nu = nu.normalized();
    let tangent = -nu.perp();
    let seg = CurvePiece::Segment {
        a: x - tangent * rho,
        b: x + tangent * rho,
    };
    debug_assert!((seg.normal(0.5) - nu).norm() < 1e-12);
    let lhs = node_integral(&[seg], |y, n| {
        halfball_traces(a, y, n, schedule)?.plus.require("Tr+")
    })?;
    let samples = schedule
        .radii()
        .into_par_iter()
        .map(|r| Ok((r, one_sided_cyl_integral(a, x, nu, r, rho)?)))
        .collect::<Result<Vec<_>, TraceError>>()?;
    let rhs = TraceEstimate::from_fit(samples.clone(), extrapolate(&samples)?)
        .require("one-sided cylinder limit")?;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// The sub-piece of `piece` inside `B_ρ(piece.point(t))`, found by bisection
/// from `t` in each direction.
pub fn piece_in_ball(piece: &CurvePiece, t: f64, rho: f64) -> CurvePiece {
    let x = piece.point(t);
    let reach = |end: f64| {
        if piece.point(end).distance(x) <= rho {
            return end;
        }
        let (mut inside, mut outside) = (t, end);
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if piece.point(mid).distance(x) <= rho {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    piece.sub(reach(0.0), reach(1.0))
}

/// Discrepancy between the mean of `Tr(A, Σ)` over `Σ ∩ B_ρ(x)` and the mean of
/// `Tr(A, T_xΣ)` over the tangent chord, for each `ρ` of `rhos`. `side` picks
/// `Tr⁺` (interior) or `Tr⁻` (exterior); traces come from half-ball limits.
pub fn tangent_gap_sequence(
    a: &DMField,
    piece: &CurvePiece,
    t: f64,
    side: Side,
    rhos: &RadiusSchedule,
    schedule: &RadiusSchedule,
) -> Result<Vec<(f64, f64)>, TraceError> {
    rhos.validate()?;
    let x = piece.point(t);
    let tangent = piece.tangent(t);
    let trace = |y: Vec2, n: Vec2| -> Result<f64, TraceError> {
        let tr = halfball_traces(a, y, n, schedule)?;
        Ok(match side {
            Side::Interior => tr.plus.value,
            Side::Exterior => tr.minus.value,
        })
    };
    rhos.radii()
        .into_iter()
        .map(|rho| {
            let chord = CurvePiece::Segment {
                a: x - tangent * rho,
                b: x + tangent * rho,
            };
            let on_line = node_integral(&[chord], trace)? / (2.0 * rho);
            let arc = piece_in_ball(piece, t, rho);
            let on_curve = node_integral(&[arc], trace)? / arc.length();
            Ok((rho, (on_line - on_curve).abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_samples_extrapolate_to_intercept() {
        let s: Vec<_> = RadiusSchedule::default()
            .radii()
            .iter()
            .map(|&r| (r, 3.0 + r))
            .collect();
        let e = extrapolate(&s).unwrap();
        assert!((e.limit - 3.0).abs() < 1e-10);
        assert!((e.order - 1.0).abs() < 1e-4);
        assert!(e.converged);
    }

    #[test]
    fn constant_samples_report_infinite_order() {
        let s: Vec<_> = RadiusSchedule::default()
            .radii()
            .iter()
            .map(|&r| (r, -2.5))
            .collect();
        let e = extrapolate(&s).unwrap();
        assert_eq!(e.limit, -2.5);
        assert!(e.order.is_infinite() && e.converged);
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"inf\""));
        let back: Extrapolation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn square_root_decay_has_order_one_half() {
        let s: Vec<_> = RadiusSchedule::default()
            .radii()
            .iter()
            .map(|&r| (r, r.sqrt() / 0.3))
            .collect();
        let e = extrapolate(&s).unwrap();
        assert!(e.limit.abs() < 1e-9, "{}", e.limit);
        assert!((e.order - 0.5).abs() < 1e-4);
        assert!(e.converged);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            extrapolate(&[(1.0, 1.0), (0.5, 1.0), (0.25, 1.0)]),
            Err(TraceError::InsufficientSamples { got: 3, need: 4 })
        );
    }

    #[test]
    fn slow_decay_is_flagged() {
        let s: Vec<_> = RadiusSchedule::default()
            .radii()
            .iter()
            .map(|&r| (r, 1.0 / (1.0 - r.ln())))
            .collect();
        assert!(!extrapolate(&s).unwrap().converged);
    }
}
