use super::{merge_coincident, SceneError, SCENE_EXTENT};
use crate::geometry::{
    clip, interior_normal, probe_cells, reduced_boundary, CurvePiece, FinitePerimeterSet,
    GeometryError, Probe, Rect,
};
use crate::measures::{AcPart, Component, CurveDensity, CurvePart, MeasureRep, TestFunction};
use crate::{Poly2, ScalarExpr, Vec2, VecPoly};
use serde::{Deserialize, Serialize};

/// `c · Q(x) · χ_E(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpTerm {
    pub coefficient: Vec2,
    pub region: FinitePerimeterSet,
    #[serde(default = "unit_poly")]
    pub modulation: Poly2,
}

fn unit_poly() -> Poly2 {
    Poly2::constant(1.0)
}

impl JumpTerm {
    pub fn constant(coefficient: Vec2, region: FinitePerimeterSet) -> Self {
        JumpTerm {
            coefficient,
            region,
            modulation: unit_poly(),
        }
    }

    fn field(&self) -> VecPoly {
        VecPoly::from_direction(self.coefficient, &self.modulation)
    }
}

/// A curve across which the field jumps by `jump = A(left) − A(right)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub piece: CurvePiece,
    pub jump: VecPoly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreciseValue {
    Value(Vec2),
    /// One-sided values with the normal pointing into the `interior` side.
    JumpPair {
        interior: Vec2,
        exterior: Vec2,
        normal: Vec2,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSpec {
    #[serde(default)]
    smooth: VecPoly,
    #[serde(default)]
    jumps: Vec<JumpTerm>,
}

/// `A = P + Σ_k c_k Q_k χ_{E_k}` with its divergence measure and interfaces
/// computed once at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldSpec", into = "FieldSpec")]
pub struct DMField {
    smooth: VecPoly,
    jumps: Vec<JumpTerm>,
    interfaces: Vec<Interface>,
    divergence: MeasureRep,
    jump_set: Vec<CurvePiece>,
}

impl TryFrom<FieldSpec> for DMField {
    type Error = SceneError;

    fn try_from(s: FieldSpec) -> Result<Self, SceneError> {
        DMField::new(s.smooth, s.jumps)
    }
}

impl From<DMField> for FieldSpec {
    fn from(f: DMField) -> Self {
        FieldSpec {
            smooth: f.smooth,
            jumps: f.jumps,
        }
    }
}

fn extent_box() -> Probe {
    Probe::Box {
        min: Vec2::new(-SCENE_EXTENT, -SCENE_EXTENT),
        max: Vec2::new(SCENE_EXTENT, SCENE_EXTENT),
    }
}

/// Boundary pieces of a jump region inside the scene extent, interior on the left.
pub(crate) fn region_boundary(set: &FinitePerimeterSet) -> Result<Vec<CurvePiece>, GeometryError> {
    if let FinitePerimeterSet::Product1D { set1d, axis } = set {
        // parallel lines: no cutting needed
        let k = axis.index();
        let along = axis.other().unit();
        let mut out = Vec::with_capacity(2 * set1d.len());
        for &(lo, hi) in set1d.spans() {
            for (c, inward) in [(lo, 1.0), (hi, -1.0)] {
                if c.abs() >= SCENE_EXTENT {
                    continue;
                }
                let base = axis.unit() * c;
                // left normal of direction d is d.perp(); choose d so that it equals inward · e_k
                let d = if (along.perp().component(k) * inward) > 0.0 {
                    along
                } else {
                    -along
                };
                out.push(CurvePiece::Segment {
                    a: base - d * SCENE_EXTENT,
                    b: base + d * SCENE_EXTENT,
                });
            }
        }
        return Ok(out);
    }
    Ok(reduced_boundary(set, Some(&extent_box()))?.pieces)
}

impl DMField {
    pub fn new(smooth: VecPoly, jumps: Vec<JumpTerm>) -> Result<Self, SceneError> {
        let mut items = Vec::new();
        for (k, term) in jumps.iter().enumerate() {
            term.region.check_structure()?;
            if term.coefficient == Vec2::ZERO || term.modulation.is_zero() {
                continue;
            }
            for piece in region_boundary(&term.region)? {
                items.push((k, piece, term.field()));
            }
        }
        let interfaces: Vec<Interface> = merge_coincident(items)
            .into_iter()
            .filter(|(p, j)| !vanishes_on(p, |x, _| j.eval(x).norm()))
            .map(|(piece, jump)| Interface { piece, jump })
            .collect();

        let mut div = MeasureRep::zero();
        let dp = smooth.divergence();
        if !dp.is_zero() {
            div = div.add(MeasureRep::absolutely_continuous(
                ScalarExpr::Poly(dp),
                None,
            ));
        }
        for term in &jumps {
            let g = term.field().divergence();
            if !g.is_zero() {
                div.components.push(Component::Ac(AcPart {
                    density: ScalarExpr::Poly(g),
                    support: Some(term.region.clone()),
                }));
            }
        }
        let mut jump_set = Vec::new();
        for itf in &interfaces {
            if vanishes_on(&itf.piece, |x, n| itf.jump.eval(x).dot(n)) {
                continue;
            }
            jump_set.push(itf.piece);
            div.components.push(Component::Curve(CurvePart {
                pieces: vec![itf.piece],
                density: CurveDensity::flux(itf.jump.clone()),
            }));
        }
        Ok(DMField {
            smooth,
            jumps,
            interfaces,
            divergence: div,
            jump_set,
        })
    }

    pub fn smooth_field(smooth: VecPoly) -> Self {
        DMField::new(smooth, Vec::new()).expect("smooth fields need no geometry")
    }

    pub fn smooth(&self) -> &VecPoly {
        &self.smooth
    }

    pub fn jumps(&self) -> &[JumpTerm] {
        &self.jumps
    }

    /// Curves where `A` is discontinuous, with the jump across each.
    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    /// `Div A`: exact, with coincident interface pieces merged.
    pub fn divergence(&self) -> &MeasureRep {
        &self.divergence
    }

    /// `Θ_A`: interfaces carrying a nonzero normal jump.
    pub fn jump_set(&self) -> &[CurvePiece] {
        &self.jump_set
    }

    pub fn is_smooth(&self) -> bool {
        self.interfaces.is_empty()
    }

    /// Value off the interfaces.
    pub fn eval(&self, x: Vec2) -> Vec2 {
        let mut v = self.smooth.eval(x);
        for t in &self.jumps {
            if t.region.contains(x) {
                v += t.coefficient * t.modulation.eval(x);
            }
        }
        v
    }

    /// The polynomial branch of `A` in force at `x`.
    pub fn branch_at(&self, x: Vec2) -> VecPoly {
        let mut v = self.smooth.clone();
        for t in &self.jumps {
            if t.region.contains(x) {
                v = v.add(&t.field());
            }
        }
        v
    }

    /// Limits from the side `nu` points into and from the opposite side.
    pub fn one_sided(&self, x: Vec2, nu: Vec2) -> (Vec2, Vec2) {
        let eps = 1e-8 * (1.0 + x.norm());
        (self.eval(x + nu * eps), self.eval(x - nu * eps))
    }

    pub fn precise_field(&self, x: Vec2) -> Result<PreciseValue, SceneError> {
        let mut normal = None;
        for t in &self.jumps {
            match interior_normal(&t.region, x) {
                Ok(n) => {
                    normal.get_or_insert(n);
                }
                Err(GeometryError::CornerPoint { x, y }) => {
                    return Err(SceneError::CornerPoint { x, y });
                }
                Err(GeometryError::NotOnBoundary { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let Some(n) = normal else {
            return Ok(PreciseValue::Value(self.eval(x)));
        };
        let (i, e) = self.one_sided(x, n);
        if (i - e).norm() <= 1e-14 * (1.0 + i.norm()) {
            return Ok(PreciseValue::Value(i));
        }
        Ok(PreciseValue::JumpPair {
            interior: i,
            exterior: e,
            normal: n,
        })
    }

    /// Grid estimate of `sup |A|` on the window, padded by a gradient bound over
    /// half a grid step.
    pub fn sup_norm(&self, window: &Rect) -> f64 {
        const N: usize = 101;
        let grads: Vec<VecPoly> = std::iter::once(&self.smooth)
            .cloned()
            .chain(self.jumps.iter().map(|t| t.field()))
            .flat_map(|f| [f.x.gradient(), f.y.gradient()])
            .collect();
        let mut best: f64 = 0.0;
        let mut slope: f64 = 0.0;
        for i in 0..N {
            for j in 0..N {
                let p = Vec2::new(
                    window.min.x + window.width() * i as f64 / (N - 1) as f64,
                    window.min.y + window.height() * j as f64 / (N - 1) as f64,
                );
                best = best.max(self.eval(p).norm());
                for itf in &self.interfaces {
                    if itf.piece.distance(p) < 1e-3 {
                        let (a, b) = self
                            .one_sided(p, itf.piece.normal(itf.piece.param_of(p).clamp(0.0, 1.0)));
                        best = best.max(a.norm()).max(b.norm());
                    }
                }
                slope = slope.max(grads.iter().map(|g| g.eval(p).norm()).sum::<f64>());
            }
        }
        let h = window.width().max(window.height()) / (N - 1) as f64;
        best + slope * h
    }

    /// `⟨Div A, φ⟩ = −∫ A·∇φ dx`, computed from the field rather than from its
    /// divergence measure.
    pub fn distributional_divergence(
        &self,
        phi: &TestFunction,
        tol: f64,
    ) -> Result<f64, SceneError> {
        let pieces = phi.pieces();
        let n = (pieces.len() * (1 + self.jumps.len())) as f64;
        let mut total = 0.0;
        for piece in &pieces {
            if !self.smooth.is_zero() {
                let dec = crate::geometry::decompose_auto(piece, None)?;
                total -= dec.integrate(tol / n, |y| self.smooth.eval(y).dot(phi.grad(y)))?;
            }
            for t in &self.jumps {
                let region =
                    FinitePerimeterSet::intersection(vec![piece.clone(), t.region.clone()]);
                let dec = crate::geometry::decompose_auto(&region, piece.bounds().as_ref())?;
                if dec.is_empty() {
                    continue;
                }
                let c = t.coefficient;
                total -= dec.integrate(tol / n, |y| t.modulation.eval(y) * c.dot(phi.grad(y)))?;
            }
        }
        Ok(total)
    }

    /// `∫_probe A(y)·w(y − c) dy` with `c` the probe center, split exactly along
    /// the jump regions.
    pub fn probe_integral<W>(&self, probe: &Probe, tol: f64, w: W) -> Result<f64, SceneError>
    where
        W: Fn(Vec2) -> Vec2,
    {
        let n = (1 + self.jumps.len()) as f64;
        let mut total = 0.0;
        if !self.smooth.is_zero() {
            total += probe_cells(probe)?
                .integrate_local(tol / n, |y, d| self.smooth.eval(y).dot(w(d)))?;
        }
        let pb = probe.bounds();
        for t in &self.jumps {
            if let Some(b) = t.region.bounds() {
                if !b.intersects(&pb) {
                    continue;
                }
            }
            let dec = clip(&t.region, probe)?;
            if dec.is_empty() {
                continue;
            }
            let c = t.coefficient;
            total += dec.integrate_local(tol / n, |y, d| t.modulation.eval(y) * c.dot(w(d)))?;
        }
        Ok(total)
    }

    /// `A + B`.
    pub fn add(&self, other: &DMField) -> Result<DMField, SceneError> {
        let mut jumps = self.jumps.clone();
        jumps.extend(other.jumps.iter().cloned());
        DMField::new(self.smooth.add(&other.smooth), jumps)
    }

    /// `s · A`.
    pub fn scale(&self, s: f64) -> Result<DMField, SceneError> {
        DMField::new(
            self.smooth.scale(s),
            self.jumps
                .iter()
                .map(|t| JumpTerm {
                    coefficient: t.coefficient * s,
                    ..t.clone()
                })
                .collect(),
        )
    }
}

/// True when `f(x, ν)` is negligible at nine points along the piece.
pub(crate) fn vanishes_on<F: Fn(Vec2, Vec2) -> f64>(p: &CurvePiece, f: F) -> bool {
    (0..9).all(|i| {
        let t = (i as f64 + 0.5) / 9.0;
        let x = p.point(t);
        f(x, p.normal(t)).abs() <= 1e-13 * (1.0 + x.norm())
    })
}
