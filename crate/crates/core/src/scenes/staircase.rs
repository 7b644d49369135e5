use super::SceneError;
use crate::cantorlab::CantorConstruction;
use crate::geometry::{Axis, IntervalUnion};
use crate::measures::CantorMeasure1D;
use crate::Vec2;

/// The depth-`d` Cantor staircase `F_d` of `C_λ`, extruded along the other axis:
/// `x ↦ F_d((x_axis − origin)/scale)`. Piecewise affine, rising by `2^-d` across
/// each surviving interval and flat on the removed ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Staircase {
    pub lambda: f64,
    pub depth: u32,
    pub axis: Axis,
    pub origin: f64,
    pub scale: f64,
    strips: IntervalUnion,
    strip_len: f64,
}

impl Staircase {
    pub fn new(
        lambda: f64,
        depth: u32,
        axis: Axis,
        origin: f64,
        scale: f64,
    ) -> Result<Self, SceneError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(SceneError::Invalid(format!(
                "staircase scale must be positive, got {scale}"
            )));
        }
        let c = CantorConstruction::build(lambda, depth)?;
        Ok(Staircase {
            lambda,
            depth,
            axis,
            origin,
            scale,
            strips: c.surviving(depth),
            strip_len: c.interval_length_f64(depth),
        })
    }

    fn steps(&self) -> f64 {
        (1u64 << self.depth) as f64
    }

    fn local(&self, x: Vec2) -> f64 {
        (x.component(self.axis.index()) - self.origin) / self.scale
    }

    fn global(&self, y: f64) -> f64 {
        self.origin + self.scale * y
    }

    /// `F_d(y)` on the unit coordinate.
    pub fn profile(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let spans = self.strips.spans();
        let i = spans.partition_point(|s| s.1 <= y);
        if i >= spans.len() {
            return 1.0;
        }
        let (a, _) = spans[i];
        if y <= a {
            return i as f64 / self.steps();
        }
        (i as f64 + (y - a) / self.strip_len) / self.steps()
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        self.profile(self.local(x))
    }

    /// The largest `y` with `F_d(y) = τ`, for `τ` off the plateau values.
    pub fn inverse(&self, tau: f64) -> Option<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return None;
        }
        let s = tau * self.steps();
        let i = s.floor();
        if s == i {
            return None;
        }
        let (a, _) = self.strips.spans()[i as usize];
        Some(a + (s - i) * self.strip_len)
    }

    /// Values taken on intervals: `k 2^-d` for `k = 0..=2^d`.
    pub fn plateau_values(&self) -> Vec<f64> {
        let n = 1u64 << self.depth;
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    pub fn is_plateau(&self, tau: f64) -> bool {
        tau <= 0.0 || tau >= 1.0 || (tau * self.steps()).fract() == 0.0
    }

    /// Coordinate (along the axis) inside the flat piece at level `k 2^-d`.
    pub fn plateau_point(&self, k: u64) -> f64 {
        let spans = self.strips.spans();
        let y = if k == 0 {
            -0.5
        } else if k as usize >= spans.len() {
            1.5
        } else {
            0.5 * (spans[k as usize - 1].1 + spans[k as usize].0)
        };
        self.global(y)
    }

    /// Coordinate of the level-`τ` line.
    pub fn level_coordinate(&self, tau: f64) -> Option<f64> {
        self.inverse(tau).map(|y| self.global(y))
    }

    /// Surviving intervals in the unit coordinate.
    pub fn strips(&self) -> &IntervalUnion {
        &self.strips
    }

    pub fn measure(&self) -> CantorMeasure1D {
        CantorMeasure1D {
            lambda: self.lambda,
            depth: self.depth,
            origin: self.origin,
            scale: self.scale,
        }
    }

    /// Whether `x` lies in a surviving strip (the support of the derivative).
    pub fn on_support(&self, x: Vec2) -> bool {
        self.strips.contains(self.local(x))
    }
}
