use crate::geometry::{FinitePerimeterSet, Rect};
use crate::{Poly2, Vec2};
use serde::{Deserialize, Serialize};

/// Compactly supported Lipschitz test functions with closed-form gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestFunction {
    /// `poly(x) · S(|x - center|)` with `S = 1` below `inner`, `S = 0` beyond
    /// `outer` and a quintic smoothstep in between (C² cutoff).
    PolynomialBump {
        poly: Poly2,
        center: Vec2,
        inner: f64,
        outer: f64,
    },
    /// `Π_i (1 - ((x_i - c_i)/radius)²)^order` on the box of half-side `radius`;
    /// C^{order-1} across the box boundary.
    TensorMollifier {
        center: Vec2,
        radius: f64,
        order: u32,
    },
}

fn smoothstep_down(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (1.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0)
    } else {
        let v = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let dv = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        (1.0 - v, -dv)
    }
}

impl TestFunction {
    pub fn cutoff(center: Vec2, inner: f64, outer: f64) -> Self {
        TestFunction::PolynomialBump {
            poly: Poly2::constant(1.0),
            center,
            inner,
            outer,
        }
    }

    pub fn mollifier(center: Vec2, radius: f64, order: u32) -> Self {
        TestFunction::TensorMollifier {
            center,
            radius,
            order,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            TestFunction::PolynomialBump { inner, outer, .. } => {
                if !(*inner >= 0.0 && outer > inner && outer.is_finite()) {
                    return Err(format!(
                        "bump radii must satisfy 0 <= inner < outer, got {inner}, {outer}"
                    ));
                }
            }
            TestFunction::TensorMollifier { radius, order, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) || *order < 2 {
                    return Err("mollifier needs radius > 0 and order >= 2".into());
                }
            }
        }
        Ok(())
    }

    /// Regions on which the function is smooth; it vanishes off their union.
    pub fn pieces(&self) -> Vec<FinitePerimeterSet> {
        match *self {
            TestFunction::PolynomialBump {
                center,
                inner,
                outer,
                ..
            } => {
                let out = FinitePerimeterSet::Disc {
                    center,
                    radius: outer,
                };
                if inner > 0.0 {
                    let inn = FinitePerimeterSet::Disc {
                        center,
                        radius: inner,
                    };
                    vec![inn.clone(), FinitePerimeterSet::difference(out, inn)]
                } else {
                    vec![out]
                }
            }
            TestFunction::TensorMollifier { center, radius, .. } => {
                let h = Vec2::new(radius, radius);
                vec![FinitePerimeterSet::Polygon {
                    vertices: Rect::new(center - h, center + h).corners().to_vec(),
                }]
            }
        }
    }

    pub fn support(&self) -> Rect {
        match *self {
            TestFunction::PolynomialBump { center, outer, .. } => Rect::around(center, outer),
            TestFunction::TensorMollifier { center, radius, .. } => Rect::around(center, radius),
        }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        self.value_grad(x).0
    }

    pub fn grad(&self, x: Vec2) -> Vec2 {
        self.value_grad(x).1
    }

    pub fn value_grad(&self, x: Vec2) -> (f64, Vec2) {
        match self {
            TestFunction::PolynomialBump {
                poly,
                center,
                inner,
                outer,
            } => {
                let d = x - *center;
                let rho = d.norm();
                if rho >= *outer {
                    return (0.0, Vec2::ZERO);
                }
                let p = poly.eval(x);
                let gp = Vec2::new(poly.derivative(0).eval(x), poly.derivative(1).eval(x));
                if rho <= *inner {
                    return (p, gp);
                }
                let w = outer - inner;
                let (s, ds) = smoothstep_down((rho - inner) / w);
                let radial = d / rho;
                (p * s, gp * s + radial * (p * ds / w))
            }
            TestFunction::TensorMollifier {
                center,
                radius,
                order,
            } => {
                let s = (x - *center) / *radius;
                if s.x.abs() >= 1.0 || s.y.abs() >= 1.0 {
                    return (0.0, Vec2::ZERO);
                }
                let k = *order as i32;
                let (bx, by) = (1.0 - s.x * s.x, 1.0 - s.y * s.y);
                let (fx, fy) = (bx.powi(k), by.powi(k));
                let dfx = -2.0 * f64::from(*order) * s.x * bx.powi(k - 1) / radius;
                let dfy = -2.0 * f64::from(*order) * s.y * by.powi(k - 1) / radius;
                (fx * fy, Vec2::new(dfx * fy, fx * dfy))
            }
        }
    }

    /// `sup |φ|`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            TestFunction::TensorMollifier { .. } => 1.0,
            TestFunction::PolynomialBump { poly, .. } if poly.is_constant() => {
                poly.constant_term().abs()
            }
            _ => self.sample_max(|x| self.eval(x).abs()),
        }
    }

    /// `sup |∇φ|`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            TestFunction::TensorMollifier { radius, order, .. } => {
                // max over s of 2k s (1 - s²)^(k-1), attained at s² = 1/(2k-1)
                let k = f64::from(order);
                let s2 = 1.0 / (2.0 * k - 1.0);
                let m = 2.0 * k * s2.sqrt() * (1.0 - s2).powf(k - 1.0);
                std::f64::consts::SQRT_2 * m / radius
            }
            _ => self.sample_max(|x| self.grad(x).norm()),
        }
    }

    fn sample_max<F: Fn(Vec2) -> f64>(&self, f: F) -> f64 {
        let r = self.support();
        let n = 200;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = Vec2::new(
                    r.min.x + r.width() * i as f64 / n as f64,
                    r.min.y + r.height() * j as f64 / n as f64,
                );
                m = m.max(f(x));
            }
        }
        m
    }
}

/// Eight tensor mollifiers at fixed centers in the unit ball, plus a radial cutoff
/// equal to 1 on `B_{1/2}` and vanishing beyond radius 0.9.
pub fn default_suite() -> Vec<TestFunction> {
    let centers = [
        (0.0, 0.0),
        (0.4, 0.1),
        (-0.4, -0.1),
        (0.2, -0.3),
        (-0.2, 0.3),
        (0.6, 0.0),
        (-0.6, 0.0),
        (0.0, 0.55),
    ];
    let mut suite: Vec<TestFunction> = centers
        .iter()
        .map(|&(x, y)| TestFunction::mollifier(Vec2::new(x, y), 0.3, 3))
        .collect();
    suite.push(TestFunction::cutoff(Vec2::ZERO, 0.5, 0.9));
    suite
}
