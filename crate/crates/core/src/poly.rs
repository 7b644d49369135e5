//! Bivariate polynomials and the small expression family used for measure densities.

use crate::vec2::Vec2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Dense bivariate polynomial `sum c[i][j] x^i y^j`.
///
/// Storage is a square `(n x n)` block so that products and affine compositions stay
/// allocation-simple; trailing zero rows/columns are trimmed on construction.
#[derive(Clone, PartialEq)]
pub struct Poly2 {
    n: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .terms()
            .map(|(i, j, c)| format!("{c}*x^{i}*y^{j}"))
            .collect();
        if terms.is_empty() {
            write!(f, "Poly2(0)")
        } else {
            write!(f, "Poly2({})", terms.join(" + "))
        }
    }
}

impl Default for Poly2 {
    fn default() -> Self {
        Poly2::zero()
    }
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2 { n: 1, c: vec![0.0] }
    }

    pub fn constant(v: f64) -> Self {
        Poly2 { n: 1, c: vec![v] }
    }

    pub fn x() -> Self {
        Self::from_terms(&[(1, 0, 1.0)])
    }

    pub fn y() -> Self {
        Self::from_terms(&[(0, 1, 1.0)])
    }

    /// The coordinate function along `axis` (0 is x).
    pub fn coordinate(axis: usize) -> Self {
        if axis == 0 {
            Self::x()
        } else {
            Self::y()
        }
    }

    pub fn from_terms(terms: &[(usize, usize, f64)]) -> Self {
        let n = terms
            .iter()
            .map(|&(i, j, _)| i.max(j) + 1)
            .max()
            .unwrap_or(1);
        let mut c = vec![0.0; n * n];
        for &(i, j, v) in terms {
            c[i * n + j] += v;
        }
        Poly2 { n, c }.trimmed()
    }

    fn with_size(n: usize) -> Self {
        Poly2 {
            n,
            c: vec![0.0; n * n],
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n {
            self.c[i * self.n + j]
        } else {
            0.0
        }
    }

    fn trimmed(mut self) -> Self {
        let mut m = 1;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.c[i * self.n + j] != 0.0 {
                    m = m.max(i.max(j) + 1);
                }
            }
        }
        if m < self.n {
            let mut c = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    c[i * m + j] = self.c[i * self.n + j];
                }
            }
            self.n = m;
            self.c = c;
        }
        self
    }

    /// Nonzero terms as `(i, j, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter_map(move |j| {
                let v = self.c[i * self.n + j];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    pub fn total_degree(&self) -> usize {
        self.terms().map(|(i, j, _)| i + j).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms().all(|(i, j, _)| i == 0 && j == 0)
    }

    pub fn constant_term(&self) -> f64 {
        self.c[0]
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        // Horner in y inside Horner in x.
        let mut acc = 0.0;
        for i in (0..self.n).rev() {
            let mut row = 0.0;
            for j in (0..self.n).rev() {
                row = row * p.y + self.c[i * self.n + j];
            }
            acc = acc * p.x + row;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        Poly2 {
            n: self.n,
            c: self.c.iter().map(|v| v * s).collect(),
        }
        .trimmed()
    }

    pub fn add(&self, o: &Poly2) -> Poly2 {
        let n = self.n.max(o.n);
        let mut r = Poly2::with_size(n);
        for i in 0..n {
            for j in 0..n {
                r.c[i * n + j] = self.get(i, j) + o.get(i, j);
            }
        }
        r.trimmed()
    }

    pub fn sub(&self, o: &Poly2) -> Poly2 {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Poly2) -> Poly2 {
        let n = self.n + o.n - 1;
        let mut r = Poly2::with_size(n);
        for (i, j, a) in self.terms() {
            for (k, l, b) in o.terms() {
                r.c[(i + k) * n + (j + l)] += a * b;
            }
        }
        r.trimmed()
    }

    /// Partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Poly2 {
        let mut terms = Vec::new();
        for (i, j, v) in self.terms() {
            if axis == 0 && i > 0 {
                terms.push((i - 1, j, v * i as f64));
            } else if axis == 1 && j > 0 {
                terms.push((i, j - 1, v * j as f64));
            }
        }
        Poly2::from_terms(&terms)
    }

    pub fn gradient(&self) -> VecPoly {
        VecPoly::new(self.derivative(0), self.derivative(1))
    }

    /// The polynomial `z -> p(center + scale * z)`.
    pub fn compose_affine(&self, center: Vec2, scale: f64) -> Poly2 {
        let n = self.n;
        let mut r = Poly2::with_size(n);
        for (i, j, v) in self.terms() {
            for k in 0..=i {
                let ax = binomial(i, k) * center.x.powi((i - k) as i32) * scale.powi(k as i32);
                for l in 0..=j {
                    let ay = binomial(j, l) * center.y.powi((j - l) as i32) * scale.powi(l as i32);
                    r.c[k * n + l] += v * ax * ay;
                }
            }
        }
        r.trimmed()
    }

    /// Largest absolute coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for t in 0..k {
        r = r * (n - t) as f64 / (t + 1) as f64;
    }
    r
}

impl Serialize for Poly2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<(usize, usize, f64)> = self.terms().collect();
        terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Constant(f64),
            Terms(Vec<(usize, usize, f64)>),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Constant(v) => Poly2::constant(v),
            Repr::Terms(t) => Poly2::from_terms(&t),
        })
    }
}

/// A polynomial vector field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VecPoly {
    pub x: Poly2,
    pub y: Poly2,
}

impl VecPoly {
    pub fn new(x: Poly2, y: Poly2) -> Self {
        VecPoly { x, y }
    }

    pub fn zero() -> Self {
        VecPoly::default()
    }

    pub fn constant(v: Vec2) -> Self {
        VecPoly::new(Poly2::constant(v.x), Poly2::constant(v.y))
    }

    /// The identity field `x -> x`.
    pub fn identity() -> Self {
        VecPoly::new(Poly2::x(), Poly2::y())
    }

    /// `c * q` for a constant vector `c` and scalar polynomial `q`.
    pub fn from_direction(c: Vec2, q: &Poly2) -> Self {
        VecPoly::new(q.scale(c.x), q.scale(c.y))
    }

    pub fn eval(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.x.eval(p), self.y.eval(p))
    }

    pub fn add(&self, o: &VecPoly) -> VecPoly {
        VecPoly::new(self.x.add(&o.x), self.y.add(&o.y))
    }

    pub fn sub(&self, o: &VecPoly) -> VecPoly {
        VecPoly::new(self.x.sub(&o.x), self.y.sub(&o.y))
    }

    pub fn scale(&self, s: f64) -> VecPoly {
        VecPoly::new(self.x.scale(s), self.y.scale(s))
    }

    pub fn mul_scalar(&self, q: &Poly2) -> VecPoly {
        VecPoly::new(self.x.mul(q), self.y.mul(q))
    }

    pub fn dot(&self, o: &VecPoly) -> Poly2 {
        self.x.mul(&o.x).add(&self.y.mul(&o.y))
    }

    pub fn dot_const(&self, v: Vec2) -> Poly2 {
        self.x.scale(v.x).add(&self.y.scale(v.y))
    }

    pub fn divergence(&self) -> Poly2 {
        self.x.derivative(0).add(&self.y.derivative(1))
    }

    pub fn compose_affine(&self, center: Vec2, scale: f64) -> VecPoly {
        VecPoly::new(
            self.x.compose_affine(center, scale),
            self.y.compose_affine(center, scale),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.x.is_constant() && self.y.is_constant()
    }
}

/// Scalar density expressions closed under the operations measures need:
/// absolute value, affine pull-back and positive scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarExpr {
    Poly(Poly2),
    /// `factor * |p|`, `factor >= 0`.
    Abs {
        poly: Poly2,
        factor: f64,
    },
    /// `factor * |V|`, `factor >= 0`.
    Norm {
        field: VecPoly,
        factor: f64,
    },
}

impl From<Poly2> for ScalarExpr {
    fn from(p: Poly2) -> Self {
        ScalarExpr::Poly(p)
    }
}

impl ScalarExpr {
    pub fn constant(v: f64) -> Self {
        ScalarExpr::Poly(Poly2::constant(v))
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        match self {
            ScalarExpr::Poly(q) => q.eval(p),
            ScalarExpr::Abs { poly, factor } => factor * poly.eval(p).abs(),
            ScalarExpr::Norm { field, factor } => factor * field.eval(p).norm(),
        }
    }

    pub fn abs(&self) -> ScalarExpr {
        match self {
            ScalarExpr::Poly(q) => ScalarExpr::Abs {
                poly: q.clone(),
                factor: 1.0,
            },
            other => other.clone(),
        }
    }

    /// Multiplies by `s`; negative factors are only representable for polynomials.
    pub fn scale(&self, s: f64) -> ScalarExpr {
        match self {
            ScalarExpr::Poly(q) => ScalarExpr::Poly(q.scale(s)),
            ScalarExpr::Abs { poly, factor } if s >= 0.0 => ScalarExpr::Abs {
                poly: poly.clone(),
                factor: factor * s,
            },
            ScalarExpr::Norm { field, factor } if s >= 0.0 => ScalarExpr::Norm {
                field: field.clone(),
                factor: factor * s,
            },
            _ => panic!("negative scaling of a nonnegative density"),
        }
    }

    pub fn compose_affine(&self, center: Vec2, scale: f64) -> ScalarExpr {
        match self {
            ScalarExpr::Poly(q) => ScalarExpr::Poly(q.compose_affine(center, scale)),
            ScalarExpr::Abs { poly, factor } => ScalarExpr::Abs {
                poly: poly.compose_affine(center, scale),
                factor: *factor,
            },
            ScalarExpr::Norm { field, factor } => ScalarExpr::Norm {
                field: field.compose_affine(center, scale),
                factor: *factor,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarExpr::Poly(q) => q.is_zero(),
            ScalarExpr::Abs { poly, factor } => poly.is_zero() || *factor == 0.0,
            ScalarExpr::Norm { field, factor } => field.is_zero() || *factor == 0.0,
        }
    }

    /// True when the expression is a polynomial (smooth for quadrature purposes).
    pub fn is_polynomial(&self) -> bool {
        matches!(self, ScalarExpr::Poly(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_products() {
        let p = Poly2::from_terms(&[(0, 0, 1.0), (1, 0, 2.0), (1, 1, -3.0)]);
        let q = Poly2::from_terms(&[(0, 1, 1.0), (2, 0, 0.5)]);
        let z = Vec2::new(0.7, -1.3);
        assert!((p.mul(&q).eval(z) - p.eval(z) * q.eval(z)).abs() < 1e-12);
        assert!((p.add(&q).eval(z) - p.eval(z) - q.eval(z)).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_monomial() {
        let p = Poly2::from_terms(&[(3, 2, 1.0)]);
        let g = p.gradient();
        let z = Vec2::new(1.5, 2.0);
        assert!((g.x.eval(z) - 3.0 * 1.5f64.powi(2) * 4.0).abs() < 1e-12);
        assert!((g.y.eval(z) - 2.0 * 1.5f64.powi(3) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_composition_matches_pointwise() {
        let p = Poly2::from_terms(&[(2, 1, 1.0), (0, 3, -2.0), (1, 0, 0.25)]);
        let c = Vec2::new(0.3, -0.4);
        let q = p.compose_affine(c, 0.01);
        let z = Vec2::new(0.6, 0.2);
        assert!((q.eval(z) - p.eval(c + z * 0.01)).abs() < 1e-14);
    }

    #[test]
    fn terms_are_row_major_and_trimmed() {
        let p = Poly2::from_terms(&[(1, 0, 2.0), (0, 2, -1.0), (3, 3, 0.0)]);
        let t: Vec<_> = p.terms().collect();
        assert_eq!(t, vec![(0, 2, -1.0), (1, 0, 2.0)]);
        assert_eq!(p.total_degree(), 2);
    }
}
