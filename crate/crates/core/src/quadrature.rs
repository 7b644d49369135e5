//! Gauss–Legendre rules and dyadic adaptive integration on intervals.

use std::sync::OnceLock;
use thiserror::Error;

/// Number of nodes of the base rule.
pub const ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadratureError {
    #[error("adaptive subdivision exceeded its budget (depth {depth}) before reaching tolerance {tol:e}")]
    ToleranceUnreachable { depth: u32, tol: f64 },
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-17 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Plain rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
            * h
    }

    /// `(∫ f, ∫ |f|)` by the plain rule, from one set of evaluations.
    fn integrate_with_magnitude<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        mut f: F,
    ) -> (f64, f64) {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        let (mut v, mut mag) = (0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let y = w * f(m + h * x);
            v += y;
            mag += y.abs();
        }
        (v * h, mag * h.abs())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The shared 16-point rule.
pub fn gauss16() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(ORDER))
}

/// Adaptive integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Absolute tolerance for the whole interval.
    pub abs_tol: f64,
    /// Relative tolerance against the running estimate.
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Apply the cubic endpoint-clustering substitution `t = 3s^2 - 2s^3`, which
    /// turns square-root endpoint behaviour into smooth integrands.
    pub endpoint_clustering: bool,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_depth: 40,
            endpoint_clustering: false,
        }
    }
}

impl AdaptiveOptions {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn clustered(mut self) -> Self {
        self.endpoint_clustering = true;
        self
    }
}

/// Dyadic adaptive Gauss–Legendre: each interval is accepted once the 16-point rule on
/// it and the sum over its two halves agree within tolerance, or within rounding
/// noise.
pub fn integrate_adaptive<F>(
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
    mut f: F,
) -> Result<f64, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let rule = gauss16();
    let mut g = |s: f64| -> f64 {
        if opts.endpoint_clustering {
            // t = a + (b - a)(3s^2 - 2s^3), dt = (b - a) 6 s (1 - s) ds
            let t = a + (b - a) * s * s * (3.0 - 2.0 * s);
            f(t) * (b - a) * 6.0 * s * (1.0 - s)
        } else {
            f(a + (b - a) * s) * (b - a)
        }
    };
    let whole = rule.integrate(0.0, 1.0, &mut g);
    let mut total = 0.0;
    let mut stack = vec![(0.0, 1.0, whole, opts.abs_tol, 0u32)];
    while let Some((lo, hi, est, tol, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, ml) = rule.integrate_with_magnitude(lo, mid, &mut g);
        let (right, mr) = rule.integrate_with_magnitude(mid, hi, &mut g);
        let refined = left + right;
        let err = (refined - est).abs();
        // differences below a tenth of the relative tolerance against ∫|f| are rounding noise
        let floor = tol
            .max(opts.rel_tol * refined.abs())
            .max(0.1 * opts.rel_tol * (ml + mr));
        if err <= floor || err == 0.0 {
            total += refined;
            continue;
        }
        if depth >= opts.max_depth {
            return Err(QuadratureError::ToleranceUnreachable {
                depth,
                tol: opts.abs_tol,
            });
        }
        stack.push((lo, mid, left, 0.5 * tol, depth + 1));
        stack.push((mid, hi, right, 0.5 * tol, depth + 1));
    }
    Ok(total)
}
