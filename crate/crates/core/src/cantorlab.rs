//! Nested interval-removal constructions: the sets `C_λ`, the even-generation
//! unions `E_λ`, the shifted union `F`, and estimators for their densities and
//! box dimension.

use crate::geometry::{Axis, FinitePerimeterSet, IntervalUnion};
use crate::scenes::{DMField, JumpTerm};
use crate::{Poly2, Vec2, VecPoly};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Deepest supported construction.
pub const MAX_DEPTH: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CantorError {
    #[error("depth {0} exceeds the supported maximum {MAX_DEPTH}")]
    DepthTooLarge(u32),
    #[error("removal proportion must lie in (0, 1), got {0}")]
    InvalidProportion(f64),
    #[error("radius {radius:e} is below the construction resolution {resolution:e}")]
    ResolutionExceeded { radius: f64, resolution: f64 },
    #[error("need at least {need} depths, got {got}")]
    InsufficientDepths { need: usize, got: usize },
    #[error("address longer than the construction depth")]
    AddressTooLong,
    #[error("block count {0} outside 1..=8")]
    TooManyBlocks(u32),
}

/// Removal of the middle proportion `λ` of every surviving interval, `depth` times,
/// starting from `[0, 1]`.
#[derive(Clone, Debug)]
pub struct CantorConstruction {
    lambda: f64,
    lambda_q: BigRational,
    depth: u32,
    /// `L_j = ((1 - λ)/2)^j` for `j = 0..=depth`, exact.
    lengths_q: Vec<BigRational>,
    lengths: Vec<f64>,
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl CantorConstruction {
    /// Builds from a floating-point `λ`, which is converted to the rational it
    /// represents exactly.
    pub fn build(lambda: f64, depth: u32) -> Result<Self, CantorError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(CantorError::InvalidProportion(lambda));
        }
        let q = BigRational::from_float(lambda).ok_or(CantorError::InvalidProportion(lambda))?;
        Self::build_rational(q, depth)
    }

    pub fn build_rational(lambda: BigRational, depth: u32) -> Result<Self, CantorError> {
        let lf = to_f64(&lambda);
        if !(lambda > BigRational::zero() && lambda < BigRational::one()) {
            return Err(CantorError::InvalidProportion(lf));
        }
        if depth > MAX_DEPTH {
            return Err(CantorError::DepthTooLarge(depth));
        }
        let ratio = (BigRational::one() - &lambda) / BigRational::from_integer(BigInt::from(2));
        let mut lengths_q = vec![BigRational::one()];
        for j in 0..depth as usize {
            let next = &lengths_q[j] * &ratio;
            lengths_q.push(next);
        }
        let lengths = lengths_q.iter().map(to_f64).collect();
        Ok(CantorConstruction {
            lambda: lf,
            lambda_q: lambda,
            depth,
            lengths_q,
            lengths,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_exact(&self) -> &BigRational {
        &self.lambda_q
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Length of each surviving interval after `j` generations.
    pub fn interval_length(&self, j: u32) -> &BigRational {
        &self.lengths_q[j as usize]
    }

    pub fn interval_length_f64(&self, j: u32) -> f64 {
        self.lengths[j as usize]
    }

    /// Length of each interval removed in generation `j`: `λ (1 - λ)^j / 2^j`.
    pub fn removed_length(&self, j: u32) -> BigRational {
        &self.lambda_q * &self.lengths_q[j as usize]
    }

    /// Total length surviving `j` generations: `(1 - λ)^j`.
    pub fn surviving_length(&self, j: u32) -> BigRational {
        BigRational::from_integer(BigInt::from(1u64) << j) * &self.lengths_q[j as usize]
    }

    /// Total length removed in generations `0..j`.
    pub fn removed_total(&self, j: u32) -> BigRational {
        (0..j).fold(BigRational::zero(), |acc, g| {
            acc + BigRational::from_integer(BigInt::from(1u64) << g) * self.removed_length(g)
        })
    }

    /// Left endpoints of the `2^j` surviving intervals after `j` generations.
    pub fn left_endpoints(&self, j: u32) -> Vec<f64> {
        assert!(j <= self.depth);
        let mut lefts = vec![0.0];
        for g in 0..j as usize {
            let shift = self.lengths[g + 1] + self.lambda * self.lengths[g];
            lefts = lefts.iter().flat_map(|&a| [a, a + shift]).collect();
        }
        lefts
    }

    /// Exact left endpoints, for small `j`.
    pub fn left_endpoints_exact(&self, j: u32) -> Vec<BigRational> {
        assert!(j <= self.depth);
        let mut lefts = vec![BigRational::zero()];
        for g in 0..j as usize {
            let shift = &self.lengths_q[g + 1] + &self.lambda_q * &self.lengths_q[g];
            lefts = lefts.iter().flat_map(|a| [a.clone(), a + &shift]).collect();
        }
        lefts
    }

    /// Surviving intervals after `j` generations.
    pub fn surviving(&self, j: u32) -> IntervalUnion {
        let len = self.lengths[j as usize];
        IntervalUnion::from_unsorted(
            self.left_endpoints(j)
                .into_iter()
                .map(|a| (a, a + len))
                .collect(),
        )
    }

    /// Intervals removed in generation `j < depth`.
    pub fn removed(&self, j: u32) -> Vec<(f64, f64)> {
        assert!(j < self.depth);
        let skip = self.lengths[j as usize + 1];
        let gap = self.lambda * self.lengths[j as usize];
        self.left_endpoints(j)
            .into_iter()
            .map(|a| (a + skip, a + skip + gap))
            .collect()
    }

    /// Exact intervals removed in generation `j`.
    pub fn removed_exact(&self, j: u32) -> Vec<(BigRational, BigRational)> {
        let skip = self.lengths_q[j as usize + 1].clone();
        let gap = self.removed_length(j);
        self.left_endpoints_exact(j)
            .into_iter()
            .map(|a| {
                let lo = a + &skip;
                let hi = &lo + &gap;
                (lo, hi)
            })
            .collect()
    }

    /// `E_λ`: the union of intervals removed in even generations below `depth`.
    pub fn even_union(&self) -> IntervalUnion {
        let mut all = Vec::new();
        for j in (0..self.depth).step_by(2) {
            all.extend(self.removed(j));
        }
        IntervalUnion::from_unsorted(all)
    }

    /// Point of `C_λ` with the given binary address (0 = left child): the left
    /// endpoint of the addressed surviving interval.
    pub fn point_at(&self, address: &[u8]) -> Result<f64, CantorError> {
        if address.len() > self.depth as usize {
            return Err(CantorError::AddressTooLong);
        }
        Ok(address
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0)
            .map(|(g, _)| self.lengths[g + 1] + self.lambda * self.lengths[g])
            .sum())
    }

    /// `|E_λ ∩ (x - r, x + r)| / (2r)` for each radius.
    pub fn density_window(&self, x: f64, radii: &[f64]) -> Result<DensityWindow, CantorError> {
        let e = self.even_union();
        density_window(&e, self.lengths[self.depth as usize], x, radii)
    }

    /// Least-squares box-counting slope of the depth-`depth` surviving set over the
    /// meshes `L_j` for `j` in `depths`.
    pub fn box_dimension(
        &self,
        depths: std::ops::RangeInclusive<u32>,
    ) -> Result<BoxDimension, CantorError> {
        let js: Vec<u32> = depths.filter(|j| *j <= self.depth).collect();
        if js.len() < 4 {
            return Err(CantorError::InsufficientDepths {
                need: 4,
                got: js.len(),
            });
        }
        let set = self.surviving(self.depth);
        let mut points = Vec::new();
        for &j in &js {
            let mesh = self.lengths[j as usize];
            points.push((-mesh.ln(), (count_boxes(&set, mesh) as f64).ln(), mesh));
        }
        let (slope, _) = least_squares(&points.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>());
        Ok(BoxDimension {
            estimate: slope,
            exact: 2f64.ln() / (2.0 / (1.0 - self.lambda)).ln(),
            meshes: points.iter().map(|p| p.2).collect(),
            counts: points.iter().map(|p| p.1.exp().round() as u64).collect(),
        })
    }
}

/// Number of grid cells `[kδ, (k+1)δ)` meeting the union.
pub fn count_boxes(set: &IntervalUnion, mesh: f64) -> u64 {
    let mut count = 0u64;
    let mut last: Option<i64> = None;
    for &(a, b) in set.spans() {
        let lo = (a / mesh).floor() as i64;
        let hi = ((b / mesh).ceil() as i64 - 1).max(lo);
        let start = match last {
            Some(l) if l >= lo => l + 1,
            _ => lo,
        };
        if hi >= start {
            count += (hi - start + 1) as u64;
        }
        last = Some(last.map_or(hi, |l| l.max(hi)));
    }
    count
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    pub estimate: f64,
    /// `log 2 / log(2 / (1 - λ))`
    pub exact: f64,
    pub meshes: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityWindow {
    pub radii: Vec<f64>,
    pub densities: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

/// One-dimensional density of a union of intervals in windows around `x`.
pub fn density_window(
    set: &IntervalUnion,
    resolution: f64,
    x: f64,
    radii: &[f64],
) -> Result<DensityWindow, CantorError> {
    if let Some(&r) = radii.iter().find(|r| **r < resolution) {
        return Err(CantorError::ResolutionExceeded {
            radius: r,
            resolution,
        });
    }
    let densities: Vec<f64> = radii
        .iter()
        .map(|&r| set.measure_within(x - r, x + r) / (2.0 * r))
        .collect();
    Ok(DensityWindow {
        radii: radii.to_vec(),
        min: densities.iter().copied().fold(f64::INFINITY, f64::min),
        max: densities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        densities,
    })
}

/// `F = ⋃_{m=1}^{m_max} (2m + E_{2^{-m}})`, each block built to `depth`.
pub fn shifted_union(m_max: u32, depth: u32) -> Result<IntervalUnion, CantorError> {
    if !(1..=8).contains(&m_max) {
        return Err(CantorError::TooManyBlocks(m_max));
    }
    let mut acc = IntervalUnion::default();
    for m in 1..=m_max {
        let lambda = BigRational::new(BigInt::one(), BigInt::from(1u64) << m);
        let c = CantorConstruction::build_rational(lambda, depth)?;
        acc = acc.union(&c.even_union().map_affine(2.0 * m as f64, 1.0));
    }
    Ok(acc)
}

/// Default generation depth of each block of `F`.
pub const FIELD_BLOCK_DEPTH: u32 = 12;

/// The divergence-free field `A(x₁, x₂) = (0, χ_F(x₁))`.
pub fn field_from_construction(m_max: u32) -> Result<DMField, crate::scenes::SceneError> {
    let f = shifted_union(m_max, FIELD_BLOCK_DEPTH)?;
    let region = FinitePerimeterSet::product(f, Axis::X1);
    DMField::new(
        VecPoly::zero(),
        vec![JumpTerm {
            coefficient: Vec2::E2,
            region,
            modulation: Poly2::constant(1.0),
        }],
    )
}
