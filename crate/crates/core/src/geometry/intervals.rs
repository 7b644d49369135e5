use serde::{Deserialize, Serialize};

/// A finite union of pairwise disjoint open intervals on the line, sorted by left endpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalUnion {
    spans: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for IntervalUnion {
    type Error = String;

    fn try_from(spans: Vec<(f64, f64)>) -> Result<Self, String> {
        IntervalUnion::new(spans)
    }
}

impl From<IntervalUnion> for Vec<(f64, f64)> {
    fn from(u: IntervalUnion) -> Self {
        u.spans
    }
}

impl IntervalUnion {
    /// Validates that intervals are nonempty, sorted and pairwise disjoint.
    pub fn new(spans: Vec<(f64, f64)>) -> Result<Self, String> {
        for (k, &(a, b)) in spans.iter().enumerate() {
            if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
                return Err(format!("interval {k} = ({a}, {b}) is empty or not finite"));
            }
            if k > 0 && spans[k - 1].1 > a {
                return Err(format!(
                    "intervals {} and {k} overlap or are unsorted",
                    k - 1
                ));
            }
        }
        Ok(IntervalUnion { spans })
    }

    /// Sorts and merges arbitrary intervals.
    pub fn from_unsorted(mut spans: Vec<(f64, f64)>) -> Self {
        spans.retain(|(a, b)| a < b);
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
        for (a, b) in spans {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalUnion { spans: out }
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    /// Length of the union inside `(lo, hi)`.
    pub fn measure_within(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let start = self.spans.partition_point(|s| s.1 <= lo);
        let mut total = 0.0;
        for &(a, b) in &self.spans[start..] {
            if a >= hi {
                break;
            }
            total += b.min(hi) - a.max(lo);
        }
        total
    }

    /// Index range of intervals meeting `[lo, hi]`.
    pub fn indices_meeting(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.spans.partition_point(|s| s.1 < lo);
        let end = self.spans.partition_point(|s| s.0 <= hi);
        start..end.max(start)
    }

    /// Membership in the open union.
    pub fn contains(&self, x: f64) -> bool {
        let k = self.spans.partition_point(|s| s.1 <= x);
        k < self.spans.len() && self.spans[k].0 < x
    }

    /// Distance from `x` to the nearest endpoint.
    pub fn distance_to_endpoint(&self, x: f64) -> f64 {
        if self.spans.is_empty() {
            return f64::INFINITY;
        }
        let k = self.spans.partition_point(|s| s.1 < x);
        let mut best = f64::INFINITY;
        for idx in [k.saturating_sub(1), k, (k + 1).min(self.spans.len() - 1)] {
            if let Some(&(a, b)) = self.spans.get(idx) {
                best = best.min((x - a).abs()).min((x - b).abs());
            }
        }
        best
    }

    /// Smallest interval or gap length.
    pub fn min_feature(&self) -> f64 {
        let mut m = f64::INFINITY;
        for (k, &(a, b)) in self.spans.iter().enumerate() {
            m = m.min(b - a);
            if k > 0 {
                m = m.min(a - self.spans[k - 1].1);
            }
        }
        m
    }

    /// Image under `x -> offset + scale * x`.
    pub fn map_affine(&self, offset: f64, scale: f64) -> IntervalUnion {
        let mut spans: Vec<(f64, f64)> = self
            .spans
            .iter()
            .map(|&(a, b)| {
                let (p, q) = (offset + scale * a, offset + scale * b);
                if p < q {
                    (p, q)
                } else {
                    (q, p)
                }
            })
            .collect();
        if scale < 0.0 {
            spans.reverse();
        }
        IntervalUnion { spans }
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut all = self.spans.clone();
        all.extend_from_slice(&other.spans);
        IntervalUnion::from_unsorted(all)
    }

    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.spans.iter().flat_map(|&(a, b)| [a, b])
    }
}
