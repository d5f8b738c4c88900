use crate::error::{Result, SplineError};
use serde::{Deserialize, Serialize};

/// Relative tolerance for flagging a knot vector as equidistant.
const EQUIDISTANT_RTOL: f64 = 1e-12;

/// An ordered vector of distinct knot locations.
///
/// The first and last entries are the range endpoints (initial and terminal
/// knots); everything in between is an internal knot. With `n` internal knots
/// the vector holds `n + 2` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKnots", into = "RawKnots")]
pub struct KnotVector {
    values: Vec<f64>,
    equidistant: bool,
}

#[derive(Serialize, Deserialize)]
struct RawKnots {
    values: Vec<f64>,
}

impl TryFrom<RawKnots> for KnotVector {
    type Error = SplineError;
    fn try_from(raw: RawKnots) -> Result<Self> {
        KnotVector::new(raw.values)
    }
}

impl From<KnotVector> for RawKnots {
    fn from(kv: KnotVector) -> Self {
        RawKnots { values: kv.values }
    }
}

impl KnotVector {
    /// Builds a knot vector from strictly increasing finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(SplineError::TooFewKnots(values.len()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SplineError::NonFiniteKnot(v));
            }
            if i > 0 && v <= values[i - 1] {
                return Err(SplineError::KnotsNotIncreasing { index: i, value: v });
            }
        }
        let equidistant = detect_equidistant(&values);
        Ok(Self {
            values,
            equidistant,
        })
    }

    /// `count` equally spaced knots spanning `[lo, hi]`, endpoints included.
    pub fn equidistant(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(SplineError::TooFewKnots(count));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        // pin the endpoint exactly
        values[count - 1] = hi;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of internal knots (total minus the two endpoints).
    pub fn internal_count(&self) -> usize {
        self.values.len() - 2
    }

    pub fn is_equidistant(&self) -> bool {
        self.equidistant
    }

    pub fn range(&self) -> (f64, f64) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    pub fn span(&self) -> f64 {
        let (lo, hi) = self.range();
        hi - lo
    }

    /// Index of the largest knot `<= x`, or `None` when `x` precedes the range.
    pub fn interval_of(&self, x: f64) -> Option<usize> {
        if x < self.values[0] {
            return None;
        }
        // partition_point returns the first index with value > x
        let idx = self.values.partition_point(|&v| v <= x);
        Some(idx - 1)
    }

    /// Positions of `self`'s knots inside `superset`, requiring exact matches
    /// and identical range endpoints.
    pub fn embedding_into(&self, superset: &KnotVector) -> Result<Vec<usize>> {
        let (lo, hi) = self.range();
        let (new_lo, new_hi) = superset.range();
        if lo != new_lo || hi != new_hi {
            return Err(SplineError::RangeMismatch {
                lo,
                hi,
                new_lo,
                new_hi,
            });
        }
        let mut map = Vec::with_capacity(self.len());
        let mut j = 0;
        for &v in &self.values {
            while j < superset.len() && superset.values[j] < v {
                j += 1;
            }
            if j >= superset.len() || superset.values[j] != v {
                return Err(SplineError::NotSuperset(v));
            }
            map.push(j);
        }
        Ok(map)
    }

    /// Sorted union of two knot vectors over the same range.
    pub fn union(&self, other: &KnotVector) -> Result<KnotVector> {
        let (lo, hi) = self.range();
        let (olo, ohi) = other.range();
        if lo != olo || hi != ohi {
            return Err(SplineError::RangeMismatch {
                lo,
                hi,
                new_lo: olo,
                new_hi: ohi,
            });
        }
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.values, &other.values);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            merged.push(next);
        }
        KnotVector::new(merged)
    }
}

fn detect_equidistant(values: &[f64]) -> bool {
    let n = values.len() - 1;
    let mean_gap = (values[n] - values[0]) / n as f64;
    values
        .windows(2)
        .all(|w| ((w[1] - w[0]) - mean_gap).abs() <= EQUIDISTANT_RTOL * mean_gap)
}
