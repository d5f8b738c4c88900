use crate::error::{Result, SplineError};
use serde::{Deserialize, Serialize};

/// The support of a spline as a union of closed inter-knot intervals.
///
/// Each component `(lo, hi)` holds knot indices with `lo < hi`; the component
/// covers `[xi_lo, xi_hi]`. Components are sorted and disjoint (adjacent
/// components are merged, so consecutive components never share an index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSupport", into = "RawSupport")]
pub struct SupportSet {
    components: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawSupport {
    components: Vec<(usize, usize)>,
}

impl TryFrom<RawSupport> for SupportSet {
    type Error = SplineError;
    fn try_from(raw: RawSupport) -> Result<Self> {
        SupportSet::new(raw.components)
    }
}

impl From<SupportSet> for RawSupport {
    fn from(s: SupportSet) -> Self {
        RawSupport {
            components: s.components,
        }
    }
}

impl SupportSet {
    /// Builds a support set, validating ordering and disjointness.
    pub fn new(components: Vec<(usize, usize)>) -> Result<Self> {
        let mut prev_end: Option<usize> = None;
        for &(lo, hi) in &components {
            if lo >= hi {
                return Err(SplineError::InvalidSupportInterval {
                    lo,
                    hi,
                    knots: usize::MAX,
                });
            }
            if let Some(p) = prev_end {
                // touching components must be merged by the caller
                if lo <= p {
                    return Err(SplineError::UnsortedSupport);
                }
            }
            prev_end = Some(hi);
        }
        Ok(Self { components })
    }

    /// Empty support: the zero spline.
    pub fn empty() -> Self {
        Self { components: vec![] }
    }

    /// Single component covering the full knot range of `knot_count` knots.
    pub fn full(knot_count: usize) -> Self {
        Self {
            components: vec![(0, knot_count - 1)],
        }
    }

    pub fn components(&self) -> &[(usize, usize)] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Number of knots covered (rows of the derivative matrix).
    pub fn knot_count(&self) -> usize {
        self.components.iter().map(|&(lo, hi)| hi - lo + 1).sum()
    }

    /// Checks all indices stay below `knot_count`.
    pub fn check_bounds(&self, knot_count: usize) -> Result<()> {
        for &(lo, hi) in &self.components {
            if hi >= knot_count {
                return Err(SplineError::InvalidSupportInterval {
                    lo,
                    hi,
                    knots: knot_count,
                });
            }
        }
        Ok(())
    }

    /// Iterator over covered knot indices in increasing order.
    pub fn knot_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    /// Row position of knot `index` in the derivative matrix, if covered.
    pub fn row_of(&self, index: usize) -> Option<usize> {
        let mut offset = 0;
        for &(lo, hi) in &self.components {
            if index < lo {
                return None;
            }
            if index <= hi {
                return Some(offset + index - lo);
            }
            offset += hi - lo + 1;
        }
        None
    }

    /// Whether the inter-knot interval `[xi_i, xi_{i+1}]` lies inside the support.
    pub fn covers_interval(&self, i: usize) -> bool {
        self.components
            .iter()
            .any(|&(lo, hi)| lo <= i && i < hi)
    }

    /// Largest covered knot index `<= index`, together with its row.
    pub fn anchor_at_or_before(&self, index: usize) -> Option<(usize, usize)> {
        let mut best = None;
        let mut offset = 0;
        for &(lo, hi) in &self.components {
            if lo > index {
                break;
            }
            let knot = hi.min(index);
            best = Some((knot, offset + knot - lo));
            offset += hi - lo + 1;
        }
        best
    }

    /// Union of the covered inter-knot intervals of `self` and `other`.
    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut intervals: Vec<(usize, usize)> = self
            .components
            .iter()
            .chain(other.components.iter())
            .copied()
            .collect();
        intervals.sort_unstable();
        let mut merged: Vec<(usize, usize)> = Vec::new();
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        SupportSet { components: merged }
    }

    /// Whether two supports share at least one inter-knot interval.
    pub fn overlaps(&self, other: &SupportSet) -> bool {
        let mut i = 0;
        let mut j = 0;
        while i < self.components.len() && j < other.components.len() {
            let a = self.components[i];
            let b = other.components[j];
            // closed intervals overlap on positive measure iff interiors meet
            if a.0 < b.1 && b.0 < a.1 {
                return true;
            }
            if a.1 <= b.1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }

    /// Total covered length in knot units, given the knot values.
    pub fn measure(&self, knots: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|&(lo, hi)| knots[hi] - knots[lo])
            .sum()
    }
}
