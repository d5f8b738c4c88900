pub mod ortho;

use crate::calculus::{gramian, inner_view};
use crate::error::{Result, SplineError};
use crate::family::SplineFamily;
use crate::knots::KnotVector;
use crate::support::SupportSet;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// The kind of basis stored in a [`BasisSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisType {
    Bspline,
    GramSchmidt,
    TwoSided,
    Splinet,
}

impl BasisType {
    pub fn name(self) -> &'static str {
        match self {
            BasisType::Bspline => "bspline",
            BasisType::GramSchmidt => "gram_schmidt",
            BasisType::TwoSided => "two_sided",
            BasisType::Splinet => "splinet",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "bspline" | "bs" => Some(BasisType::Bspline),
            "gram_schmidt" | "gsob" => Some(BasisType::GramSchmidt),
            "two_sided" | "twob" => Some(BasisType::TwoSided),
            "splinet" | "os" => Some(BasisType::Splinet),
            _ => None,
        }
    }
}

/// Placement of one basis member on the dyadic net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetPlacement {
    /// Level in the dyadic net, 1 = bottom (smallest supports).
    pub level: usize,
    /// Left-to-right position among same-level members.
    pub pos_in_level: usize,
    /// Index of the k-tuple the member belongs to.
    pub tuple: usize,
    /// Representative location: middle knot of the member's B-spline support,
    /// or the average of the two middle knots.
    pub location: f64,
}

/// One k-tuple of neighboring basis members assigned to a net node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetTuple {
    pub index: usize,
    pub level: usize,
    pub pos_in_level: usize,
    /// Member index range `[start, end)`.
    pub members: (usize, usize),
}

/// The dyadic net: k-tuples of neighboring members organized on levels with
/// growing support sizes. Complete when the internal knot count satisfies
/// the dyadic restriction; otherwise some nodes are absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicNet {
    pub levels: usize,
    pub tuples: Vec<NetTuple>,
    pub complete: bool,
}

impl DyadicNet {
    /// Groups `member_count` consecutive members into tuples of `max(k, 1)`
    /// and assigns them to net nodes by binary-tree in-order position.
    pub fn new(member_count: usize, order: usize) -> Self {
        Self::with_tuple_size(member_count, order.max(1))
    }

    pub(crate) fn with_tuple_size(member_count: usize, tuple_size: usize) -> Self {
        let tuple_count = member_count.div_ceil(tuple_size);
        let mut tuples = Vec::with_capacity(tuple_count);
        let mut per_level_counts: Vec<usize> = Vec::new();
        for t in 0..tuple_count {
            // 1-based in-order index: level = trailing zeros + 1
            let level = (t + 1).trailing_zeros() as usize + 1;
            if per_level_counts.len() < level {
                per_level_counts.resize(level, 0);
            }
            let pos_in_level = per_level_counts[level - 1];
            per_level_counts[level - 1] += 1;
            let start = t * tuple_size;
            let end = ((t + 1) * tuple_size).min(member_count);
            tuples.push(NetTuple {
                index: t,
                level,
                pos_in_level,
                members: (start, end),
            });
        }
        let levels = per_level_counts.len();
        let complete = member_count == tuple_count * tuple_size
            && (tuple_count + 1).is_power_of_two()
            && tuple_count > 0;
        Self {
            levels,
            tuples,
            complete,
        }
    }

    pub fn tuples_at_level(&self, level: usize) -> impl Iterator<Item = &NetTuple> + '_ {
        self.tuples.iter().filter(move |t| t.level == level)
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.levels];
        for t in &self.tuples {
            sizes[t.level - 1] += 1;
        }
        sizes
    }
}

/// A spline basis: a family tagged with its type and net placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    family: SplineFamily,
    basis_type: BasisType,
    placements: Vec<NetPlacement>,
}

impl BasisSet {
    pub(crate) fn assemble(
        family: SplineFamily,
        basis_type: BasisType,
        placements: Vec<NetPlacement>,
    ) -> Self {
        Self {
            family,
            basis_type,
            placements,
        }
    }

    pub fn family(&self) -> &SplineFamily {
        &self.family
    }

    pub fn basis_type(&self) -> BasisType {
        self.basis_type
    }

    pub fn placements(&self) -> &[NetPlacement] {
        &self.placements
    }

    pub fn knots(&self) -> &KnotVector {
        self.family.knots()
    }

    pub fn order(&self) -> usize {
        self.family.order()
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    /// Gramian of the members. For B-splines over equidistant knots the
    /// matrix is Toeplitz, so one band of inner products is reused across
    /// the whole matrix.
    pub fn gramian(&self) -> DMatrix<f64> {
        if self.basis_type == BasisType::Bspline && self.knots().is_equidistant() && !self.is_empty()
        {
            let m = self.len();
            let k = self.order();
            let mut band = vec![0.0f64; (k + 1).min(m)];
            for (d, entry) in band.iter_mut().enumerate() {
                *entry = inner_view(self.family.member_view(0), self.family.member_view(d));
            }
            let mut g = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..(i + k + 1).min(m) {
                    g[(i, j)] = band[j - i];
                    g[(j, i)] = band[j - i];
                }
            }
            g
        } else {
            gramian(&self.family)
        }
    }
}

/// Builds the order-`k` B-spline basis over `knots` by the derivative-value
/// recursion, seeded with the order-0 indicator matrices.
///
/// With `n` internal knots the basis has `n - k + 1` members; member `l` is
/// supported exactly on `[xi_l, xi_{l+k+1}]`.
pub fn build_bsplines(knots: &KnotVector, k: usize) -> Result<BasisSet> {
    let n = knots.internal_count();
    if n < k {
        return Err(SplineError::OrderTooHigh {
            order: k,
            internal: n,
            required: k,
        });
    }
    let n2 = knots.len();
    let xs = knots.values();
    // order-0 seed: indicator of (xi_l, xi_{l+1}]; the terminal knot keeps
    // its left-limit, so the last indicator carries a second unit entry
    let mut current: Vec<DMatrix<f64>> = (0..=n)
        .map(|l| {
            let mut m = DMatrix::zeros(n2, 1);
            m[(l, 0)] = 1.0;
            if l == n {
                m[(n + 1, 0)] = 1.0;
            }
            m
        })
        .collect();

    for order in 1..=k {
        let mut next: Vec<DMatrix<f64>> = Vec::with_capacity(n + 1 - order);
        for l in 0..=(n - order) {
            let prev_l = &current[l];
            let prev_r = &current[l + 1];
            let d_left = xs[l + order] - xs[l];
            let d_right = xs[l + 1] - xs[l + order + 1];
            let mut m = DMatrix::zeros(n2, order + 1);
            for t in l..=(l + order + 1) {
                for i in 0..=order {
                    let mut v = 0.0;
                    if i >= 1 {
                        v += (i as f64 / d_left) * prev_l[(t, i - 1)]
                            + (i as f64 / d_right) * prev_r[(t, i - 1)];
                    }
                    if i < order {
                        v += (xs[t] - xs[l]) / d_left * prev_l[(t, i)]
                            + (xs[l + order + 1] - xs[t]) / (-d_right) * prev_r[(t, i)];
                    }
                    m[(t, i)] = v;
                }
            }
            next.push(m);
        }
        current = next;
    }

    let member_count = n - k + 1;
    let mut members = Vec::with_capacity(member_count);
    for (l, full) in current.into_iter().enumerate() {
        let support = SupportSet::new(vec![(l, l + k + 1)])?;
        let mut der = DMatrix::zeros(k + 2, k + 1);
        for (row, t) in (l..=(l + k + 1)).enumerate() {
            for j in 0..=k {
                der[(row, j)] = full[(t, j)];
            }
        }
        members.push((support, der));
    }
    let family = SplineFamily::new(knots.clone(), k, members)?;
    let placements = bspline_placements(knots, k, member_count);
    Ok(BasisSet::assemble(family, BasisType::Bspline, placements))
}

/// Net placements inherited from the B-spline supports.
pub(crate) fn bspline_placements(
    knots: &KnotVector,
    k: usize,
    member_count: usize,
) -> Vec<NetPlacement> {
    let net = DyadicNet::new(member_count, k);
    let xs = knots.values();
    let mut placements = Vec::with_capacity(member_count);
    for l in 0..member_count {
        let tuple = &net.tuples[l / k.max(1)];
        // support covers knots l ..= l+k+1 (k+2 of them)
        let count = k + 2;
        let location = if count % 2 == 1 {
            xs[l + count / 2]
        } else {
            0.5 * (xs[l + count / 2 - 1] + xs[l + count / 2])
        };
        placements.push(NetPlacement {
            level: tuple.level,
            pos_in_level: tuple.pos_in_level,
            tuple: tuple.index,
            location,
        });
    }
    placements
}
