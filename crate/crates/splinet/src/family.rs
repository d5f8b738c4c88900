use crate::error::{Result, SplineError};
use crate::knots::KnotVector;
use crate::spline::{
    check_rep, from_full_rows, validate_view, DerView, SmoothnessReport, Spline, TOL_SMOOTH,
};
use crate::support::SupportSet;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A collection of splines over shared knots and a shared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineFamily {
    knots: KnotVector,
    order: usize,
    members: Vec<FamilyMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub support: SupportSet,
    pub der: DMatrix<f64>,
}

impl SplineFamily {
    pub fn new(
        knots: KnotVector,
        order: usize,
        members: Vec<(SupportSet, DMatrix<f64>)>,
    ) -> Result<Self> {
        for (support, der) in &members {
            check_rep(&knots, order, support, der)?;
        }
        Ok(Self {
            knots,
            order,
            members: members
                .into_iter()
                .map(|(support, der)| FamilyMember { support, der })
                .collect(),
        })
    }

    /// Gathers standalone splines into a family; all must share knots and order.
    pub fn from_splines(splines: Vec<Spline>) -> Result<Self> {
        let first = splines.first().ok_or(SplineError::EmptyCurveSet)?;
        let knots = first.knots().clone();
        let order = first.order();
        let mut members = Vec::with_capacity(splines.len());
        for s in splines {
            if s.knots() != &knots {
                return Err(SplineError::KnotMismatch);
            }
            if s.order() != order {
                return Err(SplineError::OrderMismatch(order, s.order()));
            }
            members.push(FamilyMember {
                support: s.support().clone(),
                der: s.der().clone(),
            });
        }
        Ok(Self {
            knots,
            order,
            members,
        })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub(crate) fn member_view(&self, i: usize) -> DerView<'_> {
        DerView {
            knots: &self.knots,
            order: self.order,
            support: &self.members[i].support,
            der: &self.members[i].der,
        }
    }

    /// Extracts member `i` as a standalone spline.
    pub fn member(&self, i: usize) -> Spline {
        Spline {
            knots: self.knots.clone(),
            order: self.order,
            support: self.members[i].support.clone(),
            der: self.members[i].der.clone(),
        }
    }

    pub fn iter_splines(&self) -> impl Iterator<Item = Spline> + '_ {
        (0..self.len()).map(|i| self.member(i))
    }

    pub fn evaluate_member(&self, i: usize, x: f64) -> Result<f64> {
        self.member_view(i).eval_deriv(x, 0)
    }

    pub fn evaluate_member_deriv(&self, i: usize, x: f64, j: usize) -> Result<f64> {
        self.member_view(i).eval_deriv(x, j)
    }

    pub fn validate_member(&self, i: usize) -> SmoothnessReport {
        validate_view(self.member_view(i), TOL_SMOOTH)
    }

    /// Largest smoothness residual across all members.
    pub fn max_smoothness_residual(&self) -> f64 {
        (0..self.len())
            .map(|i| self.validate_member(i).max_residual)
            .fold(0.0, f64::max)
    }

    /// Linear combinations of the members: output row `r` is
    /// `sum_c coeffs[(r, c)] * member_c`. Supports are unions of the supports
    /// of members entering with nonzero weight, pruned of intervals where the
    /// combination vanishes.
    pub fn lincomb(&self, coeffs: &DMatrix<f64>) -> Result<SplineFamily> {
        if coeffs.ncols() != self.len() {
            return Err(SplineError::CoefficientMismatch {
                cols: coeffs.ncols(),
                members: self.len(),
            });
        }
        let n2 = self.knots.len();
        let cols = self.order + 1;
        let mut members = Vec::with_capacity(coeffs.nrows());
        for r in 0..coeffs.nrows() {
            let mut full = DMatrix::<f64>::zeros(n2, cols);
            for (c, member) in self.members.iter().enumerate() {
                let w = coeffs[(r, c)];
                if w == 0.0 {
                    continue;
                }
                for (row, i) in member.support.knot_indices().enumerate() {
                    for j in 0..cols {
                        full[(i, j)] += w * member.der[(row, j)];
                    }
                }
            }
            let (support, der) = from_full_rows(&self.knots, self.order, full);
            members.push(FamilyMember { support, der });
        }
        Ok(SplineFamily {
            knots: self.knots.clone(),
            order: self.order,
            members,
        })
    }

    /// Re-represents every member on a refined knot vector.
    pub fn refine(&self, new_knots: &KnotVector) -> Result<SplineFamily> {
        let refined: Result<Vec<Spline>> =
            self.iter_splines().map(|s| s.refine(new_knots)).collect();
        SplineFamily::from_splines(refined?)
    }

    /// Sum of support measures relative to the knot range.
    pub fn total_relative_support(&self) -> f64 {
        let span = self.knots.span();
        self.members
            .iter()
            .map(|m| m.support.measure(self.knots.values()) / span)
            .sum()
    }
}
