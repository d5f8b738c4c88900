use crate::error::{Result, SplineError};
use crate::knots::KnotVector;
use crate::support::SupportSet;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default absolute tolerance for smoothness residuals.
pub const TOL_SMOOTH: f64 = 1e-8;

/// Relative threshold below which a derivative row counts as zero when
/// pruning support intervals.
const PRUNE_RTOL: f64 = 1e-12;

/// A spline of smoothness order `k` stored as derivative values at knots.
///
/// `der` has one row per knot covered by `support` and `k + 1` columns;
/// entry `(i, j)` is the value of the j-th derivative at that knot. The
/// highest column holds the right-limit on the interval to the right of the
/// knot, except at the terminal knot of the range where the left-limit is
/// kept. Orders `0..k-1` vanish at both range endpoints (zero boundary
/// conditions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    pub(crate) knots: KnotVector,
    pub(crate) order: usize,
    pub(crate) support: SupportSet,
    pub(crate) der: DMatrix<f64>,
}

/// A piecewise polynomial in the same representation as [`Spline`] but
/// without the smoothness requirement at the knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pub(crate) knots: KnotVector,
    pub(crate) order: usize,
    pub(crate) support: SupportSet,
    pub(crate) der: DMatrix<f64>,
}

/// Smoothness residuals of a spline, per knot.
#[derive(Debug, Clone)]
pub struct SmoothnessReport {
    /// `(global knot index, max residual over derivative orders)`.
    pub residuals: Vec<(usize, f64)>,
    pub max_residual: f64,
    pub tol: f64,
}

impl SmoothnessReport {
    pub fn is_valid(&self) -> bool {
        self.max_residual <= self.tol
    }
}

pub(crate) fn check_rep(
    knots: &KnotVector,
    order: usize,
    support: &SupportSet,
    der: &DMatrix<f64>,
) -> Result<()> {
    support.check_bounds(knots.len())?;
    let rows = support.knot_count();
    if der.nrows() != rows {
        return Err(SplineError::DerivativeRowMismatch {
            rows: der.nrows(),
            expected: rows,
        });
    }
    if der.ncols() != order + 1 {
        return Err(SplineError::DerivativeColMismatch {
            cols: der.ncols(),
            expected: order + 1,
        });
    }
    Ok(())
}

/// Borrowed view of a derivative-matrix representation; shared by splines,
/// family members and piecewise polynomials.
#[derive(Clone, Copy)]
pub(crate) struct DerView<'a> {
    pub knots: &'a KnotVector,
    pub order: usize,
    pub support: &'a SupportSet,
    pub der: &'a DMatrix<f64>,
}

impl<'a> DerView<'a> {
    /// Taylor evaluation of the j-th derivative anchored at the closest
    /// in-support knot left of `x`.
    pub fn eval_deriv(&self, x: f64, j: usize) -> Result<f64> {
        let (lo, hi) = self.knots.range();
        if x < lo || x > hi {
            return Err(SplineError::OutOfRange { x, lo, hi });
        }
        if j > self.order {
            return Err(SplineError::DerivativeOrderTooHigh {
                requested: j,
                order: self.order,
            });
        }
        let idx = self.knots.interval_of(x).expect("x checked in range");
        let Some((anchor, row)) = self.support.anchor_at_or_before(idx) else {
            return Ok(0.0);
        };
        Ok(self.taylor_from_row(row, x - self.knots.values()[anchor], j))
    }

    /// Same value obtained by expanding from the knot right of `x`; the two
    /// routes agree for valid splines and serve as a cross-check.
    pub fn eval_deriv_right(&self, x: f64, j: usize) -> Result<f64> {
        let (lo, hi) = self.knots.range();
        if x < lo || x > hi {
            return Err(SplineError::OutOfRange { x, lo, hi });
        }
        if j > self.order {
            return Err(SplineError::DerivativeOrderTooHigh {
                requested: j,
                order: self.order,
            });
        }
        let idx = self.knots.interval_of(x).expect("x checked in range");
        let xs = self.knots.values();
        if xs[idx] == x {
            // on a knot: the stored row is the value
            return Ok(self
                .support
                .row_of(idx)
                .map_or(0.0, |row| self.der[(row, j)]));
        }
        let (Some(left_row), Some(right_row)) =
            (self.support.row_of(idx), self.support.row_of(idx + 1))
        else {
            return Ok(0.0);
        };
        if !self.support.covers_interval(idx) {
            return Ok(0.0);
        }
        let k = self.order;
        if j == k {
            return Ok(self.der[(left_row, k)]);
        }
        // orders < k are continuous at the right knot; the top derivative of
        // the piece is the right-limit stored at its left knot
        let dx = x - xs[idx + 1];
        let coeffs: Vec<f64> = (j..=k)
            .map(|m| {
                if m == k {
                    self.der[(left_row, k)]
                } else {
                    self.der[(right_row, m)]
                }
            })
            .collect();
        Ok(horner_taylor(&coeffs, dx))
    }

    /// Taylor expansion from matrix row `row`, offset `dx`, derivative `j`.
    pub fn taylor_from_row(&self, row: usize, dx: f64, j: usize) -> f64 {
        let k = self.order;
        if j > k {
            return 0.0;
        }
        let coeffs: Vec<f64> = (j..=k).map(|m| self.der[(row, m)]).collect();
        horner_taylor(&coeffs, dx)
    }

    /// All derivative right-values `0..=k` at an interior point `x`.
    pub fn taylor_all(&self, x: f64) -> Result<Vec<f64>> {
        (0..=self.order).map(|j| self.eval_deriv(x, j)).collect()
    }
}

/// Evaluates `sum_m coeffs[m] dx^m / m!` by Horner's rule.
fn horner_taylor(coeffs: &[f64], dx: f64) -> f64 {
    let mut acc = 0.0;
    for (m, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * dx / (m + 1) as f64 + c;
    }
    // the loop folds the factorial of each term into the running product:
    // acc = c_0 + dx/1 * (c_1 + dx/2 * (c_2 + ...))
    acc
}

pub(crate) fn validate_view(view: DerView<'_>, tol: f64) -> SmoothnessReport {
    let k = view.order;
    let xs = view.knots.values();
    let last = view.knots.len() - 1;
    let mut residuals: Vec<(usize, f64)> = Vec::new();
    let push = |knot: usize, r: f64, residuals: &mut Vec<(usize, f64)>| match residuals
        .iter_mut()
        .find(|(i, _)| *i == knot)
    {
        Some(entry) => entry.1 = entry.1.max(r),
        None => residuals.push((knot, r)),
    };
    for &(c_lo, c_hi) in view.support.components() {
        // orders < k vanish where the spline meets its zero region
        let start_row = view.support.row_of(c_lo).expect("component start row");
        for j in 0..k {
            push(c_lo, view.der[(start_row, j)].abs(), &mut residuals);
        }
        if c_hi == last {
            let end_row = view.support.row_of(c_hi).expect("component end row");
            for j in 0..k {
                push(c_hi, view.der[(end_row, j)].abs(), &mut residuals);
            }
        }
        for i in c_lo..c_hi {
            let row = view.support.row_of(i).expect("row in component");
            let next_row = view.support.row_of(i + 1).expect("row in component");
            let h = xs[i + 1] - xs[i];
            for j in 0..k {
                let predicted = view.taylor_from_row(row, h, j);
                let stored = view.der[(next_row, j)];
                push(i + 1, (predicted - stored).abs(), &mut residuals);
            }
        }
    }
    residuals.sort_by_key(|&(i, _)| i);
    let max_residual = residuals.iter().map(|&(_, r)| r).fold(0.0, f64::max);
    SmoothnessReport {
        residuals,
        max_residual,
        tol,
    }
}

/// Builds the minimal support and trimmed rows from a full `(n+2) x (k+1)`
/// matrix of derivative values. Rows that are zero relative to the column
/// scales drop out of the support.
pub(crate) fn from_full_rows(
    knots: &KnotVector,
    order: usize,
    mut full: DMatrix<f64>,
) -> (SupportSet, DMatrix<f64>) {
    let n2 = knots.len();
    debug_assert_eq!(full.nrows(), n2);
    let mut col_tol = vec![0.0f64; order + 1];
    for (j, tol) in col_tol.iter_mut().enumerate() {
        let scale = (0..n2).map(|i| full[(i, j)].abs()).fold(0.0, f64::max);
        *tol = PRUNE_RTOL * scale.max(1.0);
    }
    let interval_live = |i: usize| (0..=order).any(|j| full[(i, j)].abs() > col_tol[j]);

    let mut components: Vec<(usize, usize)> = Vec::new();
    for i in 0..n2 - 1 {
        if interval_live(i) {
            match components.last_mut() {
                Some(last) if last.1 == i => last.1 = i + 1,
                _ => components.push((i, i + 1)),
            }
        }
    }
    // rows whose right interval is outside the support hold right-limits of
    // the zero function; clear leftover round-off there
    for &(c_lo, c_hi) in &components {
        let _ = c_lo;
        if c_hi < n2 - 1 {
            for j in 0..=order {
                full[(c_hi, j)] = 0.0;
            }
        }
    }
    let support = SupportSet::new(components).expect("constructed components are sorted");
    let rows = support.knot_count();
    let mut der = DMatrix::zeros(rows, order + 1);
    for (r, i) in support.knot_indices().enumerate() {
        for j in 0..=order {
            der[(r, j)] = full[(i, j)];
        }
    }
    (support, der)
}

macro_rules! rep_common {
    ($ty:ident) => {
        impl $ty {
            pub fn knots(&self) -> &KnotVector {
                &self.knots
            }

            pub fn order(&self) -> usize {
                self.order
            }

            pub fn support(&self) -> &SupportSet {
                &self.support
            }

            pub fn der(&self) -> &DMatrix<f64> {
                &self.der
            }

            pub(crate) fn view(&self) -> DerView<'_> {
                DerView {
                    knots: &self.knots,
                    order: self.order,
                    support: &self.support,
                    der: &self.der,
                }
            }

            /// Value at `x` (zero outside the support).
            pub fn evaluate(&self, x: f64) -> Result<f64> {
                self.view().eval_deriv(x, 0)
            }

            /// Value of the j-th derivative at `x`.
            pub fn evaluate_deriv(&self, x: f64, j: usize) -> Result<f64> {
                self.view().eval_deriv(x, j)
            }

            /// Right-anchored Taylor evaluation; agrees with
            /// [`Self::evaluate_deriv`] for smooth inputs.
            pub fn evaluate_deriv_right_anchored(&self, x: f64, j: usize) -> Result<f64> {
                self.view().eval_deriv_right(x, j)
            }

            /// Values on a grid, in one sweep.
            pub fn evaluate_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
                xs.iter().map(|&x| self.evaluate(x)).collect()
            }

            pub fn is_zero(&self) -> bool {
                self.support.is_empty()
            }
        }
    };
}

rep_common!(Spline);
rep_common!(PiecewisePolynomial);

impl Spline {
    /// Builds a spline after checking the matrix shape against the support.
    /// Smoothness is not enforced here; see [`Spline::validate`].
    pub fn new(
        knots: KnotVector,
        order: usize,
        support: SupportSet,
        der: DMatrix<f64>,
    ) -> Result<Self> {
        check_rep(&knots, order, &support, &der)?;
        Ok(Self {
            knots,
            order,
            support,
            der,
        })
    }

    /// The zero spline over `knots`.
    pub fn zero(knots: KnotVector, order: usize) -> Self {
        Self {
            der: DMatrix::zeros(0, order + 1),
            knots,
            order,
            support: SupportSet::empty(),
        }
    }

    /// Per-knot smoothness residuals against the default tolerance.
    pub fn validate(&self) -> SmoothnessReport {
        self.validate_with_tol(TOL_SMOOTH)
    }

    pub fn validate_with_tol(&self, tol: f64) -> SmoothnessReport {
        validate_view(self.view(), tol)
    }

    /// Re-represents the spline on a refined knot vector containing every
    /// current knot. The function itself is unchanged.
    pub fn refine(&self, new_knots: &KnotVector) -> Result<Spline> {
        if new_knots == &self.knots {
            return Ok(self.clone());
        }
        let map = self.knots.embedding_into(new_knots)?;
        let mut rev = vec![None; new_knots.len()];
        for (old, &new) in map.iter().enumerate() {
            rev[new] = Some(old);
        }
        let components: Vec<(usize, usize)> = self
            .support
            .components()
            .iter()
            .map(|&(lo, hi)| (map[lo], map[hi]))
            .collect();
        let support = SupportSet::new(components)?;
        let mut der = DMatrix::zeros(support.knot_count(), self.order + 1);
        for (r, t) in support.knot_indices().enumerate() {
            match rev[t] {
                Some(old) => {
                    let old_row = self
                        .support
                        .row_of(old)
                        .expect("mapped support knot is covered");
                    for j in 0..=self.order {
                        der[(r, j)] = self.der[(old_row, j)];
                    }
                }
                None => {
                    let x = new_knots.values()[t];
                    for (j, v) in self.view().taylor_all(x)?.into_iter().enumerate() {
                        der[(r, j)] = v;
                    }
                }
            }
        }
        Spline::new(new_knots.clone(), self.order, support, der)
    }
}

impl PiecewisePolynomial {
    pub fn new(
        knots: KnotVector,
        order: usize,
        support: SupportSet,
        der: DMatrix<f64>,
    ) -> Result<Self> {
        check_rep(&knots, order, &support, &der)?;
        Ok(Self {
            knots,
            order,
            support,
            der,
        })
    }

    /// Treats the piecewise polynomial as a spline without checking
    /// smoothness (callers may [`Spline::validate`] afterwards).
    pub fn into_spline_unchecked(self) -> Spline {
        Spline {
            knots: self.knots,
            order: self.order,
            support: self.support,
            der: self.der,
        }
    }
}
