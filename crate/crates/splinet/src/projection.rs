use crate::bases::ortho::orthonormalize;
use crate::bases::{build_bsplines, BasisSet, BasisType};
use crate::calculus::{cross_gramian, integra};
use crate::error::{Result, SplineError};
use crate::family::SplineFamily;
use crate::knots::KnotVector;
use crate::spline::PiecewisePolynomial;
use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

/// One discretized curve: paired argument/value samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples {
    pub arguments: Vec<f64>,
    pub values: Vec<f64>,
}

/// Discretized functional data, either on a grid shared by all curves or
/// with per-curve grids of possibly different lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiscreteCurveSet {
    CommonGrid {
        arguments: Vec<f64>,
        /// One row per curve.
        values: DMatrix<f64>,
    },
    PerCurve(Vec<CurveSamples>),
}

fn check_increasing(args: &[f64]) -> Result<()> {
    if args.is_empty() || args.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SplineError::ArgumentsNotIncreasing);
    }
    Ok(())
}

impl DiscreteCurveSet {
    pub fn common_grid(arguments: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_increasing(&arguments)?;
        if rows.is_empty() {
            return Err(SplineError::EmptyCurveSet);
        }
        for row in &rows {
            if row.len() != arguments.len() {
                return Err(SplineError::CurveShapeMismatch {
                    values: row.len(),
                    arguments: arguments.len(),
                });
            }
        }
        let values = DMatrix::from_fn(rows.len(), arguments.len(), |i, j| rows[i][j]);
        Ok(Self::CommonGrid { arguments, values })
    }

    pub fn from_matrix(arguments: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        check_increasing(&arguments)?;
        if values.nrows() == 0 {
            return Err(SplineError::EmptyCurveSet);
        }
        if values.ncols() != arguments.len() {
            return Err(SplineError::CurveShapeMismatch {
                values: values.ncols(),
                arguments: arguments.len(),
            });
        }
        Ok(Self::CommonGrid { arguments, values })
    }

    pub fn per_curve(curves: Vec<CurveSamples>) -> Result<Self> {
        if curves.is_empty() {
            return Err(SplineError::EmptyCurveSet);
        }
        for c in &curves {
            check_increasing(&c.arguments)?;
            if c.values.len() != c.arguments.len() {
                return Err(SplineError::CurveShapeMismatch {
                    values: c.values.len(),
                    arguments: c.arguments.len(),
                });
            }
        }
        Ok(Self::PerCurve(curves))
    }

    pub fn len(&self) -> usize {
        match self {
            Self::CommonGrid { values, .. } => values.nrows(),
            Self::PerCurve(curves) => curves.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Arguments and values of curve `i` (copied for the common-grid layout).
    pub fn curve(&self, i: usize) -> CurveSamples {
        match self {
            Self::CommonGrid { arguments, values } => CurveSamples {
                arguments: arguments.clone(),
                values: values.row(i).iter().copied().collect(),
            },
            Self::PerCurve(curves) => curves[i].clone(),
        }
    }

    /// Squared L2 norm of curve `i` under the piecewise-constant reading
    /// (each value holds on the interval to its right; the last one is
    /// unused).
    pub fn norm_squared(&self, i: usize) -> f64 {
        match self {
            Self::CommonGrid { arguments, values } => {
                pcw_norm_squared_row(arguments, values.row(i).iter().copied())
            }
            Self::PerCurve(curves) => {
                pcw_norm_squared_row(&curves[i].arguments, curves[i].values.iter().copied())
            }
        }
    }

    /// Pointwise mean curve; only defined for the common-grid layout.
    pub fn mean_curve(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::CommonGrid { arguments, values } => {
                let n = values.nrows() as f64;
                let mean: Vec<f64> = (0..values.ncols())
                    .map(|j| values.column(j).sum() / n)
                    .collect();
                Ok((arguments.clone(), mean))
            }
            Self::PerCurve(_) => Err(SplineError::EmptyCurveSet),
        }
    }
}

pub(crate) fn pcw_norm_squared_row(args: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.collect();
    args.windows(2)
        .zip(&vals)
        .map(|(w, &v)| v * v * (w[1] - w[0]))
        .sum()
}

/// Output of a projection: decomposition coefficients, the basis used, and
/// the projected functions reassembled from both.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// One row per input function, one column per basis member.
    pub coeff: DMatrix<f64>,
    pub basis: BasisSet,
    pub projected: SplineFamily,
}

/// Builds the basis of `basis_type` over `knots`.
pub fn build_basis(knots: &KnotVector, k: usize, basis_type: BasisType) -> Result<BasisSet> {
    let bsplines = build_bsplines(knots, k)?;
    match basis_type {
        BasisType::Bspline => Ok(bsplines),
        other => orthonormalize(&bsplines, other),
    }
}

/// Expresses each member of `f` in `basis` (same knots and order): a plain
/// basis decomposition rather than a projection.
pub fn decompose_onto(f: &SplineFamily, basis: &BasisSet) -> Result<ProjectionResult> {
    if f.knots() != basis.knots() {
        return Err(SplineError::KnotMismatch);
    }
    if f.order() != basis.order() {
        return Err(SplineError::OrderMismatch(f.order(), basis.order()));
    }
    let raw = cross_gramian(f, basis.family())?;
    let coeff = solve_in_basis(basis, raw)?;
    let projected = basis.family().lincomb(&coeff)?;
    Ok(ProjectionResult {
        coeff,
        basis: basis.clone(),
        projected,
    })
}

/// Decomposition against a freshly built basis of the requested type.
pub fn decompose(f: &SplineFamily, basis_type: BasisType) -> Result<ProjectionResult> {
    let basis = build_basis(f.knots(), f.order(), basis_type)?;
    decompose_onto(f, &basis)
}

/// Orthogonal projection of splines onto the spline space over
/// `target_knots`, computed in the space built over the union of both knot
/// sets.
pub fn project_splines(
    f: &SplineFamily,
    target_knots: &KnotVector,
    basis_type: BasisType,
) -> Result<ProjectionResult> {
    let basis = build_basis(target_knots, f.order(), basis_type)?;
    project_splines_onto(f, &basis)
}

pub fn project_splines_onto(f: &SplineFamily, basis: &BasisSet) -> Result<ProjectionResult> {
    let union = f.knots().union(basis.knots())?;
    let f_ref = f.refine(&union)?;
    let basis_ref = basis.family().refine(&union)?;
    let raw = cross_gramian(&f_ref, &basis_ref)?;
    let coeff = solve_in_basis(basis, raw)?;
    let projected = basis.family().lincomb(&coeff)?;
    Ok(ProjectionResult {
        coeff,
        basis: basis.clone(),
        projected,
    })
}

/// Converts raw inner products `<f_j, B_i>` into coefficients: the identity
/// for orthonormal bases, a Gramian solve for B-splines.
fn solve_in_basis(basis: &BasisSet, raw: DMatrix<f64>) -> Result<DMatrix<f64>> {
    match basis.basis_type() {
        BasisType::Bspline => {
            let chol = bspline_cholesky(basis)?;
            // solve G a_j = b_j for every input row
            Ok(chol.solve(&raw.transpose()).transpose())
        }
        _ => Ok(raw),
    }
}

fn bspline_cholesky(basis: &BasisSet) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(basis.gramian())
        .ok_or_else(|| SplineError::NotPositiveDefinite(basis.basis_type().name().to_string()))
}

/// Projects discretized curves onto a prebuilt basis. The inner products of
/// the piecewise-constant data with the basis members are exact, through the
/// antiderivatives of the members.
pub struct DataProjector {
    basis: BasisSet,
    antiderivatives: Vec<PiecewisePolynomial>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl DataProjector {
    pub fn new(basis: BasisSet) -> Result<Self> {
        let antiderivatives: Vec<PiecewisePolynomial> =
            basis.family().iter_splines().map(|s| integra(&s)).collect();
        let chol = match basis.basis_type() {
            BasisType::Bspline => Some(bspline_cholesky(&basis)?),
            _ => None,
        };
        Ok(Self {
            basis,
            antiderivatives,
            chol,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    /// Integral weights of every basis member over the grid intervals:
    /// entry `(i, t)` is `F_i(args[t+1]) - F_i(args[t])`. Arguments outside
    /// the knot range contribute the zero extension.
    pub fn interval_weights(&self, args: &[f64]) -> Result<DMatrix<f64>> {
        check_increasing(args)?;
        let (lo, hi) = self.basis.knots().range();
        let m = self.basis.len();
        let mut w = DMatrix::zeros(m, args.len().saturating_sub(1));
        for (i, f) in self.antiderivatives.iter().enumerate() {
            let mut prev = f.evaluate(args[0].clamp(lo, hi))?;
            for t in 1..args.len() {
                let cur = f.evaluate(args[t].clamp(lo, hi))?;
                w[(i, t - 1)] = cur - prev;
                prev = cur;
            }
        }
        Ok(w)
    }

    /// Raw inner products `<curve, member_i>` for every curve.
    fn raw_products(&self, data: &DiscreteCurveSet) -> Result<DMatrix<f64>> {
        match data {
            DiscreteCurveSet::CommonGrid { arguments, values } => {
                let w = self.interval_weights(arguments)?;
                // drop the unused last value column
                let v = values.columns(0, arguments.len() - 1);
                Ok(v * w.transpose())
            }
            DiscreteCurveSet::PerCurve(curves) => {
                let m = self.basis.len();
                let mut raw = DMatrix::zeros(curves.len(), m);
                for (r, c) in curves.iter().enumerate() {
                    let w = self.interval_weights(&c.arguments)?;
                    for i in 0..m {
                        let mut acc = 0.0;
                        for t in 0..c.arguments.len() - 1 {
                            acc += c.values[t] * w[(i, t)];
                        }
                        raw[(r, i)] = acc;
                    }
                }
                Ok(raw)
            }
        }
    }

    /// Coefficient matrix only, one row per curve.
    pub fn coefficients(&self, data: &DiscreteCurveSet) -> Result<DMatrix<f64>> {
        let raw = self.raw_products(data)?;
        match &self.chol {
            Some(chol) => Ok(chol.solve(&raw.transpose()).transpose()),
            None => Ok(raw),
        }
    }

    /// Full projection result including the projected splines.
    pub fn project(&self, data: &DiscreteCurveSet) -> Result<ProjectionResult> {
        let coeff = self.coefficients(data)?;
        let projected = self.basis.family().lincomb(&coeff)?;
        Ok(ProjectionResult {
            coeff,
            basis: self.basis.clone(),
            projected,
        })
    }
}

/// Projects discretized functional data onto the spline space over `knots`,
/// reading each curve as a piecewise-constant function.
pub fn project_data(
    data: &DiscreteCurveSet,
    knots: &KnotVector,
    k: usize,
    basis_type: BasisType,
) -> Result<ProjectionResult> {
    let basis = build_basis(knots, k, basis_type)?;
    DataProjector::new(basis)?.project(data)
}
