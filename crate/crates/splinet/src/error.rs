use thiserror::Error;

/// Errors produced by spline construction and calculus.
#[derive(Error, Debug)]
pub enum SplineError {
    #[error("knot vector needs at least 2 values, got {0}")]
    TooFewKnots(usize),

    #[error("knots must be strictly increasing: knot[{index}] = {value} does not exceed its predecessor")]
    KnotsNotIncreasing { index: usize, value: f64 },

    #[error("knot values must be finite, got {0}")]
    NonFiniteKnot(f64),

    #[error("order {order} needs at least {required} internal knots, got {internal}")]
    OrderTooHigh {
        order: usize,
        internal: usize,
        required: usize,
    },

    #[error("derivative matrix has {rows} rows but the support covers {expected} knots")]
    DerivativeRowMismatch { rows: usize, expected: usize },

    #[error("derivative matrix has {cols} columns, expected order + 1 = {expected}")]
    DerivativeColMismatch { cols: usize, expected: usize },

    #[error("support interval ({lo}, {hi}) is invalid for {knots} knots")]
    InvalidSupportInterval { lo: usize, hi: usize, knots: usize },

    #[error("support intervals must be sorted and disjoint")]
    UnsortedSupport,

    #[error("argument {x} outside the knot range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("derivative order {requested} exceeds spline order {order}")]
    DerivativeOrderTooHigh { requested: usize, order: usize },

    #[error("operands live on different knot vectors")]
    KnotMismatch,

    #[error("operands have different smoothness orders: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("coefficient matrix has {cols} columns but the family has {members} members")]
    CoefficientMismatch { cols: usize, members: usize },

    #[error("refinement target does not contain knot {0}")]
    NotSuperset(f64),

    #[error("refinement target range [{new_lo}, {new_hi}] differs from source range [{lo}, {hi}]")]
    RangeMismatch {
        lo: f64,
        hi: f64,
        new_lo: f64,
        new_hi: f64,
    },

    #[error(
        "Gramian of the {basis} basis is numerically singular (condition estimate {cond:.3e})"
    )]
    SingularGramian { basis: String, cond: f64 },

    #[error("Gramian of the {0} basis is not positive definite")]
    NotPositiveDefinite(String),

    #[error("curve arguments must be strictly increasing")]
    ArgumentsNotIncreasing,

    #[error("curve arguments [{arg_lo}, {arg_hi}] do not span the knot range [{lo}, {hi}]")]
    ArgumentsDoNotSpan {
        arg_lo: f64,
        arg_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("curve has {values} values for {arguments} arguments")]
    CurveShapeMismatch { values: usize, arguments: usize },

    #[error("empty curve set")]
    EmptyCurveSet,

    #[error("expected a B-spline basis, got {0}")]
    NotBsplineBasis(String),

    #[error("unknown basis or method name: {0}")]
    UnknownBasisName(String),
}

impl SplineError {
    /// Whether the error reflects a numerical failure rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            SplineError::SingularGramian { .. } | SplineError::NotPositiveDefinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SplineError>;
