use crate::error::{Result, SplineError};
use crate::family::SplineFamily;
use crate::quadrature::GaussLegendre;
use crate::spline::{from_full_rows, DerView, PiecewisePolynomial, Spline};
use nalgebra::DMatrix;

/// Indefinite integral of a spline, anchored to zero at the range start.
///
/// The result is a piecewise polynomial of order `k + 1`: column `j >= 1`
/// equals column `j - 1` of the input, and the value column accumulates by
/// Taylor stepping across the knots. Past the input's support the integral
/// stays constant, so the output support can reach the terminal knot.
pub fn integra(s: &Spline) -> PiecewisePolynomial {
    let k = s.order();
    let knots = s.knots().clone();
    let n2 = knots.len();
    if s.is_zero() {
        return PiecewisePolynomial::new(
            knots,
            k + 1,
            crate::support::SupportSet::empty(),
            DMatrix::zeros(0, k + 2),
        )
        .expect("empty representation is well formed");
    }
    let mut fact = vec![1.0f64; k + 2];
    for m in 1..=k + 1 {
        fact[m] = fact[m - 1] * m as f64;
    }
    let xs = knots.values().to_vec();
    let mut full = DMatrix::<f64>::zeros(n2, k + 2);
    let mut running = 0.0f64;
    for i in 0..n2 {
        full[(i, 0)] = running;
        if let Some(row) = s.support().row_of(i) {
            for j in 0..=k {
                full[(i, j + 1)] = s.der()[(row, j)];
            }
        }
        if i + 1 < n2 {
            if let Some(row) = s.support().row_of(i) {
                if s.support().covers_interval(i) {
                    let h = xs[i + 1] - xs[i];
                    let mut step = 0.0;
                    let mut hp = h;
                    for m in 0..=k {
                        step += s.der()[(row, m)] * hp / fact[m + 1];
                        hp *= h;
                    }
                    running += step;
                }
            }
        }
    }
    let (support, der) = from_full_rows(&knots, k + 1, full);
    PiecewisePolynomial::new(knots, k + 1, support, der)
        .expect("pruned representation is well formed")
}

/// Inner product of two representations over shared knots, by Gauss–Legendre
/// quadrature with `k + 1` nodes per interval (exact for degree `<= 2k + 1`).
pub(crate) fn inner_view(a: DerView<'_>, b: DerView<'_>) -> f64 {
    let k = a.order.max(b.order);
    let rule = GaussLegendre::new(k + 1);
    let xs = a.knots.values();
    let mut acc = 0.0;
    for &(lo, hi) in a.support.components() {
        for i in lo..hi {
            if !b.support.covers_interval(i) {
                continue;
            }
            let row_a = a.support.row_of(i).expect("interval start inside support");
            let row_b = b.support.row_of(i).expect("interval covered by support");
            let (x0, x1) = (xs[i], xs[i + 1]);
            acc += rule
                .mapped(x0, x1)
                .map(|(x, w)| {
                    let dx = x - x0;
                    w * a.taylor_from_row(row_a, dx, 0) * b.taylor_from_row(row_b, dx, 0)
                })
                .sum::<f64>();
        }
    }
    acc
}

fn check_compatible(a: DerView<'_>, b: DerView<'_>) -> Result<()> {
    if a.knots != b.knots {
        return Err(SplineError::KnotMismatch);
    }
    if a.order != b.order {
        return Err(SplineError::OrderMismatch(a.order, b.order));
    }
    Ok(())
}

/// Exact L2 inner product of two splines over the same knots and order.
pub fn inner_product(a: &Spline, b: &Spline) -> Result<f64> {
    check_compatible(a.view(), b.view())?;
    Ok(inner_view(a.view(), b.view()))
}

pub fn norm_squared(s: &Spline) -> f64 {
    inner_view(s.view(), s.view())
}

pub fn norm(s: &Spline) -> f64 {
    norm_squared(s).max(0.0).sqrt()
}

/// Matrix of pairwise inner products of the family members.
pub fn gramian(family: &SplineFamily) -> DMatrix<f64> {
    let m = family.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let vi = family.member_view(i);
            let vj = family.member_view(j);
            let value = if vi.support.overlaps(vj.support) {
                inner_view(vi, vj)
            } else {
                0.0
            };
            g[(i, j)] = value;
            g[(j, i)] = value;
        }
    }
    g
}

/// Inner products between members of two families over the same knots:
/// entry `(i, j)` is `<a_i, b_j>`.
pub fn cross_gramian(a: &SplineFamily, b: &SplineFamily) -> Result<DMatrix<f64>> {
    if a.is_empty() || b.is_empty() {
        return Ok(DMatrix::zeros(a.len(), b.len()));
    }
    check_compatible(a.member_view(0), b.member_view(0))?;
    let mut g = DMatrix::zeros(a.len(), b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            let vi = a.member_view(i);
            let vj = b.member_view(j);
            g[(i, j)] = if vi.support.overlaps(vj.support) {
                inner_view(vi, vj)
            } else {
                0.0
            };
        }
    }
    Ok(g)
}
