//! Orthonormalization strategies for B-spline bases.
//!
//! Every strategy turns the non-orthogonal B-splines into an orthonormal
//! basis spanning the same spline space. All of them run the same engine:
//! process the members tuple by tuple in a strategy-specific order, subtract
//! projections onto everything already orthonormalized, then symmetrically
//! orthonormalize the residual tuple through the inverse square root of its
//! Gram matrix. Strategies are registered by name and selected at runtime.

use super::{bspline_placements, BasisSet, BasisType, DyadicNet};
use crate::error::{Result, SplineError};
use nalgebra::{DMatrix, DVector};

/// Condition-number limit beyond which a Gramian counts as singular.
const MAX_CONDITION: f64 = 1e12;

/// Eigenvalue floor guard for matrix inverse square roots.
const EIG_FLOOR: f64 = 1e-14;

/// A named orthonormalization method for B-spline bases.
pub trait Orthonormalizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn basis_type(&self) -> BasisType;

    /// Tuple width used when grouping neighboring members.
    fn tuple_size(&self, order: usize) -> usize {
        order.max(1)
    }

    /// Order in which the net tuples are processed.
    fn tuple_order(&self, net: &DyadicNet) -> Vec<usize>;

    /// Orthonormalizes `basis`, returning the new basis and the coefficient
    /// matrix expressing its members in the input B-splines (row per member).
    fn orthonormalize_with_coeffs(&self, basis: &BasisSet) -> Result<(BasisSet, DMatrix<f64>)> {
        if basis.basis_type() != BasisType::Bspline {
            return Err(SplineError::NotBsplineBasis(
                basis.basis_type().name().to_string(),
            ));
        }
        let order = basis.order();
        let tuple_size = self.tuple_size(order);
        let net = DyadicNet::with_tuple_size(basis.len(), tuple_size);
        let coeffs = tuple_engine(basis, tuple_size, &self.tuple_order(&net))?;
        let family = basis.family().lincomb(&coeffs)?;
        let placements = bspline_placements(basis.knots(), order, basis.len());
        Ok((
            BasisSet::assemble(family, self.basis_type(), placements),
            coeffs,
        ))
    }

    fn orthonormalize(&self, basis: &BasisSet) -> Result<BasisSet> {
        Ok(self.orthonormalize_with_coeffs(basis)?.0)
    }
}

/// One-sided Gram–Schmidt, members ordered left to right. The coefficient
/// matrix comes out lower-triangular.
pub struct GramSchmidt;

impl Orthonormalizer for GramSchmidt {
    fn name(&self) -> &'static str {
        "gram_schmidt"
    }

    fn basis_type(&self) -> BasisType {
        BasisType::GramSchmidt
    }

    fn tuple_size(&self, _order: usize) -> usize {
        1
    }

    fn tuple_order(&self, net: &DyadicNet) -> Vec<usize> {
        (0..net.tuples.len()).collect()
    }
}

/// Symmetric two-sided variant: tuples are processed from both ends inward,
/// the middle tuple last.
pub struct TwoSided;

impl Orthonormalizer for TwoSided {
    fn name(&self) -> &'static str {
        "two_sided"
    }

    fn basis_type(&self) -> BasisType {
        BasisType::TwoSided
    }

    fn tuple_order(&self, net: &DyadicNet) -> Vec<usize> {
        let count = net.tuples.len();
        let mut order = Vec::with_capacity(count);
        let (mut lo, mut hi) = (0usize, count);
        while lo < hi {
            order.push(lo);
            lo += 1;
            if lo < hi {
                hi -= 1;
                order.push(hi);
            }
        }
        order
    }
}

/// Dyadic orthonormalization into a splinet: bottom net level first, so each
/// member mixes only with the B-splines of its subtree and the total support
/// grows logarithmically with the knot count.
pub struct DyadicSplinet;

impl Orthonormalizer for DyadicSplinet {
    fn name(&self) -> &'static str {
        "splinet"
    }

    fn basis_type(&self) -> BasisType {
        BasisType::Splinet
    }

    fn tuple_order(&self, net: &DyadicNet) -> Vec<usize> {
        let mut order: Vec<usize> = (0..net.tuples.len()).collect();
        order.sort_by_key(|&t| (net.tuples[t].level, net.tuples[t].pos_in_level));
        order
    }
}

static STRATEGIES: &[&dyn Orthonormalizer] = &[&GramSchmidt, &TwoSided, &DyadicSplinet];

/// Looks up a registered strategy by name.
pub fn orthonormalizer(name: &str) -> Option<&'static dyn Orthonormalizer> {
    STRATEGIES
        .iter()
        .copied()
        .find(|s| s.name() == name || BasisType::from_name(name) == Some(s.basis_type()))
}

pub fn orthonormalizers() -> &'static [&'static dyn Orthonormalizer] {
    STRATEGIES
}

/// Orthonormalizes a B-spline basis with the method named by `method`.
pub fn orthonormalize(basis: &BasisSet, method: BasisType) -> Result<BasisSet> {
    let strategy = STRATEGIES
        .iter()
        .find(|s| s.basis_type() == method)
        .ok_or_else(|| SplineError::UnknownBasisName(method.name().to_string()))?;
    strategy.orthonormalize(basis)
}

/// Builds the splinet and its dyadic net from a B-spline basis.
pub fn build_splinet(basis: &BasisSet) -> Result<(BasisSet, DyadicNet)> {
    let splinet = DyadicSplinet.orthonormalize(basis)?;
    Ok((splinet, DyadicNet::new(basis.len(), basis.order())))
}

/// Shared engine: walk the tuples in `tuple_order`, project each out of the
/// span of the already-finished members, then Löwdin-orthonormalize the
/// residual block. Returns the coefficient rows in member order.
fn tuple_engine(
    basis: &BasisSet,
    tuple_size: usize,
    tuple_order: &[usize],
) -> Result<DMatrix<f64>> {
    let m = basis.len();
    let g = basis.gramian();
    check_condition(&g, basis.basis_type().name())?;

    let mut coeffs = DMatrix::<f64>::zeros(m, m);
    // rows of G * c_p for finished members p, filled as we go
    let mut g_coeffs = DMatrix::<f64>::zeros(m, m);
    let mut done: Vec<usize> = Vec::with_capacity(m);

    for &t in tuple_order {
        let start = t * tuple_size;
        if start >= m {
            continue;
        }
        let end = (start + tuple_size).min(m);
        let width = end - start;

        let mut block = DMatrix::<f64>::zeros(width, m);
        for (r, i) in (start..end).enumerate() {
            block[(r, i)] = 1.0;
            for &p in &done {
                // alpha = <residual, OB_p> in the B-spline Gramian metric
                let alpha: f64 = (0..m).map(|c| block[(r, c)] * g_coeffs[(p, c)]).sum();
                if alpha != 0.0 {
                    for c in 0..m {
                        block[(r, c)] -= alpha * coeffs[(p, c)];
                    }
                }
            }
        }

        // Gram matrix of the residual tuple and its inverse square root
        let mut s = DMatrix::<f64>::zeros(width, width);
        let gb = &block * &g; // width x m
        for a in 0..width {
            for b in a..width {
                let v: f64 = (0..m).map(|c| gb[(a, c)] * block[(b, c)]).sum();
                s[(a, b)] = v;
                s[(b, a)] = v;
            }
        }
        let s_inv_sqrt = inverse_sqrt(&s, basis.basis_type().name())?;
        let new_rows = &s_inv_sqrt * &block;
        for (r, i) in (start..end).enumerate() {
            for c in 0..m {
                coeffs[(i, c)] = new_rows[(r, c)];
            }
            let gc = &g * coeffs.row(i).transpose();
            for c in 0..m {
                g_coeffs[(i, c)] = gc[c];
            }
            done.push(i);
        }
    }
    Ok(coeffs)
}

fn check_condition(g: &DMatrix<f64>, basis: &str) -> Result<()> {
    let eigs: DVector<f64> = g.clone().symmetric_eigenvalues();
    let lam_max = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lam_min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    if lam_min <= 0.0 {
        return Err(SplineError::NotPositiveDefinite(basis.to_string()));
    }
    let cond = lam_max / lam_min;
    if cond > MAX_CONDITION {
        return Err(SplineError::SingularGramian {
            basis: basis.to_string(),
            cond,
        });
    }
    Ok(())
}

/// Symmetric inverse square root through eigendecomposition, with a floor on
/// the eigenvalues relative to the largest one.
fn inverse_sqrt(s: &DMatrix<f64>, basis: &str) -> Result<DMatrix<f64>> {
    let eig = s.clone().symmetric_eigen();
    let lam_max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    // also rejects NaN eigenvalues
    if lam_max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(SplineError::NotPositiveDefinite(basis.to_string()));
    }
    let floor = EIG_FLOOR * lam_max;
    let n = s.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let lam = eig.eigenvalues[j].max(floor);
        let inv = 1.0 / lam.sqrt();
        for i in 0..n {
            scaled[(i, j)] *= inv;
        }
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}
