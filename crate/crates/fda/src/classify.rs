//! Class-wise FPCA models and the residual-norm classification rule.
//!
//! Each class carries its own knot selection, a splinet basis over those
//! knots, a mean spline, and the eigendecomposition of the coefficient-space
//! covariance. Classification projects a discrete curve into every class
//! space, truncates against the class eigenfunctions, and picks the class
//! with the smallest residual norm.

use crate::error::{FdaError, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use splinet::{
    decompose_onto, BasisSet, BasisType, DataProjector, DiscreteCurveSet, KnotVector, Spline,
    SplineFamily,
};

/// Eigenvalues below this fraction of the largest are clamped to zero and
/// their eigenfunctions dropped from retention.
const EIG_CLAMP_RTOL: f64 = 1e-12;

/// Fitted per-class model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassModel {
    pub label: usize,
    pub mean_knots: KnotVector,
    pub centered_knots: KnotVector,
    /// Orthonormal basis of the centered-knot space.
    pub basis: BasisSet,
    /// Class mean, estimated in the mean-knot space and re-represented in
    /// the centered space.
    pub mean: Spline,
    /// Coefficients of `mean` in `basis`.
    pub mean_coeffs: DVector<f64>,
    /// Descending, clamped at zero.
    pub eigvals: Vec<f64>,
    /// Columns are eigenvectors in basis coordinates (only retained ones).
    pub eigvecs: DMatrix<f64>,
    /// Eigenfunctions as splines, one per retained eigenvalue.
    pub eigfuns: SplineFamily,
    /// Number of usable eigenfunctions (positive eigenvalues).
    pub n_retained: usize,
}

impl ClassModel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Fits one class: mean estimation on the mean knots, splinet projection of
/// every curve on the centered knots, then the eigendecomposition of the
/// coefficient covariance.
pub fn fit_class(
    label: usize,
    train: &DiscreteCurveSet,
    mean_knots: &KnotVector,
    centered_knots: &KnotVector,
    k: usize,
    basis_type: BasisType,
) -> Result<ClassModel> {
    if basis_type == BasisType::Bspline {
        return Err(FdaError::Config(
            "class models need an orthonormal basis type".to_string(),
        ));
    }
    if train.len() < 2 {
        return Err(FdaError::TooFewCurves(label));
    }
    // the mean space must embed into the centered space
    mean_knots.embedding_into(centered_knots).map_err(|_| {
        FdaError::Config(format!(
            "class {label}: mean knots are not a subset of the centered knots"
        ))
    })?;

    let (args, mean_values) = train.mean_curve()?;
    let mean_set = DiscreteCurveSet::common_grid(args, vec![mean_values])?;
    let mean_basis = splinet::build_basis(mean_knots, k, basis_type)?;
    let mean_proj = DataProjector::new(mean_basis)?.project(&mean_set)?;
    let mean = mean_proj.projected.member(0).refine(centered_knots)?;

    let basis = splinet::build_basis(centered_knots, k, basis_type)?;
    let projector = DataProjector::new(basis.clone())?;
    let coeffs = projector.coefficients(train)?; // curves x dim

    let mean_family = SplineFamily::from_splines(vec![mean.clone()])?;
    let mean_coeffs_row = decompose_onto(&mean_family, &basis)?.coeff;
    let mean_coeffs = DVector::from_iterator(basis.len(), mean_coeffs_row.row(0).iter().copied());

    let (eigvals, eigvecs) = coefficient_spectrum(&coeffs)?;
    let n_retained = eigvals.iter().filter(|&&l| l > 0.0).count();
    let retained_vecs = eigvecs.columns(0, n_retained).into_owned();
    let eigfuns = basis.family().lincomb(&retained_vecs.transpose())?;

    Ok(ClassModel {
        label,
        mean_knots: mean_knots.clone(),
        centered_knots: centered_knots.clone(),
        basis,
        mean,
        mean_coeffs,
        eigvals: eigvals[..n_retained].to_vec(),
        eigvecs: retained_vecs,
        eigfuns,
        n_retained,
    })
}

/// Covariance eigendecomposition of coefficient rows: descending eigenvalues
/// clamped at zero, eigenvector signs fixed by the first sizable entry.
fn coefficient_spectrum(coeffs: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = coeffs.nrows() as f64;
    let dim = coeffs.ncols();
    let mean = coeffs.row_mean();
    let mut cov = (coeffs.transpose() * coeffs) / n - mean.transpose() * &mean;
    // kill floating-point asymmetry before the eigensolver
    let cov_t = cov.transpose();
    cov = (&cov + cov_t) * 0.5;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lam_max = eig.eigenvalues[order[0]].max(0.0);
    // guard against pure round-off spectra (e.g. identical curves) by also
    // measuring against the coefficient magnitude
    let coeff_scale = coeffs.norm_squared() / coeffs.nrows().max(1) as f64;
    let floor = EIG_CLAMP_RTOL * lam_max.max(coeff_scale);
    let mut eigvals = Vec::with_capacity(dim);
    let mut eigvecs = DMatrix::zeros(dim, dim);
    for (j, &src) in order.iter().enumerate() {
        let lam = eig.eigenvalues[src];
        eigvals.push(if lam < floor { 0.0 } else { lam });
        let col = eig.eigenvectors.column(src);
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let flip = col
            .iter()
            .find(|v| v.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE))
            .map_or(1.0, |v| v.signum());
        for i in 0..dim {
            eigvecs[(i, j)] = col[i] * flip;
        }
    }
    Ok((eigvals, eigvecs))
}

/// Projection of a spline onto a class eigenspace: the mean plus the first
/// `n` eigen-components of the centered function. Returns the approximation
/// and the residual norm.
pub fn project_to_eigenspace(f: &Spline, model: &ClassModel, n: usize) -> Result<(Spline, f64)> {
    if n > model.n_retained {
        return Err(FdaError::TooManyEigenfunctions {
            requested: n,
            available: model.n_retained,
        });
    }
    let family = SplineFamily::from_splines(vec![f.clone()])?;
    let coeff_row = decompose_onto(&family, &model.basis)?.coeff;
    let a = DVector::from_iterator(model.dim(), coeff_row.row(0).iter().copied());
    let centered = &a - &model.mean_coeffs;
    let mut approx = model.mean_coeffs.clone();
    let mut residual = centered.clone();
    for j in 0..n {
        let v = model.eigvecs.column(j);
        let score = v.dot(&centered);
        approx += score * v;
        residual -= score * v;
    }
    let coeffs = DMatrix::from_fn(1, model.dim(), |_, c| approx[c]);
    let fhat = model.basis.family().lincomb(&coeffs)?.member(0);
    Ok((fhat, residual.norm()))
}

/// The classifier's view of one test point against every class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOutput {
    pub label: usize,
    /// `‖x - f̂_i‖` per class.
    pub residual_norms: Vec<f64>,
    /// Squared residual norms normalized to sum to one.
    pub weights: Vec<f64>,
}

/// Precomputed per-point, per-class distance pieces: squared distances at
/// any eigenvalue counts are table lookups.
pub struct ProjectionTables {
    pub classes: usize,
    pub points: usize,
    /// `base[class][point]` = `‖x‖² - ‖a‖² + ‖a - m‖²`.
    base: Vec<Vec<f64>>,
    /// `cumsq[class][point][n]` = sum of the first `n` squared scores.
    cumsq: Vec<Vec<Vec<f64>>>,
    /// `space[class][point]` = `‖x‖² - ‖a‖²`, the squared distance to the
    /// whole class spline space.
    space: Vec<Vec<f64>>,
    caps: Vec<usize>,
}

impl ProjectionTables {
    /// Squared distance of `point` to class `class` with `n` eigenfunctions.
    pub fn distance_sq(&self, point: usize, class: usize, n: usize) -> f64 {
        (self.base[class][point] - self.cumsq[class][point][n]).max(0.0)
    }

    /// Squared distance of `point` to the whole spline space of `class`,
    /// with no eigen-truncation.
    pub fn space_distance_sq(&self, point: usize, class: usize) -> f64 {
        self.space[class][point].max(0.0)
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// Classifier outputs at the given per-class eigenvalue counts; ties go
    /// to the lowest class label.
    pub fn classify_at(&self, counts: &[usize]) -> Result<Vec<ClassifierOutput>> {
        self.check_counts(counts)?;
        Ok((0..self.points)
            .map(|p| {
                let d2: Vec<f64> = (0..self.classes)
                    .map(|c| self.distance_sq(p, c, counts[c]))
                    .collect();
                output_from_distances(&d2)
            })
            .collect())
    }

    pub fn check_counts(&self, counts: &[usize]) -> Result<()> {
        if counts.len() != self.classes {
            return Err(FdaError::Config(format!(
                "expected {} eigenvalue counts, got {}",
                self.classes,
                counts.len()
            )));
        }
        for (c, (&n, &cap)) in counts.iter().zip(&self.caps).enumerate() {
            if n > cap {
                return Err(FdaError::TooManyEigenfunctions {
                    requested: n,
                    available: cap,
                }
                .with_context(format!("class {c}")));
            }
        }
        Ok(())
    }
}

fn output_from_distances(d2: &[f64]) -> ClassifierOutput {
    let total: f64 = d2.iter().sum();
    let weights: Vec<f64> = if total > 0.0 {
        d2.iter().map(|&d| d / total).collect()
    } else {
        vec![1.0 / d2.len() as f64; d2.len()]
    };
    let mut label = 0;
    for (c, &d) in d2.iter().enumerate() {
        if d < d2[label] {
            label = c;
        }
    }
    ClassifierOutput {
        label,
        residual_norms: d2.iter().map(|&d| d.sqrt()).collect(),
        weights,
    }
}

/// Runtime classifier: fitted models plus their data projectors.
pub struct Classifier<'a> {
    models: &'a [ClassModel],
    projectors: Vec<DataProjector>,
}

impl<'a> Classifier<'a> {
    pub fn new(models: &'a [ClassModel]) -> Result<Self> {
        if models.is_empty() {
            return Err(FdaError::Config("no class models".to_string()));
        }
        let projectors = models
            .iter()
            .map(|m| DataProjector::new(m.basis.clone()).map_err(FdaError::from))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models, projectors })
    }

    pub fn models(&self) -> &[ClassModel] {
        self.models
    }

    /// Builds the distance tables for a whole curve set.
    pub fn tables(&self, data: &DiscreteCurveSet) -> Result<ProjectionTables> {
        // per class: base terms, cumulative squared scores, space distances
        type ClassTables = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>);
        let points = data.len();
        let norms: Vec<f64> = (0..points).map(|i| data.norm_squared(i)).collect();
        let per_class: Vec<ClassTables> = self
            .models
            .par_iter()
            .zip(&self.projectors)
            .map(|(model, projector)| {
                let coeffs = projector.coefficients(data).map_err(FdaError::from)?;
                let dim = model.dim();
                let mut base = Vec::with_capacity(points);
                let mut cumsq = Vec::with_capacity(points);
                let mut space = Vec::with_capacity(points);
                for (p, &norm) in norms.iter().enumerate() {
                    let a = coeffs.row(p);
                    let a_sq: f64 = a.iter().map(|v| v * v).sum();
                    let centered = DVector::from_iterator(
                        dim,
                        a.iter().zip(model.mean_coeffs.iter()).map(|(x, m)| x - m),
                    );
                    base.push(norm - a_sq + centered.norm_squared());
                    space.push(norm - a_sq);
                    let mut run = Vec::with_capacity(model.n_retained + 1);
                    run.push(0.0);
                    let mut acc = 0.0;
                    for j in 0..model.n_retained {
                        let score = model.eigvecs.column(j).dot(&centered);
                        acc += score * score;
                        run.push(acc);
                    }
                    cumsq.push(run);
                }
                Ok((base, cumsq, space))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut base = Vec::with_capacity(self.models.len());
        let mut cumsq = Vec::with_capacity(self.models.len());
        let mut space = Vec::with_capacity(self.models.len());
        for (b, c, sp) in per_class {
            base.push(b);
            cumsq.push(c);
            space.push(sp);
        }
        Ok(ProjectionTables {
            classes: self.models.len(),
            points,
            base,
            cumsq,
            space,
            caps: self.models.iter().map(|m| m.n_retained).collect(),
        })
    }

    /// Classifies a whole curve set at the given eigenvalue counts.
    pub fn classify_set(
        &self,
        data: &DiscreteCurveSet,
        counts: &[usize],
    ) -> Result<Vec<ClassifierOutput>> {
        self.tables(data)?.classify_at(counts)
    }
}

/// Classifies one discrete curve against all models.
pub fn classify(
    arguments: &[f64],
    values: &[f64],
    models: &[ClassModel],
    counts: &[usize],
) -> Result<ClassifierOutput> {
    let data = DiscreteCurveSet::common_grid(arguments.to_vec(), vec![values.to_vec()])?;
    let classifier = Classifier::new(models)?;
    let mut outputs = classifier.classify_set(&data, counts)?;
    Ok(outputs.remove(0))
}

/// Mean own-class weight per class: with `counts` the eigen-truncated
/// distances, without them the distances to the whole class spline spaces.
pub fn relative_class_distances(
    models: &[ClassModel],
    per_class_data: &[DiscreteCurveSet],
    counts: Option<&[usize]>,
) -> Result<Vec<f64>> {
    if models.len() != per_class_data.len() {
        return Err(FdaError::Config(
            "one curve set per class model is required".to_string(),
        ));
    }
    let classifier = Classifier::new(models)?;
    let mut own = Vec::with_capacity(models.len());
    for (class, data) in per_class_data.iter().enumerate() {
        if data.is_empty() {
            return Err(FdaError::EmptyClass(class));
        }
        let tables = classifier.tables(data)?;
        let mut acc = 0.0;
        for p in 0..tables.points {
            let d2: Vec<f64> = (0..tables.classes)
                .map(|c| match counts {
                    Some(counts) => tables.distance_sq(p, c, counts[c]),
                    None => tables.space_distance_sq(p, c),
                })
                .collect();
            acc += output_from_distances(&d2).weights[class];
        }
        own.push(acc / tables.points as f64);
    }
    Ok(own)
}
