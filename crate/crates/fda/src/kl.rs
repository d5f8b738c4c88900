//! Karhunen–Loève synthetic curve generator, used to validate the FPCA
//! round trip.

use crate::error::{FdaError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use splinet::{DiscreteCurveSet, Spline, SplineFamily};

/// Generative model: `X(t) = mean(t) + sum_k sqrt(lambda_k) Z_k e_k(t)` with
/// independent standard-normal `Z_k`.
#[derive(Debug, Clone)]
pub struct KlModelSpec {
    pub mean: Spline,
    pub eigenvalues: Vec<f64>,
    /// Orthonormal family, at least `truncation` members.
    pub eigenfunctions: SplineFamily,
    pub truncation: usize,
}

impl KlModelSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(&bad) = self.eigenvalues.iter().find(|&&l| l < 0.0) {
            return Err(FdaError::NegativeEigenvalue(bad));
        }
        if self.truncation > self.eigenfunctions.len() || self.truncation > self.eigenvalues.len() {
            return Err(FdaError::TruncationTooDeep {
                truncation: self.truncation,
                eigenfunctions: self.eigenfunctions.len().min(self.eigenvalues.len()),
            });
        }
        Ok(())
    }
}

/// Samples `count` curves from the model on the given argument grid.
pub fn sample_kl(
    spec: &KlModelSpec,
    grid: &[f64],
    count: usize,
    seed: u64,
) -> Result<DiscreteCurveSet> {
    spec.validate()?;
    let mean_values: Vec<f64> = grid
        .iter()
        .map(|&x| spec.mean.evaluate(x))
        .collect::<std::result::Result<_, _>>()?;
    let mut modes = Vec::with_capacity(spec.truncation);
    for k in 0..spec.truncation {
        let e = spec.eigenfunctions.member(k);
        let values: Vec<f64> = grid
            .iter()
            .map(|&x| e.evaluate(x))
            .collect::<std::result::Result<_, _>>()?;
        modes.push((spec.eigenvalues[k].sqrt(), values));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let mut row = mean_values.clone();
            for (scale, mode) in &modes {
                let z: f64 = StandardNormal.sample(&mut rng);
                let w = scale * z;
                for (r, m) in row.iter_mut().zip(mode) {
                    *r += w * m;
                }
            }
            row
        })
        .collect();
    Ok(DiscreteCurveSet::common_grid(grid.to_vec(), rows)?)
}
