//! Coordinate-ascent search for the per-class eigenfunction counts.
//!
//! Each step increments the coordinate with the largest gain in average
//! validation accuracy, tolerating up to `patience` consecutive
//! non-improving steps; the best point of every path wins, over the
//! all-zeros start plus seeded random restarts.

use crate::classify::ProjectionTables;
use crate::error::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Consecutive non-improving steps tolerated before a path stops.
    pub patience: usize,
    /// Random restarts in addition to the all-zeros start.
    pub restarts: usize,
    pub seed: u64,
    /// Cap on each coordinate, additionally bounded by the retained counts.
    pub max_per_class: Option<usize>,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            patience: 5,
            restarts: 3,
            seed: 0,
            max_per_class: None,
        }
    }
}

/// One evaluated point of a search path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub counts: Vec<usize>,
    pub average_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub n_opt: Vec<usize>,
    pub best_average_accuracy: f64,
    /// Per-class accuracy rates a(n) at the optimum.
    pub accuracy_rates: Vec<f64>,
    /// Per-class mean own-class weights s(n) at the optimum.
    pub success_rates: Vec<f64>,
    /// The steps of every ascent path, in evaluation order.
    pub trajectory: Vec<SearchStep>,
}

struct Evaluator<'a> {
    tables: &'a ProjectionTables,
    targets: &'a [usize],
    class_sizes: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    fn new(tables: &'a ProjectionTables, targets: &'a [usize]) -> Self {
        let mut class_sizes = vec![0usize; tables.classes];
        for &t in targets {
            class_sizes[t] += 1;
        }
        Self {
            tables,
            targets,
            class_sizes,
        }
    }

    /// Average over classes of the per-class correct-classification rate.
    fn average_accuracy(&self, counts: &[usize]) -> f64 {
        let k = self.tables.classes;
        let mut correct = vec![0usize; k];
        for (p, &t) in self.targets.iter().enumerate() {
            let mut label = 0;
            let mut best = f64::INFINITY;
            for (c, &n) in counts.iter().enumerate().take(k) {
                let d = self.tables.distance_sq(p, c, n);
                if d < best {
                    best = d;
                    label = c;
                }
            }
            if label == t {
                correct[t] += 1;
            }
        }
        let mut acc = 0.0;
        let mut seen = 0usize;
        for (&hits, &size) in correct.iter().zip(&self.class_sizes) {
            if size > 0 {
                acc += hits as f64 / size as f64;
                seen += 1;
            }
        }
        if seen == 0 {
            0.0
        } else {
            acc / seen as f64
        }
    }
}

/// Runs the marginal coordinate ascent and returns the best counts found.
pub fn search_eigen_counts(
    tables: &ProjectionTables,
    targets: &[usize],
    params: &SearchParams,
) -> Result<SearchOutcome> {
    let k = tables.classes;
    let caps: Vec<usize> = tables
        .caps()
        .iter()
        .map(|&c| c.min(params.max_per_class.unwrap_or(usize::MAX)))
        .collect();
    let evaluator = Evaluator::new(tables, targets);
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);

    let mut starts = vec![vec![0usize; k]];
    for _ in 0..params.restarts {
        starts.push(
            caps.iter()
                .map(|&cap| rng.gen_range(0..=cap.min(16)))
                .collect(),
        );
    }

    let mut trajectory = Vec::new();
    let mut best_counts = vec![0usize; k];
    let mut best_acc = f64::NEG_INFINITY;
    for start in starts {
        let (counts, acc) = ascend(&evaluator, &caps, start, params.patience, &mut trajectory);
        if acc > best_acc {
            best_acc = acc;
            best_counts = counts;
        }
    }

    let outputs = tables.classify_at(&best_counts)?;
    let predictions: Vec<usize> = outputs.iter().map(|o| o.label).collect();
    let weights: Vec<Vec<f64>> = outputs.into_iter().map(|o| o.weights).collect();
    let report = crate::metrics::evaluate_with_weights(&predictions, targets, &weights, k)?;
    Ok(SearchOutcome {
        n_opt: best_counts,
        best_average_accuracy: best_acc,
        accuracy_rates: report.accuracy_rates.clone(),
        success_rates: report.success_rates.clone().unwrap_or_default(),
        trajectory,
    })
}

fn ascend(
    evaluator: &Evaluator<'_>,
    caps: &[usize],
    start: Vec<usize>,
    patience: usize,
    trajectory: &mut Vec<SearchStep>,
) -> (Vec<usize>, f64) {
    let k = caps.len();
    let mut counts = start;
    let mut acc = evaluator.average_accuracy(&counts);
    trajectory.push(SearchStep {
        counts: counts.clone(),
        average_accuracy: acc,
    });
    let mut best_counts = counts.clone();
    let mut best_acc = acc;
    let mut bad_steps = 0usize;
    loop {
        let mut best_step: Option<(f64, usize)> = None;
        for c in 0..k {
            if counts[c] >= caps[c] {
                continue;
            }
            counts[c] += 1;
            let candidate = evaluator.average_accuracy(&counts);
            counts[c] -= 1;
            let better = match best_step {
                None => true,
                Some((a, _)) => candidate > a,
            };
            if better {
                best_step = Some((candidate, c));
            }
        }
        let Some((new_acc, c)) = best_step else { break };
        counts[c] += 1;
        acc = new_acc;
        trajectory.push(SearchStep {
            counts: counts.clone(),
            average_accuracy: acc,
        });
        if acc > best_acc {
            best_acc = acc;
            best_counts = counts.clone();
            bad_steps = 0;
        } else {
            bad_steps += 1;
            if bad_steps > patience {
                break;
            }
        }
    }
    (best_counts, best_acc)
}
