//! Data-driven knot selection: greedy piecewise-constant error reduction
//! with a Monte-Carlo white-noise reference for the stopping rule.
//!
//! Knots live on the data grid. A knot at grid index `c` splits the segment
//! containing it between `c - 1` and `c`; every curve is fitted on each
//! segment by its own segment mean, and AMSE averages the squared residuals
//! over curves and grid points.

use crate::error::{FdaError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use splinet::{DiscreteCurveSet, KnotVector};

/// How the stopping rule reads the crossings of the data drops against the
/// reference drops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Keep knots while every drop so far beats the reference; stop at the
    /// first one that falls below.
    #[default]
    FirstDrop,
    /// The literal largest `r` with `eps(r) >= eps0(r)` over the whole
    /// recorded path.
    LastCrossing,
}

/// One greedy step: the added knot value and the error after adding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotStep {
    pub knot: f64,
    pub amse: f64,
    /// Relative drop achieved by this knot: `(prev - amse) / prev`.
    pub eps: f64,
}

/// Result of a knot-selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSelection {
    /// Selected knots including the range endpoints.
    pub knots: KnotVector,
    /// Every greedy step taken, including those past the stopping point.
    pub history: Vec<KnotStep>,
    /// Number of accepted steps.
    pub n_selected: usize,
    /// AMSE of the start configuration.
    pub start_amse: f64,
}

/// Average relative drops of fitting white noise, used as the reference of
/// the stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub grid_len: usize,
    pub replications: usize,
    pub seed: u64,
    /// `eps0[r - 1]` is the average drop achieved by the r-th knot.
    pub eps0: Vec<f64>,
}

/// Tuning of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdkParams {
    pub r_max: usize,
    /// Per-step bootstrap fraction of curves; 1.0 keeps the run deterministic.
    pub rho: f64,
    pub seed: u64,
    pub stop: StopRule,
}

impl DdkParams {
    pub fn for_grid(grid_len: usize) -> Self {
        Self {
            r_max: default_r_max(grid_len),
            rho: 1.0,
            seed: 0,
            stop: StopRule::default(),
        }
    }
}

pub fn default_r_max(grid_len: usize) -> usize {
    grid_len.saturating_sub(2).min(256)
}

struct Segment {
    lo: usize,
    hi: usize, // exclusive
    whole_ss: f64,
    /// Best split: (reduction, break index); None when unsplittable or stale.
    best: Option<(f64, usize)>,
}

struct Greedy<'a> {
    values: Vec<&'a [f64]>, // per curve, len T each
    t: usize,
    /// Per-curve prefix sums, length T + 1.
    prefix: Vec<Vec<f64>>,
    /// Combined squared prefix sums over all curves.
    sq_prefix: Vec<f64>,
    segments: Vec<Segment>,
    total_between: f64, // sum of whole_ss over segments
}

impl<'a> Greedy<'a> {
    fn new(values: Vec<&'a [f64]>, breaks: &[usize]) -> Self {
        let t = values[0].len();
        let prefix: Vec<Vec<f64>> = values
            .iter()
            .map(|row| {
                let mut p = Vec::with_capacity(t + 1);
                let mut acc = 0.0;
                p.push(0.0);
                for &v in *row {
                    acc += v;
                    p.push(acc);
                }
                p
            })
            .collect();
        let mut sq_prefix = Vec::with_capacity(t + 1);
        let mut acc = 0.0;
        sq_prefix.push(0.0);
        for j in 0..t {
            for row in &values {
                acc += row[j] * row[j];
            }
            sq_prefix.push(acc);
        }
        let mut bounds = vec![0usize];
        bounds.extend(breaks.iter().copied());
        bounds.push(t);
        let mut engine = Self {
            values,
            t,
            prefix,
            sq_prefix,
            segments: Vec::new(),
            total_between: 0.0,
        };
        for w in bounds.windows(2) {
            let whole = engine.between_ss(w[0], w[1]);
            engine.total_between += whole;
            engine.segments.push(Segment {
                lo: w[0],
                hi: w[1],
                whole_ss: whole,
                best: None,
            });
        }
        engine
    }

    fn curve_count(&self) -> usize {
        self.values.len()
    }

    /// Sum over curves of (segment sum)^2 / segment length.
    fn between_ss(&self, lo: usize, hi: usize) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        let len = (hi - lo) as f64;
        self.prefix
            .iter()
            .map(|p| {
                let s = p[hi] - p[lo];
                s * s / len
            })
            .sum()
    }

    fn between_ss_subset(&self, lo: usize, hi: usize, active: &[usize]) -> f64 {
        let len = (hi - lo) as f64;
        active
            .iter()
            .map(|&l| {
                let p = &self.prefix[l];
                let s = p[hi] - p[lo];
                s * s / len
            })
            .sum()
    }

    fn total_sse(&self) -> f64 {
        (self.sq_prefix[self.t] - self.total_between).max(0.0)
    }

    fn amse(&self) -> f64 {
        self.total_sse() / (self.curve_count() * self.t) as f64
    }

    /// Best split of one segment over the given curves; ties go to the
    /// leftmost candidate.
    fn scan_segment(&self, lo: usize, hi: usize, active: &[usize]) -> Option<(f64, usize)> {
        if hi - lo < 2 {
            return None;
        }
        let whole = self.between_ss_subset(lo, hi, active);
        let eval = |c: usize| {
            let left = self.between_ss_subset(lo, c, active);
            let right = self.between_ss_subset(c, hi, active);
            left + right - whole
        };
        let candidates = (lo + 1)..hi;
        let pick_better = |a: (f64, usize), b: (f64, usize)| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        if (hi - lo) * active.len() > 1 << 14 {
            candidates
                .into_par_iter()
                .map(|c| (eval(c), c))
                .reduce_with(&pick_better)
        } else {
            candidates.map(|c| (eval(c), c)).reduce(pick_better)
        }
    }

    /// Greedy step over all curves, using cached per-segment scans.
    fn add_best_deterministic(&mut self) -> Option<usize> {
        let all: Vec<usize> = (0..self.curve_count()).collect();
        for i in 0..self.segments.len() {
            if self.segments[i].best.is_none() {
                let (lo, hi) = (self.segments[i].lo, self.segments[i].hi);
                self.segments[i].best = self.scan_segment(lo, hi, &all);
            }
        }
        let mut best: Option<(f64, usize, usize)> = None; // (reduction, c, segment idx)
        for (i, seg) in self.segments.iter().enumerate() {
            if let Some((red, c)) = seg.best {
                let better = match best {
                    None => true,
                    Some((br, bc, _)) => red > br || (red == br && c < bc),
                };
                if better {
                    best = Some((red, c, i));
                }
            }
        }
        let (_, c, idx) = best?;
        self.split(idx, c);
        Some(c)
    }

    /// Greedy step where the candidate scoring uses a bootstrap subsample of
    /// the curves; the split is applied to the full data.
    fn add_best_subsampled(&mut self, active: &[usize]) -> Option<usize> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, seg) in self.segments.iter().enumerate() {
            if let Some((red, c)) = self.scan_segment(seg.lo, seg.hi, active) {
                let better = match best {
                    None => true,
                    Some((br, bc, _)) => red > br || (red == br && c < bc),
                };
                if better {
                    best = Some((red, c, i));
                }
            }
        }
        let (_, c, idx) = best?;
        self.split(idx, c);
        Some(c)
    }

    fn split(&mut self, idx: usize, c: usize) {
        let (lo, hi, old_whole) = {
            let s = &self.segments[idx];
            (s.lo, s.hi, s.whole_ss)
        };
        let left_whole = self.between_ss(lo, c);
        let right_whole = self.between_ss(c, hi);
        self.total_between += left_whole + right_whole - old_whole;
        self.segments[idx] = Segment {
            lo,
            hi: c,
            whole_ss: left_whole,
            best: None,
        };
        self.segments.insert(
            idx + 1,
            Segment {
                lo: c,
                hi,
                whole_ss: right_whole,
                best: None,
            },
        );
    }
}

/// Row-major copy of the curve values plus the shared grid.
fn grid_rows(data: &DiscreteCurveSet) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    match data {
        DiscreteCurveSet::CommonGrid { arguments, values } => {
            let rows: Vec<Vec<f64>> = (0..values.nrows())
                .map(|i| values.row(i).iter().copied().collect())
                .collect();
            Ok((arguments.clone(), rows))
        }
        DiscreteCurveSet::PerCurve(_) => Err(FdaError::Config(
            "knot selection needs curves on a common grid".to_string(),
        )),
    }
}

/// Maps knot values onto break indices in `args`, requiring exact grid hits.
fn breaks_from_knots(args: &[f64], knots: &[f64]) -> Result<Vec<usize>> {
    let mut breaks = Vec::new();
    for &k in knots {
        if k == args[0] || k == args[args.len() - 1] {
            continue; // endpoints bound the range, they do not split it
        }
        let idx = args.partition_point(|&a| a < k);
        if idx >= args.len() || args[idx] != k {
            return Err(FdaError::KnotOffGrid(k));
        }
        breaks.push(idx);
    }
    breaks.sort_unstable();
    breaks.dedup();
    Ok(breaks)
}

/// Average mean square error of the best per-curve piecewise-constant fit
/// with the given knots (grid points; endpoints allowed and ignored).
pub fn amse(data: &DiscreteCurveSet, knots: &[f64]) -> Result<f64> {
    let (args, rows) = grid_rows(data)?;
    let breaks = breaks_from_knots(&args, knots)?;
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    Ok(Greedy::new(refs, &breaks).amse())
}

/// One greedy step: adds the grid point with the largest AMSE reduction.
pub fn add_knot(data: &DiscreteCurveSet, current: &KnotSelection) -> Result<KnotSelection> {
    let (args, rows) = grid_rows(data)?;
    let breaks = breaks_from_knots(&args, current.knots.values())?;
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let mut engine = Greedy::new(refs, &breaks);
    let prev = engine.amse();
    let c = engine
        .add_best_deterministic()
        .ok_or(FdaError::NoCandidates)?;
    let after = engine.amse();
    let mut knot_values: Vec<f64> = current.knots.values().to_vec();
    knot_values.push(args[c]);
    knot_values.sort_by(f64::total_cmp);
    let mut history = current.history.clone();
    history.push(KnotStep {
        knot: args[c],
        amse: after,
        eps: if prev > 0.0 {
            (prev - after) / prev
        } else {
            0.0
        },
    });
    let n_selected = history.len();
    Ok(KnotSelection {
        knots: KnotVector::new(knot_values)?,
        history,
        n_selected,
        start_amse: current.start_amse,
    })
}

/// Runs the greedy selector on `M` independent standard-Gaussian white-noise
/// curves and averages the per-step relative drops.
pub fn reference_curve(
    grid_len: usize,
    r_max: usize,
    m: usize,
    seed: u64,
) -> Result<ReferenceCurve> {
    if grid_len < 2 {
        return Err(FdaError::GridTooSmall {
            needed: 2,
            got: grid_len,
        });
    }
    let r_max = r_max.min(grid_len - 1);
    let runs: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(
                seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(rep as u64 + 1)),
            );
            let noise: Vec<f64> = (0..grid_len).map(|_| rng.sample(StandardNormal)).collect();
            let mut engine = Greedy::new(vec![noise.as_slice()], &[]);
            let mut drops = Vec::with_capacity(r_max);
            let mut prev = engine.amse();
            for _ in 0..r_max {
                if prev <= 0.0 {
                    break;
                }
                if engine.add_best_deterministic().is_none() {
                    break;
                }
                let after = engine.amse();
                drops.push((prev - after) / prev);
                prev = after;
            }
            drops
        })
        .collect();
    let steps = runs.iter().map(Vec::len).max().unwrap_or(0);
    let mut eps0 = vec![0.0f64; steps];
    let mut counts = vec![0usize; steps];
    for run in &runs {
        for (r, &e) in run.iter().enumerate() {
            eps0[r] += e;
            counts[r] += 1;
        }
    }
    for (e, &c) in eps0.iter_mut().zip(&counts) {
        if c > 0 {
            *e /= c as f64;
        }
    }
    Ok(ReferenceCurve {
        grid_len,
        replications: m,
        seed,
        eps0,
    })
}

/// Greedy selection with the reference-curve stopping rule. Records up to
/// `params.r_max` steps, then keeps the first `N` of them according to the
/// stop rule.
pub fn select_knots(
    data: &DiscreteCurveSet,
    start_knots: &[f64],
    reference: &ReferenceCurve,
    params: &DdkParams,
) -> Result<KnotSelection> {
    let run = greedy_run(data, start_knots, RunLimit::Steps(params.r_max), params)?;
    finish_selection(data, start_knots, run, Some(reference), params.stop)
}

/// Greedy selection to an exact budget of internal knots, no stopping rule.
/// A break in front of the terminal grid point is a legitimate fitting step
/// but coincides with the terminal knot, so the loop runs until the distinct
/// internal knot count reaches the budget.
pub fn select_knots_budget(
    data: &DiscreteCurveSet,
    start_knots: &[f64],
    internal_budget: usize,
    params: &DdkParams,
) -> Result<KnotSelection> {
    let (args, _) = grid_rows(data)?;
    let existing = breaks_from_knots(&args, start_knots)?
        .iter()
        .filter(|&&b| b < args.len() - 1)
        .count();
    let run = greedy_run(
        data,
        start_knots,
        RunLimit::InternalBudget {
            existing,
            target: internal_budget,
        },
        params,
    )?;
    let selection = finish_selection(data, start_knots, run, None, StopRule::FirstDrop)?;
    if selection.knots.internal_count() != internal_budget {
        return Err(FdaError::NoCandidates);
    }
    Ok(selection)
}

enum RunLimit {
    Steps(usize),
    InternalBudget { existing: usize, target: usize },
}

struct GreedyRun {
    steps: Vec<KnotStep>,
    start_amse: f64,
}

fn greedy_run(
    data: &DiscreteCurveSet,
    start_knots: &[f64],
    limit: RunLimit,
    params: &DdkParams,
) -> Result<GreedyRun> {
    let (args, rows) = grid_rows(data)?;
    let breaks = breaks_from_knots(&args, start_knots)?;
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let n_curves = refs.len();
    let mut engine = Greedy::new(refs, &breaks);
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let subsampled = params.rho < 1.0 && n_curves > 1;
    let subset_size = ((n_curves as f64 * params.rho).round() as usize).clamp(1, n_curves);

    let start_amse = engine.amse();
    let t_len = args.len();
    let mut prev = start_amse;
    let mut steps = Vec::new();
    let mut internal_added = 0usize;
    loop {
        match limit {
            RunLimit::Steps(max_steps) => {
                if steps.len() >= max_steps {
                    break;
                }
            }
            RunLimit::InternalBudget { existing, target } => {
                if existing + internal_added >= target {
                    break;
                }
            }
        }
        if prev <= 0.0 {
            break;
        }
        let added = if subsampled {
            let mut idx: Vec<usize> = (0..n_curves).collect();
            // partial Fisher-Yates for the bootstrap subsample
            for i in 0..subset_size {
                let j = rng.gen_range(i..n_curves);
                idx.swap(i, j);
            }
            let mut subset = idx[..subset_size].to_vec();
            subset.sort_unstable();
            engine.add_best_subsampled(&subset)
        } else {
            engine.add_best_deterministic()
        };
        let Some(c) = added else { break };
        if c < t_len - 1 {
            internal_added += 1;
        }
        let after = engine.amse();
        steps.push(KnotStep {
            knot: args[c],
            amse: after,
            eps: if prev > 0.0 {
                (prev - after) / prev
            } else {
                0.0
            },
        });
        prev = after;
    }
    Ok(GreedyRun { steps, start_amse })
}

fn finish_selection(
    data: &DiscreteCurveSet,
    start_knots: &[f64],
    run: GreedyRun,
    reference: Option<&ReferenceCurve>,
    stop: StopRule,
) -> Result<KnotSelection> {
    let (args, _) = grid_rows(data)?;
    let n_selected = match reference {
        None => run.steps.len(),
        Some(reference) => {
            let crossings: Vec<bool> = run
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| reference.eps0.get(i).is_some_and(|&e0| s.eps >= e0))
                .collect();
            match stop {
                StopRule::FirstDrop => crossings.iter().take_while(|&&c| c).count(),
                StopRule::LastCrossing => crossings.iter().rposition(|&c| c).map_or(0, |i| i + 1),
            }
        }
    };
    // keep: every start knot, the range endpoints, and the accepted steps
    let mut knot_values: Vec<f64> = start_knots.to_vec();
    if !knot_values.contains(&args[0]) {
        knot_values.push(args[0]);
    }
    let last = args[args.len() - 1];
    if !knot_values.contains(&last) {
        knot_values.push(last);
    }
    for s in &run.steps[..n_selected] {
        knot_values.push(s.knot);
    }
    knot_values.sort_by(f64::total_cmp);
    knot_values.dedup();
    Ok(KnotSelection {
        knots: KnotVector::new(knot_values)?,
        history: run.steps,
        n_selected,
        start_amse: run.start_amse,
    })
}
