//! Behavior of the knot selector on structured and structureless data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use splinet::DiscreteCurveSet;
use splinet_fda::ddk::{reference_curve, select_knots, DdkParams};

fn unit_grid(len: usize) -> Vec<f64> {
    (0..len).map(|i| i as f64 / (len - 1) as f64).collect()
}

/// A staircase with five jumps of distinct sizes plus tiny noise: the five
/// jump locations must be found first and survive the stopping rule.
#[test]
fn staircase_jumps_are_found_first() {
    let grid = 256usize;
    let args = unit_grid(grid);
    let jumps = [40usize, 80, 128, 176, 220];
    let levels = [0.0, 3.0, 1.0, 4.5, 2.0, 5.5];
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    let values: Vec<f64> = (0..grid)
        .map(|t| {
            let step = jumps.iter().filter(|&&j| t >= j).count();
            let noise: f64 = rng.sample(StandardNormal);
            levels[step] + 1e-3 * noise
        })
        .collect();
    let data = DiscreteCurveSet::common_grid(args.clone(), vec![values]).unwrap();
    let reference = reference_curve(grid, 254, 100, 4242).unwrap();
    let params = DdkParams::for_grid(grid);
    let selection = select_knots(&data, &[args[0], args[grid - 1]], &reference, &params).unwrap();

    assert!(
        selection.n_selected >= 5,
        "stopped after {}",
        selection.n_selected
    );
    let mut first_five: Vec<f64> = selection.history[..5].iter().map(|s| s.knot).collect();
    first_five.sort_by(f64::total_cmp);
    let expected: Vec<f64> = jumps.iter().map(|&j| args[j]).collect();
    assert_eq!(first_five, expected);
}

/// White noise identical in law to the reference: the stopping rule should
/// keep almost nothing.
#[test]
fn same_law_noise_selects_few_knots() {
    let grid = 256usize;
    let args = unit_grid(grid);
    let reference = reference_curve(grid, 254, 100, 777).unwrap();
    let params = DdkParams::for_grid(grid);
    let mut selected = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(9000 + seed);
        let values: Vec<f64> = (0..grid).map(|_| rng.sample(StandardNormal)).collect();
        let data = DiscreteCurveSet::common_grid(args.clone(), vec![values]).unwrap();
        let sel = select_knots(&data, &[args[0], args[grid - 1]], &reference, &params).unwrap();
        selected.push(sel.n_selected);
    }
    selected.sort_unstable();
    let median = selected[selected.len() / 2];
    assert!(
        median <= 10,
        "median N_selected = {median}, all {selected:?}"
    );
}

/// Relative drops live in [0, 1] and AMSE never increases along the path.
#[test]
fn drops_are_normalized_and_monotone() {
    let grid = 128usize;
    let args = unit_grid(grid);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let values: Vec<f64> = (0..grid)
        .map(|t| (t as f64 / 12.0).sin() + 0.05 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let data = DiscreteCurveSet::common_grid(args.clone(), vec![values]).unwrap();
    let reference = reference_curve(grid, 64, 32, 3).unwrap();
    let params = DdkParams {
        r_max: 64,
        ..DdkParams::for_grid(grid)
    };
    let sel = select_knots(&data, &[args[0], args[grid - 1]], &reference, &params).unwrap();
    let mut prev = sel.start_amse;
    for s in &sel.history {
        assert!((0.0..=1.0).contains(&s.eps), "eps {} out of range", s.eps);
        assert!(s.amse <= prev + 1e-12);
        prev = s.amse;
    }
}

/// Two reference curves with disjoint seeds and M = 200 agree entrywise.
#[test]
fn reference_curve_is_stable_across_seeds() {
    let a = reference_curve(64, 32, 200, 1).unwrap();
    let b = reference_curve(64, 32, 200, 2).unwrap();
    for (r, (&x, &y)) in a.eps0.iter().zip(&b.eps0).enumerate() {
        let rel = (x - y).abs() / x.max(y).max(1e-12);
        assert!(rel < 0.2, "step {}: {x} vs {y} ({rel:.3} relative)", r + 1);
    }
}
