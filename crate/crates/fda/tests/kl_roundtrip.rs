//! FPCA round trip through the Karhunen–Loève generator, and the separable
//! two-class problem.

use splinet::{build_basis, BasisType, KnotVector};
use splinet_fda::classify::{fit_class, Classifier};
use splinet_fda::kl::{sample_kl, KlModelSpec};

fn unit_grid(len: usize) -> Vec<f64> {
    (0..len).map(|i| i as f64 / (len - 1) as f64).collect()
}

#[test]
fn eigenvalues_recovered_within_twenty_percent() {
    let knots = KnotVector::equidistant(0.0, 1.0, 12).unwrap();
    let basis = build_basis(&knots, 3, BasisType::Splinet).unwrap();
    let lams = [4.0, 1.0, 0.25];
    let spec = KlModelSpec {
        mean: basis.family().member(4),
        eigenvalues: lams.to_vec(),
        eigenfunctions: basis.family().clone(),
        truncation: 3,
    };
    let grid = unit_grid(512);
    let mut errors = vec![Vec::new(); 3];
    for seed in 0..20u64 {
        let data = sample_kl(&spec, &grid, 500, 1000 + seed).unwrap();
        let model = fit_class(0, &data, &knots, &knots, 3, BasisType::Splinet).unwrap();
        assert!(model.n_retained >= 3);
        for j in 0..3 {
            errors[j].push((model.eigvals[j] - lams[j]).abs() / lams[j]);
        }
    }
    for (j, errs) in errors.iter_mut().enumerate() {
        errs.sort_by(f64::total_cmp);
        let median = errs[errs.len() / 2];
        assert!(
            median < 0.2,
            "eigenvalue {j}: median relative error {median}"
        );
    }
}

#[test]
fn separable_classes_classify_almost_perfectly() {
    let knots = KnotVector::equidistant(0.0, 1.0, 12).unwrap();
    let basis = build_basis(&knots, 3, BasisType::Splinet).unwrap();
    let grid = unit_grid(256);
    // means separated by ten times the noise scale
    let scaled_member = |axis: usize, scale: f64| {
        let coeff =
            nalgebra::DMatrix::from_fn(1, basis.len(), |_, c| if c == axis { scale } else { 0.0 });
        basis.family().lincomb(&coeff).unwrap().member(0)
    };
    let spec = |mean: splinet::Spline| KlModelSpec {
        mean,
        eigenvalues: vec![1.0, 0.25],
        eigenfunctions: basis.family().clone(),
        truncation: 2,
    };
    let spec_a = spec(scaled_member(2, 10.0));
    let spec_b = spec(scaled_member(5, 10.0));

    let train_a = sample_kl(&spec_a, &grid, 100, 11).unwrap();
    let train_b = sample_kl(&spec_b, &grid, 100, 12).unwrap();
    let models = vec![
        fit_class(0, &train_a, &knots, &knots, 3, BasisType::Splinet).unwrap(),
        fit_class(1, &train_b, &knots, &knots, 3, BasisType::Splinet).unwrap(),
    ];
    let classifier = Classifier::new(&models).unwrap();

    let test_a = sample_kl(&spec_a, &grid, 50, 21).unwrap();
    let test_b = sample_kl(&spec_b, &grid, 50, 22).unwrap();
    let mut correct = 0usize;
    let counts = [2usize, 2];
    for out in classifier.classify_set(&test_a, &counts).unwrap() {
        if out.label == 0 {
            correct += 1;
        }
    }
    for out in classifier.classify_set(&test_b, &counts).unwrap() {
        if out.label == 1 {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / 100.0;
    assert!(accuracy >= 0.99, "accuracy {accuracy}");
}

#[test]
fn separable_classes_have_small_own_weights() {
    let knots = KnotVector::equidistant(0.0, 1.0, 12).unwrap();
    let basis = build_basis(&knots, 3, BasisType::Splinet).unwrap();
    let grid = unit_grid(256);
    let mk_spec = |axis: usize| {
        let coeff =
            nalgebra::DMatrix::from_fn(1, basis.len(), |_, c| if c == axis { 8.0 } else { 0.0 });
        KlModelSpec {
            mean: basis.family().lincomb(&coeff).unwrap().member(0),
            eigenvalues: vec![0.5],
            eigenfunctions: basis.family().clone(),
            truncation: 1,
        }
    };
    let spec_a = mk_spec(1);
    let spec_b = mk_spec(6);
    let train_a = sample_kl(&spec_a, &grid, 80, 31).unwrap();
    let train_b = sample_kl(&spec_b, &grid, 80, 32).unwrap();
    let models = vec![
        fit_class(0, &train_a, &knots, &knots, 3, BasisType::Splinet).unwrap(),
        fit_class(1, &train_b, &knots, &knots, 3, BasisType::Splinet).unwrap(),
    ];
    let sets = vec![
        sample_kl(&spec_a, &grid, 40, 41).unwrap(),
        sample_kl(&spec_b, &grid, 40, 42).unwrap(),
    ];
    let own =
        splinet_fda::classify::relative_class_distances(&models, &sets, Some(&[1, 1])).unwrap();
    assert!(own[0] < 0.5 && own[1] < 0.5, "own weights {own:?}");
}
