use nalgebra::DMatrix;
use std::sync::{Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// An `m`-point rule integrates polynomials up to degree `2m - 1` exactly,
/// which is what the per-interval spline inner products rely on.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by eigendecomposition of the Jacobi matrix
    /// (Golub–Welsch). Cached per node count.
    pub fn new(points: usize) -> Self {
        assert!(points >= 1, "quadrature needs at least one node");
        static CACHE: OnceLock<Mutex<Vec<Option<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        if guard.len() <= points {
            guard.resize(points + 1, None);
        }
        if let Some(rule) = &guard[points] {
            return rule.clone();
        }
        let rule = Self::compute(points);
        guard[points] = Some(rule.clone());
        rule
    }

    fn compute(m: usize) -> Self {
        if m == 1 {
            return Self {
                nodes: vec![0.0],
                weights: vec![2.0],
            };
        }
        let mut jacobi = DMatrix::<f64>::zeros(m, m);
        for j in 1..m {
            let b = j as f64 / ((4 * j * j - 1) as f64).sqrt();
            jacobi[(j, j - 1)] = b;
            jacobi[(j - 1, j)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let first = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], 2.0 * first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes mapped onto `[a, b]` with the matching weight scale `(b-a)/2`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}
