//! Gauss–Hermite quadrature for expectations under a standard normal.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for `E[f(Z)]`, `Z ~ N(0,1)` (probabilists' form).
/// Weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: eigen-decomposition of the Jacobi matrix with
    /// off-diagonals `√k`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut j = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            j[(k - 1, k)] = b;
            j[(k, k - 1)] = b;
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// `E[f(Z, U)]` for independent standard normals.
    pub fn expect2<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for (x, wx) in self.nodes.iter().zip(&self.weights) {
            for (y, wy) in self.nodes.iter().zip(&self.weights) {
                acc += wx * wy * f(*x, *y);
            }
        }
        acc
    }
}
