//! Gauss–Jacobi rules on [-1, 1] for the weight (1 - x)^a (1 + x)^b.
//!
//! Nodes and weights come from the Golub–Welsch eigenvalue formulation of the
//! monic Jacobi three-term recurrence.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussJacobiRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl GaussJacobiRule {
    /// Builds the `count`-node rule. Requires `a > -1`, `b > -1`.
    pub fn new(count: usize, a: f64, b: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("Gauss-Jacobi rule needs at least one node".into()));
        }
        if !(a > -1.0 && b > -1.0) {
            return Err(Error::Domain(format!(
                "Gauss-Jacobi exponents must exceed -1 (got a={a}, b={b})"
            )));
        }
        let ab = a + b;
        let mut jac = DMatrix::<f64>::zeros(count, count);
        for k in 0..count {
            let kf = k as f64;
            let diag = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let s = 2.0 * kf + ab;
                (b * b - a * a) / (s * (s + 2.0))
            };
            jac[(k, k)] = diag;
            if k + 1 < count {
                let j = kf + 1.0;
                let s = 2.0 * j + ab;
                let beta = 4.0 * j * (j + a) * (j + b) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0));
                let off = beta.sqrt();
                jac[(k, k + 1)] = off;
                jac[(k + 1, k)] = off;
            }
        }
        // total mass of the weight function
        let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
            - ln_gamma(ab + 2.0);
        let mu0 = ln_mu0.exp();

        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..count)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights, a, b })
    }

    /// Integrates `(1 - x)^a (1 + x)^b f(x)` over [-1, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
