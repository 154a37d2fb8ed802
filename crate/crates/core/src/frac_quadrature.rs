//! Discrete Riemann–Liouville integration and a Caputo-derivative oracle.
//!
//! The fractional integral `I^α g(t_n)` on the uniform grid `t_k = kτ` is
//! approximated by the right-endpoint product rule
//!
//! ```text
//! I^α g(t_n) ≈ β₀ Σ_{k=0}^{n-1} w_k g(t_{n-k}),   w_k = (k+1)^α − k^α,   β₀ = τ^α / Γ(α+1)
//! ```
//!
//! The same weights drive the history sum of the time stepper.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::jacobi::GaussJacobiRule;

/// Above this index the weights are evaluated as `k^α expm1(α log1p(1/k))`.
const CANCELLATION_SWITCH: usize = 1000;

/// Node counts of the two Gauss–Jacobi resolutions used by the Caputo oracle.
const ORACLE_COARSE_NODES: usize = 64;
const ORACLE_FINE_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    pub alpha: f64,
    pub tau: f64,
    pub weights: Vec<f64>,
    pub beta0: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("fractional order must lie in (0, 1], got {alpha}")))
    }
}

/// `(k+1)^α − k^α`, evaluated without catastrophic cancellation for large `k`.
pub fn weight(alpha: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    if k > CANCELLATION_SWITCH {
        kf.powf(alpha) * (alpha * (1.0 / kf).ln_1p()).exp_m1()
    } else {
        (kf + 1.0).powf(alpha) - kf.powf(alpha)
    }
}

pub fn compute_weights(alpha: f64, count: usize, tau: f64) -> Result<QuadratureWeights> {
    check_alpha(alpha)?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {tau}")));
    }
    if count == 0 {
        return Err(Error::Domain("weight count must be at least 1".into()));
    }
    let weights = (0..count).map(|k| weight(alpha, k)).collect();
    Ok(QuadratureWeights {
        alpha,
        tau,
        weights,
        beta0: tau.powf(alpha) / gamma(alpha + 1.0),
    })
}

impl QuadratureWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Running sums `S_n = Σ_{k<n} w_k` for `n = 1..=len`, compensated.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = NeumaierSum::default();
        self.weights
            .iter()
            .map(|&w| {
                acc.add(w);
                acc.value()
            })
            .collect()
    }
}

/// `β₀ Σ_{k=0}^{n-1} w_k g(t_{n-k})` where `samples = [g(t_1), …, g(t_n)]`.
pub fn discrete_rl_integral(samples: &[f64], weights: &QuadratureWeights) -> Result<f64> {
    let n = samples.len();
    if n > weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: n,
        });
    }
    let mut acc = NeumaierSum::default();
    for (k, &w) in weights.weights[..n].iter().enumerate() {
        acc.add(w * samples[n - 1 - k]);
    }
    Ok(weights.beta0 * acc.value())
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    carry: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Evaluates `ᶜD_t^α e^{−t}` with singularity-absorbing Gauss–Jacobi quadrature.
///
/// The rules depend only on `α`, so one oracle serves every time level of a run.
#[derive(Debug, Clone)]
pub struct CaputoOracle {
    alpha: f64,
    tol: f64,
    // None for α = 1, where the derivative is classical
    rules: Option<(GaussJacobiRule, GaussJacobiRule)>,
    inv_gamma: f64,
}

impl CaputoOracle {
    pub fn new(alpha: f64, tol: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("oracle tolerance must be positive, got {tol}")));
        }
        let rules = if alpha < 1.0 {
            Some((
                GaussJacobiRule::new(ORACLE_COARSE_NODES, -alpha, 0.0)?,
                GaussJacobiRule::new(ORACLE_FINE_NODES, -alpha, 0.0)?,
            ))
        } else {
            None
        };
        let inv_gamma = if alpha < 1.0 { 1.0 / gamma(1.0 - alpha) } else { 0.0 };
        Ok(Self {
            alpha,
            tol,
            rules,
            inv_gamma,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `D(t) = (1/Γ(1−α)) ∫_0^t (t−s)^{−α} (−e^{−s}) ds`.
    pub fn decay_factor(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let Some((coarse, fine)) = &self.rules else {
            return Ok(-(-t).exp());
        };
        // s = t(1+x)/2 maps (0,t) onto (-1,1); (t-s)^{-α} = (t/2)^{-α} (1-x)^{-α}
        let half = 0.5 * t;
        let scale = -self.inv_gamma * half.powf(1.0 - self.alpha);
        let integrand = |x: f64| (-half * (1.0 + x)).exp();
        let lo = scale * coarse.integrate(integrand);
        let hi = scale * fine.integrate(integrand);
        let discrepancy = (hi - lo).abs();
        if discrepancy > self.tol {
            return Err(Error::Accuracy {
                discrepancy,
                tol: self.tol,
            });
        }
        Ok(hi)
    }
}

pub fn caputo_decay_factor(alpha: f64, t: f64, tol: f64) -> Result<f64> {
    CaputoOracle::new(alpha, tol)?.decay_factor(t)
}
