//! Cost parameters, importance weights, and the per-iteration sample batch.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Inverse temperature and control-cost decoupling.
///
/// `gamma = lambda * (1 - alpha)` scales the quadratic control-cost term
/// independently of the weight temperature: at `alpha = 1` the term vanishes,
/// at `alpha = 0` it is fully coupled to `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    lambda: f64,
    alpha: f64,
}

impl CostParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::DimensionMismatch {
                what: "lambda (must be positive)",
                expected: 1,
                got: 0,
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::DimensionMismatch {
                what: "alpha (must be in [0, 1])",
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { lambda, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.lambda * (1.0 - self.alpha)
    }
}

/// One iteration's sampled noise, trajectory costs, and the proposal mean
/// that generated it. The sampled control of entry k is
/// `sampled_mean + noise[k]`.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub noise: Vec<DVector<f64>>,
    pub costs: Vec<f64>,
    pub sampled_mean: DVector<f64>,
}

impl RolloutBatch {
    pub fn new(noise: Vec<DVector<f64>>, costs: Vec<f64>, sampled_mean: DVector<f64>) -> Self {
        debug_assert_eq!(noise.len(), costs.len());
        Self {
            noise,
            costs,
            sampled_mean,
        }
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// Sampled control vector of entry `k`.
    pub fn control(&self, k: usize) -> DVector<f64> {
        &self.sampled_mean + &self.noise[k]
    }
}

/// Importance weights from trajectory costs.
///
/// The minimum cost is subtracted before exponentiation so the best sample
/// maps to `exp(0)`; weights are normalized to sum to one. Fails if any cost
/// is non-finite, naming the offending sample.
pub fn softmax_weights(costs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    for (k, &c) in costs.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFiniteCost { sample: k });
        }
    }
    let rho = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = costs.iter().map(|&c| (-(c - rho) / lambda).exp()).collect();
    let eta: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= eta;
    }
    Ok(weights)
}

/// Effective sample size `1 / sum(w^2)` of a normalized weight vector.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().map(|w| w * w).sum();
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_identity() {
        let p = CostParams::new(2.5, 0.4).unwrap();
        assert_eq!(p.gamma(), 2.5 * (1.0 - 0.4));
        assert!(CostParams::new(0.0, 0.5).is_err());
        assert!(CostParams::new(1.0, 1.5).is_err());
    }

    #[test]
    fn single_sample_weight_is_one() {
        let w = softmax_weights(&[5.0], 0.37).unwrap();
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn two_sample_hand_weights() {
        // costs [0, ln 2] at lambda 1: exp(0) = 1, exp(-ln 2) = 1/2,
        // normalized to [2/3, 1/3].
        let w = softmax_weights(&[0.0, std::f64::consts::LN_2], 1.0).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shift_invariance() {
        for c in [-1.0e6, -3.0, 0.0, 17.0, 9.9e5] {
            let base = softmax_weights(&[0.0, 2.0, 5.0], 1.3).unwrap();
            let shifted = softmax_weights(&[c, c + 2.0, c + 5.0], 1.3).unwrap();
            for (a, b) in base.iter().zip(&shifted) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_non_finite_cost() {
        let err = softmax_weights(&[1.0, f64::NAN, 2.0], 1.0).unwrap_err();
        assert_eq!(err, Error::NonFiniteCost { sample: 1 });
        let err = softmax_weights(&[f64::INFINITY], 1.0).unwrap_err();
        assert_eq!(err, Error::NonFiniteCost { sample: 0 });
    }

    #[test]
    fn ess_bounds() {
        let uniform = vec![0.25; 4];
        assert!((effective_sample_size(&uniform) - 4.0).abs() < 1e-12);
        let degenerate = vec![1.0, 0.0, 0.0];
        assert!((effective_sample_size(&degenerate) - 1.0).abs() < 1e-12);
    }
}
