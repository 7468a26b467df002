//! Adaptive proposal updates: five strategies behind one interface.
//!
//! Each strategy consumes the current proposal and the batch sampled from it
//! and returns an updated proposal for the next refinement iteration.
//! Strategies are stateless between control steps; any inertia lives in the
//! blended parameters within one step's iterations.

mod ce;
mod cma;
mod moment;
mod pmc;

pub use ce::{CovEstimator, CrossEntropy};
pub use cma::Cma;
pub use moment::{MeanOnly, MeanCov};
pub use pmc::Pmc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::cost::RolloutBatch;
use crate::error::Result;
use crate::gaussian::JointProposal;

/// Inputs to one proposal update: the proposal the batch was drawn from, the
/// batch itself, and the 1-based refinement iteration.
pub struct AisContext<'a> {
    pub proposal: &'a JointProposal,
    pub batch: &'a RolloutBatch,
    pub iteration: usize,
}

/// A proposal-update strategy. Deterministic given (context, rng state);
/// never called concurrently for the same control step.
pub trait AisStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn update(&self, ctx: &AisContext<'_>, rng: &mut ChaCha8Rng) -> Result<JointProposal>;
}

/// Strategy selection plus its parameters; this is what experiment configs
/// carry.
#[derive(Debug, Clone, PartialEq)]
pub enum AisConfig {
    MeanOnly {
        ais_lambda: f64,
    },
    MeanCov {
        ais_lambda: f64,
    },
    CrossEntropy {
        elite_fraction: f64,
        cov_estimator: CovEstimator,
        smoothing_rate: f64,
    },
    Cma {
        mean_learning_rate: f64,
        cov_learning_rate: f64,
    },
    Pmc {
        ais_lambda: f64,
    },
}

impl AisConfig {
    pub fn build(&self) -> Box<dyn AisStrategy> {
        match self.clone() {
            AisConfig::MeanOnly { ais_lambda } => Box::new(MeanOnly::new(ais_lambda)),
            AisConfig::MeanCov { ais_lambda } => Box::new(MeanCov::new(ais_lambda)),
            AisConfig::CrossEntropy {
                elite_fraction,
                cov_estimator,
                smoothing_rate,
            } => Box::new(CrossEntropy::new(elite_fraction, cov_estimator, smoothing_rate)),
            AisConfig::Cma {
                mean_learning_rate,
                cov_learning_rate,
            } => Box::new(Cma::new(mean_learning_rate, cov_learning_rate)),
            AisConfig::Pmc { ais_lambda } => Box::new(Pmc::new(ais_lambda)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AisConfig::MeanOnly { .. } => "mu",
            AisConfig::MeanCov { .. } => "musigma",
            AisConfig::CrossEntropy { .. } => "ce",
            AisConfig::Cma { .. } => "cma",
            AisConfig::Pmc { .. } => "pmc",
        }
    }
}

/// Weighted first and second moments of a set of vectors. Weights must be
/// normalized; the covariance is the weighted scatter about the weighted
/// mean (no small-sample correction).
pub fn weighted_moments(vectors: &[DVector<f64>], weights: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let dim = vectors[0].len();
    let mut mean = DVector::zeros(dim);
    for (v, &w) in vectors.iter().zip(weights) {
        mean.axpy(w, v, 1.0);
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (v, &w) in vectors.iter().zip(weights) {
        let d = v - &mean;
        cov.ger(w, &d, &d, 1.0);
    }
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn weighted_moments_hand_case() {
        let vs = vec![dvector![-1.0], dvector![1.0]];
        let (mean, cov) = weighted_moments(&vs, &[0.5, 0.5]);
        assert!(mean[0].abs() < 1e-15);
        assert!((cov[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_moments_skewed_weights() {
        let vs = vec![dvector![0.0, 0.0], dvector![2.0, 4.0]];
        let (mean, cov) = weighted_moments(&vs, &[0.75, 0.25]);
        assert!((mean[0] - 0.5).abs() < 1e-15);
        assert!((mean[1] - 1.0).abs() < 1e-15);
        // var_x = 0.75*0.25 + 0.25*2.25 = 0.75
        assert!((cov[(0, 0)] - 0.75).abs() < 1e-14);
        assert!((cov[(1, 1)] - 3.0).abs() < 1e-14);
        assert!((cov[(0, 1)] - 1.5).abs() < 1e-14);
    }
}
