//! Single-iteration covariance matrix adaptation.
//!
//! A reduced CMA-ES step suited to a handful of refinement iterations:
//! log-rank recombination weights over the better half of the batch, a
//! learning-rate-scaled mean step, and a rank-mu covariance update blended
//! with the previous covariance. Evolution paths are omitted; a single
//! iteration gives them little to accumulate.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{AisContext, AisStrategy};
use crate::error::{Error, Result};
use crate::gaussian::{symmetrize, JointProposal};

#[derive(Debug, Clone)]
pub struct Cma {
    mean_learning_rate: f64,
    cov_learning_rate: f64,
}

impl Cma {
    pub fn new(mean_learning_rate: f64, cov_learning_rate: f64) -> Self {
        Self {
            mean_learning_rate,
            cov_learning_rate,
        }
    }

    /// Positive recombination weights over the best `floor(K/2)` ranks:
    /// `w_i proportional to ln(mu_w + 1) - ln(i)`, normalized to sum to one.
    pub fn recombination_weights(k: usize) -> Vec<f64> {
        let mu_w = (k / 2).max(1);
        let mut w: Vec<f64> = (1..=mu_w)
            .map(|i| ((mu_w as f64) + 1.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
        w
    }
}

impl AisStrategy for Cma {
    fn name(&self) -> &'static str {
        "cma"
    }

    fn update(&self, ctx: &AisContext<'_>, _rng: &mut ChaCha8Rng) -> Result<JointProposal> {
        let k = ctx.batch.len();
        if k < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: k });
        }
        let weights = Self::recombination_weights(k);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            ctx.batch.costs[a]
                .partial_cmp(&ctx.batch.costs[b])
                .unwrap()
                .then(a.cmp(&b))
        });

        let dim = ctx.proposal.dim();
        let old_mean = ctx.proposal.mean();

        // Weighted recombination of the best ranks, as steps from the mean.
        let mut step = DVector::zeros(dim);
        let mut rank_mu = DMatrix::zeros(dim, dim);
        for (i, &wi) in weights.iter().enumerate() {
            let y = &ctx.batch.noise[order[i]]; // v - U' already
            step.axpy(wi, y, 1.0);
            rank_mu.ger(wi, y, y, 1.0);
        }

        let mean = old_mean + self.mean_learning_rate * step;
        let c = self.cov_learning_rate;
        let cov = (1.0 - c) * ctx.proposal.cov() + c * rank_mu;
        JointProposal::regularized(mean, symmetrize(&cov))
    }
}
