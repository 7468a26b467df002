//! Moment-matching updates: mean-only and mean-plus-covariance.

use rand_chacha::ChaCha8Rng;

use super::{weighted_moments, AisContext, AisStrategy};
use crate::cost::softmax_weights;
use crate::error::{Error, Result};
use crate::gaussian::JointProposal;

/// Mean-only moment matching: shift the proposal mean to the weighted batch
/// mean, keep the covariance. The weight temperature is the strategy's own
/// exploration lambda, independent of the controller's.
#[derive(Debug, Clone)]
pub struct MeanOnly {
    ais_lambda: f64,
}

impl MeanOnly {
    pub fn new(ais_lambda: f64) -> Self {
        Self { ais_lambda }
    }
}

impl AisStrategy for MeanOnly {
    fn name(&self) -> &'static str {
        "mu"
    }

    fn update(&self, ctx: &AisContext<'_>, _rng: &mut ChaCha8Rng) -> Result<JointProposal> {
        let w = softmax_weights(&ctx.batch.costs, self.ais_lambda)?;
        let mut mean = ctx.proposal.mean().clone();
        for (eps, &wk) in ctx.batch.noise.iter().zip(&w) {
            mean.axpy(wk, eps, 1.0);
        }
        ctx.proposal.with_mean(mean)
    }
}

/// Mean and covariance moment matching: both parameters are replaced by the
/// weighted batch moments (covariance about the new mean), then the result
/// is floored back to positive definite if the estimate collapsed.
#[derive(Debug, Clone)]
pub struct MeanCov {
    ais_lambda: f64,
}

impl MeanCov {
    pub fn new(ais_lambda: f64) -> Self {
        Self { ais_lambda }
    }

    /// The raw weighted moments this update is built from; exposed so tests
    /// can compare against the returned proposal pre-regularization.
    pub fn moments(
        &self,
        ctx: &AisContext<'_>,
    ) -> Result<(nalgebra::DVector<f64>, nalgebra::DMatrix<f64>)> {
        let w = softmax_weights(&ctx.batch.costs, self.ais_lambda)?;
        let controls: Vec<_> = (0..ctx.batch.len()).map(|k| ctx.batch.control(k)).collect();
        Ok(weighted_moments(&controls, &w))
    }
}

impl AisStrategy for MeanCov {
    fn name(&self) -> &'static str {
        "musigma"
    }

    fn update(&self, ctx: &AisContext<'_>, _rng: &mut ChaCha8Rng) -> Result<JointProposal> {
        if ctx.batch.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: ctx.batch.len(),
            });
        }
        let (mean, cov) = self.moments(ctx)?;
        JointProposal::regularized(mean, cov)
    }
}
