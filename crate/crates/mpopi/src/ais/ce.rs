//! Cross-entropy proposal update: fit the elite set, blend with the
//! previous parameters.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{AisContext, AisStrategy};
use crate::error::Result;
use crate::gaussian::{symmetrize, JointProposal};

/// Covariance estimator applied to the elite set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovEstimator {
    /// Plain sample scatter about the elite mean.
    Sample,
    /// Ledoit-Wolf shrinkage toward the scaled identity; markedly better
    /// conditioned when the elite count is small relative to the dimension.
    Shrinkage,
}

#[derive(Debug, Clone)]
pub struct CrossEntropy {
    elite_fraction: f64,
    cov_estimator: CovEstimator,
    smoothing_rate: f64,
}

impl CrossEntropy {
    pub fn new(elite_fraction: f64, cov_estimator: CovEstimator, smoothing_rate: f64) -> Self {
        Self {
            elite_fraction,
            cov_estimator,
            smoothing_rate,
        }
    }

    /// Indices of the elite samples: the lowest-cost
    /// `max(1, floor(fraction * K))`, ties broken by sample index ascending.
    pub fn elite_indices(costs: &[f64], fraction: f64) -> Vec<usize> {
        let k = costs.len();
        let count = ((fraction * k as f64).floor() as usize).max(1).min(k);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap().then(a.cmp(&b)));
        order.truncate(count);
        order
    }
}

impl AisStrategy for CrossEntropy {
    fn name(&self) -> &'static str {
        "ce"
    }

    fn update(&self, ctx: &AisContext<'_>, _rng: &mut ChaCha8Rng) -> Result<JointProposal> {
        let elites = Self::elite_indices(&ctx.batch.costs, self.elite_fraction);
        let n = elites.len();
        let dim = ctx.proposal.dim();

        let mut elite_mean = DVector::zeros(dim);
        let controls: Vec<DVector<f64>> = elites.iter().map(|&k| ctx.batch.control(k)).collect();
        for v in &controls {
            elite_mean += v;
        }
        elite_mean /= n as f64;

        let mut scatter = DMatrix::zeros(dim, dim);
        for v in &controls {
            let d = v - &elite_mean;
            scatter.ger(1.0 / n as f64, &d, &d, 1.0);
        }
        let elite_cov = match self.cov_estimator {
            CovEstimator::Sample => scatter,
            CovEstimator::Shrinkage => ledoit_wolf(&controls, &elite_mean, &scatter),
        };

        let s = self.smoothing_rate;
        let mean = (1.0 - s) * elite_mean + s * ctx.proposal.mean();
        let cov = (1.0 - s) * elite_cov + s * ctx.proposal.cov();
        JointProposal::regularized(mean, symmetrize(&cov))
    }
}

/// Ledoit-Wolf (2004) well-conditioned estimator: convex combination of the
/// sample scatter `S` and the scaled identity `mu I`, with the shrinkage
/// intensity estimated from the samples themselves.
fn ledoit_wolf(
    samples: &[DVector<f64>],
    mean: &DVector<f64>,
    scatter: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = samples.len() as f64;
    let dim = mean.len() as f64;
    let mu = scatter.trace() / dim;
    let centered_id = {
        let mut m = scatter.clone();
        for i in 0..mean.len() {
            m[(i, i)] -= mu;
        }
        m
    };
    // d^2 = ||S - mu I||_F^2 / dim
    let d2 = centered_id.iter().map(|x| x * x).sum::<f64>() / dim;
    if d2 <= 0.0 {
        return scatter.clone();
    }
    // b^2 = min(d^2, (1/n^2) sum_k ||x_k x_k^T - S||_F^2 / dim)
    let mut b2_sum = 0.0;
    for x in samples {
        let d = x - mean;
        let outer = &d * d.transpose();
        b2_sum += (&outer - scatter).iter().map(|v| v * v).sum::<f64>();
    }
    let b2 = (b2_sum / (n * n) / dim).min(d2);
    let rho = b2 / d2;
    let mut out = scatter * (1.0 - rho);
    for i in 0..mean.len() {
        out[(i, i)] += rho * mu;
    }
    out
}
