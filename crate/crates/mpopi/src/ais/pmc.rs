//! Population Monte Carlo update with multinomial resampling.
//!
//! Classic PMC with a static kernel covariance: importance weights are
//! computed from the costs, K indices are drawn by multinomial resampling,
//! and the new proposal mean is the average of the resampled controls.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AisContext, AisStrategy};
use crate::cost::softmax_weights;
use crate::error::Result;
use crate::gaussian::JointProposal;

#[derive(Debug, Clone)]
pub struct Pmc {
    ais_lambda: f64,
}

impl Pmc {
    pub fn new(ais_lambda: f64) -> Self {
        Self { ais_lambda }
    }

    /// Draw `draws` indices from the categorical distribution `weights`
    /// (inverse-CDF sampling; weights must be normalized).
    pub fn multinomial(weights: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in weights {
            acc += w;
            cdf.push(acc);
        }
        (0..draws)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() * acc;
                match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                    Ok(i) => (i + 1).min(weights.len() - 1),
                    Err(i) => i.min(weights.len() - 1),
                }
            })
            .collect()
    }
}

impl AisStrategy for Pmc {
    fn name(&self) -> &'static str {
        "pmc"
    }

    fn update(&self, ctx: &AisContext<'_>, rng: &mut ChaCha8Rng) -> Result<JointProposal> {
        let w = softmax_weights(&ctx.batch.costs, self.ais_lambda)?;
        let k = ctx.batch.len();
        let indices = Self::multinomial(&w, k, rng);
        let mut mean = DVector::zeros(ctx.proposal.dim());
        for &i in &indices {
            mean += ctx.batch.control(i);
        }
        mean /= k as f64;
        ctx.proposal.with_mean(mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::RolloutBatch;
    use crate::rng::derive_rng;
    use nalgebra::{DMatrix, dvector};

    #[test]
    fn degenerate_weight_picks_that_sample() {
        // One cost is overwhelmingly better at tiny lambda: its weight is 1
        // to rounding and the resampled mean equals that control.
        let proposal = JointProposal::new(dvector![0.0], DMatrix::identity(1, 1)).unwrap();
        let batch = RolloutBatch::new(
            vec![dvector![2.0], dvector![-7.0], dvector![0.3]],
            vec![1000.0, 0.0, 1000.0],
            dvector![0.0],
        );
        let ctx = AisContext {
            proposal: &proposal,
            batch: &batch,
            iteration: 1,
        };
        let mut rng = derive_rng(5, &[1]);
        let out = Pmc::new(1.0).update(&ctx, &mut rng).unwrap();
        assert!((out.mean()[0] - (-7.0)).abs() < 1e-12);
        assert_eq!(out.cov(), proposal.cov());
    }

    #[test]
    fn resampling_is_reproducible() {
        let w = vec![0.25; 4];
        let a = Pmc::multinomial(&w, 64, &mut derive_rng(11, &[2]));
        let b = Pmc::multinomial(&w, 64, &mut derive_rng(11, &[2]));
        assert_eq!(a, b);
    }

    #[test]
    fn resampled_distribution_matches_weights() {
        // Chi-square goodness of fit over 1e5 draws: statistic below the
        // 99th percentile of chi2 with 4 degrees of freedom (13.2767).
        let weights = vec![0.05, 0.1, 0.2, 0.25, 0.4];
        let n = 100_000usize;
        let draws = Pmc::multinomial(&weights, n, &mut derive_rng(7, &[3]));
        let mut counts = [0usize; 5];
        for d in draws {
            counts[d] += 1;
        }
        let chi2: f64 = weights
            .iter()
            .zip(&counts)
            .map(|(&w, &c)| {
                let expect = w * n as f64;
                (c as f64 - expect).powi(2) / expect
            })
            .sum();
        assert!(chi2 < 13.2767, "chi-square statistic {chi2}");
    }
}
