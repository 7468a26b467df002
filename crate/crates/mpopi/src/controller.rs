//! Receding-horizon sampling controller.
//!
//! One control step: sample K control-sequence perturbations from the joint
//! proposal, roll each out through the environment, score it, optionally
//! refine the proposal L-1 times from the scored batch, then take the
//! cost-weighted average as the new plan, emit its first control, and shift.
//! With L = 1 the refinement loop is empty and the step reduces exactly to
//! the classic path-integral update; `mppi_step` provides that reference
//! path standalone.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ais::{AisContext, AisStrategy};
use crate::cost::{effective_sample_size, softmax_weights, CostParams, RolloutBatch};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::gaussian::{factor_psd, sample_noise, JointProposal};
use crate::plan::{ControlPlan, TailInit};
use crate::rng::StepStream;

/// Static configuration of the controller.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Samples per iteration (K).
    pub samples: usize,
    /// Refinement iterations per control step (L); 1 disables refinement.
    pub iterations: usize,
    /// Horizon in control steps (T).
    pub horizon: usize,
    pub cost: CostParams,
    /// Fixed weighting covariance of the cost term and the start-of-step
    /// sampling covariance, size mT x mT.
    pub base_cov: DMatrix<f64>,
    pub tail_init: TailInit,
}

impl ControllerConfig {
    fn validate(&self, control_dim: usize, plan: &ControlPlan) -> Result<()> {
        if self.samples == 0 || self.iterations == 0 || self.horizon == 0 {
            return Err(Error::InsufficientSamples {
                needed: 1,
                got: 0,
            });
        }
        let mt = control_dim * self.horizon;
        if plan.data().len() != mt {
            return Err(Error::DimensionMismatch {
                what: "plan length",
                expected: mt,
                got: plan.data().len(),
            });
        }
        if self.base_cov.nrows() != mt || self.base_cov.ncols() != mt {
            return Err(Error::DimensionMismatch {
                what: "base covariance",
                expected: mt,
                got: self.base_cov.nrows(),
            });
        }
        Ok(())
    }
}

/// Per-iteration diagnostics: best and mean trajectory cost, effective
/// sample size of the weights, and whether the proposal update failed and
/// the previous proposal was kept.
#[derive(Debug, Clone, Copy)]
pub struct IterationDiag {
    pub min_cost: f64,
    pub mean_cost: f64,
    pub ess: f64,
    pub ais_fallback: bool,
}

/// Result of one control step.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// First control of the updated plan, as sent to the actuators.
    pub command: Vec<f64>,
    /// Plan after the receding-horizon shift.
    pub plan: ControlPlan,
    pub iterations: Vec<IterationDiag>,
}

/// A rolled-out trajectory and its accumulated state cost.
pub struct Rollout<S> {
    pub states: Vec<S>,
    pub cost: f64,
}

/// Propagate the environment over the horizon applying the input shaping to
/// `plan_mean + noise` at each step; returns the visited states and the
/// negated accumulated reward (stage plus terminal). Stops early at a
/// terminal state. The caller's state is not mutated.
pub fn rollout<E: Environment>(
    env: &E,
    state: &E::State,
    plan_mean: &DVector<f64>,
    noise: &DVector<f64>,
    horizon: usize,
) -> Result<Rollout<E::State>> {
    let mut states = Vec::with_capacity(horizon);
    let cost = rollout_visit(env, state, plan_mean, noise, horizon, |s| {
        states.push(s.clone())
    })?;
    Ok(Rollout { states, cost })
}

fn rollout_visit<E: Environment>(
    env: &E,
    state: &E::State,
    plan_mean: &DVector<f64>,
    noise: &DVector<f64>,
    horizon: usize,
    mut visit: impl FnMut(&E::State),
) -> Result<f64> {
    let m = env.control_dim();
    debug_assert_eq!(plan_mean.len(), m * horizon);
    debug_assert_eq!(noise.len(), m * horizon);
    let mut shaper = env.shaper();
    let mut current = state.clone();
    let mut raw = vec![0.0; m];
    let mut action = vec![0.0; m];
    let mut reward = 0.0;
    for t in 0..horizon {
        for c in 0..m {
            raw[c] = plan_mean[t * m + c] + noise[t * m + c];
        }
        shaper.apply(&raw, &mut action);
        let (next, out) = env.step(&current, &action).map_err(|e| Error::Rollout {
            step: t,
            source: Box::new(e),
        })?;
        reward += out.reward;
        current = next;
        visit(&current);
        if out.done {
            break;
        }
    }
    reward += env.terminal_reward(&current);
    Ok(-reward)
}

/// Total trajectory cost: state cost plus the control-cost correction
/// `gamma * U'^T S^-1 (eps + U' - U)` with the *base* covariance `S`. The
/// term is skipped exactly when it vanishes (`gamma = 0` or a zero
/// correction vector), which also keeps a deliberately zero covariance
/// usable.
pub fn trajectory_cost(
    state_cost: f64,
    u_prime: &DVector<f64>,
    u: &DVector<f64>,
    noise: &DVector<f64>,
    base_cov_inv: &DMatrix<f64>,
    params: &CostParams,
) -> f64 {
    let gamma = params.gamma();
    if gamma == 0.0 {
        return state_cost;
    }
    let corr = noise + u_prime - u;
    if corr.iter().all(|&x| x == 0.0) {
        return state_cost;
    }
    state_cost + gamma * (base_cov_inv * &corr).dot(u_prime)
}

/// Weighted-average control update: `U_new = U + sum_k w_k (eps_k + U' - U)`
/// with weights from the cost softmax at the controller temperature.
pub fn control_update(
    batch: &RolloutBatch,
    plan: &ControlPlan,
    u_prime: &DVector<f64>,
    lambda: f64,
) -> Result<ControlPlan> {
    let weights = softmax_weights(&batch.costs, lambda)?;
    let shift = u_prime - plan.data();
    let mut u_new = plan.data().clone();
    for (eps, &w) in batch.noise.iter().zip(&weights) {
        let delta = eps + &shift;
        u_new.axpy(w, &delta, 1.0);
    }
    let mut out = plan.clone();
    out.set_data(u_new)?;
    Ok(out)
}

/// One full control step with proposal refinement.
pub fn mpopi_step<E: Environment>(
    env: &E,
    state: &E::State,
    plan: &ControlPlan,
    config: &ControllerConfig,
    strategy: &dyn AisStrategy,
    stream: &StepStream,
) -> Result<StepResult> {
    let m = env.control_dim();
    config.validate(m, plan)?;
    let lambda = config.cost.lambda();
    let u = plan.data().clone();

    // U' <- U, S' <- S at the start of every control step.
    let mut prop_mean = u.clone();
    let mut prop_cov = config.base_cov.clone();
    let mut prop_chol = factor_psd(&config.base_cov)?;
    let base_cov_inv = chol_inverse(&prop_chol);

    let mut diags = Vec::with_capacity(config.iterations);
    let mut last_batch: Option<RolloutBatch> = None;
    let mut last_mean = prop_mean.clone();

    for iter in 1..=config.iterations {
        let noise = sample_noise(&prop_chol, config.samples, stream, iter as u64);
        let costs: Result<Vec<f64>> = noise
            .par_iter()
            .map(|eps| {
                let state_cost =
                    rollout_visit(env, state, &prop_mean, eps, config.horizon, |_| {})?;
                Ok(trajectory_cost(
                    state_cost,
                    &prop_mean,
                    &u,
                    eps,
                    &base_cov_inv,
                    &config.cost,
                ))
            })
            .collect();
        let costs = costs?;
        let batch = RolloutBatch::new(noise, costs, prop_mean.clone());

        let weights = softmax_weights(&batch.costs, lambda)?;
        let min_cost = batch.costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean_cost = batch.costs.iter().sum::<f64>() / batch.len() as f64;
        let mut fallback = false;

        if iter < config.iterations {
            let updated = JointProposal::new(prop_mean.clone(), prop_cov.clone())
                .and_then(|proposal| {
                    let ctx = AisContext {
                        proposal: &proposal,
                        batch: &batch,
                        iteration: iter,
                    };
                    strategy.update(&ctx, &mut stream.ais_rng(iter as u64))
                });
            match updated {
                Ok(next) => {
                    prop_mean = next.mean().clone();
                    prop_cov = next.cov().clone();
                    prop_chol = next.chol().clone();
                }
                // Degenerate update: keep the last valid proposal.
                Err(_) => fallback = true,
            }
        }

        diags.push(IterationDiag {
            min_cost,
            mean_cost,
            ess: effective_sample_size(&weights),
            ais_fallback: fallback,
        });
        last_mean = batch.sampled_mean.clone();
        last_batch = Some(batch);
    }

    let batch = last_batch.expect("iterations >= 1");
    let updated = control_update(&batch, plan, &last_mean, lambda)?;
    let command = updated.step_view(0).to_vec();
    let mut shifted = updated;
    shifted.shift(&config.tail_init);
    Ok(StepResult {
        command,
        plan: shifted,
        iterations: diags,
    })
}

/// Reference path-integral step without proposal refinement: sample around
/// the plan, score, weight, average. Shares the sampling streams and scoring
/// formulas with `mpopi_step`, which must reproduce it exactly at L = 1.
pub fn mppi_step<E: Environment>(
    env: &E,
    state: &E::State,
    plan: &ControlPlan,
    config: &ControllerConfig,
    stream: &StepStream,
) -> Result<StepResult> {
    let m = env.control_dim();
    config.validate(m, plan)?;
    let lambda = config.cost.lambda();
    let u = plan.data().clone();
    let chol = factor_psd(&config.base_cov)?;
    let base_cov_inv = chol_inverse(&chol);

    let noise = sample_noise(&chol, config.samples, stream, 1);
    let costs: Result<Vec<f64>> = noise
        .par_iter()
        .map(|eps| {
            let state_cost = rollout_visit(env, state, &u, eps, config.horizon, |_| {})?;
            Ok(trajectory_cost(
                state_cost,
                &u,
                &u,
                eps,
                &base_cov_inv,
                &config.cost,
            ))
        })
        .collect();
    let costs = costs?;
    let weights = softmax_weights(&costs, lambda)?;

    let mut u_new = u.clone();
    for (eps, &w) in noise.iter().zip(&weights) {
        u_new.axpy(w, eps, 1.0);
    }
    let min_cost = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_cost = costs.iter().sum::<f64>() / costs.len() as f64;
    let diag = IterationDiag {
        min_cost,
        mean_cost,
        ess: effective_sample_size(&weights),
        ais_fallback: false,
    };

    let mut updated = plan.clone();
    updated.set_data(u_new)?;
    let command = updated.step_view(0).to_vec();
    updated.shift(&config.tail_init);
    Ok(StepResult {
        command,
        plan: updated,
        iterations: vec![diag],
    })
}

/// Inverse of an SPD matrix from its lower-triangular factor, by solving
/// against unit vectors. Entries are NaN along exactly-degenerate
/// directions; `trajectory_cost` never touches them because the correction
/// vector is zero there.
fn chol_inverse(chol: &DMatrix<f64>) -> DMatrix<f64> {
    let n = chol.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = DVector::zeros(n);
        e[col] = 1.0;
        crate::gaussian::chol_solve_in_place(chol, &mut e);
        inv.set_column(col, &e);
    }
    inv
}
