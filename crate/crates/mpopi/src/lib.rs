//! Sampling-based model predictive control with a single joint Gaussian
//! over the whole control sequence.
//!
//! The classic path-integral controller samples perturbed control sequences,
//! scores them through the system dynamics, and takes a cost-weighted
//! average as the command. Treating the sequence as one random vector with a
//! combined covariance lets a proposal-adaptation step run between sampling
//! rounds within each control step: population Monte Carlo, moment matching
//! (mean-only and mean-plus-covariance), cross-entropy, and a reduced
//! covariance-matrix-adaptation update are provided behind one interface.
//! With a single iteration the controller reduces exactly to the classic
//! algorithm.
//!
//! The crate also ships the simulation environments used by the benchmark
//! harness: continuous mountain car, a single-track race car with a brush
//! tire model on a waypoint track, and a cooperative multi-car wrapper.

pub mod ais;
pub mod controller;
pub mod cost;
pub mod env;
pub mod error;
pub mod gaussian;
pub mod plan;
pub mod rng;

pub use ais::{AisConfig, AisContext, AisStrategy};
pub use controller::{
    control_update, mpopi_step, mppi_step, rollout, trajectory_cost, ControllerConfig,
    IterationDiag, StepResult,
};
pub use cost::{effective_sample_size, softmax_weights, CostParams, RolloutBatch};
pub use env::{
    CarEnv, CarEnvState, CarParams, CarState, Environment, MountainCarEnv, MountainCarParams,
    MountainCarState, MultiCarEnv, MultiCarState, StepOutcome, Track,
};
pub use error::{Error, Result};
pub use gaussian::{assemble_block_covariance, sample_noise, JointProposal};
pub use plan::{ControlPlan, TailInit};
pub use rng::{derive_rng, derive_seed, StepStream};
