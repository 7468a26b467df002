//! Continuous-action mountain car.
//!
//! An under-powered car in a sinusoidal valley must build momentum to reach
//! the goal on the right hill. Classic textbook dynamics: the gravity term is
//! proportional to `cos(3x)`, the action is bounded, and position/velocity
//! are clamped to the domain.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Environment, StepOutcome};
use crate::error::Result;

/// Dynamics constants; defaults follow the standard textbook formulation.
#[derive(Debug, Clone, Copy)]
pub struct MountainCarParams {
    pub min_position: f64,
    pub max_position: f64,
    pub max_speed: f64,
    pub goal_position: f64,
    /// Force per unit action.
    pub force: f64,
    /// Gravity scale on the `cos(3x)` slope term.
    pub gravity: f64,
    /// Reward for reaching the goal with positive velocity.
    pub goal_bonus: f64,
    /// Initial-position range for randomized starts.
    pub start_range: (f64, f64),
}

impl Default for MountainCarParams {
    fn default() -> Self {
        Self {
            min_position: -1.2,
            max_position: 0.6,
            max_speed: 0.07,
            goal_position: 0.5,
            force: 0.001,
            gravity: 0.0025,
            goal_bonus: 100_000.0,
            start_range: (-0.6, -0.4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainCarState {
    /// Position in track units.
    pub x: f64,
    /// Velocity in track units per step.
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct MountainCarEnv {
    params: MountainCarParams,
    bounds: [(f64, f64); 1],
}

impl MountainCarEnv {
    pub fn new(params: MountainCarParams) -> Self {
        Self {
            params,
            bounds: [(-1.0, 1.0)],
        }
    }

    pub fn params(&self) -> &MountainCarParams {
        &self.params
    }

    /// Rest state at the valley bottom (zero slope point of the hill shape).
    pub fn valley_rest() -> MountainCarState {
        MountainCarState {
            x: -std::f64::consts::FRAC_PI_6,
            v: 0.0,
        }
    }

    /// Randomized start: position uniform in `start_range`, zero velocity.
    pub fn initial_state(&self, rng: &mut ChaCha8Rng) -> MountainCarState {
        let (lo, hi) = self.params.start_range;
        MountainCarState {
            x: rng.gen_range(lo..hi),
            v: 0.0,
        }
    }

    fn at_goal(&self, s: &MountainCarState) -> bool {
        s.x >= self.params.goal_position && s.v > 0.0
    }
}

impl Default for MountainCarEnv {
    fn default() -> Self {
        Self::new(MountainCarParams::default())
    }
}

impl Environment for MountainCarEnv {
    type State = MountainCarState;

    fn control_dim(&self) -> usize {
        1
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn step(&self, state: &Self::State, action: &[f64]) -> Result<(Self::State, StepOutcome)> {
        let p = &self.params;
        let a = action[0];
        let mut v = state.v + p.force * a - p.gravity * (3.0 * state.x).cos();
        v = v.clamp(-p.max_speed, p.max_speed);
        let mut x = state.x + v;
        if x < p.min_position {
            x = p.min_position;
            // The left wall is inelastic: the car cannot keep moving left.
            if v < 0.0 {
                v = 0.0;
            }
        } else if x > p.max_position {
            x = p.max_position;
        }
        let next = MountainCarState { x, v };
        let done = self.at_goal(&next);
        let reward = -1.0 + v.abs() + if done { p.goal_bonus } else { 0.0 };
        Ok((next, StepOutcome::plain(reward, done)))
    }
}
