//! Simulated plants: dynamics, input shaping, rewards, termination.

mod car;
mod mountain_car;
mod multi_car;
mod track;

pub use car::{CarEnv, CarEnvState, CarParams, CarState};
pub use mountain_car::{MountainCarEnv, MountainCarParams, MountainCarState};
pub use multi_car::{MultiCarEnv, MultiCarState};
pub use track::{circle_track, Track, TrackProjection};

use crate::error::Result;

/// Result of one control step: reward, violation indicators, termination,
/// and course progress (arclength meters; zero for non-track plants).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub violated_beta: bool,
    pub off_track: bool,
    pub done: bool,
    pub progress: f64,
}

impl StepOutcome {
    pub fn plain(reward: f64, done: bool) -> Self {
        Self {
            reward,
            violated_beta: false,
            off_track: false,
            done,
            progress: 0.0,
        }
    }
}

/// A simulated plant. Step functions are pure (state in, state out) so
/// rollouts can run concurrently on independent state copies.
pub trait Environment: Sync {
    type State: Clone + Send + Sync;

    /// Number of control channels per step.
    fn control_dim(&self) -> usize;

    /// Per-channel actuator bounds applied by the input shaping.
    fn bounds(&self) -> &[(f64, f64)];

    /// First-order low-pass coefficient for the input shaping (0 disables).
    fn smoothing(&self) -> f64 {
        0.0
    }

    /// Advance one control step with an already-shaped action.
    fn step(&self, state: &Self::State, action: &[f64]) -> Result<(Self::State, StepOutcome)>;

    /// Terminal reward added at the end of a rollout horizon.
    fn terminal_reward(&self, _state: &Self::State) -> f64 {
        0.0
    }

    /// Fresh input shaper; rollouts reset shaping state by taking a new one.
    fn shaper(&self) -> Shaper {
        Shaper::new(self.bounds().to_vec(), self.smoothing())
    }
}

/// The input-shaping function applied to raw commands before the dynamics:
/// optional first-order low-pass smoothing followed by a per-channel clamp
/// to the actuator bounds.
#[derive(Debug, Clone)]
pub struct Shaper {
    bounds: Vec<(f64, f64)>,
    smooth: f64,
    prev: Option<Vec<f64>>,
}

impl Shaper {
    pub fn new(bounds: Vec<(f64, f64)>, smooth: f64) -> Self {
        Self {
            bounds,
            smooth,
            prev: None,
        }
    }

    /// Drop the smoothing state (start of a new rollout).
    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// Shape one raw control vector. The first call after a reset passes the
    /// raw value straight to the clamp.
    pub fn apply(&mut self, raw: &[f64], out: &mut [f64]) {
        debug_assert_eq!(raw.len(), self.bounds.len());
        match (&mut self.prev, self.smooth > 0.0) {
            (Some(prev), true) => {
                for i in 0..raw.len() {
                    prev[i] = self.smooth * prev[i] + (1.0 - self.smooth) * raw[i];
                    out[i] = prev[i].clamp(self.bounds[i].0, self.bounds[i].1);
                }
            }
            _ => {
                if self.smooth > 0.0 {
                    self.prev = Some(raw.to_vec());
                }
                for i in 0..raw.len() {
                    out[i] = raw[i].clamp(self.bounds[i].0, self.bounds[i].1);
                }
            }
        }
    }
}
