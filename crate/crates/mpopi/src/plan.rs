//! The rolling commanded control sequence.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Policy for the freed final control after the receding-horizon shift.
#[derive(Debug, Clone, PartialEq)]
pub enum TailInit {
    /// Duplicate the previous last step (preserves momentum-heavy plans).
    RepeatLast,
    /// Zero the final step.
    Zero,
    /// Set the final step to a fixed per-channel value.
    Constant(Vec<f64>),
}

/// Commanded control sequence over the horizon, stored flat as
/// `[u_0, u_1, ..., u_{T-1}]` with `m` channels per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    horizon: usize,
    dim: usize,
    data: DVector<f64>,
    bounds: Vec<(f64, f64)>,
}

impl ControlPlan {
    /// All-zero plan with per-channel actuator bounds.
    pub fn zeros(horizon: usize, dim: usize, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if horizon == 0 || dim == 0 {
            return Err(Error::DimensionMismatch {
                what: "plan shape",
                expected: 1,
                got: 0,
            });
        }
        if bounds.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "plan bounds",
                expected: dim,
                got: bounds.len(),
            });
        }
        Ok(Self {
            horizon,
            dim,
            data: DVector::zeros(horizon * dim),
            bounds,
        })
    }

    pub fn from_data(
        horizon: usize,
        dim: usize,
        data: DVector<f64>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if data.len() != horizon * dim {
            return Err(Error::DimensionMismatch {
                what: "plan data",
                expected: horizon * dim,
                got: data.len(),
            });
        }
        let mut plan = Self::zeros(horizon, dim, bounds)?;
        plan.data = data;
        Ok(plan)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Control channels of step `t`: elements `[t*m, (t+1)*m)`.
    pub fn step_view(&self, t: usize) -> &[f64] {
        &self.data.as_slice()[t * self.dim..(t + 1) * self.dim]
    }

    /// Replace the flat data, keeping shape and bounds.
    pub fn set_data(&mut self, data: DVector<f64>) -> Result<()> {
        if data.len() != self.data.len() {
            return Err(Error::DimensionMismatch {
                what: "plan data",
                expected: self.data.len(),
                got: data.len(),
            });
        }
        self.data = data;
        Ok(())
    }

    /// Receding-horizon shift: every step moves forward one slot and the
    /// freed final step is filled per `tail_init`. With `T = 1` the whole
    /// plan is reinitialized.
    pub fn shift(&mut self, tail_init: &TailInit) {
        let m = self.dim;
        let t_len = self.horizon;
        let last = self.data.rows((t_len - 1) * m, m).clone_owned();
        for t in 1..t_len {
            for c in 0..m {
                self.data[(t - 1) * m + c] = self.data[t * m + c];
            }
        }
        let tail: Vec<f64> = match tail_init {
            TailInit::RepeatLast => last.iter().cloned().collect(),
            TailInit::Zero => vec![0.0; m],
            TailInit::Constant(v) => v.clone(),
        };
        for c in 0..m {
            self.data[(t_len - 1) * m + c] = tail[c];
        }
    }
}
