//! Cooperative multi-car wrapper: one joint action space controlling N cars
//! on the same track.
//!
//! The joint reward is the sum of the individual car rewards, minus a large
//! penalty when any pair is closer than the proximity limit, minus the sum
//! of pairwise center-to-center distances (which couples the cars' actions).

use super::car::{CarEnv, CarEnvState};
use super::{Environment, StepOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiCarState {
    pub cars: Vec<CarEnvState>,
}

#[derive(Debug, Clone)]
pub struct MultiCarEnv {
    car_env: CarEnv,
    n_cars: usize,
    bounds: Vec<(f64, f64)>,
    /// Pair distance below which the proximity indicator fires [m].
    pub proximity_limit: f64,
    /// Penalty applied once per step when the indicator fires.
    pub proximity_penalty: f64,
}

impl MultiCarEnv {
    pub fn new(car_env: CarEnv, n_cars: usize) -> Result<Self> {
        if n_cars < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: n_cars,
            });
        }
        let per_car: Vec<(f64, f64)> = car_env.bounds().to_vec();
        let bounds = per_car
            .iter()
            .cycle()
            .take(2 * n_cars)
            .cloned()
            .collect();
        Ok(Self {
            car_env,
            n_cars,
            bounds,
            proximity_limit: 4.0,
            proximity_penalty: 11_000.0,
        })
    }

    pub fn n_cars(&self) -> usize {
        self.n_cars
    }

    pub fn car_env(&self) -> &CarEnv {
        &self.car_env
    }

    /// Cars staggered along the centerline `spacing` meters apart.
    pub fn initial_state(&self, spacing: f64, speed: f64) -> MultiCarState {
        let cars = (0..self.n_cars)
            .map(|i| self.car_env.initial_state(i as f64 * spacing, speed))
            .collect();
        MultiCarState { cars }
    }

    /// Reward coupling terms for a set of car positions: (indicator fired,
    /// sum of pairwise distances).
    pub fn pair_terms(positions: &[(f64, f64)], limit: f64) -> (bool, f64) {
        let mut close = false;
        let mut dist_sum = 0.0;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let dx = positions[i].0 - positions[j].0;
                let dy = positions[i].1 - positions[j].1;
                let d = (dx * dx + dy * dy).sqrt();
                if d < limit {
                    close = true;
                }
                dist_sum += d;
            }
        }
        (close, dist_sum)
    }
}

impl Environment for MultiCarEnv {
    type State = MultiCarState;

    fn control_dim(&self) -> usize {
        2 * self.n_cars
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn smoothing(&self) -> f64 {
        self.car_env.smoothing()
    }

    fn step(&self, state: &Self::State, action: &[f64]) -> Result<(Self::State, StepOutcome)> {
        if action.len() != 2 * self.n_cars {
            return Err(Error::DimensionMismatch {
                what: "multi-car action",
                expected: 2 * self.n_cars,
                got: action.len(),
            });
        }
        let mut cars = Vec::with_capacity(self.n_cars);
        let mut reward = 0.0;
        let mut violated_beta = false;
        let mut off_track = false;
        for (i, prev) in state.cars.iter().enumerate() {
            let (next, out) = self
                .car_env
                .step(prev, &action[2 * i..2 * i + 2])
                .map_err(|e| match e {
                    Error::NonFiniteState { step } => Error::NonFiniteCarState { car: i, step },
                    other => other,
                })?;
            reward += out.reward;
            violated_beta |= out.violated_beta;
            off_track |= out.off_track;
            cars.push(next);
        }
        let positions: Vec<(f64, f64)> = cars.iter().map(|c| (c.car.x, c.car.y)).collect();
        let (close, dist_sum) = Self::pair_terms(&positions, self.proximity_limit);
        if close {
            reward -= self.proximity_penalty;
        }
        reward -= dist_sum;

        let track = self.car_env.track();
        let required = self.car_env.params().laps_required;
        let all_lapped = cars.iter().all(|c| c.laps(track) >= required);
        let any_violation = cars.iter().any(|c| c.beta_violation || c.track_violation);
        let progress = cars
            .iter()
            .map(|c| c.cum_progress)
            .fold(f64::INFINITY, f64::min);
        let outcome = StepOutcome {
            reward,
            violated_beta,
            off_track,
            done: all_lapped || any_violation,
            progress,
        };
        Ok((MultiCarState { cars }, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::super::car::CarParams;
    use super::super::track::circle_track;
    use super::*;

    fn env(n: usize) -> MultiCarEnv {
        let car = CarEnv::new(CarParams::default(), circle_track(60.0, 5.0, 600)).unwrap();
        MultiCarEnv::new(car, n).unwrap()
    }

    #[test]
    fn action_dimension_is_two_per_car() {
        let e = env(2);
        assert_eq!(e.control_dim(), 4);
        assert_eq!(e.bounds().len(), 4);
        let e = env(3);
        assert_eq!(e.control_dim(), 6);
    }

    #[test]
    fn two_distant_cars_reward() {
        // Two cars at the centerline doing 10 m/s, 100 m apart:
        // 20 + 20 - 0 - 100 = -60.
        let e = env(2);
        let mut state = e.initial_state(0.0, 10.0);
        // Place them exactly 100 m apart in space.
        state.cars[0].car.x = 60.0;
        state.cars[0].car.y = 0.0;
        state.cars[1] = {
            // Opposite side of the circle is 120 m away; instead take a
            // chord of 100 m: angle = 2*asin(50/60).
            let th = 2.0 * (50.0 / 60.0_f64).asin();
            let mut c = e.car_env.initial_state(60.0 * th, 10.0);
            c.car.x = 60.0 * th.cos();
            c.car.y = 60.0 * th.sin();
            c
        };
        let (_, out) = e.step(&state, &[0.0, 0.0, 0.0, 0.0]).unwrap();
        // The chord between the two positions stays ~100 m after one small
        // step; speeds decay slightly while coasting.
        assert!((out.reward + 60.0).abs() < 1.0, "reward {}", out.reward);
    }

    #[test]
    fn proximity_indicator_fires() {
        let e = env(2);
        let mut state = e.initial_state(0.0, 10.0);
        // Second car 3 m from the first.
        state.cars[1].car.x = state.cars[0].car.x;
        state.cars[1].car.y = state.cars[0].car.y + 3.0;
        let (_, out) = e.step(&state, &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(out.reward < -10_000.0, "reward {}", out.reward);
    }

    #[test]
    fn pair_terms_brute_force() {
        let positions = vec![(0.0, 0.0), (3.0, 4.0), (10.0, 0.0)];
        let (close, sum) = MultiCarEnv::pair_terms(&positions, 4.0);
        assert!(!close);
        let d01 = 5.0;
        let d02 = 10.0;
        let d12 = ((7.0f64).powi(2) + 16.0).sqrt();
        assert!((sum - (d01 + d02 + d12)).abs() < 1e-12);
    }

    #[test]
    fn requires_two_cars() {
        let car = CarEnv::new(CarParams::default(), circle_track(60.0, 5.0, 600)).unwrap();
        assert!(MultiCarEnv::new(car, 1).is_err());
    }
}
