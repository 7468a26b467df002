//! Single-track (bicycle) car with a brush-model tire on a waypoint track.
//!
//! The lateral tire force follows the Fiala brush model: cubic in the slip
//! angle up to the friction limit, fully sliding beyond it. Longitudinal
//! force comes from a speed-derated drive force (throttle > 0) or a brake
//! force (throttle < 0), with a per-axle friction circle coupling the two.
//! Controls arrive at 10 Hz; the dynamics integrate at 100 Hz by default.

use super::track::Track;
use super::{Environment, StepOutcome};
use crate::error::{Error, Result};

/// Vehicle and simulation parameters sized for a full-scale experimental
/// sedan. All values are configuration, not measurements.
#[derive(Debug, Clone)]
pub struct CarParams {
    /// Vehicle mass [kg].
    pub mass: f64,
    /// Yaw inertia [kg m^2].
    pub yaw_inertia: f64,
    /// CG to front axle [m].
    pub lf: f64,
    /// CG to rear axle [m].
    pub lr: f64,
    /// Front axle cornering stiffness [N/rad].
    pub cornering_front: f64,
    /// Rear axle cornering stiffness [N/rad].
    pub cornering_rear: f64,
    /// Tire-road friction coefficient.
    pub friction: f64,
    /// Peak drive force at standstill [N]; derated linearly to zero at
    /// `top_speed` so the model has a natural speed ceiling.
    pub drive_force_max: f64,
    /// Peak brake force [N].
    pub brake_force_max: f64,
    /// Speed at which the drive force reaches zero [m/s].
    pub top_speed: f64,
    /// Aerodynamic drag coefficient [N s^2/m^2].
    pub drag_coeff: f64,
    /// Rolling resistance magnitude [N].
    pub rolling_resist: f64,
    /// Steering angle limit [rad].
    pub steer_max: f64,
    /// Steering slew rate [rad/s].
    pub steer_rate: f64,
    /// Sideslip angle limit for the violation indicator [rad].
    pub beta_limit: f64,
    /// Speed below which the sideslip indicator is inactive [m/s].
    pub beta_min_speed: f64,
    /// Control period [s].
    pub control_dt: f64,
    /// Integration substeps per control period.
    pub substeps: usize,
    /// Laps to complete a trial.
    pub laps_required: u32,
    /// Sideslip violation window [control steps] (5 s at 10 Hz).
    pub beta_window: u32,
    /// Off-track violation window [control steps] (1 s at 10 Hz).
    pub off_track_window: u32,
    /// Reward coefficients: speed gain, lane-offset gain, sideslip penalty,
    /// boundary penalty.
    pub speed_reward: f64,
    pub offset_penalty: f64,
    pub beta_penalty: f64,
    pub boundary_penalty: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        Self {
            mass: 1800.0,
            yaw_inertia: 3300.0,
            lf: 1.3,
            lr: 1.4,
            cornering_front: 150_000.0,
            cornering_rear: 190_000.0,
            friction: 0.9,
            drive_force_max: 9000.0,
            brake_force_max: 12_000.0,
            top_speed: 43.0,
            drag_coeff: 0.45,
            rolling_resist: 150.0,
            steer_max: 0.5,
            steer_rate: 3.0,
            beta_limit: 45.0_f64.to_radians(),
            beta_min_speed: 1.0,
            control_dt: 0.1,
            substeps: 10,
            laps_required: 2,
            beta_window: 50,
            off_track_window: 10,
            speed_reward: 2.0,
            offset_penalty: 1.0,
            beta_penalty: 5000.0,
            boundary_penalty: 1_000_000.0,
        }
    }
}

/// Rigid-body state of one car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    /// Global position [m].
    pub x: f64,
    pub y: f64,
    /// Heading [rad].
    pub yaw: f64,
    /// Body-frame velocities [m/s].
    pub vx: f64,
    pub vy: f64,
    /// Yaw rate [rad/s].
    pub yaw_rate: f64,
    /// Current steering angle [rad] (actuator state for the slew limit).
    pub steer: f64,
}

impl CarState {
    /// Sideslip angle: angle between the velocity vector and the
    /// longitudinal axis.
    pub fn beta(&self) -> f64 {
        self.vy.atan2(self.vx)
    }

    pub fn speed(&self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.yaw.is_finite()
            && self.vx.is_finite()
            && self.vy.is_finite()
            && self.yaw_rate.is_finite()
            && self.steer.is_finite()
    }
}

/// Car state plus the track-relative bookkeeping a trial needs: projection
/// hint, cumulative progress for lap counting, and violation-window runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CarEnvState {
    pub car: CarState,
    /// Last matched centerline segment; speeds up the next projection.
    pub segment_hint: usize,
    /// Arclength of the last projection [m].
    pub last_s: f64,
    /// Wrap-aware cumulative progress since the start [m].
    pub cum_progress: f64,
    /// Consecutive control steps with the sideslip indicator active.
    pub beta_run: u32,
    /// Consecutive control steps outside the boundary.
    pub off_track_run: u32,
    /// Sticky flags set once a violation window is exceeded.
    pub beta_violation: bool,
    pub track_violation: bool,
}

impl CarEnvState {
    pub fn laps(&self, track: &Track) -> u32 {
        let total = track.total_length();
        if self.cum_progress <= 0.0 {
            0
        } else {
            (self.cum_progress / total).floor() as u32
        }
    }
}

#[derive(Debug, Clone)]
pub struct CarEnv {
    params: CarParams,
    track: Track,
    bounds: [(f64, f64); 2],
    smoothing: f64,
}

impl CarEnv {
    pub fn new(params: CarParams, track: Track) -> Result<Self> {
        track.require_closed()?;
        let bounds = [(-params.steer_max, params.steer_max), (-1.0, 1.0)];
        Ok(Self {
            params,
            track,
            bounds,
            smoothing: 0.0,
        })
    }

    /// Enable first-order input smoothing (coefficient in [0, 1)).
    pub fn with_smoothing(mut self, coeff: f64) -> Self {
        self.smoothing = coeff;
        self
    }

    pub fn params(&self) -> &CarParams {
        &self.params
    }

    pub fn track(&self) -> &Track {
        &self.track
    }

    /// State on the centerline at arclength `s0`, heading along the track.
    pub fn initial_state(&self, s0: f64, speed: f64) -> CarEnvState {
        let ((x, y), (tx, ty)) = self.track.sample(s0);
        let car = CarState {
            x,
            y,
            yaw: ty.atan2(tx),
            vx: speed,
            vy: 0.0,
            yaw_rate: 0.0,
            steer: 0.0,
        };
        let proj = self.track.project((x, y));
        CarEnvState {
            car,
            segment_hint: proj.segment,
            last_s: proj.s,
            cum_progress: 0.0,
            beta_run: 0,
            off_track_run: 0,
            beta_violation: false,
            track_violation: false,
        }
    }

    /// Fiala brush lateral force with a friction-circle-derated peak.
    fn brush_lateral(stiffness: f64, peak: f64, slip: f64) -> f64 {
        if peak <= 0.0 {
            return 0.0;
        }
        let z = slip.tan();
        let z_sl = 3.0 * peak / stiffness;
        if z.abs() < z_sl {
            -stiffness * z + stiffness * stiffness / (3.0 * peak) * z.abs() * z
                - stiffness.powi(3) / (27.0 * peak * peak) * z.powi(3)
        } else {
            -peak * z.signum()
        }
    }

    /// Integrate one control period; returns the new car state or the
    /// substep index where the state became non-finite.
    pub fn integrate(
        &self,
        state: &CarState,
        steer_cmd: f64,
        throttle: f64,
    ) -> std::result::Result<CarState, usize> {
        let p = &self.params;
        let dt = p.control_dt / p.substeps as f64;
        let fz_front = p.mass * 9.81 * p.lr / (p.lf + p.lr);
        let fz_rear = p.mass * 9.81 * p.lf / (p.lf + p.lr);
        let mut s = *state;
        for sub in 0..p.substeps {
            // Steering actuator: slew-limited tracking of the command.
            let d_steer = (steer_cmd.clamp(-p.steer_max, p.steer_max) - s.steer)
                .clamp(-p.steer_rate * dt, p.steer_rate * dt);
            s.steer += d_steer;

            // Slip angles with a low-speed floor on the denominator.
            let vx_safe = s.vx.max(3.0);
            let alpha_f = ((s.vy + p.lf * s.yaw_rate) / vx_safe).atan() - s.steer;
            let alpha_r = ((s.vy - p.lr * s.yaw_rate) / vx_safe).atan();

            // Longitudinal command: derated drive at the rear, brake split
            // 60/40 front/rear. No braking force once stopped.
            let (mut fx_f, mut fx_r) = if throttle >= 0.0 {
                let derate = (1.0 - s.vx / p.top_speed).max(0.0);
                (0.0, p.drive_force_max * throttle * derate)
            } else if s.vx > 0.0 {
                let total = p.brake_force_max * throttle;
                (0.6 * total, 0.4 * total)
            } else {
                (0.0, 0.0)
            };
            fx_f = fx_f.clamp(-p.friction * fz_front, p.friction * fz_front);
            fx_r = fx_r.clamp(-p.friction * fz_rear, p.friction * fz_rear);

            // Friction circle: longitudinal use shrinks the lateral peak.
            let peak_f = ((p.friction * fz_front).powi(2) - fx_f * fx_f).max(0.0).sqrt();
            let peak_r = ((p.friction * fz_rear).powi(2) - fx_r * fx_r).max(0.0).sqrt();
            let fy_f = Self::brush_lateral(p.cornering_front, peak_f, alpha_f);
            let fy_r = Self::brush_lateral(p.cornering_rear, peak_r, alpha_r);

            let drag = p.drag_coeff * s.vx * s.vx.abs();
            let roll = p.rolling_resist * (s.vx / 0.5).tanh();

            let (sin_d, cos_d) = s.steer.sin_cos();
            let ax = (fx_r + fx_f * cos_d - fy_f * sin_d - drag - roll) / p.mass
                + s.yaw_rate * s.vy;
            let ay = (fy_f * cos_d + fx_f * sin_d + fy_r) / p.mass - s.yaw_rate * s.vx;
            let yaw_acc = (p.lf * (fy_f * cos_d + fx_f * sin_d) - p.lr * fy_r) / p.yaw_inertia;

            s.vx += ax * dt;
            s.vy += ay * dt;
            s.yaw_rate += yaw_acc * dt;
            s.yaw += s.yaw_rate * dt;
            let (sin_y, cos_y) = s.yaw.sin_cos();
            s.x += (s.vx * cos_y - s.vy * sin_y) * dt;
            s.y += (s.vx * sin_y + s.vy * cos_y) * dt;

            if !s.is_finite() {
                return Err(sub);
            }
        }
        Ok(s)
    }

    fn outcome(&self, prev: &CarEnvState, car: CarState) -> (CarEnvState, StepOutcome) {
        let p = &self.params;
        let proj = self.track.project_hinted((car.x, car.y), prev.segment_hint);
        let total = self.track.total_length();
        let mut ds = proj.s - prev.last_s;
        if ds > total / 2.0 {
            ds -= total;
        } else if ds < -total / 2.0 {
            ds += total;
        }
        let cum_progress = prev.cum_progress + ds;

        let speed = car.speed();
        let beta_active = speed > p.beta_min_speed && car.beta().abs() > p.beta_limit;
        let off_track = !proj.inside;
        let beta_run = if beta_active { prev.beta_run + 1 } else { 0 };
        let off_track_run = if off_track { prev.off_track_run + 1 } else { 0 };
        let beta_violation = prev.beta_violation || beta_run > p.beta_window;
        let track_violation = prev.track_violation || off_track_run > p.off_track_window;

        let reward = p.speed_reward * speed
            - p.offset_penalty * proj.d.abs()
            - if beta_active { p.beta_penalty } else { 0.0 }
            - if off_track { p.boundary_penalty } else { 0.0 };

        let next = CarEnvState {
            car,
            segment_hint: proj.segment,
            last_s: proj.s,
            cum_progress,
            beta_run,
            off_track_run,
            beta_violation,
            track_violation,
        };
        let done =
            next.laps(&self.track) >= p.laps_required || beta_violation || track_violation;
        let outcome = StepOutcome {
            reward,
            violated_beta: beta_active,
            off_track,
            done,
            progress: proj.s,
        };
        (next, outcome)
    }
}

impl Environment for CarEnv {
    type State = CarEnvState;

    fn control_dim(&self) -> usize {
        2
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn smoothing(&self) -> f64 {
        self.smoothing
    }

    fn step(&self, state: &Self::State, action: &[f64]) -> Result<(Self::State, StepOutcome)> {
        let car = self
            .integrate(&state.car, action[0], action[1])
            .map_err(|sub| Error::NonFiniteState { step: sub })?;
        Ok(self.outcome(state, car))
    }
}

#[cfg(test)]
mod tests {
    use super::super::track::circle_track;
    use super::*;

    fn straight_track() -> Track {
        // Long straight; open track, so build the env pieces by hand where
        // closure is not needed.
        let pts: Vec<(f64, f64)> = (0..60).map(|i| (i as f64 * 20.0, 0.0)).collect();
        let widths = vec![6.0; pts.len()];
        Track::from_points(pts, widths).unwrap()
    }

    fn loop_env(params: CarParams) -> CarEnv {
        CarEnv::new(params, circle_track(60.0, 5.0, 600)).unwrap()
    }

    #[test]
    fn requires_closed_track() {
        assert!(CarEnv::new(CarParams::default(), straight_track()).is_err());
    }

    #[test]
    fn reward_at_center_matches_formula() {
        // Centerline, 10 m/s, no indicators: reward = 2 * 10 = 20.
        let env = loop_env(CarParams::default());
        let state = env.initial_state(0.0, 10.0);
        let (_, out) = env.step(&state, &[0.0, 0.0]).unwrap();
        assert!(!out.violated_beta && !out.off_track);
        // One step of coasting sheds a little speed; bound the difference.
        assert!((out.reward - 20.0).abs() < 0.1, "reward {}", out.reward);
    }

    #[test]
    fn boundary_penalty_applies() {
        let env = loop_env(CarParams::default());
        let mut state = env.initial_state(0.0, 10.0);
        // Teleport the car 8 m outside the 5 m half-width.
        state.car.x += 8.0;
        let (_, out) = env.step(&state, &[0.0, 0.0]).unwrap();
        assert!(out.off_track);
        assert!(out.reward < -900_000.0);
    }

    #[test]
    fn straight_line_symmetry() {
        // Zero steer and constant throttle on a straight heading: lateral
        // motion must stay identically zero.
        let env = loop_env(CarParams::default());
        let mut car = CarState {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            vx: 10.0,
            vy: 0.0,
            yaw_rate: 0.0,
            steer: 0.0,
        };
        for _ in 0..100 {
            car = env.integrate(&car, 0.0, 0.5).unwrap();
        }
        assert!(car.y.abs() < 1e-3, "lateral drift {}", car.y);
        assert!(car.vy.abs() < 1e-6);
    }

    #[test]
    fn coasting_speed_non_increasing() {
        let env = loop_env(CarParams::default());
        let mut car = CarState {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            vx: 30.0,
            vy: 0.0,
            yaw_rate: 0.0,
            steer: 0.0,
        };
        let mut last = car.speed();
        for _ in 0..300 {
            car = env.integrate(&car, 0.0, 0.0).unwrap();
            let s = car.speed();
            assert!(s <= last + 1e-12, "speed increased while coasting");
            last = s;
        }
        assert!(car.vx < 30.0);
    }

    #[test]
    fn top_speed_near_design_value() {
        let env = loop_env(CarParams::default());
        let mut car = CarState {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            vx: 5.0,
            vy: 0.0,
            yaw_rate: 0.0,
            steer: 0.0,
        };
        for _ in 0..900 {
            car = env.integrate(&car, 0.0, 1.0).unwrap();
        }
        assert!(car.vx > 38.0 && car.vx < 40.0, "top speed {}", car.vx);
    }

    #[test]
    fn high_sideslip_stays_finite() {
        // Start in a deep slide (beta ~ -36 deg) with counter-steer and
        // throttle; the integrator must remain well-behaved.
        let env = loop_env(CarParams::default());
        let mut car = CarState {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            vx: 15.0,
            vy: -11.0,
            yaw_rate: 1.2,
            steer: 0.0,
        };
        assert!(car.beta().to_degrees() < -34.0);
        for _ in 0..100 {
            car = env.integrate(&car, 0.3, 0.5).unwrap();
            assert!(car.speed() < 60.0);
        }
    }

    #[test]
    fn substep_refinement_changes_little() {
        // Halving the substep (0.005 s) changes the one-control-step state
        // by < 1% per component at 30 m/s. Settle into steady cornering
        // first so the comparison is about integration order, not the fast
        // tire transient from an arbitrary initial condition.
        let coarse_env = loop_env(CarParams::default());
        let mut fine = CarParams::default();
        fine.substeps = 20;
        let fine_env = loop_env(fine);
        let mut car = CarState {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            vx: 30.0,
            vy: 0.0,
            yaw_rate: 0.0,
            steer: 0.03,
        };
        for _ in 0..30 {
            car = coarse_env.integrate(&car, 0.03, 0.35).unwrap();
        }
        assert!(car.vx > 29.0, "settled speed {}", car.vx);
        let a = coarse_env.integrate(&car, 0.03, 0.35).unwrap();
        let b = fine_env.integrate(&car, 0.03, 0.35).unwrap();
        let pairs = [
            ("x", a.x - car.x, b.x - car.x),
            ("y", a.y - car.y, b.y - car.y),
            ("yaw", a.yaw - car.yaw, b.yaw - car.yaw),
            ("vx", a.vx, b.vx),
            ("vy", a.vy, b.vy),
            ("yaw_rate", a.yaw_rate, b.yaw_rate),
        ];
        for (name, ca, cb) in pairs {
            let rel = (ca - cb).abs() / ca.abs().max(cb.abs()).max(1e-9);
            assert!(rel < 0.01, "{name} drift {rel} ({ca} vs {cb})");
        }
    }

    #[test]
    fn lap_counting_wraps_once_per_loop() {
        let mut params = CarParams::default();
        params.laps_required = 2;
        let env = loop_env(params);
        let track_len = env.track().total_length();
        let mut state = env.initial_state(0.0, 0.0);
        // Drag the car around the loop kinematically by teleporting along
        // the centerline; laps must advance once per wrap with no double
        // counting.
        let mut laps_seen = Vec::new();
        for i in 1..=240 {
            let s = i as f64 * (track_len / 80.0);
            let ((x, y), (tx, ty)) = env.track().sample(s);
            state.car.x = x;
            state.car.y = y;
            state.car.yaw = ty.atan2(tx);
            let (next, _) = env.step(&state, &[0.0, 0.0]).unwrap();
            state = next;
            laps_seen.push(state.laps(env.track()));
        }
        assert_eq!(*laps_seen.last().unwrap(), 3);
        for w in laps_seen.windows(2) {
            assert!(w[1] == w[0] || w[1] == w[0] + 1);
        }
    }

    #[test]
    fn beta_window_trips_violation() {
        let mut params = CarParams::default();
        params.beta_window = 3;
        let env = loop_env(params);
        let mut state = env.initial_state(0.0, 10.0);
        // Force a sideways velocity repeatedly; after > window consecutive
        // steps the sticky violation must latch and terminate.
        let mut done = false;
        for _ in 0..10 {
            state.car.vx = 5.0;
            state.car.vy = 10.0; // beta ~ 63 deg
            let (next, out) = env.step(&state, &[0.0, 0.0]).unwrap();
            state = next;
            if out.done {
                done = true;
                break;
            }
        }
        assert!(done);
        assert!(state.beta_violation);
        assert!(!state.track_violation);
    }
}
