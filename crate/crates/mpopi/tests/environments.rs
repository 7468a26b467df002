//! Environment-level invariants that cut across modules.

use mpopi::env::{circle_track, CarEnv, CarParams, Environment, MultiCarEnv};
use mpopi::rng::derive_rng;
use rand::Rng;

/// The signed lateral offset is continuous along any continuous path that
/// stays within twice the half-width of the centerline.
#[test]
fn projection_continuous_along_path() {
    let track = circle_track(40.0, 4.0, 600);
    let mut prev: Option<f64> = None;
    // Spiral-ish path wobbling +/- 6 m around the centerline radius.
    let steps = 4000;
    for i in 0..steps {
        let th = 2.2 * std::f64::consts::PI * i as f64 / steps as f64;
        let r = 40.0 + 6.0 * (5.0 * th).sin();
        let pos = (r * th.cos(), r * th.sin());
        let proj = track.project(pos);
        if let Some(last) = prev {
            assert!(
                (proj.d - last).abs() < 0.1,
                "offset jumped from {last} to {} at sample {i}",
                proj.d
            );
        }
        prev = Some(proj.d);
    }
}

/// The multi-car reward equals the hand formula (sum of individual rewards,
/// proximity indicator, pairwise distance sum) on random configurations.
#[test]
fn multicar_reward_matches_brute_force() {
    let mut rng = derive_rng(88, &[61]);
    for n_cars in 2..=4usize {
        let car_env = CarEnv::new(CarParams::default(), circle_track(60.0, 5.0, 600)).unwrap();
        let multi = MultiCarEnv::new(car_env.clone(), n_cars).unwrap();
        for _ in 0..25 {
            let mut state = multi.initial_state(15.0, 8.0);
            for car in &mut state.cars {
                car.car.x += rng.gen_range(-30.0..30.0);
                car.car.y += rng.gen_range(-30.0..30.0);
                car.car.yaw += rng.gen_range(-0.5..0.5);
                car.car.vx = rng.gen_range(0.0..25.0);
                car.car.vy = rng.gen_range(-2.0..2.0);
            }
            let actions: Vec<f64> = (0..2 * n_cars)
                .map(|i| {
                    if i % 2 == 0 {
                        rng.gen_range(-0.4..0.4)
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect();

            let (joint_state, joint_out) = multi.step(&state, &actions).unwrap();

            // Brute force: step each car individually, then combine.
            let mut individual_sum = 0.0;
            let mut positions = Vec::new();
            for (i, car) in state.cars.iter().enumerate() {
                let (next, out) = car_env.step(car, &actions[2 * i..2 * i + 2]).unwrap();
                individual_sum += out.reward;
                positions.push((next.car.x, next.car.y));
            }
            let mut any_close = false;
            let mut dist_sum = 0.0;
            for i in 0..n_cars {
                for j in (i + 1)..n_cars {
                    let dx = positions[i].0 - positions[j].0;
                    let dy = positions[i].1 - positions[j].1;
                    let d = (dx * dx + dy * dy).sqrt();
                    if d < 4.0 {
                        any_close = true;
                    }
                    dist_sum += d;
                }
            }
            let expected =
                individual_sum - if any_close { 11_000.0 } else { 0.0 } - dist_sum;
            assert!(
                (joint_out.reward - expected).abs() < 1e-9,
                "joint {} vs brute force {expected}",
                joint_out.reward
            );
            // Same car states either way.
            for (a, b) in joint_state.cars.iter().zip(positions.iter()) {
                assert_eq!((a.car.x, a.car.y), *b);
            }
        }
    }
}
