//! Noisy estimates of vehicle dynamics and time-to-collision.

use glam::DVec2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::traffic::VehicleState;

/// Below this perceived speed a vehicle is treated as never arriving.
pub const MIN_ARRIVAL_SPEED: f64 = 0.1;

/// Relative perception errors for one observation: the perceived value is
/// `truth * (1 + error)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub speed: f64,
    pub distance: f64,
}

impl NoiseDraw {
    pub fn sample<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Self {
        if sigma <= 0.0 {
            return Self::default();
        }
        let n = Normal::new(0.0, sigma).expect("finite sigma");
        Self { speed: n.sample(rng), distance: n.sample(rng) }
    }

    /// Perceived copy of `v` as seen from `observer`: speed scaled, and the
    /// position pushed or pulled along the line of sight.
    pub fn apply(&self, v: &VehicleState, observer: DVec2) -> VehicleState {
        let mut seen = v.clone();
        seen.speed = (v.speed * (1.0 + self.speed)).max(0.0);
        seen.position = observer + (v.position - observer) * (1.0 + self.distance).max(0.0);
        seen
    }
}

/// Perceived speed with zero-mean Gaussian relative error of scale `sigma`.
pub fn perceive_speed<R: Rng + ?Sized>(true_speed: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma <= 0.0 {
        return true_speed;
    }
    let eps = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
    (true_speed * (1.0 + eps)).max(0.0)
}

/// Time for a vehicle to reach `crossing_point` travelling along
/// `lane_dir`. Infinite for vehicles that have passed it or barely move.
pub fn estimate_ttc(position: DVec2, speed: f64, crossing_point: DVec2, lane_dir: DVec2) -> f64 {
    let remaining = (crossing_point - position).dot(lane_dir);
    if remaining < 0.0 || speed <= MIN_ARRIVAL_SPEED {
        return f64::INFINITY;
    }
    remaining / speed
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_speed_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(perceive_speed(12.0, 0.0, &mut rng), 12.0);
    }

    #[test]
    fn zero_speed_stays_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(perceive_speed(0.0, 0.5, &mut rng), 0.0);
        }
    }

    #[test]
    fn noisy_speed_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mean = (0..n).map(|_| perceive_speed(10.0, 0.1, &mut rng)).sum::<f64>() / n as f64;
        let tol = 10.0 * 0.1 * 3.0 / (n as f64).sqrt();
        assert!((mean - 10.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn ttc_examples() {
        let east = DVec2::X;
        assert_eq!(estimate_ttc(DVec2::new(-60.0, 0.0), 15.0, DVec2::ZERO, east), 4.0);
        assert_eq!(estimate_ttc(DVec2::new(-60.0, 0.0), 0.0, DVec2::ZERO, east), f64::INFINITY);
        assert_eq!(estimate_ttc(DVec2::new(5.0, 0.0), 15.0, DVec2::ZERO, east), f64::INFINITY);
    }

    #[test]
    fn distance_noise_scales_line_of_sight() {
        let v = VehicleState {
            id: 0,
            lane: 0,
            position: DVec2::new(-40.0, -1.75),
            heading: 90.0,
            speed: 10.0,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            desired_speed: 10.0,
        };
        let observer = DVec2::new(0.0, -3.5);
        let seen = NoiseDraw { speed: 0.1, distance: -0.25 }.apply(&v, observer);
        assert!((seen.speed - 11.0).abs() < 1e-12);
        let ratio = seen.position.distance(observer) / v.position.distance(observer);
        assert!((ratio - 0.75).abs() < 1e-12);
    }
}
