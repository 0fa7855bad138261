use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::Side;

#[derive(Debug, Error, PartialEq)]
#[error("road speed limit must be positive, got {0}")]
pub struct BadSpeedLimit(pub f64);

/// Longest the pedestrian keeps looking one way before checking the other:
/// time for an unseen vehicle at the edge of sensing range to arrive at the
/// speed limit, minus the accepted gap. Clamped at zero.
pub fn compute_scan_threshold(
    max_sensing_range: f64,
    road_speed_limit: f64,
    accepted_gap: f64,
) -> Result<f64, BadSpeedLimit> {
    if !(road_speed_limit > 0.0) {
        return Err(BadSpeedLimit(road_speed_limit));
    }
    Ok((max_sensing_range / road_speed_limit - accepted_gap).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanController {
    pub current_side: Side,
    /// When the pedestrian last turned to the current side, i.e. the last
    /// time the opposite side was inspected.
    pub t_upd: f64,
    pub th_scan: f64,
    /// Whether the opposite side was looked at just before `t_upd`.
    pub opposite_checked: bool,
}

impl ScanController {
    pub fn new(th_scan: f64) -> Self {
        Self { current_side: Side::Left, t_upd: 0.0, th_scan: th_scan.max(0.0), opposite_checked: false }
    }

    /// Starts a fresh scan; nothing is known about the other side.
    pub fn start(&mut self, side: Side, t: f64) {
        self.current_side = side;
        self.t_upd = t;
        self.opposite_checked = false;
    }

    pub fn turn_to(&mut self, side: Side, t: f64) {
        self.current_side = side;
        self.t_upd = t;
        self.opposite_checked = true;
    }

    /// Whether the opposite side has gone unchecked for longer than the
    /// threshold.
    pub fn overdue(&self, t: f64) -> bool {
        t - self.t_upd > self.th_scan + 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let th = compute_scan_threshold(80.0, 13.9, 4.0).unwrap();
        assert!((th - (80.0 / 13.9 - 4.0)).abs() < 1e-12);
        assert!((th - 1.7554).abs() < 1e-3);
        assert_eq!(compute_scan_threshold(80.0, 10.0, 8.0).unwrap(), 0.0);
        assert_eq!(compute_scan_threshold(80.0, 13.9, 8.0).unwrap(), 0.0);
        assert_eq!(compute_scan_threshold(80.0, 0.0, 4.0), Err(BadSpeedLimit(0.0)));
        assert!(compute_scan_threshold(80.0, -3.0, 4.0).is_err());
    }

    #[test]
    fn overdue_after_threshold() {
        let mut s = ScanController::new(1.0);
        s.turn_to(Side::Right, 10.0);
        assert!(!s.overdue(11.0));
        assert!(s.overdue(11.5));
    }
}
