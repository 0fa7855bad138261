//! Scenario description consumed by the engine.

use serde::{Deserialize, Serialize};

use crate::fov::{FieldOfView, DEFAULT_EXTENTS_DEG, DEFAULT_RANGE_RATIOS};
use crate::pedestrian::{ObservationMode, Trait};
use crate::road::{RoadKind, RoadLayout};
use crate::traffic::{CarFollowing, Demand, SpawnSchedule, VehicleParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSpec {
    pub kind: RoadKind,
    pub lanes_per_direction: u32,
    pub lane_width_m: f64,
    pub speed_limit_mps: f64,
    pub crossing_offsets_m: Vec<f64>,
}

impl Default for RoadSpec {
    fn default() -> Self {
        Self {
            kind: RoadKind::Straight { length_m: 270.0 },
            lanes_per_direction: 1,
            lane_width_m: 3.5,
            speed_limit_mps: 13.9,
            crossing_offsets_m: vec![135.0],
        }
    }
}

/// Named traffic demand level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub label: String,
    pub demand: Demand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    /// Demand applies per road, spread over all of its lanes.
    pub density: Density,
    pub vehicle: VehicleParams,
    pub following: CarFollowing,
    pub min_spawn_gap_m: f64,
    pub yield_to_pedestrians: bool,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        Self {
            density: Density { label: "medium".into(), demand: Demand::Headway(4.0) },
            vehicle: VehicleParams::default(),
            following: CarFollowing::default(),
            min_spawn_gap_m: 10.0,
            yield_to_pedestrians: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionSpec {
    pub mode: ObservationMode,
    /// Focus sector range; the other sectors scale from it.
    pub sensing_range_m: f64,
    pub extents_deg: [f64; 4],
    pub range_ratios: [f64; 4],
    pub noise_sigma: f64,
}

impl Default for PerceptionSpec {
    fn default() -> Self {
        Self {
            mode: ObservationMode::Fov,
            sensing_range_m: 80.0,
            extents_deg: DEFAULT_EXTENTS_DEG,
            range_ratios: DEFAULT_RANGE_RATIOS,
            noise_sigma: 0.1,
        }
    }
}

impl PerceptionSpec {
    pub fn field_of_view(&self) -> Result<FieldOfView, crate::fov::FovError> {
        FieldOfView::scaled(self.sensing_range_m, self.extents_deg, self.range_ratios)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitGaps {
    pub aggressive: f64,
    pub average: f64,
    pub conservative: f64,
}

impl TraitGaps {
    pub fn gap(&self, t: Trait) -> f64 {
        match t {
            Trait::Aggressive => self.aggressive,
            Trait::Average => self.average,
            Trait::Conservative => self.conservative,
        }
    }
}

impl Default for TraitGaps {
    fn default() -> Self {
        Self { aggressive: 3.0, average: 4.5, conservative: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub count: u32,
    /// Time of the first arrival, letting traffic fill the road.
    pub first_spawn_s: f64,
    pub spawn_interval_s: f64,
    /// Sidewalk distance walked before reaching the curb.
    pub approach_m: f64,
    pub walk_speed_mps: f64,
    pub gaps: TraitGaps,
    /// Relative weights of aggressive, average and conservative walkers.
    pub trait_weights: [f64; 3],
    pub monitor_while_crossing: bool,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            count: 40,
            first_spawn_s: 10.0,
            spawn_interval_s: 5.0,
            approach_m: 1.4,
            walk_speed_mps: 1.4,
            gaps: TraitGaps::default(),
            trait_weights: [1.0, 1.0, 1.0],
            monitor_while_crossing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dt_s: f64,
    pub steps: u32,
    pub seed: u64,
    pub road: RoadSpec,
    pub traffic: TrafficSpec,
    pub perception: PerceptionSpec,
    pub pedestrians: PopulationSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            dt_s: 0.5,
            steps: 500,
            seed: 1,
            road: RoadSpec::default(),
            traffic: TrafficSpec::default(),
            perception: PerceptionSpec::default(),
            pedestrians: PopulationSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario: {}", .0.join("; "))]
pub struct ValidationError(pub Vec<String>);

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive, got {v}"));
    }
}

impl Scenario {
    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut e = Vec::new();
        positive(&mut e, "dt_s", self.dt_s);
        if self.steps == 0 {
            e.push("steps must be positive".into());
        }
        let r = &self.road;
        match r.kind {
            RoadKind::Straight { length_m } => positive(&mut e, "road.length_m", length_m),
            RoadKind::Intersection { arm_length_m } => positive(&mut e, "road.arm_length_m", arm_length_m),
        }
        if r.lanes_per_direction == 0 {
            e.push("road.lanes_per_direction must be at least 1".into());
        }
        positive(&mut e, "road.lane_width_m", r.lane_width_m);
        positive(&mut e, "road.speed_limit_mps", r.speed_limit_mps);
        if r.crossing_offsets_m.is_empty() {
            e.push("road.crossing_offsets_m must list at least one crossing".into());
        }
        let half_width = r.lanes_per_direction as f64 * r.lane_width_m;
        for &c in &r.crossing_offsets_m {
            match r.kind {
                RoadKind::Straight { length_m } if !(c > 0.0 && c < length_m) => {
                    e.push(format!("crossing at {c} m lies outside the road (0, {length_m})"));
                }
                RoadKind::Intersection { arm_length_m } if !(c > half_width && c < arm_length_m) => {
                    e.push(format!(
                        "crossing at {c} m from the center must lie between the junction edge {half_width} m and the arm end {arm_length_m} m"
                    ));
                }
                _ => {}
            }
        }

        let t = &self.traffic;
        if !t.density.demand.is_valid() {
            e.push(format!("traffic demand must be positive, got {:?}", t.density.demand));
        }
        positive(&mut e, "traffic.vehicle_length_m", t.vehicle.length);
        positive(&mut e, "traffic.vehicle_width_m", t.vehicle.width);
        if !(0.0..1.0).contains(&t.vehicle.speed_spread) {
            e.push(format!("traffic.speed_spread must lie in [0, 1), got {}", t.vehicle.speed_spread));
        }
        if t.vehicle.width >= r.lane_width_m {
            e.push("traffic.vehicle_width_m must be narrower than a lane".into());
        }
        positive(&mut e, "traffic.accel_mps2", t.following.max_accel);
        positive(&mut e, "traffic.brake_mps2", t.following.max_brake);
        positive(&mut e, "traffic.safe_headway_s", t.following.safe_headway);
        if !(t.following.min_gap >= 0.0) {
            e.push("traffic.min_gap_m must not be negative".into());
        }
        if !(t.min_spawn_gap_m >= 0.0) {
            e.push("traffic.min_spawn_gap_m must not be negative".into());
        }

        let p = &self.perception;
        if let Err(err) = p.field_of_view() {
            e.push(format!("field of view: {err}"));
        }
        if !(p.noise_sigma >= 0.0 && p.noise_sigma.is_finite()) {
            e.push(format!("perception.noise_sigma must be non-negative, got {}", p.noise_sigma));
        }

        let q = &self.pedestrians;
        positive(&mut e, "pedestrians.spawn_interval_s", q.spawn_interval_s);
        if !(q.first_spawn_s >= 0.0) {
            e.push("pedestrians.first_spawn_s must not be negative".into());
        }
        positive(&mut e, "pedestrians.walk_speed_mps", q.walk_speed_mps);
        if !(q.approach_m >= 0.0) {
            e.push("pedestrians.approach_m must not be negative".into());
        }
        positive(&mut e, "pedestrians.gap_aggressive_s", q.gaps.aggressive);
        positive(&mut e, "pedestrians.gap_average_s", q.gaps.average);
        positive(&mut e, "pedestrians.gap_conservative_s", q.gaps.conservative);
        if !(q.gaps.aggressive < q.gaps.conservative) {
            e.push("aggressive walkers must accept smaller gaps than conservative ones".into());
        }
        if q.trait_weights.iter().any(|w| !(*w >= 0.0)) || q.trait_weights.iter().sum::<f64>() <= 0.0 {
            e.push("pedestrians.trait_weights must be non-negative with a positive sum".into());
        }

        if e.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(e))
        }
    }

    pub fn layout(&self) -> RoadLayout {
        RoadLayout::build(
            self.road.kind,
            self.road.lanes_per_direction as usize,
            self.road.lane_width_m,
            &self.road.crossing_offsets_m,
        )
    }

    /// One schedule per road covering all of its lanes.
    pub fn spawn_schedules(&self, layout: &RoadLayout) -> Vec<SpawnSchedule> {
        let roads = layout.lanes.iter().map(|l| l.road).max().map_or(0, |m| m + 1);
        (0..roads)
            .map(|road| SpawnSchedule {
                lanes: layout.lanes.iter().filter(|l| l.road == road).map(|l| l.id).collect(),
                demand: self.traffic.density.demand,
                start_speed: self.road.speed_limit_mps,
            })
            .collect()
    }

    pub fn horizon_s(&self) -> f64 {
        self.steps as f64 * self.dt_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        Scenario::default().validate().unwrap();
    }

    #[test]
    fn lists_every_violation() {
        let mut s = Scenario::default();
        s.dt_s = 0.0;
        s.steps = 0;
        s.pedestrians.gaps.aggressive = 9.0;
        s.perception.sensing_range_m = -1.0;
        let err = s.validate().unwrap_err();
        assert_eq!(err.0.len(), 4, "{err}");
    }

    #[test]
    fn intersection_crossings_must_clear_the_junction() {
        let mut s = Scenario::default();
        s.road.kind = RoadKind::Intersection { arm_length_m: 120.0 };
        s.road.lanes_per_direction = 2;
        s.road.crossing_offsets_m = vec![5.0];
        assert!(s.validate().is_err());
        s.road.crossing_offsets_m = vec![30.0];
        s.validate().unwrap();
        assert_eq!(s.spawn_schedules(&s.layout()).len(), 2);
    }
}
