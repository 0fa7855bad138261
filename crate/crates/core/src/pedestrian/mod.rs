//! Jaywalking pedestrian: perception, scanning and one-stage gap acceptance.
//!
//! A pedestrian walks up to the curb (`Approach`), scans until every lane
//! offers a large enough gap (`Wait`), walks across (`Cross`) and leaves
//! (`Done`). With limited view the scan looks left first, then right. When
//! monitoring while crossing, a lane that turns unsafe stops the walker on
//! the lane line before it and sends them back to `Wait`.

mod perception;
mod scan;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use glam::DVec2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use perception::{estimate_ttc, perceive_speed, NoiseDraw, MIN_ARRIVAL_SPEED};
pub use scan::{compute_scan_threshold, BadSpeedLimit, ScanController};

use crate::fov::{vehicle_visible, FieldOfView, ObserverPose};
use crate::geom::bearing_of;
use crate::memory::{CrossingLine, Horizon, WorkingMemory};
use crate::road::{CrossingPath, PathLane, Side, PROGRESS_EPS};
use crate::traffic::{VehicleId, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trait {
    Aggressive,
    Average,
    Conservative,
}

impl Trait {
    pub const ALL: [Trait; 3] = [Trait::Aggressive, Trait::Average, Trait::Conservative];
}

/// How a pedestrian sees the road.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObservationMode {
    /// Omnidirectional up to the maximum sensing range, no memory.
    #[serde(rename = "all")]
    All,
    /// Foveated field of view, no memory.
    #[serde(rename = "fov")]
    Fov,
    /// Foveated field of view backed by working memory.
    #[serde(rename = "fov+mem")]
    FovMem,
}

impl ObservationMode {
    pub fn limited_view(self) -> bool {
        !matches!(self, ObservationMode::All)
    }

    pub fn uses_memory(self) -> bool {
        matches!(self, ObservationMode::FovMem)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObservationMode::All => "all",
            ObservationMode::Fov => "fov",
            ObservationMode::FovMem => "fov+mem",
        }
    }
}

impl fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObservationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self::All),
            "fov" => Ok(Self::Fov),
            "fov+mem" => Ok(Self::FovMem),
            other => Err(format!("unknown observation mode `{other}` (expected all, fov or fov+mem)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianParams {
    pub trait_: Trait,
    /// Smallest time-to-collision accepted in every lane, seconds.
    pub accepted_gap: f64,
    pub walk_speed: f64,
    /// Relative perception error scale.
    pub noise_sigma: f64,
    pub monitor_while_crossing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Approach,
    Wait,
    Cross,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    KeepWaiting,
    StartCrossing,
}

/// What happened to a pedestrian during one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub started_crossing: bool,
    pub stopped_mid_road: bool,
    pub finished: bool,
}

/// A vehicle as the pedestrian currently believes it to be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub vehicle_id: VehicleId,
    pub position: DVec2,
    pub speed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u64,
    pub params: PedestrianParams,
    pub mode: ObservationMode,
    pub path: CrossingPath,
    pub pose: ObserverPose,
    pub phase: Phase,
    /// Distance walked along the path; negative while approaching the curb.
    pub progress: f64,
    pub scan: ScanController,
    pub memory: WorkingMemory,
    pub gaze_side: Option<Side>,
    pub wait_start: Option<f64>,
    pub cross_start: Option<f64>,
    pub done_at: Option<f64>,
    pub head_turns: u32,
    pub mid_road_stops: u32,
    /// Total time spent waiting, at the curb and mid-road.
    pub time_waiting: f64,
    /// Without memory: the right side was clear on the last look at it.
    right_clear: bool,
    percepts: Vec<VehicleState>,
    episode_noise: BTreeMap<VehicleId, NoiseDraw>,
    #[serde(skip, default = "default_rng")]
    rng: ChaCha8Rng,
}

fn default_rng() -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(0)
}

impl Pedestrian {
    pub fn new(
        id: u64,
        params: PedestrianParams,
        mode: ObservationMode,
        path: CrossingPath,
        approach_m: f64,
        th_scan: f64,
        rng: ChaCha8Rng,
    ) -> Self {
        let progress = -approach_m.max(0.0);
        let pose = ObserverPose::new(path.point_at(progress), bearing_of(path.dir), 0.0);
        let mut ped = Self {
            id,
            params,
            mode,
            path,
            pose,
            phase: Phase::Approach,
            progress,
            scan: ScanController::new(th_scan),
            memory: WorkingMemory::new(id),
            gaze_side: None,
            wait_start: None,
            cross_start: None,
            done_at: None,
            head_turns: 0,
            mid_road_stops: 0,
            time_waiting: 0.0,
            right_clear: false,
            percepts: Vec::new(),
            episode_noise: BTreeMap::new(),
            rng,
        };
        if ped.progress >= -PROGRESS_EPS {
            ped.progress = 0.0;
            ped.enter_wait(0.0, false);
        }
        ped
    }

    pub fn position(&self) -> DVec2 {
        self.pose.position
    }

    /// Vehicles perceived on the last call to [`Pedestrian::perceive`].
    pub fn percepts(&self) -> &[VehicleState] {
        &self.percepts
    }

    pub fn is_visible(&self, fov: &FieldOfView, v: &VehicleState) -> bool {
        if self.mode.limited_view() {
            vehicle_visible(fov, &self.pose, v)
        } else {
            let (front, back) = v.bumpers();
            let r = fov.max_range();
            self.position().distance(front) <= r || self.position().distance(back) <= r
        }
    }

    /// Looks at the world snapshot taken at time `t`.
    ///
    /// Without memory every observation carries a fresh error. With memory
    /// the error drawn when a vehicle comes into view stays with it while it
    /// remains in view.
    pub fn perceive(&mut self, vehicles: &[VehicleState], fov: &FieldOfView, t: f64) {
        let sigma = self.params.noise_sigma;
        let observer = self.position();
        let visible: Vec<&VehicleState> = vehicles.iter().filter(|v| self.is_visible(fov, v)).collect();
        let mut kept = BTreeMap::new();
        let mut percepts = Vec::with_capacity(visible.len());
        for v in visible {
            let draw = if self.mode.uses_memory() {
                match self.episode_noise.get(&v.id) {
                    Some(d) => *d,
                    None => NoiseDraw::sample(sigma, &mut self.rng),
                }
            } else {
                NoiseDraw::sample(sigma, &mut self.rng)
            };
            if self.mode.uses_memory() {
                kept.insert(v.id, draw);
            }
            percepts.push(draw.apply(v, observer));
        }
        self.episode_noise = kept;
        self.percepts = percepts;
        if self.mode.uses_memory() && self.phase != Phase::Done {
            let horizon = Horizon {
                owner_position: observer,
                max_range: fov.max_range(),
                crossing: Some(CrossingLine { point: self.path.origin, dir: self.path.dir }),
            };
            self.memory.tick(&self.percepts, t, &horizon);
        }
    }

    /// Current beliefs about vehicles in `lane`.
    pub fn beliefs(&self, lane: usize, t: f64) -> Vec<Belief> {
        if self.mode.uses_memory() {
            self.memory
                .entries()
                .filter(|e| e.lane == lane)
                .map(|e| Belief { vehicle_id: e.vehicle_id, position: e.believed_position(t), speed: e.last_speed })
                .collect()
        } else {
            self.percepts
                .iter()
                .filter(|v| v.lane == lane)
                .map(|v| Belief { vehicle_id: v.id, position: v.position, speed: v.speed })
                .collect()
        }
    }

    /// Smallest believed time-to-collision in a lane.
    pub fn lane_min_ttc(&self, lane: &PathLane, t: f64) -> f64 {
        self.beliefs(lane.lane, t)
            .iter()
            .map(|b| estimate_ttc(b.position, b.speed, lane.crossing_point, lane.direction))
            .fold(f64::INFINITY, f64::min)
    }

    /// A lane is safe when no known vehicle in it arrives sooner than the
    /// accepted gap. Unknown vehicles do not count.
    pub fn lane_safe(&self, lane: &PathLane, t: f64) -> bool {
        self.lane_min_ttc(lane, t) >= self.params.accepted_gap
    }

    fn side_safe(&self, side: Side, t: f64) -> bool {
        self.path
            .remaining(self.progress)
            .filter(|l| l.side == side)
            .all(|l| self.lane_safe(l, t))
    }

    fn remaining_on(&self, side: Side) -> bool {
        self.path.remaining(self.progress).any(|l| l.side == side)
    }

    fn look(&mut self, side: Option<Side>, counted: bool) {
        if !self.mode.limited_view() {
            return;
        }
        if counted && self.gaze_side != side {
            self.head_turns += 1;
        }
        self.gaze_side = side;
        self.pose.head_angle = match side {
            Some(Side::Left) => 90.0,
            Some(Side::Right) => -90.0,
            None => 0.0,
        };
    }

    fn enter_wait(&mut self, t: f64, counted: bool) {
        self.phase = Phase::Wait;
        if self.wait_start.is_none() {
            self.wait_start = Some(t);
        }
        let side = if self.remaining_on(Side::Left) { Side::Left } else { Side::Right };
        self.scan.start(side, t);
        self.right_clear = false;
        self.look(Some(side), counted);
    }

    /// One decision step while waiting. `dt` is the step length.
    ///
    /// Limited view scans left (near-side traffic) first, then right. With
    /// memory the walker may cross while looking either way as long as the
    /// beliefs about the other side are fresh and safe. Without memory the
    /// walker needs a final look back to the left right after seeing the
    /// right side clear.
    pub fn step_scan(&mut self, t: f64, dt: f64) -> Decision {
        debug_assert_eq!(self.phase, Phase::Wait);
        if !self.mode.limited_view() {
            let all_safe = self.path.remaining(self.progress).all(|l| self.lane_safe(l, t));
            return if all_safe { Decision::StartCrossing } else { Decision::KeepWaiting };
        }
        let left_pending = self.remaining_on(Side::Left);
        let right_pending = self.remaining_on(Side::Right);
        match self.scan.current_side {
            Side::Left => {
                if !self.side_safe(Side::Left, t) {
                    self.right_clear = false;
                    return Decision::KeepWaiting;
                }
                let right_ok = !right_pending
                    || if self.mode.uses_memory() {
                        self.remembered_safe(Side::Right, t, dt)
                    } else {
                        self.right_clear && self.scan.opposite_checked && t - self.scan.t_upd <= dt + 1e-9
                    };
                if right_ok {
                    return Decision::StartCrossing;
                }
                self.right_clear = false;
                self.scan.turn_to(Side::Right, t);
                self.look(Some(Side::Right), true);
                Decision::KeepWaiting
            }
            Side::Right => {
                let right_ok = self.side_safe(Side::Right, t);
                if !left_pending {
                    return if right_ok { Decision::StartCrossing } else { Decision::KeepWaiting };
                }
                if self.mode.uses_memory() {
                    if right_ok && self.remembered_safe(Side::Left, t, dt) {
                        return Decision::StartCrossing;
                    }
                    if self.scan.overdue(t) {
                        self.scan.turn_to(Side::Left, t);
                        self.look(Some(Side::Left), true);
                    }
                } else {
                    // look back either way; remember only whether right was clear
                    self.right_clear = right_ok;
                    self.scan.turn_to(Side::Left, t);
                    self.look(Some(Side::Left), true);
                }
                Decision::KeepWaiting
            }
        }
    }

    /// Whether memory vouches for the side out of view: it was looked at
    /// recently enough and every belief about it is safe. Beliefs are
    /// trusted up to `th_scan`, and always on the first look after turning.
    fn remembered_safe(&self, side: Side, t: f64, dt: f64) -> bool {
        self.mode.uses_memory()
            && self.scan.opposite_checked
            && t - self.scan.t_upd <= self.scan.th_scan.max(dt) + 1e-9
            && self.side_safe(side, t)
    }

    fn begin_crossing(&mut self, t: f64) {
        self.phase = Phase::Cross;
        if self.cross_start.is_none() {
            self.cross_start = Some(t);
        }
        let side = self.path.lane_ahead(self.progress).map(|l| l.side);
        if side.is_some() {
            self.look(side, true);
        }
    }

    /// Walks for one step. Returns true when the walker stopped mid-road.
    pub fn step_cross(&mut self, t: f64, dt: f64) -> bool {
        debug_assert_eq!(self.phase, Phase::Cross);
        let monitoring = self.params.monitor_while_crossing;
        let mut target = self.progress + self.params.walk_speed * dt;
        let mut stop = false;
        let mut turn_to = None;
        if monitoring {
            for lane in &self.path.lanes {
                let entering = self.progress <= lane.enter + PROGRESS_EPS && target > lane.enter + PROGRESS_EPS;
                if !entering {
                    continue;
                }
                if self.mode.limited_view() && self.gaze_side != Some(lane.side) {
                    // look before stepping into traffic from the other side
                    target = lane.enter;
                    turn_to = Some(lane.side);
                    break;
                }
                if !self.lane_safe(lane, t) {
                    target = lane.enter;
                    stop = true;
                    break;
                }
            }
        }
        self.progress = target.max(self.progress);
        if (self.progress - self.path.width).abs() < 1e-7 {
            self.progress = self.path.width;
        }
        self.pose.position = self.path.point_at(self.progress);
        if let Some(side) = turn_to {
            self.look(Some(side), true);
        }
        if self.progress >= self.path.width - PROGRESS_EPS {
            self.phase = Phase::Done;
            self.done_at = Some(t + dt);
            self.memory.flush();
            self.look(None, false);
            return false;
        }
        if stop {
            self.mid_road_stops += 1;
            self.enter_wait(t + dt, true);
            return true;
        }
        if monitoring {
            if let Some(side) = self.path.lane_ahead(self.progress).map(|l| l.side) {
                self.look(Some(side), true);
            }
        }
        false
    }

    fn step_approach(&mut self, t: f64, dt: f64) {
        self.progress = (self.progress + self.params.walk_speed * dt).min(0.0);
        self.pose.position = self.path.point_at(self.progress);
        if self.progress >= -PROGRESS_EPS {
            self.progress = 0.0;
            self.enter_wait(t + dt, false);
        }
    }

    /// Decides and moves for the step starting at `t`.
    pub fn step(&mut self, t: f64, dt: f64) -> StepEvents {
        let mut ev = StepEvents::default();
        match self.phase {
            Phase::Approach => self.step_approach(t, dt),
            Phase::Wait => {
                if self.step_scan(t, dt) == Decision::StartCrossing {
                    ev.started_crossing = self.cross_start.is_none();
                    self.begin_crossing(t);
                    ev.stopped_mid_road = self.step_cross(t, dt);
                } else {
                    self.time_waiting += dt;
                }
            }
            Phase::Cross => ev.stopped_mid_road = self.step_cross(t, dt),
            Phase::Done => {}
        }
        ev.finished = self.phase == Phase::Done && self.done_at == Some(t + dt);
        ev
    }
}

#[cfg(test)]
mod tests;
