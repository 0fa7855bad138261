//! Vehicle population: spawning, longitudinal dynamics along straight lanes.

use glam::DVec2;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::geom::heading_vector;
use crate::road::{Lane, LaneId};

pub type VehicleId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub lane: LaneId,
    /// Center of the vehicle.
    pub position: DVec2,
    /// Clockwise from +y, degrees.
    pub heading: f64,
    pub speed: f64,
    /// Acceleration applied over the last step.
    pub acceleration: f64,
    pub length: f64,
    pub width: f64,
    pub desired_speed: f64,
}

impl VehicleState {
    pub fn direction(&self) -> DVec2 {
        heading_vector(self.heading)
    }

    /// Centers of the front and back bumpers.
    pub fn bumpers(&self) -> (DVec2, DVec2) {
        let half = self.direction() * (0.5 * self.length);
        (self.position + half, self.position - half)
    }

    /// Whether `p` lies inside the vehicle's footprint (edges inclusive).
    pub fn contains(&self, p: DVec2) -> bool {
        let (along, across) = self.local(p);
        along.abs() <= 0.5 * self.length && across.abs() <= 0.5 * self.width
    }

    /// Coordinates of `p` in the vehicle frame (along heading, to the left).
    pub fn local(&self, p: DVec2) -> (f64, f64) {
        let u = self.direction();
        let d = p - self.position;
        (d.dot(u), crate::geom::cross(u, d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Demand {
    /// One vehicle every `headway_s` seconds, deterministic.
    Headway(f64),
    /// Poisson arrivals with the given mean rate in vehicles per hour.
    Flow(f64),
}

impl Demand {
    pub fn is_valid(&self) -> bool {
        match *self {
            Demand::Headway(h) => h > 0.0 && h.is_finite(),
            Demand::Flow(q) => q > 0.0 && q.is_finite(),
        }
    }
}

/// Spawn schedule feeding a group of lanes. Each vehicle picks one lane of
/// the group uniformly at random.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnSchedule {
    pub lanes: Vec<LaneId>,
    pub demand: Demand,
    pub start_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub length: f64,
    pub width: f64,
    /// Desired speeds are drawn from `[limit * (1 - spread), limit]`.
    pub speed_spread: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { length: 4.5, width: 1.8, speed_spread: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarFollowing {
    pub max_accel: f64,
    pub max_brake: f64,
    pub safe_headway: f64,
    /// Bumper gap kept at standstill.
    pub min_gap: f64,
}

impl Default for CarFollowing {
    fn default() -> Self {
        Self { max_accel: 2.0, max_brake: 4.0, safe_headway: 1.5, min_gap: 2.0 }
    }
}

/// Something a vehicle must not run into: the rear of a leader or a
/// pedestrian standing in the lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    /// Distance along the lane of the obstacle's rear.
    pub rear: f64,
    pub speed: f64,
}

impl Obstacle {
    pub fn behind(lane: &Lane, lead: &VehicleState) -> Self {
        Self { rear: lane.progress_of(lead.position) - 0.5 * lead.length, speed: lead.speed }
    }
}

/// Constant-acceleration step: `x += v dt + a dt^2 / 2`, `v += a dt`.
pub fn kinematic_step(v: &VehicleState, accel: f64, dt: f64) -> VehicleState {
    let travel = v.speed * dt + 0.5 * accel * dt * dt;
    VehicleState {
        position: v.position + v.direction() * travel,
        speed: v.speed + accel * dt,
        acceleration: accel,
        ..v.clone()
    }
}

/// Advances one vehicle by `dt` behind an optional leader.
pub fn advance_vehicle(
    lane: &Lane,
    v: &VehicleState,
    lead: Option<&VehicleState>,
    dt: f64,
    speed_limit: f64,
    rules: &CarFollowing,
) -> VehicleState {
    advance_with_obstacle(lane, v, lead.map(|l| Obstacle::behind(lane, l)), dt, speed_limit, rules)
}

/// Car following against a generic obstacle.
///
/// Free road: accelerate toward the desired speed at up to `max_accel`.
/// Within the safe headway: slow toward the speed that restores it, never
/// faster than the obstacle, braking at up to `max_brake`.
pub fn advance_with_obstacle(
    lane: &Lane,
    v: &VehicleState,
    obstacle: Option<Obstacle>,
    dt: f64,
    speed_limit: f64,
    rules: &CarFollowing,
) -> VehicleState {
    let desired = v.desired_speed.min(speed_limit);
    let front = lane.progress_of(v.position) + 0.5 * v.length;
    let mut target = desired;
    if let Some(ob) = obstacle {
        let gap = ob.rear - front;
        let safe = rules.min_gap + v.speed * rules.safe_headway;
        if gap <= safe {
            let restoring = ((gap - rules.min_gap) / rules.safe_headway).max(0.0);
            target = target.min(ob.speed).min(restoring);
        }
    }
    let accel = ((target - v.speed) / dt).clamp(-rules.max_brake, rules.max_accel);
    let mut next = kinematic_step(v, accel, dt);
    if next.speed < 0.0 {
        next.speed = 0.0;
    }
    if next.speed > speed_limit {
        next.speed = speed_limit;
    }
    if let Some(ob) = obstacle {
        // hard stop short of the obstacle's previous rear; it only moves forward
        let limit = ob.rear - 0.1;
        let new_front = lane.progress_of(next.position) + 0.5 * v.length;
        if new_front > limit {
            let travel = (limit - front).max(0.0);
            next.position = v.position + v.direction() * travel;
            next.speed = next.speed.min(ob.speed);
            next.acceleration = (next.speed - v.speed) / dt;
        }
    }
    next
}

/// Per-schedule spawning state.
#[derive(Debug, Clone, PartialEq)]
pub struct Spawner {
    pub schedule: SpawnSchedule,
    next_due: f64,
    backlog: u32,
}

impl Spawner {
    pub fn new<R: Rng + ?Sized>(schedule: SpawnSchedule, rng: &mut R) -> Self {
        let next_due = match schedule.demand {
            Demand::Headway(_) => 0.0,
            Demand::Flow(q) => sample_gap(q, rng),
        };
        Self { schedule, next_due, backlog: 0 }
    }

    /// Vehicles due but not yet placed because the entry was blocked.
    pub fn backlog(&self) -> u32 {
        self.backlog
    }

    /// Registers arrivals due by time `t` and places at most one vehicle.
    /// `entry_clear` says whether a lane can take a new vehicle now.
    /// Returns the chosen lane.
    pub fn poll<R: Rng + ?Sized>(
        &mut self,
        t: f64,
        rng: &mut R,
        entry_clear: impl Fn(LaneId) -> bool,
    ) -> Option<LaneId> {
        while self.next_due <= t + 1e-9 {
            self.backlog += 1;
            self.next_due += match self.schedule.demand {
                Demand::Headway(h) => h,
                Demand::Flow(q) => sample_gap(q, rng),
            };
        }
        if self.backlog == 0 || self.schedule.lanes.is_empty() {
            return None;
        }
        let lane = self.schedule.lanes[rng.random_range(0..self.schedule.lanes.len())];
        if entry_clear(lane) {
            self.backlog -= 1;
            Some(lane)
        } else {
            None
        }
    }
}

fn sample_gap<R: Rng + ?Sized>(flow_vph: f64, rng: &mut R) -> f64 {
    let rate_per_s = flow_vph / 3600.0;
    Exp::new(rate_per_s).expect("positive rate").sample(rng)
}

/// Fresh vehicle at the entry of `lane`.
pub fn new_vehicle<R: Rng + ?Sized>(
    id: VehicleId,
    lane: &Lane,
    params: &VehicleParams,
    start_speed: f64,
    speed_limit: f64,
    rng: &mut R,
) -> VehicleState {
    let spread = params.speed_spread.clamp(0.0, 1.0);
    let desired = if spread > 0.0 {
        speed_limit * (1.0 - spread * rng.random::<f64>())
    } else {
        speed_limit
    };
    VehicleState {
        id,
        lane: lane.id,
        position: lane.point_at(0.0),
        heading: lane.heading,
        speed: start_speed.min(desired).max(0.0),
        acceleration: 0.0,
        length: params.length,
        width: params.width,
        desired_speed: desired,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{RoadKind, RoadLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lane() -> Lane {
        RoadLayout::build(RoadKind::Straight { length_m: 1000.0 }, 1, 3.5, &[]).lanes[0].clone()
    }

    fn car(lane: &Lane, s: f64, speed: f64) -> VehicleState {
        VehicleState {
            id: 0,
            lane: lane.id,
            position: lane.point_at(s),
            heading: lane.heading,
            speed,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            desired_speed: 13.9,
        }
    }

    #[test]
    fn headway_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sched = SpawnSchedule { lanes: vec![0], demand: Demand::Headway(6.0), start_speed: 10.0 };
        let mut sp = Spawner::new(sched, &mut rng);
        let n = (0..120).filter(|k| sp.poll(*k as f64 * 0.5, &mut rng, |_| true).is_some()).count();
        assert_eq!(n, 10);
    }

    #[test]
    fn blocked_entry_defers() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sched = SpawnSchedule { lanes: vec![0], demand: Demand::Headway(6.0), start_speed: 10.0 };
        let mut sp = Spawner::new(sched, &mut rng);
        assert_eq!(sp.poll(0.0, &mut rng, |_| false), None);
        assert_eq!(sp.backlog(), 1);
        assert_eq!(sp.poll(0.5, &mut rng, |_| true), Some(0));
        assert_eq!(sp.backlog(), 0);
    }

    #[test]
    fn poisson_flow_count() {
        // Poisson count over an hour: mean 1200, sd sqrt(1200)
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sched = SpawnSchedule { lanes: vec![0, 1], demand: Demand::Flow(1200.0), start_speed: 10.0 };
            let mut sp = Spawner::new(sched, &mut rng);
            let mut n = 0;
            for k in 0..7200 {
                if sp.poll(k as f64 * 0.5, &mut rng, |_| true).is_some() {
                    n += 1;
                }
            }
            let n = n as f64 + sp.backlog() as f64;
            assert!((n - 1200.0).abs() <= 3.0 * 1200f64.sqrt(), "seed {seed}: {n}");
        }
    }

    #[test]
    fn free_road_accelerates() {
        let l = lane();
        let v = car(&l, 0.0, 5.0);
        let n = advance_vehicle(&l, &v, None, 0.5, 13.9, &CarFollowing::default());
        assert!(n.speed > v.speed);
        assert_eq!(n.acceleration, 2.0);
    }

    #[test]
    fn constant_speed_closed_form() {
        let l = lane();
        let mut v = car(&l, 0.0, 13.9);
        for _ in 0..100 {
            v = advance_vehicle(&l, &v, None, 0.5, 13.9, &CarFollowing::default());
        }
        assert_eq!(v.acceleration, 0.0);
        assert!((l.progress_of(v.position) - 13.9 * 50.0).abs() < 1e-9);
    }

    #[test]
    fn stopped_leader_is_never_rear_ended() {
        let l = lane();
        let rules = CarFollowing::default();
        for speed in [0.0, 2.0, 8.0, 13.9] {
            let lead = car(&l, 100.0, 0.0);
            // follower front bumper 5 m behind the leader's rear
            let mut v = car(&l, 100.0 - 4.5 - 5.0, speed);
            let mut braked = false;
            for _ in 0..200 {
                v = advance_vehicle(&l, &v, Some(&lead), 0.5, 13.9, &rules);
                braked |= v.acceleration < 0.0;
                let sep = (l.progress_of(lead.position) - 2.25) - (l.progress_of(v.position) + 2.25);
                assert!(sep >= 0.0, "overlap at start speed {speed}: {sep}");
            }
            if speed > 0.0 {
                assert!(braked);
            }
            assert!(v.speed.abs() < 1e-9);
        }
    }

    #[test]
    fn speed_stays_within_limits() {
        let l = lane();
        let rules = CarFollowing::default();
        let mut v = car(&l, 0.0, 13.0);
        v.desired_speed = 20.0;
        for _ in 0..50 {
            v = advance_vehicle(&l, &v, None, 0.5, 13.9, &rules);
            assert!(v.speed >= 0.0 && v.speed <= 13.9 + 1e-12);
        }
    }

    #[test]
    fn new_vehicle_desired_speed_in_band() {
        let l = lane();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..100 {
            let v = new_vehicle(i, &l, &VehicleParams::default(), 13.9, 13.9, &mut rng);
            assert!(v.desired_speed <= 13.9 && v.desired_speed >= 13.9 * 0.8);
            assert_eq!(v.speed, v.desired_speed);
        }
    }
}
