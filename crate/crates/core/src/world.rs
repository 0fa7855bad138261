//! Fixed-step engine.
//!
//! Each tick runs in a fixed order over the snapshot taken after spawning:
//! spawn vehicles, advance vehicles, let every pedestrian perceive the
//! snapshot and step, detect collisions, update counters.

use std::collections::HashSet;

use glam::DVec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fov::FieldOfView;
use crate::pedestrian::{
    compute_scan_threshold, estimate_ttc, ObservationMode, Pedestrian, PedestrianParams, Phase, Trait,
};
use crate::road::{CrossingPath, RoadLayout};
use crate::scenario::{Scenario, ValidationError};
use crate::stats::RunningStats;
use crate::traffic::{advance_with_obstacle, new_vehicle, Obstacle, Spawner, VehicleId, VehicleState};

const TRAFFIC_STREAM: u64 = 1;
const POPULATION_STREAM: u64 = 2;
const PEDESTRIAN_STREAM_BASE: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub pedestrian: u64,
    pub vehicle: VehicleId,
    pub t: f64,
}

/// Where a pedestrian was at the start and end of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedMotion {
    pub id: u64,
    pub from: DVec2,
    pub to: DVec2,
}

/// A vehicle at the start and end of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleMotion {
    pub before: VehicleState,
    pub after: VehicleState,
}

impl VehicleMotion {
    pub fn stationary(v: VehicleState) -> Self {
        Self { before: v.clone(), after: v }
    }
}

/// Parameter interval of segment `a -> b` inside the box `|x| <= hx, |y| <= hy`.
fn clip_segment(a: (f64, f64), b: (f64, f64), hx: f64, hy: f64) -> Option<(f64, f64)> {
    let d = (b.0 - a.0, b.1 - a.1);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.0, a.0 + hx),
        (d.0, hx - a.0),
        (-d.1, a.1 + hy),
        (d.1, hy - a.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
            if lo > hi {
                return None;
            }
        }
    }
    Some((lo, hi))
}

/// Whether the pedestrian touched the vehicle at any time during the step.
/// Both move linearly, so the relative motion in the vehicle frame (fixed
/// heading) is a segment.
pub fn swept_contact(ped: &PedMotion, veh: &VehicleMotion) -> bool {
    let a = veh.before.local(ped.from);
    let b = veh.after.local(ped.to);
    clip_segment(a, b, 0.5 * veh.before.length, 0.5 * veh.before.width).is_some()
}

/// Records pedestrian-vehicle contacts, at most once per pair.
#[derive(Debug, Clone, Default)]
pub struct CollisionDetector {
    seen: HashSet<(u64, VehicleId)>,
}

impl CollisionDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn detect(&mut self, peds: &[PedMotion], vehicles: &[VehicleMotion], t: f64) -> Vec<Collision> {
        let mut out = Vec::new();
        for p in peds {
            for v in vehicles {
                let key = (p.id, v.before.id);
                if self.seen.contains(&key) || !swept_contact(p, v) {
                    continue;
                }
                self.seen.insert(key);
                out.push(Collision { pedestrian: p.id, vehicle: v.before.id, t });
            }
        }
        out
    }
}

/// Ground-truth smallest arrival time over the lanes still ahead on `path`.
pub fn min_ttc_at_onset(path: &CrossingPath, progress: f64, vehicles: &[VehicleState]) -> f64 {
    path.remaining(progress)
        .flat_map(|lane| {
            vehicles
                .iter()
                .filter(move |v| v.lane == lane.lane)
                .map(move |v| estimate_ttc(v.position, v.speed, lane.crossing_point, lane.direction))
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianOutcome {
    pub id: u64,
    pub trait_: Trait,
    pub site: usize,
    pub spawned_at: f64,
    /// Curb arrival to crossing onset, for walkers who started crossing.
    pub wait_time: Option<f64>,
    /// Elapsed wait of walkers still at the curb when the run ended.
    pub censored_wait: Option<f64>,
    /// Finite ground-truth minimum TTC at crossing onset.
    pub min_ttc: Option<f64>,
    pub head_turns: u32,
    pub mid_road_stops: u32,
    pub time_waiting: f64,
    pub completed: bool,
    pub collisions: u32,
}

/// Aggregates of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub pedestrians: u64,
    pub crossed: u64,
    pub completed: u64,
    pub censored: u64,
    pub collisions: u64,
    /// Waits of walkers who crossed plus elapsed waits of censored ones.
    pub wait: RunningStats,
    pub min_ttc: RunningStats,
    /// Head turns of walkers who completed the crossing.
    pub head_turns: RunningStats,
    pub censored_wait: RunningStats,
    pub total_wait: RunningStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub steps: u32,
    pub pedestrians: Vec<PedestrianOutcome>,
    pub collisions: Vec<Collision>,
    pub vehicles_spawned: u64,
    pub vehicles_exited: u64,
    pub vehicles_on_road: u64,
}

impl RunMetrics {
    pub fn summary(&self) -> RunSummary {
        let mut s = RunSummary {
            pedestrians: self.pedestrians.len() as u64,
            collisions: self.collisions.len() as u64,
            ..Default::default()
        };
        for p in &self.pedestrians {
            if let Some(w) = p.wait_time {
                s.crossed += 1;
                s.wait.push(w);
            }
            if let Some(w) = p.censored_wait {
                s.censored += 1;
                s.censored_wait.push(w);
                s.wait.push(w);
            }
            if p.wait_time.is_some() || p.censored_wait.is_some() {
                s.total_wait.push(p.time_waiting);
            }
            if let Some(ttc) = p.min_ttc {
                s.min_ttc.push(ttc);
            }
            if p.completed {
                s.completed += 1;
                s.head_turns.push(p.head_turns as f64);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VehicleTrace {
    pub id: VehicleId,
    pub lane: usize,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefTrace {
    pub vehicle: VehicleId,
    pub x: f64,
    pub y: f64,
    pub in_view: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PedestrianTrace {
    pub id: u64,
    pub phase: Phase,
    pub x: f64,
    pub y: f64,
    pub gaze_deg: f64,
    pub head_turns: u32,
    pub memory: Vec<BeliefTrace>,
}

/// State at the end of one tick.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u32,
    pub t: f64,
    pub vehicles: Vec<VehicleTrace>,
    pub pedestrians: Vec<PedestrianTrace>,
    pub collisions: Vec<Collision>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    /// One JSON object per tick when tracing was requested.
    pub trace: Option<Vec<String>>,
}

/// Vehicle counters; `spawned == on_road + exited` after every tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub spawned: u64,
    pub exited: u64,
    pub on_road: u64,
}

struct PedRecord {
    ped: Pedestrian,
    spawned_at: f64,
    min_ttc: Option<f64>,
    collisions: u32,
}

pub struct World {
    scenario: Scenario,
    layout: RoadLayout,
    fov: FieldOfView,
    spawners: Vec<Spawner>,
    vehicles: Vec<VehicleState>,
    peds: Vec<PedRecord>,
    traffic_rng: ChaCha8Rng,
    population_rng: ChaCha8Rng,
    detector: CollisionDetector,
    collisions: Vec<Collision>,
    counters: Counters,
    next_vehicle: VehicleId,
    tick: u32,
}

impl World {
    pub fn new(scenario: Scenario) -> Result<Self, ValidationError> {
        scenario.validate()?;
        let layout = scenario.layout();
        let fov = scenario.perception.field_of_view().map_err(|e| ValidationError(vec![e.to_string()]))?;
        let mut traffic_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        traffic_rng.set_stream(TRAFFIC_STREAM);
        let mut population_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        population_rng.set_stream(POPULATION_STREAM);
        let spawners = scenario
            .spawn_schedules(&layout)
            .into_iter()
            .map(|s| Spawner::new(s, &mut traffic_rng))
            .collect();
        Ok(Self {
            scenario,
            layout,
            fov,
            spawners,
            vehicles: Vec::new(),
            peds: Vec::new(),
            traffic_rng,
            population_rng,
            detector: CollisionDetector::new(),
            collisions: Vec::new(),
            counters: Counters::default(),
            next_vehicle: 0,
            tick: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.scenario.dt_s
    }

    pub fn tick_count(&self) -> u32 {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.scenario.steps
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn pedestrians(&self) -> impl Iterator<Item = &Pedestrian> {
        self.peds.iter().map(|r| &r.ped)
    }

    pub fn layout(&self) -> &RoadLayout {
        &self.layout
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn collisions(&self) -> &[Collision] {
        &self.collisions
    }

    fn spawn_vehicles(&mut self) {
        let t = self.time();
        let gap = self.scenario.traffic.min_spawn_gap_m;
        for i in 0..self.spawners.len() {
            let vehicles = &self.vehicles;
            let layout = &self.layout;
            let entry_clear = |lane: usize| {
                let l = layout.lane(lane);
                vehicles
                    .iter()
                    .filter(|v| v.lane == lane)
                    .all(|v| l.progress_of(v.position) - 0.5 * v.length >= gap)
            };
            if let Some(lane) = self.spawners[i].poll(t, &mut self.traffic_rng, entry_clear) {
                let start = self.spawners[i].schedule.start_speed;
                let v = new_vehicle(
                    self.next_vehicle,
                    self.layout.lane(lane),
                    &self.scenario.traffic.vehicle,
                    start,
                    self.scenario.road.speed_limit_mps,
                    &mut self.traffic_rng,
                );
                self.next_vehicle += 1;
                self.counters.spawned += 1;
                self.vehicles.push(v);
            }
        }
    }

    fn spawn_pedestrian_if_due(&mut self) {
        let pop = &self.scenario.pedestrians;
        let n = self.peds.len() as u32;
        if n >= pop.count {
            return;
        }
        let due = pop.first_spawn_s + n as f64 * pop.spawn_interval_s;
        if self.time() + 1e-9 < due {
            return;
        }
        let sites = self.layout.sites.len();
        let idx = n as usize;
        let site = idx % sites;
        let from_positive = (idx / sites) % 2 == 1;
        let path = self.layout.crossing_path(site, from_positive);

        let w = pop.trait_weights;
        let u = self.population_rng.random::<f64>() * (w[0] + w[1] + w[2]);
        let trait_ = if u < w[0] {
            Trait::Aggressive
        } else if u < w[0] + w[1] {
            Trait::Average
        } else {
            Trait::Conservative
        };
        let gap = pop.gaps.gap(trait_);
        let params = PedestrianParams {
            trait_,
            accepted_gap: gap,
            walk_speed: pop.walk_speed_mps,
            noise_sigma: self.scenario.perception.noise_sigma,
            monitor_while_crossing: pop.monitor_while_crossing,
        };
        let th = compute_scan_threshold(self.fov.max_range(), self.scenario.road.speed_limit_mps, gap)
            .expect("speed limit validated");
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.seed);
        rng.set_stream(PEDESTRIAN_STREAM_BASE + idx as u64);
        let id = idx as u64;
        let ped = Pedestrian::new(id, params, self.scenario.perception.mode, path, pop.approach_m, th, rng);
        self.peds.push(PedRecord { ped, spawned_at: self.time(), min_ttc: None, collisions: 0 });
    }

    /// Pedestrians standing or walking inside `lane`, as stopped obstacles.
    fn pedestrian_obstacle(&self, v: &VehicleState) -> Option<Obstacle> {
        let lane = self.layout.lane(v.lane);
        let front = lane.progress_of(v.position) + 0.5 * v.length;
        self.peds
            .iter()
            .filter(|r| r.ped.phase == Phase::Cross || (r.ped.phase == Phase::Wait && r.ped.progress > 0.0))
            .filter_map(|r| {
                let p = r.ped.position();
                let s = lane.progress_of(p);
                (lane.lateral_of(p).abs() <= 0.5 * lane.width && s > front).then_some(s - 0.5)
            })
            .min_by(f64::total_cmp)
            .map(|rear| Obstacle { rear, speed: 0.0 })
    }

    fn advance_vehicles(&self, snapshot: &[VehicleState]) -> Vec<VehicleState> {
        let dt = self.scenario.dt_s;
        let limit = self.scenario.road.speed_limit_mps;
        let rules = &self.scenario.traffic.following;
        snapshot
            .iter()
            .map(|v| {
                let lane = self.layout.lane(v.lane);
                let s = lane.progress_of(v.position);
                let lead = snapshot
                    .iter()
                    .filter(|o| o.lane == v.lane && o.id != v.id)
                    .map(|o| (lane.progress_of(o.position), o))
                    .filter(|(so, _)| *so > s)
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, o)| Obstacle::behind(lane, o));
                let mut obstacle = lead;
                if self.scenario.traffic.yield_to_pedestrians {
                    if let Some(p) = self.pedestrian_obstacle(v) {
                        if obstacle.is_none_or(|o| p.rear < o.rear) {
                            obstacle = Some(p);
                        }
                    }
                }
                advance_with_obstacle(lane, v, obstacle, dt, limit, rules)
            })
            .collect()
    }

    /// Runs one tick. Returns the collisions detected in it.
    pub fn step(&mut self) -> Vec<Collision> {
        let t = self.time();
        let dt = self.scenario.dt_s;

        self.spawn_vehicles();
        self.spawn_pedestrian_if_due();
        let snapshot = self.vehicles.clone();

        let advanced = self.advance_vehicles(&snapshot);

        let mut motions = Vec::with_capacity(self.peds.len());
        for rec in &mut self.peds {
            if rec.ped.phase == Phase::Done {
                continue;
            }
            let from = rec.ped.position();
            rec.ped.perceive(&snapshot, &self.fov, t);
            let progress = rec.ped.progress;
            let ev = rec.ped.step(t, dt);
            if ev.started_crossing {
                let ttc = min_ttc_at_onset(&rec.ped.path, progress, &snapshot);
                rec.min_ttc = ttc.is_finite().then_some(ttc);
            }
            motions.push(PedMotion { id: rec.ped.id, from, to: rec.ped.position() });
        }

        let vm: Vec<VehicleMotion> = snapshot
            .into_iter()
            .zip(advanced.iter().cloned())
            .map(|(before, after)| VehicleMotion { before, after })
            .collect();
        let found = self.detector.detect(&motions, &vm, t + dt);
        for c in &found {
            if let Some(rec) = self.peds.get_mut(c.pedestrian as usize) {
                rec.collisions += 1;
            }
        }
        self.collisions.extend_from_slice(&found);

        let layout = &self.layout;
        let before = advanced.len();
        self.vehicles = advanced
            .into_iter()
            .filter(|v| {
                let l = layout.lane(v.lane);
                l.progress_of(v.position) - 0.5 * v.length <= l.length
            })
            .collect();
        self.counters.exited += (before - self.vehicles.len()) as u64;
        self.counters.on_road = self.vehicles.len() as u64;
        self.tick += 1;
        found
    }

    pub fn trace_record(&self, collisions: Vec<Collision>) -> TraceRecord {
        let t = self.time();
        TraceRecord {
            tick: self.tick,
            t,
            vehicles: self
                .vehicles
                .iter()
                .map(|v| VehicleTrace {
                    id: v.id,
                    lane: v.lane,
                    x: v.position.x,
                    y: v.position.y,
                    speed: v.speed,
                    accel: v.acceleration,
                })
                .collect(),
            pedestrians: self
                .peds
                .iter()
                .filter(|r| r.ped.phase != Phase::Done || r.ped.done_at == Some(t))
                .map(|r| {
                    let p = &r.ped;
                    PedestrianTrace {
                        id: p.id,
                        phase: p.phase,
                        x: p.position().x,
                        y: p.position().y,
                        gaze_deg: p.pose.gaze(),
                        head_turns: p.head_turns,
                        memory: p
                            .memory
                            .entries()
                            .map(|e| {
                                let b = e.believed_position(t);
                                BeliefTrace { vehicle: e.vehicle_id, x: b.x, y: b.y, in_view: e.currently_in_fov }
                            })
                            .collect(),
                    }
                })
                .collect(),
            collisions,
        }
    }

    pub fn metrics(&self) -> RunMetrics {
        let horizon = self.time();
        let pedestrians = self
            .peds
            .iter()
            .map(|r| {
                let p = &r.ped;
                let wait_time = match (p.wait_start, p.cross_start) {
                    (Some(w), Some(c)) => Some((c - w).max(0.0)),
                    _ => None,
                };
                let censored_wait = match (p.wait_start, p.cross_start) {
                    (Some(w), None) => Some((horizon - w).max(0.0)),
                    _ => None,
                };
                PedestrianOutcome {
                    id: p.id,
                    trait_: p.params.trait_,
                    site: p.path.site,
                    spawned_at: r.spawned_at,
                    wait_time,
                    censored_wait,
                    min_ttc: r.min_ttc,
                    head_turns: if p.mode.limited_view() { p.head_turns } else { 0 },
                    mid_road_stops: p.mid_road_stops,
                    time_waiting: p.time_waiting,
                    completed: p.phase == Phase::Done,
                    collisions: r.collisions,
                }
            })
            .collect();
        RunMetrics {
            seed: self.scenario.seed,
            steps: self.tick,
            pedestrians,
            collisions: self.collisions.clone(),
            vehicles_spawned: self.counters.spawned,
            vehicles_exited: self.counters.exited,
            vehicles_on_road: self.counters.on_road,
        }
    }
}

/// Runs a scenario for its full horizon.
pub fn run(scenario: &Scenario, trace: bool) -> Result<RunOutput, ValidationError> {
    let mut world = World::new(scenario.clone())?;
    let mut lines = trace.then(Vec::new);
    while !world.is_finished() {
        let found = world.step();
        if let Some(lines) = lines.as_mut() {
            let rec = world.trace_record(found);
            lines.push(serde_json::to_string(&rec).expect("trace record serializes"));
        }
    }
    Ok(RunOutput { metrics: world.metrics(), trace: lines })
}

/// Convenience for tests and sweeps that only need the mode switched.
pub fn with_mode(scenario: &Scenario, mode: ObservationMode) -> Scenario {
    let mut s = scenario.clone();
    s.perception.mode = mode;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::RoadKind;

    fn car_at(x: f64, y: f64) -> VehicleState {
        VehicleState {
            id: 3,
            lane: 0,
            position: DVec2::new(x, y),
            heading: 90.0,
            speed: 0.0,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            desired_speed: 0.0,
        }
    }

    fn still(id: u64, p: DVec2) -> PedMotion {
        PedMotion { id, from: p, to: p }
    }

    #[test]
    fn point_collision_examples() {
        let v = VehicleMotion::stationary(car_at(10.0, 0.0));
        let mut d = CollisionDetector::new();
        assert_eq!(d.detect(&[still(1, DVec2::new(10.0, 0.0))], std::slice::from_ref(&v), 0.0).len(), 1);
        // 0.1 m beyond the side edge
        let mut d = CollisionDetector::new();
        assert!(d.detect(&[still(1, DVec2::new(10.0, 1.0))], std::slice::from_ref(&v), 0.0).is_empty());
        // 0.1 m beyond the front bumper
        assert!(d.detect(&[still(1, DVec2::new(12.35, 0.0))], std::slice::from_ref(&v), 0.0).is_empty());
    }

    #[test]
    fn overlap_counts_once() {
        let v = VehicleMotion::stationary(car_at(10.0, 0.0));
        let mut d = CollisionDetector::new();
        let total: usize = (0..5)
            .map(|k| d.detect(&[still(1, DVec2::new(10.0, 0.0))], std::slice::from_ref(&v), k as f64).len())
            .sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn fast_vehicle_cannot_tunnel() {
        // 14 m/s over 0.5 s moves 7 m, past a 4.5 m car length
        let before = car_at(0.0, 0.0);
        let mut after = before.clone();
        after.position.x = 7.0;
        let vm = VehicleMotion { before, after };
        assert!(swept_contact(&still(1, DVec2::new(3.5, 0.5)), &vm));
        assert!(!swept_contact(&still(1, DVec2::new(3.5, 1.5)), &vm));
    }

    #[test]
    fn min_ttc_examples() {
        let layout = RoadLayout::build(RoadKind::Straight { length_m: 270.0 }, 1, 3.5, &[135.0]);
        let path = layout.crossing_path(0, false);
        let lane0 = layout.lane(0);
        let mk = |x: f64, speed: f64, id: u64| VehicleState {
            id,
            lane: 0,
            position: lane0.point_at(lane0.progress_of(DVec2::new(x, 0.0))),
            heading: lane0.heading,
            speed,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            desired_speed: speed,
        };
        assert!((min_ttc_at_onset(&path, 0.0, &[mk(105.0, 10.0, 1)]) - 3.0).abs() < 1e-9);
        assert_eq!(min_ttc_at_onset(&path, 0.0, &[]), f64::INFINITY);
        let two = [mk(95.0, 10.0, 1), mk(75.0, 10.0, 2)];
        assert!((min_ttc_at_onset(&path, 0.0, &two) - 4.0).abs() < 1e-9);
    }
}
