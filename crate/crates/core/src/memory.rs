//! Working memory of observed vehicles.
//!
//! Vehicles in view are stored with their observed state. Vehicles out of view
//! keep that state and are dead-reckoned forward from it along their heading:
//!
//! ```text
//! d   = speed * dt + accel * dt^2 / 2      (dt = t - t_seen)
//! pos = (x + sin(heading) * d, y + cos(heading) * d)
//! ```
//!
//! Entries leave memory once believed (or seen) beyond the owner's maximum
//! sensing range, or once past the owner's crossing line.

use std::collections::BTreeMap;

use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::geom::heading_vector;
use crate::road::LaneId;
use crate::traffic::{VehicleId, VehicleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub vehicle_id: VehicleId,
    pub lane: LaneId,
    pub last_position: DVec2,
    pub last_speed: f64,
    pub last_acceleration: f64,
    /// Clockwise from +y, degrees.
    pub heading: f64,
    pub t_seen: f64,
    pub currently_in_fov: bool,
}

impl MemoryEntry {
    pub fn observe(vehicle: &VehicleState, t: f64) -> Self {
        Self {
            vehicle_id: vehicle.id,
            lane: vehicle.lane,
            last_position: vehicle.position,
            last_speed: vehicle.speed.max(0.0),
            last_acceleration: vehicle.acceleration,
            heading: vehicle.heading,
            t_seen: t,
            currently_in_fov: true,
        }
    }

    pub fn believed_position(&self, t: f64) -> DVec2 {
        predict_position(self, t)
    }
}

/// Distance believed travelled after `elapsed` seconds. A decelerating
/// vehicle is assumed to stay put once it would have stopped.
pub fn believed_travel(speed: f64, accel: f64, elapsed: f64) -> f64 {
    let elapsed = elapsed.max(0.0);
    if accel < 0.0 {
        let stop_time = -speed / accel;
        if elapsed > stop_time {
            return speed * stop_time + 0.5 * accel * stop_time * stop_time;
        }
    }
    speed * elapsed + 0.5 * accel * elapsed * elapsed
}

pub fn predict_position(entry: &MemoryEntry, t: f64) -> DVec2 {
    let d = believed_travel(entry.last_speed, entry.last_acceleration, t - entry.t_seen);
    entry.last_position + heading_vector(entry.heading) * d
}

/// The line a pedestrian walks along; vehicles beyond it no longer matter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingLine {
    pub point: DVec2,
    /// Unit direction of the walk.
    pub dir: DVec2,
}

impl CrossingLine {
    /// Whether a vehicle at `pos` moving along `heading` has gone past the line.
    pub fn passed(&self, pos: DVec2, heading: f64) -> bool {
        let normal = DVec2::new(-self.dir.y, self.dir.x);
        let u = heading_vector(heading);
        let closing = u.dot(normal);
        if closing.abs() < 1e-9 {
            return false;
        }
        (pos - self.point).dot(normal) * closing.signum() > 0.0
    }
}

/// Where the owner is and how far memory reaches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub owner_position: DVec2,
    pub max_range: f64,
    pub crossing: Option<CrossingLine>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkingMemory {
    pub owner: u64,
    entries: BTreeMap<VehicleId, MemoryEntry>,
}

impl WorkingMemory {
    pub fn new(owner: u64) -> Self {
        Self { owner, entries: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: VehicleId) -> Option<&MemoryEntry> {
        self.entries.get(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.values()
    }

    /// Stores the observed state of a vehicle in view, replacing any belief.
    pub fn register_or_reset(&mut self, vehicle: &VehicleState, t: f64) {
        self.entries.insert(vehicle.id, MemoryEntry::observe(vehicle, t));
    }

    /// Once-per-step update: register what is visible, mark the rest as
    /// out of view, then evict.
    pub fn tick(&mut self, visible_now: &[VehicleState], t: f64, horizon: &Horizon) {
        for e in self.entries.values_mut() {
            e.currently_in_fov = false;
        }
        for v in visible_now {
            self.register_or_reset(v, t);
        }
        self.evict(t, horizon);
    }

    pub fn evict(&mut self, t: f64, horizon: &Horizon) {
        self.entries.retain(|_, e| {
            let pos = e.believed_position(t);
            if pos.distance(horizon.owner_position) > horizon.max_range {
                return false;
            }
            match horizon.crossing {
                Some(line) => !line.passed(pos, e.heading),
                None => true,
            }
        });
    }

    pub fn flush(&mut self) {
        self.entries.clear();
    }
}
