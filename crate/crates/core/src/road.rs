//! Road geometry: lanes, crossing sites and the pedestrian paths across them.
//!
//! Traffic keeps to the right. On a road running along +x, the +x lanes lie at
//! negative y and the -x lanes at positive y.

use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::geom::{cross, heading_vector};

pub type LaneId = usize;

/// Side of a pedestrian that a lane's traffic approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub road: usize,
    /// Centerline point where vehicles enter.
    pub start: DVec2,
    /// Travel heading, clockwise from +y.
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl Lane {
    pub fn direction(&self) -> DVec2 {
        heading_vector(self.heading)
    }

    pub fn point_at(&self, s: f64) -> DVec2 {
        self.start + self.direction() * s
    }

    /// Distance along the lane of the projection of `p`.
    pub fn progress_of(&self, p: DVec2) -> f64 {
        (p - self.start).dot(self.direction())
    }

    /// Signed lateral offset of `p` from the centerline.
    pub fn lateral_of(&self, p: DVec2) -> f64 {
        cross(self.direction(), p - self.start)
    }
}

/// A place where pedestrians cross one road, perpendicular to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSite {
    pub id: usize,
    pub road: usize,
    /// Point on the road centerline.
    pub center: DVec2,
    /// Unit vector along the road.
    pub axis: DVec2,
    pub half_width: f64,
}

/// One lane as traversed by a pedestrian path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLane {
    pub lane: LaneId,
    /// Path progress at the near lane edge.
    pub enter: f64,
    /// Path progress at the far lane edge.
    pub exit: f64,
    pub side: Side,
    /// Where the path meets the lane centerline.
    pub crossing_point: DVec2,
    pub direction: DVec2,
}

/// Straight walk from one curb to the other, lanes sorted by progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingPath {
    pub site: usize,
    /// Curb point where the crossing starts (progress 0).
    pub origin: DVec2,
    /// Unit walking direction.
    pub dir: DVec2,
    pub width: f64,
    pub lanes: Vec<PathLane>,
}

impl CrossingPath {
    pub fn point_at(&self, progress: f64) -> DVec2 {
        self.origin + self.dir * progress
    }

    /// Lane whose interior contains or immediately follows `progress`.
    pub fn lane_ahead(&self, progress: f64) -> Option<&PathLane> {
        self.lanes.iter().find(|l| progress < l.exit - PROGRESS_EPS)
    }

    /// Lanes not yet fully crossed.
    pub fn remaining(&self, progress: f64) -> impl Iterator<Item = &PathLane> {
        self.lanes.iter().filter(move |l| progress < l.exit - PROGRESS_EPS)
    }

    pub fn center(&self) -> DVec2 {
        self.origin + self.dir * (0.5 * self.width)
    }
}

pub const PROGRESS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RoadKind {
    /// A single straight road along +x from 0 to `length_m`.
    Straight { length_m: f64 },
    /// Two straight roads crossing at the origin, each arm `arm_length_m` long.
    Intersection { arm_length_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadLayout {
    pub lanes: Vec<Lane>,
    pub sites: Vec<CrossingSite>,
}

impl RoadLayout {
    /// Builds lanes and crossing sites. On a straight road each offset is a
    /// position along the road; at an intersection it is the distance from
    /// the center, and every arm gets a site.
    pub fn build(
        kind: RoadKind,
        lanes_per_direction: usize,
        lane_width: f64,
        crossing_offsets: &[f64],
    ) -> Self {
        let mut lanes = Vec::new();
        let mut sites = Vec::new();
        let hw = lanes_per_direction as f64 * lane_width;
        let push_road = |lanes: &mut Vec<Lane>, road: usize, from: DVec2, to: DVec2| {
            let axis = (to - from).normalize();
            // right-hand normal of the forward direction
            let right = DVec2::new(axis.y, -axis.x);
            let length = from.distance(to);
            let fwd = crate::geom::heading_of(axis);
            let back = crate::geom::heading_of(-axis);
            for i in 0..lanes_per_direction {
                let off = (i as f64 + 0.5) * lane_width;
                lanes.push(Lane {
                    id: lanes.len(),
                    road,
                    start: from + right * off,
                    heading: fwd,
                    length,
                    width: lane_width,
                });
                lanes.push(Lane {
                    id: lanes.len(),
                    road,
                    start: to - right * off,
                    heading: back,
                    length,
                    width: lane_width,
                });
            }
        };
        match kind {
            RoadKind::Straight { length_m } => {
                push_road(&mut lanes, 0, DVec2::ZERO, DVec2::new(length_m, 0.0));
                for &c in crossing_offsets {
                    sites.push(CrossingSite {
                        id: sites.len(),
                        road: 0,
                        center: DVec2::new(c, 0.0),
                        axis: DVec2::X,
                        half_width: hw,
                    });
                }
            }
            RoadKind::Intersection { arm_length_m: a } => {
                push_road(&mut lanes, 0, DVec2::new(-a, 0.0), DVec2::new(a, 0.0));
                push_road(&mut lanes, 1, DVec2::new(0.0, -a), DVec2::new(0.0, a));
                for &c in crossing_offsets {
                    for (road, center, axis) in [
                        (0, DVec2::new(c, 0.0), DVec2::X),
                        (1, DVec2::new(0.0, c), DVec2::Y),
                        (0, DVec2::new(-c, 0.0), DVec2::X),
                        (1, DVec2::new(0.0, -c), DVec2::Y),
                    ] {
                        sites.push(CrossingSite { id: sites.len(), road, center, axis, half_width: hw });
                    }
                }
            }
        }
        Self { lanes, sites }
    }

    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id]
    }

    /// Path across `site` starting from the curb on `from_side` (+1 or -1
    /// along the site's left normal).
    pub fn crossing_path(&self, site: usize, from_positive_side: bool) -> CrossingPath {
        let s = &self.sites[site];
        let normal = DVec2::new(-s.axis.y, s.axis.x);
        let dir = if from_positive_side { -normal } else { normal };
        let origin = s.center - dir * s.half_width;
        let mut lanes: Vec<PathLane> = self
            .lanes
            .iter()
            .filter(|l| l.road == s.road)
            .map(|l| {
                let offset = (l.start - s.center).dot(dir);
                let u = l.direction();
                PathLane {
                    lane: l.id,
                    enter: offset + s.half_width - 0.5 * l.width,
                    exit: offset + s.half_width + 0.5 * l.width,
                    // traffic coming from the walker's left moves to the right
                    side: if cross(dir, u) < 0.0 { Side::Left } else { Side::Right },
                    crossing_point: s.center + dir * offset,
                    direction: u,
                }
            })
            .collect();
        lanes.sort_by(|a, b| a.enter.total_cmp(&b.enter));
        CrossingPath { site, origin, dir, width: 2.0 * s.half_width, lanes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_road_lanes_keep_right() {
        let r = RoadLayout::build(RoadKind::Straight { length_m: 270.0 }, 1, 3.5, &[135.0]);
        assert_eq!(r.lanes.len(), 2);
        let east = &r.lanes[0];
        assert!((east.heading - 90.0).abs() < 1e-9);
        assert!((east.start - DVec2::new(0.0, -1.75)).length() < 1e-9);
        let west = &r.lanes[1];
        assert!((west.heading - 270.0).abs() < 1e-9);
        assert!((west.start - DVec2::new(270.0, 1.75)).length() < 1e-9);
    }

    #[test]
    fn near_lanes_come_from_the_left() {
        let r = RoadLayout::build(RoadKind::Straight { length_m: 270.0 }, 2, 3.5, &[135.0]);
        for positive in [false, true] {
            let p = r.crossing_path(0, positive);
            assert_eq!(p.width, 14.0);
            let sides: Vec<Side> = p.lanes.iter().map(|l| l.side).collect();
            assert_eq!(sides, vec![Side::Left, Side::Left, Side::Right, Side::Right]);
            assert!(p.lanes[0].enter.abs() < 1e-9);
            assert!((p.lanes[3].exit - 14.0).abs() < 1e-9);
            // each crossing point lies on its lane centerline
            for pl in &p.lanes {
                assert!(r.lane(pl.lane).lateral_of(pl.crossing_point).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn intersection_has_site_per_arm() {
        let r = RoadLayout::build(RoadKind::Intersection { arm_length_m: 120.0 }, 2, 3.5, &[30.0]);
        assert_eq!(r.lanes.len(), 8);
        assert_eq!(r.sites.len(), 4);
        for site in 0..4 {
            let p = r.crossing_path(site, false);
            assert_eq!(p.lanes.len(), 4);
            assert_eq!(p.lanes[0].side, Side::Left);
            assert_eq!(p.lanes[3].side, Side::Right);
        }
    }
}
