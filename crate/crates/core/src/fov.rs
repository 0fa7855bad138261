//! Foveated field of view.
//!
//! The visual field is four concentric circular sectors sharing the gaze
//! direction as their axis. Narrow sectors reach far, wide sectors stay close.
//! A point is visible when it falls inside any one of them.

use glam::DVec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{bearing_of, normalize_deg};
use crate::traffic::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorKind {
    Focus,
    Central,
    Peripheral,
    Mono,
}

impl SectorKind {
    pub const ALL: [SectorKind; 4] = [
        SectorKind::Focus,
        SectorKind::Central,
        SectorKind::Peripheral,
        SectorKind::Mono,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovSector {
    pub kind: SectorKind,
    /// Full cone width in degrees.
    pub angular_extent: f64,
    /// Radius in meters.
    pub sensing_range: f64,
}

impl FovSector {
    pub fn contains(&self, angular_offset: f64, distance: f64) -> bool {
        angular_offset <= 0.5 * self.angular_extent && distance <= self.sensing_range
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FovError {
    #[error("{kind:?} sector: angular extent {value} outside (0, 360]")]
    BadExtent { kind: SectorKind, value: f64 },
    #[error("{kind:?} sector: sensing range {value} must be positive")]
    BadRange { kind: SectorKind, value: f64 },
    #[error("sectors must be ordered focus, central, peripheral, mono")]
    BadOrder,
    #[error("angular extents must strictly increase from focus to mono")]
    ExtentsNotIncreasing,
    #[error("sensing ranges must strictly decrease from focus to mono")]
    RangesNotDecreasing,
}

/// Angular extents (degrees) of the default sectors, focus to mono.
pub const DEFAULT_EXTENTS_DEG: [f64; 4] = [30.0, 60.0, 120.0, 190.0];
/// Sensing range of each default sector as a fraction of the focus range.
pub const DEFAULT_RANGE_RATIOS: [f64; 4] = [1.0, 0.75, 0.5, 0.3];
pub const DEFAULT_SENSING_RANGE_M: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOfView {
    sectors: [FovSector; 4],
}

impl FieldOfView {
    pub fn new(sectors: [FovSector; 4]) -> Result<Self, FovError> {
        for (s, kind) in sectors.iter().zip(SectorKind::ALL) {
            if s.kind != kind {
                return Err(FovError::BadOrder);
            }
            if !(s.angular_extent > 0.0 && s.angular_extent <= 360.0) {
                return Err(FovError::BadExtent { kind, value: s.angular_extent });
            }
            if !(s.sensing_range > 0.0 && s.sensing_range.is_finite()) {
                return Err(FovError::BadRange { kind, value: s.sensing_range });
            }
        }
        for w in sectors.windows(2) {
            if w[1].angular_extent <= w[0].angular_extent {
                return Err(FovError::ExtentsNotIncreasing);
            }
            if w[1].sensing_range >= w[0].sensing_range {
                return Err(FovError::RangesNotDecreasing);
            }
        }
        Ok(Self { sectors })
    }

    /// Builds the four sectors from extents and range ratios scaled by the
    /// focus range.
    pub fn scaled(
        focus_range: f64,
        extents_deg: [f64; 4],
        range_ratios: [f64; 4],
    ) -> Result<Self, FovError> {
        let mut sectors = [FovSector {
            kind: SectorKind::Focus,
            angular_extent: 0.0,
            sensing_range: 0.0,
        }; 4];
        for (i, kind) in SectorKind::ALL.into_iter().enumerate() {
            sectors[i] = FovSector {
                kind,
                angular_extent: extents_deg[i],
                sensing_range: focus_range * range_ratios[i],
            };
        }
        Self::new(sectors)
    }

    pub fn with_range(focus_range: f64) -> Result<Self, FovError> {
        Self::scaled(focus_range, DEFAULT_EXTENTS_DEG, DEFAULT_RANGE_RATIOS)
    }

    pub fn sectors(&self) -> &[FovSector; 4] {
        &self.sectors
    }

    pub fn sector(&self, kind: SectorKind) -> &FovSector {
        &self.sectors[kind as usize]
    }

    /// Longest sensing range, which is always the focus sector's.
    pub fn max_range(&self) -> f64 {
        self.sectors[0].sensing_range
    }
}

impl Default for FieldOfView {
    fn default() -> Self {
        Self::with_range(DEFAULT_SENSING_RANGE_M).expect("default sectors are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverPose {
    pub position: DVec2,
    /// Facing of the body, counterclockwise from +x, degrees.
    pub body_angle: f64,
    /// Head rotation relative to the body, degrees.
    pub head_angle: f64,
}

impl ObserverPose {
    pub fn new(position: DVec2, body_angle: f64, head_angle: f64) -> Self {
        Self { position, body_angle, head_angle }
    }

    /// Gaze direction in `[0, 360)`.
    pub fn gaze(&self) -> f64 {
        normalize_deg(self.head_angle + self.body_angle)
    }
}

/// Bearing of `point` relative to the observer's gaze, in `[0, 360)`.
///
/// A point coincident with the observer has bearing 0.
pub fn relative_bearing(observer: &ObserverPose, point: DVec2) -> f64 {
    let d = point - observer.position;
    if d == DVec2::ZERO {
        return 0.0;
    }
    normalize_deg(bearing_of(d) - observer.gaze() + 360.0)
}

/// Symmetric angular distance from the gaze direction, in `[0, 180]`.
pub fn angular_offset(bearing: f64) -> f64 {
    bearing.min(360.0 - bearing)
}

pub fn point_visible(fov: &FieldOfView, observer: &ObserverPose, point: DVec2) -> bool {
    let offset = angular_offset(relative_bearing(observer, point));
    let dist = observer.position.distance(point);
    fov.sectors.iter().any(|s| s.contains(offset, dist))
}

/// A vehicle is seen when either bumper center is inside the field of view.
pub fn vehicle_visible(fov: &FieldOfView, observer: &ObserverPose, vehicle: &VehicleState) -> bool {
    let (front, back) = vehicle.bumpers();
    point_visible(fov, observer, front) || point_visible(fov, observer, back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::heading_vector;
    use proptest::prelude::*;

    fn at_origin(gaze: f64) -> ObserverPose {
        ObserverPose::new(DVec2::ZERO, gaze, 0.0)
    }

    fn polar(bearing_deg: f64, dist: f64) -> DVec2 {
        let r = bearing_deg.to_radians();
        DVec2::new(r.cos(), r.sin()) * dist
    }

    #[test]
    fn bearing_examples() {
        assert_eq!(relative_bearing(&at_origin(0.0), DVec2::new(10.0, 0.0)), 0.0);
        assert!(relative_bearing(&at_origin(90.0), DVec2::new(0.0, 10.0)).abs() < 1e-12);
        let b = relative_bearing(&at_origin(350.0), polar(10.0, 5.0));
        assert!((b - 20.0).abs() < 1e-9);
        // head and body add up
        let pose = ObserverPose::new(DVec2::ZERO, 90.0, -90.0);
        assert_eq!(pose.gaze(), 0.0);
    }

    #[test]
    fn bearing_full_quadrant() {
        // behind-left of the observer, where a bare arctangent would fold
        let b = relative_bearing(&at_origin(0.0), DVec2::new(-10.0, -10.0));
        assert!((b - 225.0).abs() < 1e-9);
    }

    #[test]
    fn coincident_point_is_bearing_zero_and_visible() {
        let pose = at_origin(123.0);
        assert_eq!(relative_bearing(&pose, DVec2::ZERO), 0.0);
        assert!(point_visible(&FieldOfView::default(), &pose, DVec2::ZERO));
    }

    #[test]
    fn offset_examples() {
        assert_eq!(angular_offset(20.0), 20.0);
        assert_eq!(angular_offset(340.0), 20.0);
        assert_eq!(angular_offset(180.0), 180.0);
    }

    #[test]
    fn default_fov_dead_ahead() {
        let fov = FieldOfView::default();
        let pose = at_origin(0.0);
        assert!(point_visible(&fov, &pose, DVec2::new(50.0, 0.0)));
        assert!(point_visible(&fov, &pose, DVec2::new(80.0, 0.0)));
        assert!(!point_visible(&fov, &pose, DVec2::new(90.0, 0.0)));
    }

    #[test]
    fn mono_sector_edge() {
        let fov = FieldOfView::default();
        assert_eq!(fov.sector(SectorKind::Mono).sensing_range, 24.0);
        let pose = at_origin(0.0);
        assert!(point_visible(&fov, &pose, polar(94.0, 20.0)));
        assert!(point_visible(&fov, &pose, polar(-94.0, 20.0)));
        assert!(!point_visible(&fov, &pose, polar(96.0, 20.0)));
        assert!(!point_visible(&fov, &pose, polar(94.0, 25.0)));
    }

    #[test]
    fn rejects_bad_sectors() {
        assert_eq!(
            FieldOfView::scaled(80.0, [30.0, 20.0, 120.0, 190.0], DEFAULT_RANGE_RATIOS),
            Err(FovError::ExtentsNotIncreasing)
        );
        assert_eq!(
            FieldOfView::scaled(80.0, DEFAULT_EXTENTS_DEG, [1.0, 1.0, 0.5, 0.3]),
            Err(FovError::RangesNotDecreasing)
        );
        assert!(matches!(
            FieldOfView::scaled(80.0, [30.0, 60.0, 120.0, 400.0], DEFAULT_RANGE_RATIOS),
            Err(FovError::BadExtent { kind: SectorKind::Mono, .. })
        ));
        assert!(matches!(FieldOfView::with_range(0.0), Err(FovError::BadRange { .. })));
    }

    fn car(pos: DVec2, heading: f64) -> VehicleState {
        VehicleState {
            id: 1,
            lane: 0,
            position: pos,
            heading,
            speed: 10.0,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            desired_speed: 10.0,
        }
    }

    #[test]
    fn either_bumper_suffices() {
        let fov = FieldOfView::default();
        let pose = at_origin(0.0);
        // center at 81 m heading toward observer: front bumper at 78.75 m
        let v = car(DVec2::new(81.0, 0.0), 270.0);
        assert!(vehicle_visible(&fov, &pose, &v));
        let (front, back) = v.bumpers();
        assert!(point_visible(&fov, &pose, front));
        assert!(!point_visible(&fov, &pose, back));
        let far = car(DVec2::new(120.0, 0.0), 270.0);
        assert!(!vehicle_visible(&fov, &pose, &far));
        let behind = car(DVec2::new(-40.0, 0.0), 90.0);
        assert!(!vehicle_visible(&fov, &pose, &behind));
        assert!((front - (DVec2::new(81.0, 0.0) + heading_vector(270.0) * 2.25)).length() < 1e-12);
    }

    proptest! {
        #[test]
        fn bearing_and_offset_ranges(gaze in -720.0f64..720.0, x in -100.0f64..100.0, y in -100.0f64..100.0) {
            let b = relative_bearing(&at_origin(gaze), DVec2::new(x, y));
            prop_assert!((0.0..360.0).contains(&b));
            let o = angular_offset(b);
            prop_assert!((0.0..=180.0).contains(&o));
        }

        #[test]
        fn rotation_invariance(gaze in 0.0f64..360.0, bearing in 0.0f64..360.0, dist in 0.1f64..100.0, rot in 0.0f64..360.0) {
            let fov = FieldOfView::default();
            let a = point_visible(&fov, &at_origin(gaze), polar(bearing, dist));
            let b = point_visible(&fov, &at_origin(gaze + rot), polar(bearing + rot, dist));
            // only points within 1e-9 deg of a sector edge may disagree
            let off = angular_offset(normalize_deg(bearing - gaze));
            let near_edge = fov.sectors().iter().any(|s| (off - 0.5 * s.angular_extent).abs() < 1e-9);
            prop_assert!(a == b || near_edge);
        }

        #[test]
        fn monotone_in_distance(gaze in 0.0f64..360.0, bearing in 0.0f64..360.0, d in 0.1f64..100.0, shrink in 0.0f64..1.0) {
            let fov = FieldOfView::default();
            let pose = at_origin(gaze);
            if point_visible(&fov, &pose, polar(bearing, d)) {
                prop_assert!(point_visible(&fov, &pose, polar(bearing, d * shrink)));
            }
        }

        #[test]
        fn enlarging_sectors_keeps_points_visible(
            gaze in 0.0f64..360.0, bearing in 0.0f64..360.0, d in 0.1f64..100.0,
            which in 0usize..4, widen in 0.0f64..60.0, extend in 0.0f64..20.0,
        ) {
            let fov = FieldOfView::default();
            let mut sectors = *fov.sectors();
            sectors[which].angular_extent = (sectors[which].angular_extent + widen).min(360.0);
            sectors[which].sensing_range += extend;
            // bypass ordering validation: this is a property of the predicate
            let bigger = FieldOfView { sectors };
            let pose = at_origin(gaze);
            let p = polar(bearing, d);
            if point_visible(&fov, &pose, p) {
                prop_assert!(point_visible(&bigger, &pose, p));
            }
        }
    }
}
