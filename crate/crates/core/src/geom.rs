//! Planar helpers shared by the perception and traffic code.
//!
//! Two angle conventions coexist. Bearings seen by an observer are measured
//! counterclockwise from +x (the usual `atan2` frame). Vehicle headings are
//! measured clockwise from +y, so a vehicle with heading `phi` travels along
//! `(sin phi, cos phi)`.

use glam::DVec2;

/// Unit travel vector for a vehicle heading in degrees (0 = +y, 90 = +x).
pub fn heading_vector(heading_deg: f64) -> DVec2 {
    let r = heading_deg.to_radians();
    DVec2::new(r.sin(), r.cos())
}

/// Vehicle heading (clockwise from +y) pointing along `dir`.
pub fn heading_of(dir: DVec2) -> f64 {
    normalize_deg(dir.x.atan2(dir.y).to_degrees())
}

/// Counterclockwise-from-+x angle of `dir`, in degrees.
pub fn bearing_of(dir: DVec2) -> f64 {
    normalize_deg(dir.y.atan2(dir.x).to_degrees())
}

/// Wraps any angle into `[0, 360)`.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// 2D cross product `a x b`.
pub fn cross(a: DVec2, b: DVec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_convention_matches_sin_cos() {
        let v = heading_vector(90.0);
        assert!((v - DVec2::X).length() < 1e-12);
        let v = heading_vector(0.0);
        assert!((v - DVec2::Y).length() < 1e-12);
        assert!((heading_of(DVec2::new(-1.0, 0.0)) - 270.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_never_returns_360() {
        assert_eq!(normalize_deg(-1e-17), 0.0);
        assert_eq!(normalize_deg(720.0), 0.0);
        assert!((normalize_deg(-90.0) - 270.0).abs() < 1e-12);
    }
}
