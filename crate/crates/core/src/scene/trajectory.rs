use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    StraightRoad,
    Roundabout,
    Intersection,
}

/// Ground-plane motion of a vehicle reference point (footprint centre).
///
/// `turn_radius` is signed: positive turns left (counter-clockwise), negative
/// turns right. For an intersection the vehicle drives `turn_after` metres
/// straight, turns a quarter circle and continues straight. `offset_m` shifts
/// the starting point along the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryModel {
    pub kind: TrajectoryKind,
    pub speed: f64,
    pub start: Vec3,
    pub heading: f64,
    #[serde(default)]
    pub turn_radius: f64,
    #[serde(default)]
    pub turn_after: f64,
    #[serde(default)]
    pub offset_m: f64,
}

impl TrajectoryModel {
    pub fn straight(start: Vec3, heading: f64, speed: f64) -> Self {
        Self {
            kind: TrajectoryKind::StraightRoad,
            speed,
            start,
            heading,
            turn_radius: 0.0,
            turn_after: 0.0,
            offset_m: 0.0,
        }
    }

    pub fn roundabout(start: Vec3, heading: f64, speed: f64, radius: f64) -> Self {
        Self { kind: TrajectoryKind::Roundabout, turn_radius: radius, ..Self::straight(start, heading, speed) }
    }

    pub fn intersection(start: Vec3, heading: f64, speed: f64, turn_after: f64, radius: f64) -> Self {
        Self {
            kind: TrajectoryKind::Intersection,
            turn_radius: radius,
            turn_after,
            ..Self::straight(start, heading, speed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::InvalidConfig(format!("speed must be nonnegative, got {}", self.speed)));
        }
        match self.kind {
            TrajectoryKind::StraightRoad => {}
            TrajectoryKind::Roundabout | TrajectoryKind::Intersection => {
                if self.turn_radius == 0.0 || !self.turn_radius.is_finite() {
                    return Err(Error::InvalidConfig("curved trajectory needs a nonzero turn radius".into()));
                }
                if self.kind == TrajectoryKind::Intersection && self.turn_after < 0.0 {
                    return Err(Error::InvalidConfig("turn_after must be nonnegative".into()));
                }
            }
        }
        Ok(())
    }

    fn circle_centre(start: Vec3, heading: f64, radius: f64) -> Vec3 {
        start + Vec3::new(-heading.sin(), heading.cos(), 0.0) * radius
    }

    fn on_arc(start: Vec3, heading: f64, radius: f64, s: f64) -> Pose {
        let theta = s / radius;
        let c = Self::circle_centre(start, heading, radius);
        let h = heading + theta;
        Pose::new(c + Vec3::new(h.sin(), -h.cos(), 0.0) * radius, h)
    }

    fn along(start: Vec3, heading: f64, s: f64) -> Pose {
        Pose::new(start + Vec3::new(heading.cos(), heading.sin(), 0.0) * s, heading)
    }

    /// Pose at arc length `s` from the configured start.
    pub fn pose_at_distance(&self, s: f64) -> Pose {
        let s = s + self.offset_m;
        match self.kind {
            TrajectoryKind::StraightRoad => Self::along(self.start, self.heading, s),
            TrajectoryKind::Roundabout => Self::on_arc(self.start, self.heading, self.turn_radius, s),
            TrajectoryKind::Intersection => {
                if s <= self.turn_after {
                    return Self::along(self.start, self.heading, s);
                }
                let entry = Self::along(self.start, self.heading, self.turn_after);
                let arc = self.turn_radius.abs() * FRAC_PI_2;
                let s_turn = s - self.turn_after;
                if s_turn <= arc {
                    return Self::on_arc(entry.position, self.heading, self.turn_radius, s_turn);
                }
                let exit = Self::on_arc(entry.position, self.heading, self.turn_radius, arc);
                Self::along(exit.position, exit.yaw, s_turn - arc)
            }
        }
    }

    pub fn pose_at(&self, time_s: f64) -> Pose {
        self.pose_at_distance(self.speed * time_s)
    }

    pub fn velocity_at(&self, time_s: f64) -> Vec3 {
        let yaw = self.pose_at(time_s).yaw;
        Vec3::new(yaw.cos(), yaw.sin(), 0.0) * self.speed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn straight_kinematics() {
        let t = TrajectoryModel::straight(Vec3::ZERO, 0.0, 10.0);
        let p = t.pose_at(1.0);
        assert!(p.position.distance(Vec3::new(10.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn right_turn_circle() {
        let t = TrajectoryModel::roundabout(Vec3::new(0.0, 0.0, 0.0), 0.0, 5.0, -10.0);
        let centre = Vec3::new(0.0, -10.0, 0.0);
        let p = t.pose_at(10.0 * PI / 2.0 / 5.0);
        assert!((p.position.distance(centre) - 10.0).abs() < 1e-9);
        assert!((p.yaw + PI / 2.0).abs() < 1e-12);
        assert!(p.position.distance(Vec3::new(10.0, -10.0, 0.0)) < 1e-9);
    }

    #[test]
    fn intersection_exits_perpendicular() {
        let t = TrajectoryModel::intersection(Vec3::ZERO, 0.0, 1.0, 5.0, 4.0);
        let arc = 4.0 * PI / 2.0;
        let p = t.pose_at_distance(5.0 + arc + 3.0);
        assert!((p.yaw - PI / 2.0).abs() < 1e-12);
        assert!(p.position.distance(Vec3::new(9.0, 7.0, 0.0)) < 1e-9);
        let mid = t.pose_at_distance(2.0);
        assert!(mid.position.distance(Vec3::new(2.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TrajectoryModel::straight(Vec3::ZERO, 0.0, -1.0).validate().is_err());
        assert!(TrajectoryModel::roundabout(Vec3::ZERO, 0.0, 1.0, 0.0).validate().is_err());
    }
}
