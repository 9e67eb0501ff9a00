use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or displacement in metres, world frame unless noted otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Rotates about the +z axis by `yaw` radians.
    pub fn rotate_z(self, yaw: f64) -> Vec3 {
        let (s, c) = yaw.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Position plus yaw of a sensor or vehicle. Yaw 0 looks along +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub yaw: f64,
}

impl Pose {
    pub const fn new(position: Vec3, yaw: f64) -> Self {
        Self { position, yaw }
    }

    /// Expresses a world point in this pose's local frame (x forward, y left, z up).
    pub fn to_local(&self, world: Vec3) -> Vec3 {
        (world - self.position).rotate_z(-self.yaw)
    }

    pub fn to_world(&self, local: Vec3) -> Vec3 {
        local.rotate_z(self.yaw) + self.position
    }
}

/// Azimuth/elevation pair in radians. Azimuth is measured from the local
/// boresight (+x) towards +y, elevation from the horizontal plane towards +z.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Direction {
    pub az: f64,
    pub el: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction { az: 0.0, el: 0.0 };

    pub const fn new(az: f64, el: f64) -> Self {
        Self { az, el }
    }

    /// Direction of `target` seen from `from`, in the local frame of `from`.
    pub fn towards(from: &Pose, target: Vec3) -> Direction {
        let local = from.to_local(target);
        let horizontal = local.x.hypot(local.y);
        Direction::new(local.y.atan2(local.x), local.z.atan2(horizontal))
    }

    /// Unit vector in the local frame.
    pub fn unit(self) -> Vec3 {
        let (sa, ca) = self.az.sin_cos();
        let (se, ce) = self.el.sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = angle.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let w = wrap_two_pi(angle + pi) - pi;
    if w <= -pi {
        w + std::f64::consts::TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn pose_round_trip() {
        let pose = Pose::new(Vec3::new(3.0, -2.0, 1.0), 0.7);
        let p = Vec3::new(-4.0, 5.5, 2.0);
        let back = pose.to_world(pose.to_local(p));
        assert!(back.distance(p) < 1e-12);
    }

    #[test]
    fn direction_of_left_point() {
        let d = Direction::towards(&Pose::default(), Vec3::new(0.0, 10.0, 0.0));
        assert!((d.az - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(d.el, 0.0);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_pi(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!(wrap_two_pi(-0.5) > 5.0);
    }
}
