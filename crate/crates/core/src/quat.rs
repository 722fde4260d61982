//! Unit quaternions and the interpolation primitives built on them.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Below this arc angle (radians) `slerp` falls back to normalized lerp.
pub const SLERP_LINEAR_THRESHOLD: f64 = 1e-6;

/// Rotation stored as `w, x, y, z`, canonicalized so that `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Raw components, no normalization.
    pub const fn from_components(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Normalized and canonicalized quaternion. Fails on a zero or non-finite input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Self { w, x, y, z };
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Precondition(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(q.scale(1.0 / n).canonical())
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n < 1e-15 || angle == 0.0 {
            return Self::IDENTITY;
        }
        let a = axis / n;
        let (s, c) = (0.5 * angle).sin_cos();
        Self { w: c, x: a.x * s, y: a.y * s, z: a.z * s }.canonical()
    }

    /// Exponential map of a rotation vector (axis × angle).
    pub fn from_rotation_vector(v: &Vec3) -> Self {
        let angle = v.norm();
        if angle < 1e-15 {
            return Self { w: 1.0, x: 0.5 * v.x, y: 0.5 * v.y, z: 0.5 * v.z }.normalized();
        }
        Self::from_axis_angle(v, angle)
    }

    /// Logarithm map: rotation vector of the shortest rotation equivalent to `self`.
    pub fn to_rotation_vector(&self) -> Vec3 {
        let q = self.canonical();
        let v = Vec3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s < 1e-15 {
            return 2.0 * v;
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Representative of the double cover with `w >= 0`.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            self.neg()
        } else {
            *self
        }
    }

    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm()).canonical()
    }

    pub fn conjugate(&self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product `self * rhs`, canonicalized.
    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (self, rhs);
        Self {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
        .canonical()
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.to_matrix() * v
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let Self { w, x, y, z } = *self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Angle of the relative rotation between two orientations, in `[0, π]`.
    /// Computed with atan2 so small angles keep full precision.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let r = self.conjugate().mul(other);
        2.0 * (r.x * r.x + r.y * r.y + r.z * r.z).sqrt().atan2(r.w.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

fn check_unit_interval(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("interpolation parameter {t} outside [0, 1]")))
    }
}

/// Linear interpolation `a + t (b - a)`, exact at both endpoints.
pub fn lerp(a: &Vec3, b: &Vec3, t: f64) -> Result<Vec3> {
    check_unit_interval(t)?;
    Ok(lerp_vec(a, b, t))
}

#[inline]
pub(crate) fn lerp_scalar(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

#[inline]
pub(crate) fn lerp_vec(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    a * (1.0 - t) + b * t
}

/// Constant-angular-velocity interpolation along the shorter arc.
pub fn slerp(q0: &Quaternion, q1: &Quaternion, t: f64) -> Result<Quaternion> {
    check_unit_interval(t)?;
    for q in [q0, q1] {
        if !q.is_finite() || (q.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Precondition(format!("{q:?} is not a unit quaternion")));
        }
    }
    Ok(slerp_unit(q0, q1, t))
}

pub(crate) fn slerp_unit(q0: &Quaternion, q1: &Quaternion, t: f64) -> Quaternion {
    if t == 0.0 {
        return q0.canonical();
    }
    if t == 1.0 {
        return q1.canonical();
    }
    let mut target = *q1;
    let mut d = q0.dot(q1);
    if d < 0.0 {
        target = target.neg();
        d = -d;
    }
    let half = d.min(1.0).acos();
    if 2.0 * half < SLERP_LINEAR_THRESHOLD {
        return Quaternion {
            w: lerp_scalar(q0.w, target.w, t),
            x: lerp_scalar(q0.x, target.x, t),
            y: lerp_scalar(q0.y, target.y, t),
            z: lerp_scalar(q0.z, target.z, t),
        }
        .normalized();
    }
    let s = half.sin();
    let a = ((1.0 - t) * half).sin() / s;
    let b = (t * half).sin() / s;
    Quaternion {
        w: a * q0.w + b * target.w,
        x: a * q0.x + b * target.x,
        y: a * q0.y + b * target.y,
        z: a * q0.z + b * target.z,
    }
    .normalized()
}
