use std::ops::Mul;

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

/// Rotation quaternion `w + xi + yj + zk`. As an attitude it rotates
/// body-frame vectors into the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn is_unit(&self, tol: T) -> bool {
        (self.norm() - T::one()).abs() <= tol
    }

    /// Unit quaternion of the rotation by `|v|` radians about `v / |v|`.
    pub fn from_rotation_vector(v: Vec3<T>) -> Self {
        let angle = norm3(v);
        let half = angle / T::lit(2.0);
        // sin(a/2)/a, expanded near zero
        let k = if angle < T::lit(1e-6) {
            T::lit(0.5) - angle * angle / T::lit(48.0)
        } else {
            half.sin() / angle
        };
        Self::new(half.cos(), v[0] * k, v[1] * k, v[2] * k)
    }

    /// Inverse of [`from_rotation_vector`](Self::from_rotation_vector) with
    /// the angle taken in `[0, pi]`.
    pub fn to_rotation_vector(&self) -> Vec3<T> {
        let q = if self.w < T::zero() { Self::new(-self.w, -self.x, -self.y, -self.z) } else { *self };
        let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        let angle = T::lit(2.0) * s.atan2(q.w);
        let k = if s < T::lit(1e-12) { T::lit(2.0) / q.w } else { angle / s };
        [q.x * k, q.y * k, q.z * k]
    }

    /// `q v q*` for a pure vector `v`.
    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let r = self.rotation_matrix();
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        ]
    }

    /// `q* v q`.
    pub fn rotate_inverse(&self, v: Vec3<T>) -> Vec3<T> {
        self.conj().rotate(v)
    }

    pub fn rotation_matrix(&self) -> [[T; 3]; 3] {
        let Self { w, x, y, z } = *self;
        let two = T::lit(2.0);
        let one = T::one();
        [
            [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
            [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
            [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
        ]
    }

    /// Z-Y-X Euler angles `[yaw, pitch, roll]` in radians.
    pub fn to_euler_zyx(&self) -> Vec3<T> {
        let Self { w, x, y, z } = *self;
        let two = T::lit(2.0);
        let one = T::one();
        let roll = (two * (w * x + y * z)).atan2(one - two * (x * x + y * y));
        let sp = (two * (w * y - z * x)).max(-one).min(one);
        let pitch = sp.asin();
        let yaw = (two * (w * z + x * y)).atan2(one - two * (y * y + z * z));
        [yaw, pitch, roll]
    }

    pub fn from_euler_zyx(yaw: T, pitch: T, roll: T) -> Self {
        let h = T::lit(0.5);
        let (sy, cy) = (yaw * h).sin_cos();
        let (sp, cp) = (pitch * h).sin_cos();
        let (sr, cr) = (roll * h).sin_cos();
        Self::new(
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        )
    }

    pub fn cast<U: Real>(&self) -> Quaternion<U> {
        Quaternion::new(U::lit(self.w.as_f64()), U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }
}

impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;

    fn mul(self, r: Self) -> Self {
        let l = self;
        Self::new(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

pub(crate) fn norm3<T: Real>(v: Vec3<T>) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}
