//! Strapdown dead reckoning: quaternion attitude propagation from the
//! gyroscope and trapezoidal double integration of the gravity-compensated
//! specific force.
//!
//! A sequence of `n` samples spans `n - 1` sample intervals; the attitude at
//! sample `k + 1` is the attitude at sample `k` advanced by the rotation
//! `omega_k * dt`.

mod quaternion;

pub use quaternion::{wrap_angle, Quaternion, Vec3};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::Signal;

/// Standard gravity magnitude in m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// World-frame gravity vector, z up.
pub fn gravity<T: Real>() -> Vec3<T> {
    [T::zero(), T::zero(), T::lit(-STANDARD_GRAVITY)]
}

/// Integrator state at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub t: T,
    pub q: Quaternion<T>,
    pub p: Vec3<T>,
    pub v: Vec3<T>,
}

fn check_unit<T: Real>(q: &Quaternion<T>) -> Result<()> {
    if !q.is_unit(T::lit(1e-6)) {
        return Err(Error::Input(format!("initial attitude is not a unit quaternion (norm {})", q.norm())));
    }
    Ok(())
}

/// Attitudes at every sample of a gyroscope sequence (rad/s), starting
/// from `q0`.
pub fn integrate_attitude<T: Real>(gyro: &[Vec3<T>], dt: T, q0: Quaternion<T>) -> Result<Vec<Quaternion<T>>> {
    if !(dt > T::zero()) {
        return Err(Error::Input(format!("time step must be positive, got {dt}")));
    }
    check_unit(&q0)?;
    let mut out = Vec::with_capacity(gyro.len().max(1));
    let mut q = q0.normalized();
    out.push(q);
    for w in gyro.iter().take(gyro.len().saturating_sub(1)) {
        let step = Quaternion::from_rotation_vector([w[0] * dt, w[1] * dt, w[2] * dt]);
        q = (q * step).normalized();
        out.push(q);
    }
    Ok(out)
}

fn gyro_triads<T: Real>(signal: &Signal<T>) -> Vec<Vec3<T>> {
    (0..signal.len()).map(|k| signal.gyro(k)).collect()
}

/// Full navigation solution, one pose per sample.
pub fn strapdown<T: Real>(
    signal: &Signal<T>,
    q0: Quaternion<T>,
    v0: Vec3<T>,
    p0: Vec3<T>,
    gravity: Vec3<T>,
) -> Result<Vec<Pose<T>>> {
    signal.require_imu()?;
    let dt = signal.dt();
    let qs = integrate_attitude(&gyro_triads(signal), dt, q0)?;
    let half = dt / T::lit(2.0);
    let world_accel = |k: usize| {
        let f = qs[k].rotate(signal.accel(k));
        [f[0] + gravity[0], f[1] + gravity[1], f[2] + gravity[2]]
    };
    let mut poses = Vec::with_capacity(signal.len());
    let (mut p, mut v) = (p0, v0);
    let mut a = world_accel(0);
    poses.push(Pose { t: T::zero(), q: qs[0], p, v });
    for k in 1..signal.len() {
        let a_next = world_accel(k);
        let mut v_next = v;
        for i in 0..3 {
            v_next[i] = v[i] + (a[i] + a_next[i]) * half;
            p[i] = p[i] + (v[i] + v_next[i]) * half;
        }
        v = v_next;
        a = a_next;
        poses.push(Pose { t: T::from_usize_lossy(k) * dt, q: qs[k], p, v });
    }
    Ok(poses)
}

/// Euler-angle change over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeChange<T> {
    /// `[dyaw, dpitch, droll]` wrapped to `(-pi, pi]`.
    pub delta: Vec3<T>,
    /// Set when the pitch at either end is within one degree of +-90 degrees.
    pub near_gimbal_lock: bool,
}

/// Component-wise wrapped Z-Y-X Euler difference `euler(end) - euler(start)`.
pub fn euler_delta<T: Real>(start: &Quaternion<T>, end: &Quaternion<T>) -> AttitudeChange<T> {
    let a = start.to_euler_zyx();
    let b = end.to_euler_zyx();
    let limit = T::lit(89f64.to_radians());
    AttitudeChange {
        delta: [wrap_angle(b[0] - a[0]), wrap_angle(b[1] - a[1]), wrap_angle(b[2] - a[2])],
        near_gimbal_lock: a[1].abs() > limit || b[1].abs() > limit,
    }
}

/// Integrates the window's gyroscope from `q0` and reports the Euler change.
pub fn window_attitude_change<T: Real>(window: &Signal<T>, q0: Quaternion<T>) -> Result<AttitudeChange<T>> {
    window.require_imu()?;
    let qs = integrate_attitude(&gyro_triads(window), window.dt(), q0)?;
    Ok(euler_delta(&qs[0], qs.last().expect("at least one attitude")))
}

/// Displacement `p_end - p_start` of a strapdown solution over the window.
pub fn window_displacement<T: Real>(window: &Signal<T>, q0: Quaternion<T>, v0: Vec3<T>) -> Result<Vec3<T>> {
    let zero = [T::zero(); 3];
    let poses = strapdown(window, q0, v0, zero, gravity())?;
    Ok(poses.last().expect("non-empty signal").p)
}
