use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spline::CubicSpline;
use crate::error::{Error, Result};
use crate::nav::{Quaternion, Vec3};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionClass {
    Static,
    Linear,
    Circular,
    Spline3d,
}

impl MotionClass {
    pub const ALL: [MotionClass; 4] = [Self::Static, Self::Linear, Self::Circular, Self::Spline3d];

    pub fn name(self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::Linear => "linear",
            Self::Circular => "circular",
            Self::Spline3d => "spline3d",
        }
    }
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown motion class `{s}` (expected static, linear, circular or spline3d)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub rate: f64,
    pub motion_class: MotionClass,
    /// Meters: net displacement (linear), radius (circular) or control-point
    /// range (spline3d).
    pub scale: f64,
    /// Seconds per revolution for the circular class.
    #[serde(default = "default_period")]
    pub period: f64,
    /// Seconds between spline control points.
    #[serde(default = "default_knot_spacing")]
    pub knot_spacing: f64,
    /// Peak pitch and roll excursion of the spline3d class, radians.
    #[serde(default = "default_tilt")]
    pub tilt: f64,
    /// Largest mean yaw rate between spline3d control points, rad/s.
    #[serde(default = "default_yaw_rate")]
    pub yaw_rate: f64,
}

fn default_period() -> f64 {
    8.0
}
fn default_knot_spacing() -> f64 {
    1.0
}
fn default_tilt() -> f64 {
    0.4
}
fn default_yaw_rate() -> f64 {
    0.8
}

impl TrajectorySpec {
    pub fn new(duration: f64, rate: f64, motion_class: MotionClass, scale: f64) -> Self {
        Self {
            duration,
            rate,
            motion_class,
            scale,
            period: default_period(),
            knot_spacing: default_knot_spacing(),
            tilt: default_tilt(),
            yaw_rate: default_yaw_rate(),
        }
    }

    /// Number of samples, both endpoints included.
    pub fn samples(&self) -> usize {
        (self.duration * self.rate).round() as usize + 1
    }
}

/// Timestamped reference poses.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub sample_rate: f64,
    pub timestamps: Vec<f64>,
    pub positions: Vec<Vec3<f64>>,
    /// Body-to-world attitude at every sample.
    pub quaternions: Vec<Quaternion<f64>>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Samples `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() || len == 0 {
            return Err(Error::Input(format!("truth slice {start}..{} out of {} samples", start + len, self.len())));
        }
        Ok(Self {
            sample_rate: self.sample_rate,
            timestamps: self.timestamps[start..start + len].to_vec(),
            positions: self.positions[start..start + len].to_vec(),
            quaternions: self.quaternions[start..start + len].to_vec(),
        })
    }

    /// World-frame velocity at sample `k` by central differences
    /// (second-order one-sided at the ends).
    pub fn velocity(&self, k: usize) -> Vec3<f64> {
        let p = &self.positions;
        let n = p.len();
        let inv = self.sample_rate / 2.0;
        let mut v = [0.0; 3];
        for i in 0..3 {
            v[i] = if n < 3 {
                if n == 2 { (p[1][i] - p[0][i]) * self.sample_rate } else { 0.0 }
            } else if k == 0 {
                (-3.0 * p[0][i] + 4.0 * p[1][i] - p[2][i]) * inv
            } else if k == n - 1 {
                (3.0 * p[n - 1][i] - 4.0 * p[n - 2][i] + p[n - 3][i]) * inv
            } else {
                (p[k + 1][i] - p[k - 1][i]) * inv
            };
        }
        v
    }

    /// Sum of distances between consecutive positions.
    pub fn path_length(&self) -> f64 {
        self.positions.windows(2).map(|w| dist(w[0], w[1])).sum()
    }
}

pub(crate) fn dist(a: Vec3<f64>, b: Vec3<f64>) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Smooth reference motion of the requested class.
pub fn generate_trajectory(spec: &TrajectorySpec, seed: u64) -> Result<GroundTruth> {
    if !(spec.rate > 0.0) || !(spec.duration > 0.0) || !spec.scale.is_finite() || spec.scale < 0.0 {
        return Err(Error::Config("trajectory needs positive duration and rate and a nonnegative scale".into()));
    }
    let n = spec.samples();
    if n < 64 {
        return Err(Error::Config(format!("trajectory of {n} samples is shorter than the minimum 64")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..n).map(|k| k as f64 / spec.rate).collect();
    let (positions, quaternions) = match spec.motion_class {
        MotionClass::Static => (vec![[0.0; 3]; n], vec![Quaternion::identity(); n]),
        MotionClass::Linear => {
            let dir = random_unit(&mut rng);
            let v: Vec3<f64> = dir.map(|d| d * spec.scale / spec.duration);
            let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let q = Quaternion::from_euler_zyx(yaw, 0.0, 0.0);
            (times.iter().map(|&t| [v[0] * t, v[1] * t, v[2] * t]).collect(), vec![q; n])
        }
        MotionClass::Circular => {
            if !(spec.period > 0.0) {
                return Err(Error::Config("circular period must be positive".into()));
            }
            let w = 2.0 * std::f64::consts::PI / spec.period;
            let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            let r = spec.scale;
            let pos = times.iter().map(|&t| [r * (w * t + phase).cos(), r * (w * t + phase).sin(), 0.0]).collect();
            let att = times
                .iter()
                .map(|&t| Quaternion::from_euler_zyx(w * t + phase + std::f64::consts::FRAC_PI_2, 0.0, 0.0))
                .collect();
            (pos, att)
        }
        MotionClass::Spline3d => spline_motion(spec, &times, &mut rng)?,
    };
    Ok(GroundTruth { sample_rate: spec.rate, timestamps: times, positions, quaternions })
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    loop {
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = dist(v, [0.0; 3]);
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

fn spline_motion(
    spec: &TrajectorySpec,
    times: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec3<f64>>, Vec<Quaternion<f64>>)> {
    if !(spec.knot_spacing > 0.0) {
        return Err(Error::Config("knot spacing must be positive".into()));
    }
    let h = spec.knot_spacing;
    // one spare knot on each side keeps the natural end conditions away
    // from the sampled interval
    let knots = (spec.duration / h).ceil() as usize + 3;
    let t0 = -h;
    let s = spec.scale;
    let mut axis = |range: f64| (0..knots).map(|_| rng.random_range(-range..=range)).collect::<Vec<f64>>();
    let px = CubicSpline::uniform(t0, h, axis(s));
    let py = CubicSpline::uniform(t0, h, axis(s));
    let pz = CubicSpline::uniform(t0, h, axis(0.5 * s));
    let pitch = CubicSpline::uniform(t0, h, axis(spec.tilt));
    let roll = CubicSpline::uniform(t0, h, axis(spec.tilt));
    let mut yaw_knots = Vec::with_capacity(knots);
    let mut yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    for _ in 0..knots {
        yaw_knots.push(yaw);
        yaw += rng.random_range(-spec.yaw_rate * h..=spec.yaw_rate * h);
    }
    let yaw = CubicSpline::uniform(t0, h, yaw_knots);
    let pos = times.iter().map(|&t| [px.eval(t), py.eval(t), pz.eval(t)]).collect();
    let att = times.iter().map(|&t| Quaternion::from_euler_zyx(yaw.eval(t), pitch.eval(t), roll.eval(t))).collect();
    Ok((pos, att))
}

/// Noise-free body-frame measurements of a reference motion.
///
/// The gyroscope sample `k` is the rotation from attitude `k` to `k + 1`
/// divided by the step (backward at the last sample), the exact inverse of
/// the navigation integrator. The accelerometer reads the body-frame
/// specific force with the acceleration from central second differences.
pub fn ideal_imu(gt: &GroundTruth, gravity: Vec3<f64>) -> Result<Signal<f64>> {
    let n = gt.len();
    if n < 3 {
        return Err(Error::Input(format!("ideal measurements need at least 3 samples, got {n}")));
    }
    if let Some(k) = gt.quaternions.iter().position(|q| !q.is_unit(1e-9)) {
        return Err(Error::Input(format!("reference attitude {k} is not a unit quaternion")));
    }
    let rate = gt.sample_rate;
    let p = &gt.positions;
    let mut accel = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut gyro = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for k in 0..n {
        let c = k.clamp(1, n - 2);
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = (p[c + 1][i] - 2.0 * p[c][i] + p[c - 1][i]) * rate * rate - gravity[i];
        }
        let f = gt.quaternions[k].rotate_inverse(a);
        let j = k.min(n - 2);
        let w = (gt.quaternions[j].conj() * gt.quaternions[j + 1]).to_rotation_vector();
        for i in 0..3 {
            accel[i][k] = f[i];
            gyro[i][k] = w[i] * rate;
        }
    }
    Signal::imu(accel, gyro, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::{gravity, strapdown, STANDARD_GRAVITY};

    #[test]
    fn invalid_class_is_config_error() {
        assert!(matches!("spiral".parse::<MotionClass>(), Err(Error::Config(_))));
        assert_eq!("spline3d".parse::<MotionClass>().unwrap(), MotionClass::Spline3d);
        let bad: std::result::Result<TrajectorySpec, _> =
            toml::from_str("duration = 1.0\nrate = 100.0\nmotion_class = \"helix\"\nscale = 1.0");
        assert!(bad.is_err());
        let short = TrajectorySpec::new(0.2, 100.0, MotionClass::Static, 1.0);
        assert!(matches!(generate_trajectory(&short, 0), Err(Error::Config(_))));
    }

    #[test]
    fn static_is_constant() {
        let gt = generate_trajectory(&TrajectorySpec::new(10.0, 100.0, MotionClass::Static, 1.0), 1).unwrap();
        assert_eq!(gt.len(), 1001);
        assert!(gt.positions.iter().all(|p| *p == gt.positions[0]));
        assert!(gt.quaternions.iter().all(|q| *q == gt.quaternions[0]));
        let imu = ideal_imu(&gt, gravity()).unwrap();
        for k in 0..imu.len() {
            let a = imu.accel(k);
            assert!(a[0].abs() < 1e-6 && a[1].abs() < 1e-6 && (a[2] - STANDARD_GRAVITY).abs() < 1e-6);
            assert!(imu.gyro(k).iter().all(|w| w.abs() < 1e-6));
        }
    }

    #[test]
    fn linear_is_exact() {
        let spec = TrajectorySpec::new(4.0, 50.0, MotionClass::Linear, 2.0);
        let gt = generate_trajectory(&spec, 3).unwrap();
        let v = gt.velocity(0);
        assert!((dist(v, [0.0; 3]) - 0.5).abs() < 1e-12);
        for (t, p) in gt.timestamps.iter().zip(&gt.positions) {
            for i in 0..3 {
                assert!((p[i] - v[i] * t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_speed() {
        let spec = TrajectorySpec { period: 6.0, ..TrajectorySpec::new(6.0, 1000.0, MotionClass::Circular, 1.5) };
        let gt = generate_trajectory(&spec, 2).unwrap();
        let expect = 1.5 * 2.0 * std::f64::consts::PI / 6.0;
        for k in (1..gt.len() - 1).step_by(97) {
            assert!((dist(gt.velocity(k), [0.0; 3]) - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_yaw_rotation_reads_on_gyro() {
        let rate = 100.0;
        let w = 0.7;
        let n = 300;
        let gt = GroundTruth {
            sample_rate: rate,
            timestamps: (0..n).map(|k| k as f64 / rate).collect(),
            positions: vec![[0.0; 3]; n],
            quaternions: (0..n).map(|k| Quaternion::from_euler_zyx(w * k as f64 / rate, 0.0, 0.0)).collect(),
        };
        let imu = ideal_imu(&gt, gravity()).unwrap();
        for k in 0..n {
            let g = imu.gyro(k);
            assert!(g[0].abs() < 1e-4 && g[1].abs() < 1e-4 && (g[2] - w).abs() < 1e-4);
        }
        let mut bad = gt.clone();
        bad.quaternions[5] = Quaternion::new(1.1, 0.0, 0.0, 0.0);
        assert!(matches!(ideal_imu(&bad, gravity()), Err(Error::Input(_))));
    }

    #[test]
    fn spline_round_trip_through_strapdown() {
        for seed in 0..3 {
            let gt = generate_trajectory(&TrajectorySpec::new(20.0, 200.0, MotionClass::Spline3d, 1.0), seed).unwrap();
            assert!(gt.quaternions.iter().all(|q| q.is_unit(1e-9)));
            let imu = ideal_imu(&gt, gravity()).unwrap();
            let poses = strapdown(&imu, gt.quaternions[0], gt.velocity(0), gt.positions[0], gravity()).unwrap();
            let worst = poses.iter().zip(&gt.positions).map(|(a, b)| dist(a.p, *b)).fold(0.0, f64::max);
            assert!(worst < 1e-3 * gt.path_length(), "seed {seed}: {worst} vs {}", gt.path_length());
        }
    }
}
