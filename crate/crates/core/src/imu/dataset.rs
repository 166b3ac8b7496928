use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{inject_noise, NoiseModel};
use super::trajectory::{generate_trajectory, ideal_imu, GroundTruth, MotionClass, TrajectorySpec};
use crate::error::{Error, Result};
use crate::nav::{euler_delta, gravity, Vec3};
use crate::signal::Signal;

/// Simulator settings shared by dataset generation and static captures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub rate: f64,
    /// Seconds per simulated recording.
    pub recording_duration: f64,
    pub motion_classes: Vec<MotionClass>,
    pub scale: f64,
    pub knot_spacing: f64,
    pub window_len: usize,
    pub stride: usize,
    pub n_windows: usize,
    /// Share of recordings held out for evaluation.
    pub test_fraction: f64,
    /// Samples in the static capture used for Allan analysis.
    pub static_samples: usize,
    pub accel: NoiseModel,
    pub gyro: NoiseModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rate: 200.0,
            recording_duration: 20.0,
            motion_classes: vec![MotionClass::Spline3d, MotionClass::Circular, MotionClass::Spline3d, MotionClass::Linear],
            scale: 1.0,
            knot_spacing: 1.0,
            window_len: 512,
            stride: 256,
            n_windows: 240,
            test_fraction: 0.25,
            static_samples: 1 << 18,
            accel: NoiseModel {
                quantization: 0.005,
                white_noise_density: 0.02,
                bias_instability: 0.01,
                bias_corr_time: 50.0,
                initial_bias: 0.02,
            },
            gyro: NoiseModel {
                quantization: 0.0005,
                white_noise_density: 0.005,
                bias_instability: 0.002,
                bias_corr_time: 50.0,
                initial_bias: 0.005,
            },
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.recording_duration > 0.0 && self.scale >= 0.0 && self.knot_spacing > 0.0) {
            return Err(Error::Config("simulator rate, durations and spacing must be positive".into()));
        }
        if self.motion_classes.is_empty() {
            return Err(Error::Config("simulator needs at least one motion class".into()));
        }
        if self.window_len < 64 || self.stride == 0 {
            return Err(Error::Config("window_len must be at least 64 and stride positive".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::Config("test_fraction must lie in [0, 1)".into()));
        }
        if self.recording_samples() < self.window_len {
            return Err(Error::Config(format!(
                "recordings of {} samples cannot hold a {}-sample window",
                self.recording_samples(),
                self.window_len
            )));
        }
        self.accel.validate()?;
        self.gyro.validate()
    }

    pub fn recording_samples(&self) -> usize {
        (self.recording_duration * self.rate).round() as usize + 1
    }

    pub fn windows_per_recording(&self) -> usize {
        (self.recording_samples() - self.window_len) / self.stride + 1
    }

    fn trajectory_spec(&self, class: MotionClass) -> TrajectorySpec {
        TrajectorySpec { knot_spacing: self.knot_spacing, ..TrajectorySpec::new(self.recording_duration, self.rate, class, self.scale) }
    }
}

/// Stream seed for item `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One simulated capture with its reference motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub class: MotionClass,
    pub truth: GroundTruth,
    pub clean: Signal<f64>,
    pub noisy: Signal<f64>,
}

/// Window position and guidance labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowLabel {
    pub recording: usize,
    pub offset: usize,
    /// `[dyaw, dpitch, droll]`, radians.
    pub d_att: Vec3<f64>,
    /// World-frame displacement, meters.
    pub d_pos: Vec3<f64>,
}

/// A materialized training or evaluation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub noisy: Signal<f64>,
    pub clean: Signal<f64>,
    pub d_att: Vec3<f64>,
    pub d_pos: Vec3<f64>,
    pub truth: GroundTruth,
    /// Reference velocity at the first sample.
    pub v0: Vec3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: SimConfig,
    pub seed: u64,
    pub recordings: Vec<Recording>,
    pub windows: Vec<WindowLabel>,
}

/// Labels of the window `offset..offset + len` read from the reference.
pub fn window_labels(truth: &GroundTruth, offset: usize, len: usize) -> (Vec3<f64>, Vec3<f64>) {
    let end = offset + len - 1;
    let d_att = euler_delta(&truth.quaternions[offset], &truth.quaternions[end]).delta;
    let (a, b) = (truth.positions[offset], truth.positions[end]);
    (d_att, [b[0] - a[0], b[1] - a[1], b[2] - a[2]])
}

/// Simulates one recording of the given class.
pub fn simulate_recording(config: &SimConfig, class: MotionClass, seed: u64) -> Result<Recording> {
    let truth = generate_trajectory(&config.trajectory_spec(class), derive_seed(seed, 0))?;
    let clean = ideal_imu(&truth, gravity())?;
    let noisy = inject_noise(&clean, &config.accel, &config.gyro, derive_seed(seed, 1))?;
    Ok(Recording { class, truth, clean, noisy })
}

/// Noisy stationary capture of `config.static_samples` samples.
pub fn static_capture(config: &SimConfig, seed: u64) -> Result<Signal<f64>> {
    let n = config.static_samples;
    if n < 128 {
        return Err(Error::Config("static capture needs at least 128 samples".into()));
    }
    let g = crate::nav::STANDARD_GRAVITY;
    let mut chans = vec![vec![0.0; n]; 6];
    chans[2] = vec![g; n];
    let clean = Signal::new(chans, config.rate)?;
    inject_noise(&clean, &config.accel, &config.gyro, seed)
}

/// Simulates recordings until `n_windows` windows of `window_len` samples
/// (stride from the config) are available. Recording `r` uses motion class
/// `r mod classes` and seed `derive_seed(seed, r)`.
pub fn make_dataset(n_windows: usize, window_len: usize, config: &SimConfig, seed: u64) -> Result<Dataset> {
    let config = SimConfig { n_windows, window_len, ..config.clone() };
    config.validate()?;
    let per = config.windows_per_recording();
    let n_rec = n_windows.div_ceil(per);
    let recordings = (0..n_rec)
        .into_par_iter()
        .map(|r| {
            let class = config.motion_classes[r % config.motion_classes.len()];
            simulate_recording(&config, class, derive_seed(seed, r as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut windows = Vec::with_capacity(n_windows);
    'outer: for (r, rec) in recordings.iter().enumerate() {
        for w in 0..per {
            if windows.len() == n_windows {
                break 'outer;
            }
            let offset = w * config.stride;
            let (d_att, d_pos) = window_labels(&rec.truth, offset, window_len);
            windows.push(WindowLabel { recording: r, offset, d_att, d_pos });
        }
    }
    Ok(Dataset { config, seed, recordings, windows })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window_len(&self) -> usize {
        self.config.window_len
    }

    pub fn sample(&self, id: usize) -> Result<Sample> {
        let w = self.windows.get(id).ok_or_else(|| Error::Input(format!("window {id} out of range")))?;
        let rec = &self.recordings[w.recording];
        let len = self.window_len();
        Ok(Sample {
            id,
            noisy: rec.noisy.window(w.offset, len)?,
            clean: rec.clean.window(w.offset, len)?,
            d_att: w.d_att,
            d_pos: w.d_pos,
            truth: rec.truth.slice(w.offset, len)?,
            v0: rec.truth.velocity(w.offset),
        })
    }

    pub fn samples(&self, ids: &[usize]) -> Result<Vec<Sample>> {
        ids.iter().map(|&i| self.sample(i)).collect()
    }

    /// Window ids of the training and held-out recordings.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let n_rec = self.recordings.len();
        let n_test = ((n_rec as f64) * self.config.test_fraction).round() as usize;
        let n_test = if self.config.test_fraction > 0.0 { n_test.clamp(1, n_rec.saturating_sub(1).max(1)) } else { 0 };
        let first_test = n_rec - n_test;
        (0..self.len()).partition(|&i| self.windows[i].recording < first_test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(classes: Vec<MotionClass>) -> SimConfig {
        SimConfig { recording_duration: 6.0, motion_classes: classes, ..SimConfig::default() }
    }

    #[test]
    fn static_labels_are_zero() {
        let ds = make_dataset(6, 512, &small(vec![MotionClass::Static]), 4).unwrap();
        assert_eq!(ds.len(), 6);
        for w in &ds.windows {
            assert!(w.d_att.iter().chain(&w.d_pos).all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn linear_displacement_is_velocity_times_duration() {
        let ds = make_dataset(5, 512, &small(vec![MotionClass::Linear]), 9).unwrap();
        let cfg = &ds.config;
        let v = cfg.scale / cfg.recording_duration;
        let t = 511.0 / cfg.rate;
        for w in &ds.windows {
            let d = (w.d_pos[0].powi(2) + w.d_pos[1].powi(2) + w.d_pos[2].powi(2)).sqrt();
            assert!((d - v * t).abs() < 1e-12);
        }
    }

    #[test]
    fn regenerated_dataset_is_identical() {
        let cfg = small(vec![MotionClass::Spline3d, MotionClass::Circular]);
        let a = make_dataset(12, 512, &cfg, 77).unwrap();
        let b = make_dataset(12, 512, &cfg, 77).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_dataset(12, 512, &cfg, 78).unwrap());
    }

    #[test]
    fn labels_come_from_truth() {
        let ds = make_dataset(8, 512, &small(vec![MotionClass::Spline3d]), 1).unwrap();
        for id in 0..ds.len() {
            let s = ds.sample(id).unwrap();
            assert_eq!(s.noisy.len(), 512);
            assert_eq!(s.truth.len(), 512);
            let (a, p) = window_labels(&s.truth, 0, 512);
            for i in 0..3 {
                assert!((a[i] - s.d_att[i]).abs() < 1e-9 && (p[i] - s.d_pos[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn split_is_by_recording() {
        let ds = make_dataset(40, 512, &small(vec![MotionClass::Circular]), 2).unwrap();
        let (train, test) = ds.split();
        assert_eq!(train.len() + test.len(), 40);
        assert!(!test.is_empty() && !train.is_empty());
        let test_recs: std::collections::HashSet<usize> = test.iter().map(|&i| ds.windows[i].recording).collect();
        assert!(train.iter().all(|&i| !test_recs.contains(&ds.windows[i].recording)));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SimConfig { motion_classes: vec![], ..SimConfig::default() };
        assert!(matches!(make_dataset(4, 512, &cfg, 0), Err(Error::Config(_))));
        assert!(make_dataset(4, 5000, &SimConfig::default(), 0).is_err());
        assert!(toml::from_str::<SimConfig>("motion_classes = [\"zigzag\"]").is_err());
        assert!(toml::from_str::<SimConfig>("rate = 100.0\nunknown = 1").is_err());
    }
}
