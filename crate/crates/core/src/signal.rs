//! Uniformly sampled multi-channel time series.

use crate::error::{Error, Result};
use crate::scalar::{all_finite, Real};

/// Number of channels in an inertial capture: `ax, ay, az, gx, gy, gz`.
pub const IMU_CHANNELS: usize = 6;

/// Channel names in storage order.
pub const CHANNEL_NAMES: [&str; IMU_CHANNELS] = ["ax", "ay", "az", "gx", "gy", "gz"];

/// Equal-length channels sampled at `sample_rate` Hz.
///
/// Inertial captures carry accelerometer channels (m/s^2) followed by
/// gyroscope channels (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    channels: Vec<Vec<T>>,
    sample_rate: T,
}

impl<T: Real> Signal<T> {
    pub fn new(channels: Vec<Vec<T>>, sample_rate: T) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Input("signal has no channels".into()));
        }
        if !(sample_rate > T::zero()) || !sample_rate.is_finite() {
            return Err(Error::Input(format!("sample rate must be positive, got {sample_rate}")));
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().position(|c| c.len() != len) {
            return Err(Error::Input(format!(
                "channel {bad} has {} samples, channel 0 has {len}",
                channels[bad].len()
            )));
        }
        if let Some(bad) = channels.iter().position(|c| !all_finite(c)) {
            return Err(Error::Input(format!("channel {bad} contains non-finite samples")));
        }
        Ok(Self { channels, sample_rate })
    }

    /// Builds a six-channel inertial signal from accelerometer and gyroscope
    /// triads.
    pub fn imu(accel: [Vec<T>; 3], gyro: [Vec<T>; 3], sample_rate: T) -> Result<Self> {
        let channels = accel.into_iter().chain(gyro).collect();
        Self::new(channels, sample_rate)
    }

    pub fn zeros(channel_count: usize, len: usize, sample_rate: T) -> Result<Self> {
        Self::new(vec![vec![T::zero(); len]; channel_count], sample_rate)
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &[T] {
        &self.channels[i]
    }

    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn dt(&self) -> T {
        T::one() / self.sample_rate
    }

    /// Fails unless this is a six-channel inertial signal.
    pub fn require_imu(&self) -> Result<()> {
        if self.channel_count() != IMU_CHANNELS {
            return Err(Error::Input(format!(
                "expected {IMU_CHANNELS} inertial channels, got {}",
                self.channel_count()
            )));
        }
        Ok(())
    }

    /// Accelerometer sample `k` (channels 0..3).
    pub fn accel(&self, k: usize) -> [T; 3] {
        [self.channels[0][k], self.channels[1][k], self.channels[2][k]]
    }

    /// Gyroscope sample `k` (channels 3..6).
    pub fn gyro(&self, k: usize) -> [T; 3] {
        [self.channels[3][k], self.channels[4][k], self.channels[5][k]]
    }

    /// Samples `start..start + len` of every channel.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(Error::Input(format!(
                "window {start}..{} exceeds signal length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Self {
            channels: self.channels.iter().map(|c| c[start..start + len].to_vec()).collect(),
            sample_rate: self.sample_rate,
        })
    }

    /// Row-major `[channel][sample]` copy as `f64`.
    pub fn to_f64_rows(&self) -> Vec<f64> {
        self.channels.iter().flatten().map(|v| v.as_f64()).collect()
    }

    /// Mean squared difference over all channels and samples.
    pub fn mse(&self, other: &Self) -> Result<T> {
        if self.channel_count() != other.channel_count() || self.len() != other.len() {
            return Err(Error::Input("signals differ in shape".into()));
        }
        let n = T::from_usize_lossy(self.len() * self.channel_count());
        let total: T = self
            .channels
            .iter()
            .zip(&other.channels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)))
            .sum();
        Ok(total / n)
    }
}

impl Signal<f64> {
    /// Rebuilds a signal from a row-major `[channel][sample]` buffer.
    pub fn from_f64_rows(rows: &[f64], channel_count: usize, sample_rate: f64) -> Result<Self> {
        if channel_count == 0 || rows.len() % channel_count != 0 {
            return Err(Error::Structural(format!(
                "buffer of {} values does not split into {channel_count} channels",
                rows.len()
            )));
        }
        let len = rows.len() / channel_count;
        Self::new(rows.chunks(len).map(<[f64]>::to_vec).collect(), sample_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape_and_rate() {
        assert!(Signal::<f64>::new(vec![], 1.0).is_err());
        assert!(Signal::new(vec![vec![1.0], vec![1.0, 2.0]], 1.0).is_err());
        assert!(Signal::new(vec![vec![1.0]], 0.0).is_err());
        assert!(Signal::new(vec![vec![f64::INFINITY]], 1.0).is_err());
        let s = Signal::new(vec![vec![1.0, 2.0]; 6], 100.0).unwrap();
        assert!(s.require_imu().is_ok());
        assert_eq!(s.dt(), 0.01);
    }

    #[test]
    fn window_and_rows() {
        let s = Signal::new(vec![vec![0.0, 1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0, 7.0]], 2.0).unwrap();
        let w = s.window(1, 2).unwrap();
        assert_eq!(w.channels(), &[vec![1.0, 2.0], vec![5.0, 6.0]]);
        assert!(s.window(3, 2).is_err());
        let rows = s.to_f64_rows();
        assert_eq!(Signal::from_f64_rows(&rows, 2, 2.0).unwrap(), s);
        assert_eq!(s.mse(&s).unwrap(), 0.0);
    }
}
