use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Allan-plot bias-instability readout of a first-order Gauss-Markov process
/// per unit stationary standard deviation: the lowest deviation inside the
/// flat region of its Allan curve, divided by 0.664.
pub const GM_BI_PER_STD: f64 = 0.5944 / 0.664;

/// Error model of one sensor triad. Units follow the measured quantity
/// (m/s^2 for accelerometers, rad/s for gyroscopes).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Output resolution `q`.
    pub quantization: f64,
    /// White-noise density `N` (units per square-root hertz).
    pub white_noise_density: f64,
    /// Bias instability `B`.
    pub bias_instability: f64,
    /// Correlation time of the bias process, seconds.
    pub bias_corr_time: f64,
    /// Constant turn-on bias.
    pub initial_bias: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("quantization", self.quantization),
            ("white_noise_density", self.white_noise_density),
            ("bias_instability", self.bias_instability),
            ("bias_corr_time", self.bias_corr_time),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("noise {name} must be finite and nonnegative, got {v}")));
        }
        if !self.initial_bias.is_finite() {
            return Err(Error::Config("noise initial_bias must be finite".into()));
        }
        if self.bias_instability > 0.0 && !(self.bias_corr_time > 0.0) {
            return Err(Error::Config("bias_corr_time must be positive when bias_instability is set".into()));
        }
        Ok(())
    }

    /// Stationary standard deviation of the Gauss-Markov bias.
    pub fn bias_std(&self) -> f64 {
        self.bias_instability / GM_BI_PER_STD
    }

    pub fn is_zero(&self) -> bool {
        self.quantization == 0.0
            && self.white_noise_density == 0.0
            && self.bias_instability == 0.0
            && self.initial_bias == 0.0
    }
}

/// Adds white noise, turn-on bias and Gauss-Markov bias to every channel,
/// then quantizes. Channel `c` draws from stream `c` of the seeded generator.
pub fn inject_noise(clean: &Signal<f64>, accel: &NoiseModel, gyro: &NoiseModel, seed: u64) -> Result<Signal<f64>> {
    clean.require_imu()?;
    accel.validate()?;
    gyro.validate()?;
    let rate = clean.sample_rate();
    let channels = clean
        .channels()
        .iter()
        .enumerate()
        .map(|(c, x)| {
            let model = if c < 3 { accel } else { gyro };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            corrupt_channel(x, model, rate, &mut rng)
        })
        .collect();
    Signal::new(channels, rate)
}

/// Noise for a single channel.
pub fn corrupt_channel(x: &[f64], model: &NoiseModel, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = x.to_vec();
    if model.initial_bias != 0.0 {
        out.iter_mut().for_each(|v| *v += model.initial_bias);
    }
    if model.white_noise_density > 0.0 {
        let sigma = model.white_noise_density * rate.sqrt();
        for v in out.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *v += sigma * e;
        }
    }
    if model.bias_instability > 0.0 {
        let s = model.bias_std();
        let phi = (-1.0 / (rate * model.bias_corr_time)).exp();
        let drive = s * (1.0 - phi * phi).sqrt();
        let mut b = {
            let e: f64 = StandardNormal.sample(rng);
            s * e
        };
        for v in out.iter_mut() {
            *v += b;
            let e: f64 = StandardNormal.sample(rng);
            b = phi * b + drive * e;
        }
    }
    if model.quantization > 0.0 {
        quantize(&mut out, model.quantization);
    }
    out
}

/// Integrating quantizer: the running sum is rounded to whole steps and each
/// output is the step count emitted in that sample times `q`, so the
/// rounding error never accumulates in the integral.
pub fn quantize(x: &mut [f64], q: f64) {
    let mut acc = 0.0;
    let mut emitted = 0.0;
    for v in x.iter_mut() {
        acc += *v / q;
        let k = acc.round();
        *v = (k - emitted) * q;
        emitted = k;
    }
}
