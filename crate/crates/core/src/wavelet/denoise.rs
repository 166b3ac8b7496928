use serde::{Deserialize, Serialize};

use super::{dwt, idwt, BoundaryMode, WaveletBasis};
use crate::error::{Error, Result};
use crate::scalar::{all_finite, Real};
use crate::signal::Signal;

/// Shrinkage applied to detail coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Universal threshold `sigma * sqrt(2 ln n)` with soft shrinkage.
    #[default]
    UniversalSoft,
    /// Universal threshold with hard (keep-or-kill) shrinkage.
    UniversalHard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    pub levels: usize,
    pub boundary_mode: BoundaryMode,
    pub threshold_rule: ThresholdRule,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            boundary_mode: BoundaryMode::Symmetric,
            threshold_rule: ThresholdRule::UniversalSoft,
        }
    }
}

/// Robust noise scale `median(|d|) / 0.6745` of the finest detail level.
pub fn estimate_noise_sigma<T: Real>(finest_details: &[T]) -> Result<T> {
    if finest_details.is_empty() {
        return Err(Error::Input("noise estimate needs at least one coefficient".into()));
    }
    let mut abs: Vec<T> = finest_details.iter().map(|d| d.abs()).collect();
    let n = abs.len();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
    let (_, upper, _) = abs.select_nth_unstable_by(n / 2, cmp);
    let upper = *upper;
    let median = if n % 2 == 1 {
        upper
    } else {
        let lower = abs[..n / 2].iter().copied().fold(T::neg_infinity(), T::max);
        (lower + upper) / T::lit(2.0)
    };
    Ok(median / T::lit(0.6745))
}

/// `sign(x) * max(|x| - lambda, 0)`.
pub fn soft_threshold<T: Real>(x: T, lambda: T) -> Result<T> {
    if lambda < T::zero() || lambda.is_nan() {
        return Err(Error::Input(format!("threshold must be nonnegative, got {lambda}")));
    }
    Ok(soft(x, lambda))
}

#[inline]
fn soft<T: Real>(x: T, lambda: T) -> T {
    let mag = x.abs() - lambda;
    if mag > T::zero() {
        mag.copysign(x)
    } else {
        T::zero()
    }
}

/// `sigma * sqrt(2 ln n)`.
pub fn universal_threshold<T: Real>(sigma: T, n: usize) -> T {
    sigma * (T::lit(2.0) * T::from_usize_lossy(n).ln()).sqrt()
}

/// Decompose, shrink every detail level with one global threshold, and
/// reconstruct. The approximation is left untouched.
pub fn denoise_channel<T: Real>(
    channel: &[T],
    basis: &WaveletBasis<T>,
    config: &DenoiseConfig,
) -> Result<Vec<T>> {
    if !all_finite(channel) {
        return Err(Error::Input("channel contains non-finite samples".into()));
    }
    let mut decomp = dwt(channel, basis, config.levels, config.boundary_mode)?;
    let sigma = estimate_noise_sigma(&decomp.details[0])?;
    let lambda = universal_threshold(sigma, channel.len());
    for level in &mut decomp.details {
        for c in level.iter_mut() {
            *c = match config.threshold_rule {
                ThresholdRule::UniversalSoft => soft(*c, lambda),
                ThresholdRule::UniversalHard => {
                    if c.abs() > lambda {
                        *c
                    } else {
                        T::zero()
                    }
                }
            };
        }
    }
    idwt(&decomp, basis)
}

/// Channel-wise [`denoise_channel`]; keeps length, channel count and rate.
pub fn denoise<T: Real>(
    signal: &Signal<T>,
    basis: &WaveletBasis<T>,
    config: &DenoiseConfig,
) -> Result<Signal<T>> {
    let channels = signal
        .channels()
        .iter()
        .map(|c| denoise_channel(c, basis, config))
        .collect::<Result<Vec<_>>>()?;
    Signal::new(channels, signal.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::standard_bank;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn sigma_examples() {
        let s = estimate_noise_sigma::<f64>(&[0.6745, -0.6745, 0.6745]).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(estimate_noise_sigma(&[0.0; 8]).unwrap(), 0.0);
        assert!(matches!(estimate_noise_sigma::<f64>(&[]), Err(Error::Input(_))));
        // even count: mean of the two middle magnitudes
        let s = estimate_noise_sigma::<f64>(&[1.0, -3.0, 2.0, 10.0]).unwrap();
        assert!((s - 2.5 / 0.6745).abs() < 1e-12);
    }

    #[test]
    fn sigma_of_standard_normal_draws() {
        for seed in 0..5 {
            let s = estimate_noise_sigma(&normals(10_000, seed)).unwrap();
            assert!((s - 1.0).abs() < 0.05, "seed {seed}: {s}");
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-4.0, 1.5).unwrap(), -2.5);
        for x in [-7.25, 0.0, 1e-9, 3.5] {
            assert_eq!(soft_threshold(x, 0.0).unwrap(), x);
        }
        assert!(matches!(soft_threshold(1.0, -0.1), Err(Error::Input(_))));
    }

    proptest! {
        #[test]
        fn soft_threshold_is_odd_and_nonexpansive(x in -50.0f64..50.0, y in -50.0f64..50.0, l in 0.0f64..10.0) {
            let sx = soft_threshold(x, l).unwrap();
            prop_assert_eq!(soft_threshold(-x, l).unwrap(), -sx);
            let sy = soft_threshold(y, l).unwrap();
            prop_assert!((sx - sy).abs() <= (x - y).abs() + 1e-12);
        }
    }

    fn one_channel(x: Vec<f64>, rate: f64) -> Signal<f64> {
        Signal::new(vec![x], rate).unwrap()
    }

    #[test]
    fn constant_signal_unchanged() {
        let cfg = DenoiseConfig::default();
        for b in standard_bank::<f64>(16).unwrap() {
            let sig = one_channel(vec![9.80665; 512], 200.0);
            let out = denoise(&sig, &b, &cfg).unwrap();
            for (a, b) in out.channels()[0].iter().zip(&sig.channels()[0]) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn noisy_sine_error_drops() {
        let n = 1024;
        let rate = 200.0;
        let clean: Vec<f64> =
            (0..n).map(|i| (2.0 * std::f64::consts::PI * 2.0 * i as f64 / rate).sin()).collect();
        let noise = normals(n, 42);
        let noisy: Vec<f64> = clean.iter().zip(&noise).map(|(c, e)| c + 0.3 * e).collect();
        let b = WaveletBasis::by_name("db4").unwrap();
        let out = denoise_channel(&noisy, &b, &DenoiseConfig::default()).unwrap();
        let mse = |x: &[f64]| x.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        let before = mse(&noisy);
        let after = mse(&out);
        assert!(after < before, "{after} !< {before}");
        assert!(after < 0.5 * before);
    }

    #[test]
    fn white_noise_is_suppressed() {
        let b = WaveletBasis::by_name("db4").unwrap();
        for seed in 0..10 {
            let x = normals(1024, 100 + seed);
            let y = denoise_channel(&x, &b, &DenoiseConfig::default()).unwrap();
            assert!(variance(&y) < 0.25 * variance(&x), "seed {seed}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = vec![0.0; 64];
        x[3] = f64::NAN;
        let b = WaveletBasis::by_name("haar").unwrap();
        assert!(matches!(denoise_channel(&x, &b, &DenoiseConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn keeps_shape_and_rate() {
        let sig = Signal::new(vec![normals(700, 1), normals(700, 2)], 123.0).unwrap();
        let b = WaveletBasis::by_name("coif3").unwrap();
        let out = denoise(&sig, &b, &DenoiseConfig::default()).unwrap();
        assert_eq!(out.len(), 700);
        assert_eq!(out.channel_count(), 2);
        assert_eq!(out.sample_rate(), 123.0);
    }

    #[test]
    fn config_parses_from_text() {
        let cfg: DenoiseConfig =
            toml::from_str("levels = 5\nboundary_mode = \"periodic\"\nthreshold_rule = \"universal-hard\"").unwrap();
        assert_eq!(cfg.levels, 5);
        assert_eq!(cfg.boundary_mode, BoundaryMode::Periodic);
        assert_eq!(cfg.threshold_rule, ThresholdRule::UniversalHard);
        assert!(toml::from_str::<DenoiseConfig>("level = 5").is_err());
    }
}
