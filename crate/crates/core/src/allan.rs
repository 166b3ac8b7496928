//! Overlapping Allan deviation and noise-coefficient extraction.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::Signal;

/// Shortest channel accepted by [`allan_deviation`].
pub const MIN_SAMPLES: usize = 128;
/// Allan-plot readout factor between the flat-region minimum and BI.
pub const BI_READOUT: f64 = 0.664;
/// Largest local slope magnitude counted as flat.
pub const FLAT_SLOPE: f64 = 0.15;
/// Tolerance around the -1 and -1/2 reference slopes.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Consecutive points needed to call a stretch of the curve a region.
pub const MIN_REGION_POINTS: usize = 3;
/// Points whose cluster count `n / m` falls below this are too noisy for
/// region detection.
pub const MIN_CLUSTERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanCurve<T> {
    pub taus: Vec<T>,
    pub adev: Vec<T>,
    pub rate: T,
    pub n_samples: usize,
}

impl<T: Real> AllanCurve<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,adev\n");
        for (t, a) in self.taus.iter().zip(&self.adev) {
            s.push_str(&format!("{},{}\n", t.as_f64(), a.as_f64()));
        }
        s
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { adev: self.adev.iter().map(|&a| a * c.abs()).collect(), ..self.clone() }
    }
}

/// Where a coefficient was read from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFit {
    pub absent: bool,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    /// RMS residual of the fit in log10 units.
    pub residual: f64,
}

impl RegionFit {
    pub const ABSENT: Self = Self { absent: true, tau_min: 0.0, tau_max: 0.0, points: 0, residual: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub qn: RegionFit,
    pub rw: RegionFit,
    pub bi: RegionFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCoefficients<T> {
    pub qn: T,
    /// ARW for gyroscopes, VRW for accelerometers.
    pub rw: T,
    pub bi: T,
    pub diagnostics: FitDiagnostics,
}

impl<T: Real> NoiseCoefficients<T> {
    pub const CSV_HEADER: &'static str = "qn,rw,bi,qn_absent,rw_absent,bi_absent,qn_tau_min,qn_tau_max,rw_tau_min,rw_tau_max,bi_tau_min,bi_tau_max";

    pub fn csv_row(&self) -> String {
        let d = &self.diagnostics;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.qn.as_f64(),
            self.rw.as_f64(),
            self.bi.as_f64(),
            d.qn.absent,
            d.rw.absent,
            d.bi.absent,
            d.qn.tau_min,
            d.qn.tau_max,
            d.rw.tau_min,
            d.rw.tau_max,
            d.bi.tau_min,
            d.bi.tau_max
        )
    }
}

/// Cluster sizes `1..=(n-1)/2`, log-spaced.
fn cluster_sizes(n: usize, points_per_decade: usize) -> Vec<usize> {
    let m_max = (n - 1) / 2;
    let decades = (m_max as f64).log10();
    let steps = (decades * points_per_decade as f64).floor() as usize;
    let mut ms: Vec<usize> =
        (0..=steps).map(|i| 10f64.powf(i as f64 / points_per_decade as f64).round() as usize).collect();
    ms.push(m_max);
    ms.retain(|&m| m >= 1 && m <= m_max);
    ms.dedup();
    ms
}

/// Overlapping Allan deviation of one channel sampled at `rate` Hz.
pub fn allan_deviation<T: Real>(channel: &[T], rate: T, points_per_decade: usize) -> Result<AllanCurve<T>> {
    let n = channel.len();
    if n < MIN_SAMPLES {
        return Err(Error::Input(format!("Allan analysis needs at least {MIN_SAMPLES} samples, got {n}")));
    }
    if !(rate > T::zero()) || points_per_decade == 0 {
        return Err(Error::Input("Allan analysis needs a positive rate and points_per_decade".into()));
    }
    let dt = T::one() / rate;
    let mut theta = Vec::with_capacity(n + 1);
    theta.push(T::zero());
    let mut acc = T::zero();
    for &x in channel {
        acc = acc + x * dt;
        theta.push(acc);
    }
    let ms = cluster_sizes(n, points_per_decade);
    let two = T::lit(2.0);
    let (taus, adev) = ms
        .iter()
        .map(|&m| {
            let tau = T::from_usize_lossy(m) * dt;
            let terms = theta.len() - 2 * m;
            let sum: T = (0..terms)
                .map(|k| {
                    let d = theta[k + 2 * m] - two * theta[k + m] + theta[k];
                    d * d
                })
                .sum();
            (tau, (sum / (two * T::from_usize_lossy(terms) * tau * tau)).sqrt())
        })
        .unzip();
    Ok(AllanCurve { taus, adev, rate, n_samples: n })
}

/// Local log-log slope at each point (central difference, one-sided at ends).
fn local_slopes(lt: &[f64], ls: &[f64]) -> Vec<f64> {
    let n = lt.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (ls[b] - ls[a]) / (lt[b] - lt[a])
        })
        .collect()
}

/// Maximal runs of consecutive indices where `pred` holds.
fn runs(len: usize, pred: impl Fn(usize) -> bool) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for i in 0..=len {
        match (i < len && pred(i), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    out.retain(|r| r.len() >= MIN_REGION_POINTS);
    out
}

/// Fixed-slope fit `log σ = c + slope·log τ`; returns `10^c` and its fit record.
fn fixed_slope_fit(lt: &[f64], ls: &[f64], taus: &[f64], region: std::ops::Range<usize>, slope: f64) -> (f64, RegionFit) {
    let vals: Vec<f64> = region.clone().map(|i| ls[i] - slope * lt[i]).collect();
    let c = vals.iter().sum::<f64>() / vals.len() as f64;
    let residual = (vals.iter().map(|v| (v - c).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    let fit = RegionFit {
        absent: false,
        tau_min: taus[region.start],
        tau_max: taus[region.end - 1],
        points: region.len(),
        residual,
    };
    (10f64.powf(c), fit)
}

/// Reads QN, RW and BI off an Allan curve.
///
/// QN comes from the longest slope -1 stretch read at τ = 1 (σ = √3·QN/τ),
/// RW from the longest slope -1/2 stretch read at τ = 1 (σ = RW/√τ), and BI
/// is the smallest deviation over the flat stretches divided by 0.664. A
/// curve that is zero everywhere yields all coefficients absent.
pub fn extract_coefficients<T: Real>(curve: &AllanCurve<T>) -> Result<NoiseCoefficients<T>> {
    let absent = NoiseCoefficients {
        qn: T::zero(),
        rw: T::zero(),
        bi: T::zero(),
        diagnostics: FitDiagnostics { qn: RegionFit::ABSENT, rw: RegionFit::ABSENT, bi: RegionFit::ABSENT },
    };
    if curve.adev.iter().all(|a| *a == T::zero()) {
        return Ok(absent);
    }
    let usable: Vec<usize> = (0..curve.taus.len())
        .filter(|&i| {
            let m = (curve.taus[i] * curve.rate).as_f64().round() as usize;
            curve.adev[i] > T::zero() && curve.n_samples >= MIN_CLUSTERS * m.max(1)
        })
        .collect();
    let taus: Vec<f64> = usable.iter().map(|&i| curve.taus[i].as_f64()).collect();
    let adev: Vec<f64> = usable.iter().map(|&i| curve.adev[i].as_f64()).collect();
    if taus.len() < 2 || (taus[taus.len() - 1] / taus[0]).log10() < 2.0 - 1e-9 {
        return Err(Error::Analysis(
            "Allan curve spans less than two decades of averaging time; use a longer capture".into(),
        ));
    }
    let lt: Vec<f64> = taus.iter().map(|t| t.log10()).collect();
    let ls: Vec<f64> = adev.iter().map(|a| a.log10()).collect();
    let slopes = local_slopes(&lt, &ls);
    let longest = |target: f64, tol: f64| runs(slopes.len(), |i| (slopes[i] - target).abs() < tol).into_iter().max_by_key(|r| (r.len(), std::cmp::Reverse(r.start)));

    let mut out = absent;
    if let Some(r) = longest(-1.0, SLOPE_TOLERANCE) {
        let (c, fit) = fixed_slope_fit(&lt, &ls, &taus, r, -1.0);
        out.qn = T::lit(c / 3f64.sqrt());
        out.diagnostics.qn = fit;
    }
    if let Some(r) = longest(-0.5, SLOPE_TOLERANCE) {
        let (c, fit) = fixed_slope_fit(&lt, &ls, &taus, r, -0.5);
        out.rw = T::lit(c);
        out.diagnostics.rw = fit;
    }
    let flat = runs(slopes.len(), |i| slopes[i].abs() < FLAT_SLOPE);
    if !flat.is_empty() {
        let idx: Vec<usize> = flat.iter().flat_map(|r| r.clone()).collect();
        let min = idx.iter().map(|&i| adev[i]).fold(f64::INFINITY, f64::min);
        let mean_log = idx.iter().map(|&i| ls[i]).sum::<f64>() / idx.len() as f64;
        let residual = (idx.iter().map(|&i| (ls[i] - mean_log).powi(2)).sum::<f64>() / idx.len() as f64).sqrt();
        out.bi = T::lit(min / BI_READOUT);
        out.diagnostics.bi = RegionFit {
            absent: false,
            tau_min: taus[idx[0]],
            tau_max: taus[idx[idx.len() - 1]],
            points: idx.len(),
            residual,
        };
    }
    let d = &out.diagnostics;
    if d.qn.absent && d.rw.absent && d.bi.absent {
        return Err(Error::Analysis(
            "no quantization, random-walk or flat region found on the Allan curve; use a longer capture".into(),
        ));
    }
    Ok(out)
}

/// Allan curves and coefficients of every channel, analyzed in parallel.
pub fn analyze_signal<T: Real>(
    signal: &Signal<T>,
    points_per_decade: usize,
) -> Result<Vec<(AllanCurve<T>, NoiseCoefficients<T>)>> {
    signal
        .channels()
        .par_iter()
        .map(|c| {
            let curve = allan_deviation(c, signal.sample_rate(), points_per_decade)?;
            let coeffs = extract_coefficients(&curve)?;
            Ok((curve, coeffs))
        })
        .collect()
}

/// Reads coefficients off `curve` inside the regions recorded in `reference`,
/// with the same fixed slopes and readouts as [`extract_coefficients`].
///
/// Used to compare an enhanced capture against its raw counterpart: the
/// enhanced curve is measured on the averaging times where the raw curve
/// showed each noise term, whatever its own shape. A reference region with no
/// usable point on `curve` stays absent.
pub fn extract_in_regions<T: Real>(curve: &AllanCurve<T>, reference: &FitDiagnostics) -> NoiseCoefficients<T> {
    let mut out = NoiseCoefficients {
        qn: T::zero(),
        rw: T::zero(),
        bi: T::zero(),
        diagnostics: FitDiagnostics { qn: RegionFit::ABSENT, rw: RegionFit::ABSENT, bi: RegionFit::ABSENT },
    };
    let inside = |r: &RegionFit| -> Vec<(f64, f64)> {
        if r.absent {
            return Vec::new();
        }
        curve
            .taus
            .iter()
            .zip(&curve.adev)
            .map(|(t, a)| (t.as_f64(), a.as_f64()))
            .filter(|(t, a)| *a > 0.0 && *t >= r.tau_min * (1.0 - 1e-9) && *t <= r.tau_max * (1.0 + 1e-9))
            .collect()
    };
    let fit = |pts: &[(f64, f64)], slope: f64| {
        let taus: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let lt: Vec<f64> = taus.iter().map(|t| t.log10()).collect();
        let ls: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
        fixed_slope_fit(&lt, &ls, &taus, 0..pts.len(), slope)
    };
    let qn = inside(&reference.qn);
    if !qn.is_empty() {
        let (c, f) = fit(&qn, -1.0);
        out.qn = T::lit(c / 3f64.sqrt());
        out.diagnostics.qn = f;
    }
    let rw = inside(&reference.rw);
    if !rw.is_empty() {
        let (c, f) = fit(&rw, -0.5);
        out.rw = T::lit(c);
        out.diagnostics.rw = f;
    }
    let bi = inside(&reference.bi);
    if !bi.is_empty() {
        let (_, f) = fit(&bi, 0.0);
        let min = bi.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        out.bi = T::lit(min / BI_READOUT);
        out.diagnostics.bi = f;
    }
    out
}

/// Percentage reduction `100·(raw − enhanced)/raw`; `None` when raw is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub qn: Option<f64>,
    pub rw: Option<f64>,
    pub bi: Option<f64>,
}

pub fn reduction_percent(raw: f64, enhanced: f64) -> Option<f64> {
    (raw != 0.0).then(|| 100.0 * (raw - enhanced) / raw)
}

pub fn compare_reports<T: Real>(raw: &NoiseCoefficients<T>, enhanced: &NoiseCoefficients<T>) -> Reduction {
    Reduction {
        qn: reduction_percent(raw.qn.as_f64(), enhanced.qn.as_f64()),
        rw: reduction_percent(raw.rw.as_f64(), enhanced.rw.as_f64()),
        bi: reduction_percent(raw.bi.as_f64(), enhanced.bi.as_f64()),
    }
}

/// Formats a reduction, printing `undefined` for a zero baseline.
pub struct Percent(pub Option<f64>);

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.2}"),
            None => f.write_str("undefined"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imu::{inject_noise, NoiseModel};
    use proptest::prelude::*;

    fn capture(model: NoiseModel, n: usize, seed: u64) -> Vec<f64> {
        let s = inject_noise(&Signal::zeros(6, n, 200.0).unwrap(), &model, &model, seed).unwrap();
        s.channel(3).to_vec()
    }

    #[test]
    fn too_short_is_input_error() {
        assert!(matches!(allan_deviation(&[0.0f64; 100], 100.0, 10), Err(Error::Input(m)) if m.contains("128")));
    }

    #[test]
    fn zero_channel_is_zero_and_absent() {
        let c = allan_deviation(&vec![0.0f64; 4096], 100.0, 10).unwrap();
        assert!(c.adev.iter().all(|&a| a == 0.0));
        let k = extract_coefficients(&c).unwrap();
        assert_eq!((k.qn, k.rw, k.bi), (0.0, 0.0, 0.0));
        assert!(k.diagnostics.qn.absent && k.diagnostics.rw.absent && k.diagnostics.bi.absent);
    }

    #[test]
    fn curve_invariants() {
        let x = capture(NoiseModel { white_noise_density: 0.01, ..Default::default() }, 5000, 1);
        let c = allan_deviation(&x, 200.0, 10).unwrap();
        assert!(c.taus.windows(2).all(|w| w[0] < w[1]));
        assert!(c.adev.iter().all(|&a| a >= 0.0));
        assert!(*c.taus.last().unwrap() <= 5000.0 / 400.0);
        assert!((c.taus[0] - 1.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn white_noise_slope_and_rw() {
        let n0 = 0.01;
        let x = capture(NoiseModel { white_noise_density: n0, ..Default::default() }, 200_000, 2);
        let c = allan_deviation(&x, 200.0, 10).unwrap();
        // slope over the decade starting at tau = 0.01 s
        let (i, j) = (2, 12);
        let slope = (c.adev[j] / c.adev[i]).log10() / (c.taus[j] / c.taus[i]).log10();
        assert!((slope + 0.5).abs() < 0.05, "{slope}");
        let k = extract_coefficients(&c).unwrap();
        assert!((k.rw / n0 - 1.0).abs() < 0.1, "{}", k.rw);
        assert!(k.diagnostics.qn.absent);
    }

    #[test]
    fn quantization_noise_law() {
        let q = 0.01;
        let dither = capture(NoiseModel { white_noise_density: 0.002, ..Default::default() }, 100_000, 3);
        let mut y = dither.clone();
        crate::imu::quantize(&mut y, q);
        let err: Vec<f64> = y.iter().zip(&dither).map(|(a, b)| a - b).collect();
        let c = allan_deviation(&err, 200.0, 10).unwrap();
        let slope = (c.adev[20] / c.adev[0]).log10() / (c.taus[20] / c.taus[0]).log10();
        assert!((slope + 1.0).abs() < 0.1, "{slope}");
        let expect = q / (2.0 * 3f64.sqrt() * 200.0);
        let k = extract_coefficients(&c).unwrap();
        assert!((k.qn / expect - 1.0).abs() < 0.15, "{} vs {expect}", k.qn);
    }

    #[test]
    fn gauss_markov_bias_readout() {
        let b = 0.005;
        let model = NoiseModel { bias_instability: b, bias_corr_time: 2.0, ..Default::default() };
        let x = capture(model, 400_000, 4);
        let k = extract_coefficients(&allan_deviation(&x, 200.0, 10).unwrap()).unwrap();
        assert!((k.bi / b - 1.0).abs() < 0.25, "{}", k.bi);
    }

    #[test]
    fn matched_regions_reproduce_own_fit() {
        let model = NoiseModel { white_noise_density: 0.01, bias_instability: 0.002, bias_corr_time: 5.0, ..Default::default() };
        let curve = allan_deviation(&capture(model, 200_000, 9), 200.0, 10).unwrap();
        let own = extract_coefficients(&curve).unwrap();
        let again = extract_in_regions(&curve, &own.diagnostics);
        for (a, b) in [(own.qn, again.qn), (own.rw, again.rw), (own.bi, again.bi)] {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-30));
        }
        let quieter = extract_in_regions(&curve.scaled(0.1), &own.diagnostics);
        assert!((quieter.rw / own.rw - 0.1).abs() < 1e-9);
        assert!(extract_in_regions(&curve, &FitDiagnostics { qn: RegionFit::ABSENT, rw: RegionFit::ABSENT, bi: RegionFit::ABSENT }).diagnostics.rw.absent);
    }

    #[test]
    fn overlapping_matches_non_overlapping_oracle() {
        let x = capture(NoiseModel { white_noise_density: 0.02, ..Default::default() }, 100_000, 5);
        let c = allan_deviation(&x, 200.0, 5).unwrap();
        for (tau, a) in c.taus.iter().zip(&c.adev) {
            let m = (tau * 200.0).round() as usize;
            if 100_000 / m < 50 {
                continue;
            }
            let means: Vec<f64> = x.chunks_exact(m).map(|ch| ch.iter().sum::<f64>() / m as f64).collect();
            let avar = means.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2.0 * (means.len() - 1) as f64);
            let ratio = a / avar.sqrt();
            assert!((0.8..=1.25).contains(&ratio), "tau {tau}: {ratio}");
        }
    }

    #[test]
    fn short_curve_is_analysis_error() {
        let x = capture(NoiseModel { white_noise_density: 0.02, ..Default::default() }, 500, 6);
        let c = allan_deviation(&x, 200.0, 10).unwrap();
        assert!(matches!(extract_coefficients(&c), Err(Error::Analysis(_))));
    }

    #[test]
    fn reductions() {
        let mk = |v: f64| NoiseCoefficients {
            qn: v,
            rw: v,
            bi: 0.0,
            diagnostics: FitDiagnostics { qn: RegionFit::ABSENT, rw: RegionFit::ABSENT, bi: RegionFit::ABSENT },
        };
        let r = compare_reports(&mk(1.21), &mk(0.06));
        assert!((r.qn.unwrap() - 95.04).abs() < 0.01);
        assert_eq!(r.bi, None);
        assert_eq!(Percent(r.bi).to_string(), "undefined");
        assert_eq!(compare_reports(&mk(2.0), &mk(2.0)).rw, Some(0.0));
    }

    #[test]
    fn extraction_is_deterministic_and_f32_agrees() {
        let x = capture(NoiseModel { white_noise_density: 0.01, ..Default::default() }, 20_000, 8);
        let c = allan_deviation(&x, 200.0, 10).unwrap();
        assert_eq!(extract_coefficients(&c).unwrap(), extract_coefficients(&c).unwrap());
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let cf = allan_deviation(&xf, 200.0f32, 10).unwrap();
        for (a, b) in c.adev.iter().zip(&cf.adev) {
            assert!((a - *b as f64).abs() < 1e-3 * a);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scale_equivariance(seed in 0u64..1000, scale in -50.0f64..50.0) {
            let x = capture(NoiseModel { white_noise_density: 0.01, ..Default::default() }, 2000, seed);
            let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let a = allan_deviation(&x, 200.0, 10).unwrap();
            let b = allan_deviation(&xs, 200.0, 10).unwrap();
            for (u, v) in a.adev.iter().zip(&b.adev) {
                prop_assert!((u * scale.abs() - v).abs() <= 1e-10 * (1.0 + v.abs()));
            }
        }
    }
}
