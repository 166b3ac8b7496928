//! Experiment harness: trains the selector arms on a dataset and compares
//! raw signals, a fixed-wavelet baseline and the trained selectors on the
//! stationary capture, the held-out windows and the classifier itself.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allan::{allan_deviation, extract_coefficients, extract_in_regions, reduction_percent, NoiseCoefficients, Percent};
use crate::error::{Error, Result};
use crate::imu::{Dataset, GroundTruth, Sample};
use crate::metrics::{align_then_score_with, guidance_errors, silhouette_score};
use crate::model::{renyi_entropy, Model};
use crate::nav::{gravity, strapdown, window_attitude_change, window_displacement, Quaternion, Vec3};
use crate::persist::{CheckpointMeta, EvalConfig, ExperimentConfig};
use crate::pipeline::{enhance_hard, enhance_soft, oracle_selection, prepare_all, static_enhance, train_prepared, BankDenoiser, TrainConfig, TrainReport};
use crate::signal::{Signal, CHANNEL_NAMES};
use crate::wavelet::{denoise, max_level, standard_bank, DenoiseConfig, WaveletBasis};

pub const RAW: &str = "raw";
pub const ARM_CRM: &str = "selector";
pub const ARM_NO_CRM: &str = "selector-no-crm";

/// A trained selector with the settings it was trained under.
#[derive(Debug, Clone)]
pub struct Arm {
    pub label: String,
    pub model: Model,
    pub meta: CheckpointMeta,
    pub report: Option<TrainReport>,
}

pub fn arm_meta(train: &TrainConfig, window_len: usize, crm_enabled: bool) -> CheckpointMeta {
    CheckpointMeta {
        arch: train.model,
        denoise: train.denoise,
        epsilon_truncation: train.epsilon_truncation,
        window_len,
        crm_enabled,
    }
}

/// Trains the configured selector and, when the ablation is enabled, a twin
/// with the regularizers off on the same seed and data.
pub fn train_arms(ds: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<Arm>> {
    cfg.validate()?;
    let (train_ids, _) = ds.split();
    let samples = ds.samples(&train_ids)?;
    let bank = BankDenoiser::new(cfg.train.bank_size, cfg.train.denoise)?;
    let prepared = prepare_all(&samples, &bank)?;
    let mut settings = vec![(ARM_CRM, cfg.train)];
    if cfg.evaluation.crm_ablation {
        settings.push((ARM_NO_CRM, TrainConfig { crm_enabled: false, ..cfg.train }));
    }
    if !cfg.train.crm_enabled {
        settings = vec![(ARM_NO_CRM, cfg.train)];
    }
    settings
        .into_iter()
        .map(|(label, tc)| {
            let (model, report) = train_prepared(&prepared, &tc)?;
            let meta = arm_meta(&tc, ds.window_len(), tc.crm_enabled);
            Ok(Arm { label: label.into(), model, meta, report: Some(report) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticRow {
    pub method: String,
    pub channel: String,
    pub qn: f64,
    pub rw: f64,
    pub bi: f64,
    pub qn_reduction_pct: Option<f64>,
    pub rw_reduction_pct: Option<f64>,
    pub bi_reduction_pct: Option<f64>,
    /// Wavelet used on the whole capture; empty for the raw signal.
    pub wavelet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window_id: usize,
    pub method: String,
    pub wavelet: String,
    pub attitude_mae_deg: f64,
    pub position_mae_m: f64,
    /// `None` when the reference path is too degenerate to align.
    pub trajectory_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicRow {
    pub method: String,
    pub attitude_mae_deg: f64,
    pub position_mae_m: f64,
    pub trajectory_error: Option<f64>,
    pub attitude_reduction_pct: Option<f64>,
    pub position_reduction_pct: Option<f64>,
    pub trajectory_reduction_pct: Option<f64>,
    pub windows: usize,
    pub aligned_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub method: String,
    pub within_tolerance: usize,
    pub windows: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub arm: String,
    pub crm_enabled: bool,
    pub s2: f64,
    pub top1_mass: f64,
    pub attitude_mae_deg: f64,
    pub position_mae_m: f64,
    pub silhouette: Option<f64>,
    pub silhouette_excluded: usize,
}

/// Every table the harness produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub test_windows: usize,
    pub static_rows: Vec<StaticRow>,
    pub dynamic: Vec<DynamicRow>,
    pub selection: Vec<SelectionRow>,
    pub ablation: Vec<AblationRow>,
    pub windows: Vec<WindowRow>,
}

fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

/// Strapdown solution of a window started from the reference state.
pub fn reconstruct(signal: &Signal<f64>, q0: Quaternion<f64>, v0: Vec3<f64>, p0: Vec3<f64>) -> Result<GroundTruth> {
    let poses = strapdown(signal, q0, v0, p0, gravity())?;
    Ok(GroundTruth {
        sample_rate: signal.sample_rate(),
        timestamps: poses.iter().map(|p| p.t).collect(),
        positions: poses.iter().map(|p| p.p).collect(),
        quaternions: poses.iter().map(|p| p.q).collect(),
    })
}

/// Attitude, displacement and trajectory errors of one enhanced window.
fn score_window(enhanced: &Signal<f64>, s: &Sample, resample: usize) -> Result<(f64, f64, Option<f64>)> {
    let q0 = s.truth.quaternions[0];
    let d_att = window_attitude_change(enhanced, q0)?.delta;
    let d_pos = window_displacement(enhanced, q0, s.v0)?;
    let e = guidance_errors(&[(d_att, d_pos)], &[(s.d_att, s.d_pos)])?;
    let rec = reconstruct(enhanced, q0, s.v0, s.truth.positions[0])?;
    let traj = match align_then_score_with(&rec.positions, &s.truth.positions, resample) {
        Ok(score) => Some(score.normalized),
        Err(Error::Alignment(_)) => None,
        Err(e) => return Err(e),
    };
    Ok((e.attitude_mae_deg, e.position_mae_m, traj))
}

fn static_rows(
    method: &str,
    wavelet: &str,
    signal: &Signal<f64>,
    raw: &[NoiseCoefficients<f64>],
    eval: &EvalConfig,
) -> Result<Vec<StaticRow>> {
    let coeffs: Vec<NoiseCoefficients<f64>> = signal
        .channels()
        .par_iter()
        .zip(raw)
        .map(|(c, r)| {
            let curve = allan_deviation(c, signal.sample_rate(), eval.allan_points_per_decade)?;
            Ok(if method == RAW { extract_coefficients(&curve)? } else { extract_in_regions(&curve, &r.diagnostics) })
        })
        .collect::<Result<_>>()?;
    Ok(coeffs
        .iter()
        .zip(raw)
        .zip(CHANNEL_NAMES)
        .map(|((k, r), ch)| StaticRow {
            method: method.into(),
            channel: ch.into(),
            qn: k.qn,
            rw: k.rw,
            bi: k.bi,
            qn_reduction_pct: reduction_percent(r.qn, k.qn),
            rw_reduction_pct: reduction_percent(r.rw, k.rw),
            bi_reduction_pct: reduction_percent(r.bi, k.bi),
            wavelet: wavelet.into(),
        })
        .collect())
}

/// Raw, baseline and selector coefficients of a stationary capture.
///
/// Enhanced captures are read on the averaging-time regions found on the raw
/// capture.
pub fn static_comparison(capture: &Signal<f64>, arms: &[Arm], eval: &EvalConfig) -> Result<Vec<StaticRow>> {
    let raw: Vec<NoiseCoefficients<f64>> = capture
        .channels()
        .par_iter()
        .map(|c| extract_coefficients(&allan_deviation(c, capture.sample_rate(), eval.allan_points_per_decade)?))
        .collect::<Result<_>>()?;
    let mut rows = static_rows(RAW, "", capture, &raw, eval)?;
    let deep = |d: DenoiseConfig| DenoiseConfig { levels: max_level(capture.len()), ..d };
    let base_cfg = arms.first().map_or(DenoiseConfig::default(), |a| a.meta.denoise);
    let baseline = WaveletBasis::by_name(&eval.baseline_wavelet)?;
    let enhanced = denoise(capture, &baseline, &deep(base_cfg))?;
    rows.extend(static_rows(&eval.baseline_wavelet, &eval.baseline_wavelet, &enhanced, &raw, eval)?);
    for arm in arms {
        let bank = BankDenoiser::new(arm.model.categories(), arm.meta.denoise)?;
        let (enhanced, j) = static_enhance(capture, &arm.model, &bank, arm.meta.window_len)?;
        rows.extend(static_rows(&arm.label, &bank.bank[j].name, &enhanced, &raw, eval)?);
    }
    Ok(rows)
}

struct WindowEval {
    rows: Vec<WindowRow>,
    /// Per method: whether the window's denoising is within tolerance of the
    /// best bank member.
    within: Vec<bool>,
}

fn evaluate_window(s: &Sample, arms: &[Arm], banks: &[BankDenoiser], baseline: &BankDenoiser, eval: &EvalConfig) -> Result<WindowEval> {
    let mut rows = Vec::new();
    let mut within = Vec::new();
    let (_, mses) = oracle_selection(&s.noisy, &s.clean, &banks[0])?;
    let best = mses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut push = |method: &str, wavelet: &str, enhanced: &Signal<f64>| -> Result<()> {
        let (a, p, t) = score_window(enhanced, s, eval.resample_points)?;
        rows.push(WindowRow {
            window_id: s.id,
            method: method.into(),
            wavelet: wavelet.into(),
            attitude_mae_deg: a,
            position_mae_m: p,
            trajectory_error: t,
        });
        Ok(())
    };
    push(RAW, "", &s.noisy)?;
    let base = baseline.denoise_with(&s.noisy, 0)?;
    push(&eval.baseline_wavelet, &eval.baseline_wavelet, &base)?;
    within.push(base.mse(&s.clean)? <= eval.selection_tolerance * best);
    for (arm, bank) in arms.iter().zip(banks) {
        let (enhanced, j) = enhance_hard(&s.noisy, &arm.model, bank)?;
        push(&arm.label, &bank.bank[j].name, &enhanced)?;
        within.push(mses[j] <= eval.selection_tolerance * best);
    }
    Ok(WindowEval { rows, within })
}

fn dynamic_summary(rows: &[WindowRow], methods: &[String]) -> Vec<DynamicRow> {
    let mut out: Vec<DynamicRow> = methods
        .iter()
        .map(|m| {
            let mine: Vec<&WindowRow> = rows.iter().filter(|r| &r.method == m).collect();
            let mut att: Vec<f64> = mine.iter().map(|r| r.attitude_mae_deg).collect();
            let mut pos: Vec<f64> = mine.iter().map(|r| r.position_mae_m).collect();
            let mut traj: Vec<f64> = mine.iter().filter_map(|r| r.trajectory_error).collect();
            DynamicRow {
                method: m.clone(),
                attitude_mae_deg: median(&mut att).unwrap_or(0.0),
                position_mae_m: median(&mut pos).unwrap_or(0.0),
                trajectory_error: median(&mut traj),
                attitude_reduction_pct: None,
                position_reduction_pct: None,
                trajectory_reduction_pct: None,
                windows: mine.len(),
                aligned_windows: traj.len(),
            }
        })
        .collect();
    let raw = out[0].clone();
    for r in out.iter_mut() {
        r.attitude_reduction_pct = reduction_percent(raw.attitude_mae_deg, r.attitude_mae_deg);
        r.position_reduction_pct = reduction_percent(raw.position_mae_m, r.position_mae_m);
        r.trajectory_reduction_pct = match (raw.trajectory_error, r.trajectory_error) {
            (Some(a), Some(b)) => reduction_percent(a, b),
            _ => None,
        };
    }
    out
}

/// Classifier-level statistics of one arm on the held-out windows.
pub fn ablation_row(arm: &Arm, samples: &[Sample]) -> Result<AblationRow> {
    let bank = BankDenoiser::new(arm.model.categories(), arm.meta.denoise)?;
    let per: Vec<(Vec<f64>, usize, f64, (Vec3<f64>, Vec3<f64>))> = samples
        .par_iter()
        .map(|s| {
            let h = arm.model.extract_features(&s.noisy)?;
            let y = crate::model::classify(&h, &arm.model.category_matrix())?;
            let enhanced = enhance_soft(&s.noisy, &y, &bank, arm.meta.epsilon_truncation * max_value(y.values()))?;
            let pred = arm.model.guidance_predict(&enhanced)?;
            Ok((h, y.argmax(), y.top1_mass(), pred))
        })
        .collect::<Result<_>>()?;
    let n = per.len().max(1) as f64;
    let preds: Vec<(Vec3<f64>, Vec3<f64>)> = per.iter().map(|p| p.3).collect();
    let labels: Vec<(Vec3<f64>, Vec3<f64>)> = samples.iter().map(|s| (s.d_att, s.d_pos)).collect();
    let err = guidance_errors(&preds, &labels)?;
    let features: Vec<Vec<f64>> = per.iter().map(|p| p.0.clone()).collect();
    let selected: Vec<usize> = per.iter().map(|p| p.1).collect();
    let sil = silhouette_score(&features, &selected)?;
    Ok(AblationRow {
        arm: arm.label.clone(),
        crm_enabled: arm.meta.crm_enabled,
        s2: renyi_entropy(&arm.model.category_matrix(), 2.0).unwrap_or(0.0),
        top1_mass: per.iter().map(|p| p.2).sum::<f64>() / n,
        attitude_mae_deg: err.attitude_mae_deg,
        position_mae_m: err.position_mae_m,
        silhouette: sil.score,
        silhouette_excluded: sil.excluded.len(),
    })
}

fn max_value(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// Runs every comparison on the held-out windows and the stationary capture.
pub fn evaluate(ds: &Dataset, capture: &Signal<f64>, arms: &[Arm], eval: &EvalConfig) -> Result<EvaluationReport> {
    eval.validate()?;
    if arms.is_empty() {
        return Err(Error::Input("evaluation needs at least one trained selector".into()));
    }
    let (_, test_ids) = ds.split();
    let samples = ds.samples(&test_ids)?;
    let banks = arms
        .iter()
        .map(|a| BankDenoiser::new(a.model.categories(), a.meta.denoise))
        .collect::<Result<Vec<_>>>()?;
    let baseline = BankDenoiser { bank: vec![WaveletBasis::by_name(&eval.baseline_wavelet)?], config: banks[0].config };
    let per = samples
        .par_iter()
        .map(|s| evaluate_window(s, arms, &banks, &baseline, eval))
        .collect::<Result<Vec<_>>>()?;

    let mut methods = vec![RAW.to_string(), eval.baseline_wavelet.clone()];
    methods.extend(arms.iter().map(|a| a.label.clone()));
    let windows: Vec<WindowRow> = per.iter().flat_map(|w| w.rows.clone()).collect();
    let dynamic = dynamic_summary(&windows, &methods);
    let selection = methods[1..]
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let hits = per.iter().filter(|w| w.within[k]).count();
            SelectionRow { method: m.clone(), within_tolerance: hits, windows: per.len(), fraction: hits as f64 / per.len().max(1) as f64 }
        })
        .collect();
    let ablation = arms.iter().map(|a| ablation_row(a, &samples)).collect::<Result<Vec<_>>>()?;
    let static_rows = static_comparison(capture, arms, eval)?;
    Ok(EvaluationReport { seed: ds.seed, test_windows: samples.len(), static_rows, dynamic, selection, ablation, windows })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| x.to_string())
}

impl EvaluationReport {
    pub fn static_csv(&self) -> String {
        let mut s = String::from("method,channel,wavelet,qn,rw,bi,qn_reduction_pct,rw_reduction_pct,bi_reduction_pct\n");
        for r in &self.static_rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method,
                r.channel,
                r.wavelet,
                r.qn,
                r.rw,
                r.bi,
                Percent(r.qn_reduction_pct),
                Percent(r.rw_reduction_pct),
                Percent(r.bi_reduction_pct)
            ));
        }
        s
    }

    pub fn dynamic_csv(&self) -> String {
        let mut s = String::from(
            "method,attitude_mae_deg,position_mae_m,trajectory_error,attitude_reduction_pct,position_reduction_pct,trajectory_reduction_pct,windows,aligned_windows\n",
        );
        for r in &self.dynamic {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method,
                r.attitude_mae_deg,
                r.position_mae_m,
                opt(r.trajectory_error),
                Percent(r.attitude_reduction_pct),
                Percent(r.position_reduction_pct),
                Percent(r.trajectory_reduction_pct),
                r.windows,
                r.aligned_windows
            ));
        }
        s
    }

    pub fn selection_csv(&self) -> String {
        let mut s = String::from("method,within_tolerance,windows,fraction\n");
        for r in &self.selection {
            s.push_str(&format!("{},{},{},{}\n", r.method, r.within_tolerance, r.windows, r.fraction));
        }
        s
    }

    pub fn ablation_csv(&self) -> String {
        let mut s = String::from("arm,crm_enabled,s2,top1_mass,attitude_mae_deg,position_mae_m,silhouette,silhouette_excluded\n");
        for r in &self.ablation {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.arm,
                r.crm_enabled,
                r.s2,
                r.top1_mass,
                r.attitude_mae_deg,
                r.position_mae_m,
                opt(r.silhouette),
                r.silhouette_excluded
            ));
        }
        s
    }

    pub fn windows_csv(&self) -> String {
        let mut s = String::from("window_id,method,wavelet,attitude_mae_deg,position_mae_m,trajectory_error\n");
        for r in &self.windows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.window_id,
                r.method,
                r.wavelet,
                r.attitude_mae_deg,
                r.position_mae_m,
                opt(r.trajectory_error)
            ));
        }
        s
    }

    /// Writes `static.csv`, `dynamic.csv`, `selection.csv`, `ablation.csv`,
    /// `windows.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("static.csv"), self.static_csv())?;
        std::fs::write(dir.join("dynamic.csv"), self.dynamic_csv())?;
        std::fs::write(dir.join("selection.csv"), self.selection_csv())?;
        std::fs::write(dir.join("ablation.csv"), self.ablation_csv())?;
        std::fs::write(dir.join("windows.csv"), self.windows_csv())?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Structural(format!("report: {e}")))?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        Ok(())
    }
}

/// Feature vectors of each window with the classifier's choice and the
/// denoising oracle, as CSV.
pub fn features_csv(model: &Model, samples: &[Sample], denoise: DenoiseConfig) -> Result<String> {
    let bank = BankDenoiser::new(model.categories(), denoise)?;
    let rows = samples
        .par_iter()
        .map(|s| {
            let h = model.extract_features(&s.noisy)?;
            let y = crate::model::classify(&h, &model.category_matrix())?;
            let (oracle, _) = oracle_selection(&s.noisy, &s.clean, &bank)?;
            Ok((s.id, y.argmax(), oracle, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = model.arch().feature_dim;
    let mut out = String::from("window_id,selected,oracle");
    (0..dim).for_each(|i| out.push_str(&format!(",h{i}")));
    out.push('\n');
    for (id, sel, oracle, h) in rows {
        out.push_str(&format!("{id},{},{}", bank.bank[sel].name, bank.bank[oracle].name));
        h.iter().for_each(|v| out.push_str(&format!(",{v}")));
        out.push('\n');
    }
    Ok(out)
}

/// Filter coefficients of the first `bank_size` bank members as CSV.
pub fn bank_csv(bank_size: usize) -> Result<String> {
    let bank = standard_bank::<f64>(bank_size)?;
    let mut out = String::from("wavelet,index,vanishing_moments,filter,k,value\n");
    for (i, b) in bank.iter().enumerate() {
        for (fname, f) in [("dec_lo", &b.dec_lo), ("dec_hi", &b.dec_hi), ("rec_lo", &b.rec_lo), ("rec_hi", &b.rec_hi)] {
            for (k, v) in f.iter().enumerate() {
                out.push_str(&format!("{},{i},{},{fname},{k},{v}\n", b.name, b.vanishing_moments));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imu::{make_dataset, SimConfig};
    use crate::model::ArchConfig;
    use crate::persist::dataset_static_capture;

    fn tiny() -> (Dataset, Signal<f64>, ExperimentConfig) {
        let mut cfg = ExperimentConfig::default();
        cfg.simulator = SimConfig { recording_duration: 6.0, static_samples: 1 << 15, ..SimConfig::default() };
        cfg.train.epochs = 1;
        cfg.train.model = ArchConfig { channels: 8, blocks: 1, feature_dim: 16, head_channels: 8, head_blocks: 1, ..ArchConfig::default() };
        let ds = make_dataset(16, 512, &cfg.simulator, 5).unwrap();
        let cap = dataset_static_capture(&ds.config, ds.seed).unwrap();
        (ds, cap, cfg)
    }

    #[test]
    fn evaluation_is_deterministic_and_complete() {
        let (ds, cap, cfg) = tiny();
        let arms = train_arms(&ds, &cfg).unwrap();
        assert_eq!(arms.len(), 2);
        let a = evaluate(&ds, &cap, &arms, &cfg.evaluation).unwrap();
        let b = evaluate(&ds, &cap, &train_arms(&ds, &cfg).unwrap(), &cfg.evaluation).unwrap();
        assert_eq!(a.static_csv(), b.static_csv());
        assert_eq!(a.windows_csv(), b.windows_csv());
        assert_eq!(a.dynamic.len(), 4);
        assert_eq!(a.static_rows.len(), 24);
        assert_eq!(a.windows.len(), 4 * a.test_windows);
        assert!(a.static_rows.iter().filter(|r| r.method == RAW).all(|r| r.rw_reduction_pct == Some(0.0)));
        let dir = tempfile::tempdir().unwrap();
        a.write(dir.path()).unwrap();
        let json: EvaluationReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json.selection, a.selection);
    }

    #[test]
    fn bank_export_lists_every_filter() {
        let csv = bank_csv(5).unwrap();
        let total: usize = standard_bank::<f64>(5).unwrap().iter().map(|b| 4 * b.filter_len()).sum();
        assert_eq!(csv.lines().count(), total + 1);
        assert!(csv.starts_with("wavelet,index,vanishing_moments,filter,k,value\nhaar,0,1,dec_lo,0,"));
    }

    #[test]
    fn reconstruct_of_ideal_signal_follows_truth() {
        let (ds, _, _) = tiny();
        let s = ds.sample(2).unwrap();
        let rec = reconstruct(&s.clean, s.truth.quaternions[0], s.v0, s.truth.positions[0]).unwrap();
        let end = rec.positions.len() - 1;
        let err: f64 = (0..3).map(|i| (rec.positions[end][i] - s.truth.positions[end][i]).powi(2)).sum::<f64>().sqrt();
        assert!(err < 0.05, "{err}");
    }
}
