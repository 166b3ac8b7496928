use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csvio::{read_labels, read_signal, read_table, read_trajectory, write_labels, write_signal, write_table, write_trajectory, LabelRow};
use super::read_to_string;
use crate::error::{Error, Result};
use crate::imu::{derive_seed, static_capture, Dataset, MotionClass, Recording, SimConfig, WindowLabel};
use crate::signal::Signal;

pub const MANIFEST: &str = "manifest.toml";
pub const LABELS: &str = "labels.csv";
pub const WINDOWS: &str = "windows.csv";
pub const STATIC: &str = "static.csv";
pub const DATASET_FORMAT: u32 = 1;

const WINDOW_HEADER: [&str; 3] = ["window_id", "recording", "offset"];

/// Seed stream of the stationary capture, disjoint from the recordings.
pub const STATIC_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingEntry {
    pub dir: String,
    pub class: MotionClass,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub seed: u64,
    pub windows: usize,
    pub window_len: usize,
    /// Name of the stationary capture file, when one was written.
    pub static_capture: Option<String>,
    pub simulator: SimConfig,
    pub recordings: Vec<RecordingEntry>,
}

/// Noisy stationary capture belonging to a dataset seed.
pub fn dataset_static_capture(config: &SimConfig, seed: u64) -> Result<Signal<f64>> {
    static_capture(config, derive_seed(seed, STATIC_STREAM))
}

/// Writes `dir/manifest.toml`, `labels.csv`, `windows.csv`, one
/// `recordings/rec-NNNN/` directory per recording holding `signals.csv`,
/// `clean.csv` and `truth.csv`, and optionally the stationary capture.
pub fn write_dataset(dir: &Path, ds: &Dataset, static_signal: Option<&Signal<f64>>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(ds.recordings.len());
    for (r, rec) in ds.recordings.iter().enumerate() {
        let rel = format!("recordings/rec-{r:04}");
        let sub = dir.join(&rel);
        write_signal(&sub.join("signals.csv"), &rec.noisy)?;
        write_signal(&sub.join("clean.csv"), &rec.clean)?;
        write_trajectory(&sub.join("truth.csv"), &rec.truth)?;
        entries.push(RecordingEntry { dir: rel, class: rec.class, samples: rec.noisy.len() });
    }
    let labels: Vec<LabelRow> = ds
        .windows
        .iter()
        .enumerate()
        .map(|(i, w)| LabelRow { window_id: i, d_att: w.d_att, d_pos: w.d_pos })
        .collect();
    write_labels(&dir.join(LABELS), &labels)?;
    let rows: Vec<[f64; 3]> =
        ds.windows.iter().enumerate().map(|(i, w)| [i as f64, w.recording as f64, w.offset as f64]).collect();
    write_table(&dir.join(WINDOWS), &WINDOW_HEADER, rows.iter().map(|r| r.as_slice()))?;
    if let Some(s) = static_signal {
        write_signal(&dir.join(STATIC), s)?;
    }
    let manifest = Manifest {
        format: DATASET_FORMAT,
        seed: ds.seed,
        windows: ds.len(),
        window_len: ds.window_len(),
        static_capture: static_signal.map(|_| STATIC.to_string()),
        simulator: ds.config.clone(),
        recordings: entries,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))?;
    std::fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = read_to_string(&dir.join(MANIFEST))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| Error::Config(format!("manifest: {}", e.message().trim())))?;
    if m.format != DATASET_FORMAT {
        return Err(Error::Config(format!("dataset format {} is not supported (expected {DATASET_FORMAT})", m.format)));
    }
    Ok(m)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let m = read_manifest(dir)?;
    let mut recordings = Vec::with_capacity(m.recordings.len());
    for e in &m.recordings {
        let sub = dir.join(&e.dir);
        let noisy = read_signal(&sub.join("signals.csv"))?;
        let clean = read_signal(&sub.join("clean.csv"))?;
        let truth = read_trajectory(&sub.join("truth.csv"))?;
        if noisy.len() != e.samples || clean.len() != e.samples || truth.len() != e.samples {
            return Err(Error::Input(format!("{}: expected {} samples in every file", sub.display(), e.samples)));
        }
        recordings.push(Recording { class: e.class, truth, clean, noisy });
    }
    let labels = read_labels(&dir.join(LABELS))?;
    let index = read_table(&dir.join(WINDOWS), &WINDOW_HEADER)?;
    if labels.len() != m.windows || index.len() != m.windows {
        return Err(Error::Input(format!("dataset lists {} windows but the label files disagree", m.windows)));
    }
    let mut windows = Vec::with_capacity(m.windows);
    for (i, (l, w)) in labels.iter().zip(&index).enumerate() {
        let (rec, offset) = (w[1] as usize, w[2] as usize);
        if l.window_id != i || w[0] as usize != i || rec >= recordings.len() || offset + m.window_len > recordings[rec].noisy.len() {
            return Err(Error::Input(format!("window {i} is inconsistent with the recordings")));
        }
        windows.push(WindowLabel { recording: rec, offset, d_att: l.d_att, d_pos: l.d_pos });
    }
    Ok(Dataset { config: m.simulator, seed: m.seed, recordings, windows })
}

/// The dataset's stationary capture: read from disk when present, otherwise
/// regenerated from the manifest.
pub fn read_static_capture(dir: &Path) -> Result<Signal<f64>> {
    let m = read_manifest(dir)?;
    match &m.static_capture {
        Some(name) => read_signal(&dir.join(name)),
        None => dataset_static_capture(&m.simulator, m.seed),
    }
}
