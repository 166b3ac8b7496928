//! Files on disk: experiment configuration, CSV interchange, dataset
//! directories and model checkpoints.

mod checkpoint;
mod config;
mod csvio;
mod dataset_dir;

use std::path::Path;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta,
    CHECKPOINT_VERSION, MAGIC,
};
pub use config::{EvalConfig, ExperimentConfig, PathsConfig, RESOLVED_CONFIG};
pub use csvio::{
    read_labels, read_signal, read_table, read_trajectory, write_labels, write_signal, write_table, write_trajectory,
    LabelRow, LABEL_HEADER, SIGNAL_HEADER, TRAJECTORY_HEADER,
};
pub use dataset_dir::{
    dataset_static_capture, read_dataset, read_manifest, read_static_capture, write_dataset, Manifest, RecordingEntry,
    DATASET_FORMAT, LABELS, MANIFEST, STATIC, STATIC_STREAM, WINDOWS,
};

use crate::error::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(std::fs::read_to_string(path)?)
}
