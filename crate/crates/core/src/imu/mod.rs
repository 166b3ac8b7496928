//! Synthetic inertial data: reference trajectories, their ideal body-frame
//! measurements, sensor noise and windowed datasets with guidance labels.

mod dataset;
mod noise;
mod spline;
mod trajectory;

pub use dataset::{
    derive_seed, make_dataset, simulate_recording, static_capture, window_labels, Dataset, Recording, Sample,
    SimConfig, WindowLabel,
};
pub use noise::{corrupt_channel, inject_noise, quantize, NoiseModel, GM_BI_PER_STD};
pub use trajectory::{generate_trajectory, ideal_imu, GroundTruth, MotionClass, TrajectorySpec};
