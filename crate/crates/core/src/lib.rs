pub mod allan;
pub mod autodiff;
pub mod error;
pub mod experiment;
pub mod imu;
pub mod metrics;
pub mod model;
pub mod nav;
pub mod persist;
pub mod pipeline;
pub mod scalar;
pub mod signal;
pub mod wavelet;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Signal64 = signal::Signal<f64>;
pub type Basis64 = wavelet::WaveletBasis<f64>;
pub type Decomposition64 = wavelet::Decomposition<f64>;
pub type AllanCurve64 = allan::AllanCurve<f64>;
pub type NoiseCoefficients64 = allan::NoiseCoefficients<f64>;
pub type Quaternion64 = nav::Quaternion<f64>;
pub type Pose64 = nav::Pose<f64>;
