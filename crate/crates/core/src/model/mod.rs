//! Selection network: a residual 1-D convolutional feature extractor, the
//! sigmoid category classifier and the guidance head that predicts attitude
//! and displacement changes from an enhanced window.

pub mod crm;
mod net;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::signal::{Signal, IMU_CHANNELS};
pub use crm::{
    classify, fsm_alignment_score, gram, normalized_gram, r_encode, r_encode_node, r_sparse, renyi2_entropy_node,
    renyi_entropy, truncated_selection_node, truncated_selection_weights, CategoryMatrix, DecisionVector,
    ENTROPY_FLOOR,
};
pub use net::Bound;
pub(crate) use crm::argmax;

/// Per-channel gain applied before the first convolution (accelerometer
/// channels first).
pub const INPUT_SCALE: [f64; IMU_CHANNELS] = [0.1, 0.1, 0.1, 1.0, 1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    /// No nonlinearity; the network becomes linear in its input.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    pub feature_dim: usize,
    pub channels: usize,
    pub blocks: usize,
    pub head_channels: usize,
    pub head_blocks: usize,
    pub stem_kernel: usize,
    pub stem_stride: usize,
    pub min_window: usize,
    pub activation: Activation,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            feature_dim: 64,
            channels: 32,
            blocks: 4,
            head_channels: 16,
            head_blocks: 2,
            stem_kernel: 7,
            stem_stride: 4,
            min_window: 512,
            activation: Activation::Relu,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("feature_dim", self.feature_dim),
            ("channels", self.channels),
            ("head_channels", self.head_channels),
            ("stem_kernel", self.stem_kernel),
            ("stem_stride", self.stem_stride),
            ("min_window", self.min_window),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("model.{name} must be positive")));
        }
        if self.min_window < self.stem_kernel {
            return Err(Error::Config("model.min_window is shorter than the stem kernel".into()));
        }
        Ok(())
    }

    /// Parameter names and shapes in storage order.
    pub fn layout(&self, categories: usize) -> Vec<(String, Vec<usize>)> {
        let (f, fh, k) = (self.channels, self.head_channels, self.stem_kernel);
        let mut out = vec![("fx.stem".to_string(), vec![f, IMU_CHANNELS, k])];
        for b in 0..self.blocks {
            out.push((format!("fx.block{b}.conv1"), vec![f, f, 3]));
            out.push((format!("fx.block{b}.conv2"), vec![f, f, 3]));
        }
        out.push(("fx.proj".into(), vec![self.feature_dim, f, 1]));
        out.push(("crm.W".into(), vec![self.feature_dim, categories]));
        out.push(("head.stem".into(), vec![fh, IMU_CHANNELS, k]));
        for b in 0..self.head_blocks {
            out.push((format!("head.block{b}.conv1"), vec![fh, fh, 3]));
            out.push((format!("head.block{b}.conv2"), vec![fh, fh, 3]));
        }
        out.push(("head.readout_att".into(), vec![fh, 3]));
        out.push(("head.readout_disp".into(), vec![fh, 3]));
        out
    }

    /// Stable 64-bit digest of the architecture and its parameter layout.
    pub fn hash(&self, categories: usize) -> u64 {
        let mut h = Sha256::new();
        h.update(b"wdsel-arch-1;");
        h.update(format!("{:?};C={categories};", self.activation).as_bytes());
        h.update(format!("stride={};min={};", self.stem_stride, self.min_window).as_bytes());
        for (name, shape) in self.layout(categories) {
            h.update(format!("{name}:{shape:?};").as_bytes());
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Named trainable parameters plus the architecture they instantiate.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: ArchConfig,
    categories: usize,
    names: Vec<String>,
    params: Vec<Tensor>,
}

impl Model {
    /// Random initialization from `seed`.
    pub fn init(arch: ArchConfig, categories: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        for (name, shape) in arch.layout(categories) {
            let fan_in: usize = shape[1..].iter().product();
            let mut std = (2.0 / fan_in as f64).sqrt();
            if name.ends_with("conv2") {
                // residual branches start close to the identity
                std *= 0.1;
            } else if name == "crm.W" {
                std = 1.0 / (shape[0] as f64).sqrt();
            } else if name.starts_with("head.readout") {
                std = 0.1 / (shape[0] as f64).sqrt();
            }
            let dist = Normal::new(0.0, std).expect("positive std");
            let n = shape.iter().product();
            let values = (0..n).map(|_| dist.sample(&mut rng)).collect();
            params.push(Tensor::new(shape, values)?.with_grad());
            names.push(name);
        }
        Ok(Self { arch, categories, names, params })
    }

    /// All parameters set to zero.
    pub fn zeros(arch: ArchConfig, categories: usize) -> Result<Self> {
        arch.validate()?;
        let (names, params) =
            arch.layout(categories).into_iter().map(|(n, s)| (n, Tensor::zeros(s).with_grad())).unzip();
        Ok(Self { arch, categories, names, params })
    }

    /// Rebuilds a model from stored tensors, checking names and shapes
    /// against the layout.
    pub fn from_parts(arch: ArchConfig, categories: usize, parts: Vec<(String, Tensor)>) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout(categories);
        if layout.len() != parts.len() {
            return Err(Error::ArchitectureMismatch(format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                parts.len()
            )));
        }
        let mut names = Vec::new();
        let mut params = Vec::new();
        for ((name, shape), (pname, t)) in layout.into_iter().zip(parts) {
            if name != pname || shape != t.shape() {
                return Err(Error::ArchitectureMismatch(format!(
                    "expected {name} {shape:?}, found {pname} {:?}",
                    t.shape()
                )));
            }
            names.push(name);
            params.push(t.with_grad());
        }
        Ok(Self { arch, categories, names, params })
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn architecture_hash(&self) -> u64 {
        self.arch.hash(self.categories)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &mut self.params[i])
    }

    pub(crate) fn w_index(&self) -> usize {
        self.names.iter().position(|n| n == "crm.W").expect("layout always has crm.W")
    }

    pub fn category_matrix(&self) -> CategoryMatrix {
        CategoryMatrix::from_tensor(&self.params[self.w_index()]).expect("crm.W is a finite d x C tensor")
    }

    /// Creates graph leaves for every parameter.
    pub fn bind(&self, g: &mut Graph) -> Result<Bound> {
        let vars = self.params.iter().map(|t| g.tensor(t)).collect::<Result<Vec<Var>>>()?;
        Ok(Bound::new(self, vars))
    }

    /// Scaled `[6, len]` input values of an inertial window.
    pub fn input_values(&self, window: &Signal<f64>) -> Result<Vec<f64>> {
        window.require_imu()?;
        if window.len() < self.arch.min_window {
            return Err(Error::Input(format!(
                "window of {} samples is shorter than the minimum {}",
                window.len(),
                self.arch.min_window
            )));
        }
        Ok(scaled_rows(window))
    }

    /// Feature vector `h` of dimension `feature_dim`.
    pub fn extract_features(&self, window: &Signal<f64>) -> Result<Vec<f64>> {
        let x = self.input_values(window)?;
        let mut g = Graph::new();
        let b = self.bind(&mut g)?;
        let xv = g.constant(vec![IMU_CHANNELS, window.len()], x)?;
        let h = b.features(&mut g, xv)?;
        Ok(g.value(h).to_vec())
    }

    /// Classifier output for a window.
    pub fn decide(&self, window: &Signal<f64>) -> Result<DecisionVector> {
        let h = self.extract_features(window)?;
        classify(&h, &self.category_matrix())
    }

    /// Predicted `(attitude change [rad], displacement [m])`.
    pub fn guidance_predict(&self, window: &Signal<f64>) -> Result<([f64; 3], [f64; 3])> {
        let x = self.input_values(window)?;
        let mut g = Graph::new();
        let b = self.bind(&mut g)?;
        let xv = g.constant(vec![IMU_CHANNELS, window.len()], x)?;
        let (att, disp) = b.guidance(&mut g, xv)?;
        let a = g.value(att);
        let d = g.value(disp);
        Ok(([a[0], a[1], a[2]], [d[0], d[1], d[2]]))
    }
}

pub(crate) fn scaled_rows(window: &Signal<f64>) -> Vec<f64> {
    window
        .channels()
        .iter()
        .zip(INPUT_SCALE)
        .flat_map(|(c, s)| c.iter().map(move |v| v * s))
        .collect()
}
