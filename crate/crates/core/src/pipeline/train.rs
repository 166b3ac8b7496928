use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::enhance::BankDenoiser;
use super::{EpochStats, TrainConfig, TrainReport};
use crate::autodiff::{Graph, Sgd};
use crate::error::{Error, Result};
use crate::imu::Sample;
use crate::model::{
    argmax, fsm_alignment_score, r_encode_node, renyi_entropy, scaled_rows, truncated_selection_node, Model,
    ENTROPY_FLOOR,
};
use crate::nav::Vec3;
use crate::signal::IMU_CHANNELS;

/// Encoding penalty reported while the dictionary is collapsed.
pub const R_ENCODE_CLAMP: f64 = 1e6;

/// A training window with its bank denoisings precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedWindow {
    pub len: usize,
    /// Scaled noisy input, `[6, len]` row-major.
    pub input: Vec<f64>,
    /// Scaled denoisings, `[C, 6·len]` row-major.
    pub denoised: Vec<f64>,
    pub d_att: Vec3<f64>,
    pub d_pos: Vec3<f64>,
    /// Bank member closest to the clean window.
    pub oracle: usize,
}

pub fn prepare(sample: &Sample, bank: &BankDenoiser) -> Result<PreparedWindow> {
    let versions = bank.denoise_all(&sample.noisy)?;
    let mses = versions.iter().map(|v| v.mse(&sample.clean)).collect::<Result<Vec<f64>>>()?;
    let neg: Vec<f64> = mses.iter().map(|m| -m).collect();
    Ok(PreparedWindow {
        len: sample.noisy.len(),
        input: scaled_rows(&sample.noisy),
        denoised: versions.iter().flat_map(scaled_rows).collect(),
        d_att: sample.d_att,
        d_pos: sample.d_pos,
        oracle: argmax(&neg),
    })
}

pub fn prepare_all(samples: &[Sample], bank: &BankDenoiser) -> Result<Vec<PreparedWindow>> {
    samples.par_iter().map(|s| prepare(s, bank)).collect()
}

/// Loss components of one step, averaged over the batch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLosses {
    pub total: f64,
    pub l_attitude: f64,
    pub l_disp: f64,
    pub r_sparse: f64,
    pub r_encode: f64,
}

struct SampleOutcome {
    grads: Vec<Vec<f64>>,
    l_att: f64,
    l_disp: f64,
    r_sparse: f64,
    top1: f64,
    selected: usize,
    h: Vec<f64>,
}

fn sample_pass(model: &Model, w: &PreparedWindow, cfg: &TrainConfig, batch: usize) -> Result<SampleOutcome> {
    let (lambda_s, _) = cfg.effective_lambdas();
    let c = model.categories();
    let mut g = Graph::new();
    let b = model.bind(&mut g)?;
    let x = g.constant(vec![IMU_CHANNELS, w.len], w.input.clone())?;
    let h = b.features(&mut g, x)?;
    let y = b.classify(&mut g, h)?;
    let y_vals = g.value(y).to_vec();
    let y_max = y_vals.iter().copied().fold(0.0, f64::max);
    let weights = truncated_selection_node(&mut g, y, cfg.epsilon_truncation * y_max)?;
    let row = g.reshape(weights, vec![1, c])?;
    let bank = g.constant(vec![c, IMU_CHANNELS * w.len], w.denoised.clone())?;
    let mixed = g.matmul(row, bank)?;
    let enhanced = g.reshape(mixed, vec![IMU_CHANNELS, w.len])?;
    let (att, disp) = b.guidance(&mut g, enhanced)?;
    let la = g.constant(vec![3], w.d_att.to_vec())?;
    let ld = g.constant(vec![3], w.d_pos.to_vec())?;
    let ea = g.sub(att, la)?;
    let ea = g.square(ea)?;
    let l_att = g.mean(ea)?;
    let ed = g.sub(disp, ld)?;
    let ed = g.square(ed)?;
    let l_disp = g.mean(ed)?;
    let r_sparse = g.l1_norm(y)?;
    let wd = g.scale(l_disp, cfg.lambda_disp)?;
    let ws = g.scale(r_sparse, lambda_s)?;
    let task = g.add(l_att, wd)?;
    let loss = g.add(task, ws)?;
    let loss = g.scale(loss, 1.0 / batch as f64)?;
    let (va, vd, vs) = (g.scalar(l_att), g.scalar(l_disp), g.scalar(r_sparse));
    for (name, v) in [("attitude", va), ("displacement", vd), ("sparse", vs)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss { component: name });
        }
    }
    g.backward(loss)?;
    let grads = b.vars().iter().map(|&v| g.grad(v)).collect();
    let total: f64 = y_vals.iter().sum();
    Ok(SampleOutcome {
        grads,
        l_att: va,
        l_disp: vd,
        r_sparse: vs,
        top1: y_vals[argmax(&y_vals)] / total,
        selected: argmax(&y_vals),
        h: g.value(h).to_vec(),
    })
}

/// Model, optimizer state and configuration of a training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: Model,
    pub config: TrainConfig,
    optimizer: Sgd,
}

struct StepDetail {
    losses: StepLosses,
    outcomes: Vec<(f64, usize, Vec<f64>)>,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let model = Model::init(config.model, config.bank_size, config.seed)?;
        Ok(Self::from_model(model, config))
    }

    pub fn from_model(model: Model, config: TrainConfig) -> Self {
        Self { model, config, optimizer: Sgd::new(config.learning_rate, config.momentum) }
    }

    fn step_detail(&mut self, batch: &[&PreparedWindow]) -> Result<StepDetail> {
        let (losses, mut grads, outcomes) = batch_gradients(&self.model, batch, &self.config)?;
        clip(&mut grads, self.config.grad_clip);
        for (p, g) in self.model.params_mut().iter_mut().zip(&grads) {
            p.accumulate_grad(g)?;
        }
        self.optimizer.step(self.model.params_mut())?;
        Ok(StepDetail { losses, outcomes: outcomes.into_iter().map(|o| (o.top1, o.selected, o.h)).collect() })
    }

    pub fn step(&mut self, batch: &[&PreparedWindow]) -> Result<StepLosses> {
        Ok(self.step_detail(batch)?.losses)
    }

    /// One pass over `data` in a seeded shuffled order.
    pub fn epoch(&mut self, data: &[PreparedWindow], epoch: usize) -> Result<EpochStats> {
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(1 + epoch as u64);
        order.shuffle(&mut rng);
        let mut sums = StepLosses::default();
        let (mut top1, mut correct, mut fsm) = (0.0, 0usize, 0.0);
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&PreparedWindow> = chunk.iter().map(|&i| &data[i]).collect();
            let w_before = self.model.category_matrix();
            let d = self.step_detail(&batch)?;
            let k = batch.len() as f64;
            sums.total += k * d.losses.total;
            sums.l_attitude += k * d.losses.l_attitude;
            sums.l_disp += k * d.losses.l_disp;
            sums.r_sparse += k * d.losses.r_sparse;
            sums.r_encode += k * d.losses.r_encode;
            for (win, (t, sel, h)) in batch.iter().zip(&d.outcomes) {
                top1 += t;
                if *sel == win.oracle {
                    correct += 1;
                    fsm += fsm_alignment_score(h, &w_before, *sel)?;
                }
            }
        }
        let n = data.len().max(1) as f64;
        Ok(EpochStats {
            epoch,
            total_loss: sums.total / n,
            l_attitude: sums.l_attitude / n,
            l_disp: sums.l_disp / n,
            r_sparse: sums.r_sparse / n,
            r_encode: sums.r_encode / n,
            s2: entropy_or_zero(&self.model),
            top1_mass: top1 / n,
            fsm_score: if correct > 0 { fsm / correct as f64 } else { 0.0 },
            selection_accuracy: correct as f64 / n,
        })
    }
}

/// `1 / S_2(W)`, adding `lambda·∂/∂W` to the accumulated gradients. A
/// collapsed dictionary reports the clamp value and contributes nothing.
fn encode_penalty(model: &Model, lambda: f64, grads: &mut [Vec<f64>]) -> Result<f64> {
    let wi = model.w_index();
    match renyi_entropy(&model.category_matrix(), 2.0) {
        Ok(s) if s > ENTROPY_FLOOR => {
            if lambda > 0.0 {
                let mut g = Graph::new();
                let w = g.tensor(&model.params()[wi])?;
                let r = r_encode_node(&mut g, w)?;
                let r = g.scale(r, lambda)?;
                g.backward(r)?;
                grads[wi].iter_mut().zip(g.grad(w)).for_each(|(a, b)| *a += b);
            }
            Ok(1.0 / s)
        }
        Ok(_) | Err(Error::DegenerateMatrix { .. }) => Ok(R_ENCODE_CLAMP),
        Err(e) => Err(e),
    }
}

fn batch_gradients(
    model: &Model,
    batch: &[&PreparedWindow],
    cfg: &TrainConfig,
) -> Result<(StepLosses, Vec<Vec<f64>>, Vec<SampleOutcome>)> {
    if batch.is_empty() {
        return Err(Error::Input("training step needs a non-empty batch".into()));
    }
    if let Some(w) = batch.iter().find(|w| w.d_att.iter().chain(&w.d_pos).any(|v| !v.is_finite())) {
        return Err(Error::Input(format!("non-finite label on a window of {} samples", w.len)));
    }
    let n = batch.len();
    let outcomes = batch.par_iter().map(|w| sample_pass(model, w, cfg, n)).collect::<Result<Vec<_>>>()?;
    let mut grads: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
    for o in &outcomes {
        for (acc, g) in grads.iter_mut().zip(&o.grads) {
            acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
    }
    let (lambda_s, lambda_e) = cfg.effective_lambdas();
    let r_encode = encode_penalty(model, lambda_e, &mut grads)?;
    let mean = |f: &dyn Fn(&SampleOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n as f64;
    let (l_att, l_disp, r_sparse) = (mean(&|o| o.l_att), mean(&|o| o.l_disp), mean(&|o| o.r_sparse));
    let total = l_att + cfg.lambda_disp * l_disp + lambda_s * r_sparse + lambda_e * r_encode;
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss { component: "total" });
    }
    Ok((StepLosses { total, l_attitude: l_att, l_disp, r_sparse, r_encode }, grads, outcomes))
}

/// Batch loss and its gradient for every parameter tensor, in model order,
/// before clipping.
pub fn loss_and_gradients(model: &Model, batch: &[&PreparedWindow], config: &TrainConfig) -> Result<(StepLosses, Vec<Vec<f64>>)> {
    let (losses, grads, _) = batch_gradients(model, batch, config)?;
    Ok((losses, grads))
}

fn entropy_or_zero(model: &Model) -> f64 {
    renyi_entropy(&model.category_matrix(), 2.0).unwrap_or(0.0)
}

fn clip(grads: &mut [Vec<f64>], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
}

/// One optimizer step on `batch` with a fresh optimizer state.
pub fn training_step(batch: &[&PreparedWindow], model: &mut Model, config: &TrainConfig) -> Result<StepLosses> {
    let mut t = Trainer::from_model(model.clone(), *config);
    let losses = t.step(batch)?;
    *model = t.model;
    Ok(losses)
}

/// Trains from a seeded initialization on prepared windows.
pub fn train_prepared(data: &[PreparedWindow], config: &TrainConfig) -> Result<(Model, TrainReport)> {
    let mut t = Trainer::new(*config)?;
    let mut report = TrainReport { epochs: Vec::new(), initial_s2: entropy_or_zero(&t.model) };
    if config.epochs > 0 && data.is_empty() {
        return Err(Error::Input("training needs at least one window".into()));
    }
    for e in 0..config.epochs {
        report.epochs.push(t.epoch(data, e + 1)?);
    }
    Ok((t.model, report))
}

/// Prepares `samples` against the configured bank and trains.
pub fn train(samples: &[Sample], config: &TrainConfig) -> Result<(Model, TrainReport)> {
    config.validate()?;
    let bank = BankDenoiser::new(config.bank_size, config.denoise)?;
    let data = prepare_all(samples, &bank)?;
    train_prepared(&data, config)
}
