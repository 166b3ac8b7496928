use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{argmax, truncated_selection_weights, DecisionVector, Model};
use crate::signal::Signal;
use crate::wavelet::{denoise, max_level, standard_bank, DenoiseConfig, WaveletBasis};

/// A wavelet bank paired with the thresholding settings used for every member.
#[derive(Debug, Clone)]
pub struct BankDenoiser {
    pub bank: Vec<WaveletBasis<f64>>,
    pub config: DenoiseConfig,
}

impl BankDenoiser {
    pub fn new(bank_size: usize, config: DenoiseConfig) -> Result<Self> {
        Ok(Self { bank: standard_bank(bank_size)?, config })
    }

    pub fn len(&self) -> usize {
        self.bank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bank.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.bank.iter().map(|b| b.name.clone()).collect()
    }

    pub fn denoise_with(&self, window: &Signal<f64>, j: usize) -> Result<Signal<f64>> {
        let basis = self.bank.get(j).ok_or_else(|| Error::Input(format!("basis {j} outside a bank of {}", self.len())))?;
        denoise(window, basis, &self.config)
    }

    /// Every member's denoising of `window`, in bank order.
    pub fn denoise_all(&self, window: &Signal<f64>) -> Result<Vec<Signal<f64>>> {
        (0..self.len()).map(|j| self.denoise_with(window, j)).collect()
    }
}

/// `Σ_j w[j]·denoise(window, bank[j])`.
pub fn enhance_with_weights(window: &Signal<f64>, weights: &[f64], bank: &BankDenoiser) -> Result<Signal<f64>> {
    if weights.len() != bank.len() {
        return Err(Error::Structural(format!("{} mixing weights for a bank of {}", weights.len(), bank.len())));
    }
    let mut out = vec![vec![0.0; window.len()]; window.channel_count()];
    for (j, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let d = bank.denoise_with(window, j)?;
        for (o, c) in out.iter_mut().zip(d.channels()) {
            o.iter_mut().zip(c).for_each(|(a, b)| *a += w * b);
        }
    }
    Signal::new(out, window.sample_rate())
}

/// Soft mixture with weights from the truncated normalization of `y_hat`.
pub fn enhance_soft(window: &Signal<f64>, y_hat: &DecisionVector, bank: &BankDenoiser, epsilon: f64) -> Result<Signal<f64>> {
    if y_hat.len() != bank.len() {
        return Err(Error::Structural(format!("decision of length {} for a bank of {}", y_hat.len(), bank.len())));
    }
    let (w, _) = truncated_selection_weights(y_hat, epsilon)?;
    enhance_with_weights(window, &w, bank)
}

/// Index chosen by the classifier.
pub fn select(window: &Signal<f64>, model: &Model) -> Result<usize> {
    Ok(model.decide(window)?.argmax())
}

/// Denoises with the classifier's top choice; ties go to the lowest index.
pub fn enhance_hard(window: &Signal<f64>, model: &Model, bank: &BankDenoiser) -> Result<(Signal<f64>, usize)> {
    if model.categories() != bank.len() {
        return Err(Error::Structural(format!("model has {} categories, bank has {}", model.categories(), bank.len())));
    }
    let j = select(window, model)?;
    Ok((bank.denoise_with(window, j)?, j))
}

/// Start offsets covering `len` samples with windows of `window_len`: back to
/// back, plus one final window flush with the end when `len` is not a
/// multiple of the window.
pub fn window_starts(len: usize, window_len: usize) -> Result<Vec<usize>> {
    if window_len == 0 || len < window_len {
        return Err(Error::Input(format!("signal of {len} samples is shorter than one window of {window_len}")));
    }
    let mut starts: Vec<usize> = (0..=(len - window_len)).step_by(window_len).collect();
    if starts.last().is_some_and(|&s| s + window_len < len) {
        starts.push(len - window_len);
    }
    Ok(starts)
}

/// Per-window choice on a long signal, with the window start offsets.
pub fn select_stream(signal: &Signal<f64>, model: &Model, window_len: usize) -> Result<Vec<(usize, usize)>> {
    window_starts(signal.len(), window_len)?
        .par_iter()
        .map(|&s| Ok((s, select(&signal.window(s, window_len)?, model)?)))
        .collect()
}

/// Enhances a long signal window by window. Each window is denoised with its
/// selected basis, or with the truncated mixture when `soft_epsilon` is given
/// (relative to the largest activation). Where the final window overlaps its
/// predecessor only the samples it adds are taken from it.
pub fn enhance_stream(
    signal: &Signal<f64>,
    model: &Model,
    bank: &BankDenoiser,
    window_len: usize,
    soft_epsilon: Option<f64>,
) -> Result<(Signal<f64>, Vec<(usize, usize)>)> {
    if model.categories() != bank.len() {
        return Err(Error::Structural(format!("model has {} categories, bank has {}", model.categories(), bank.len())));
    }
    let starts = window_starts(signal.len(), window_len)?;
    let parts = starts
        .par_iter()
        .map(|&s| {
            let w = signal.window(s, window_len)?;
            let y = model.decide(&w)?;
            let out = match soft_epsilon {
                Some(eps) => {
                    let peak = y.values().iter().copied().fold(0.0, f64::max);
                    enhance_soft(&w, &y, bank, eps * peak)?
                }
                None => bank.denoise_with(&w, y.argmax())?,
            };
            Ok((s, y.argmax(), out))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut chans = vec![vec![0.0; signal.len()]; signal.channel_count()];
    let mut filled = 0;
    for (s, _, out) in &parts {
        for (dst, src) in chans.iter_mut().zip(out.channels()) {
            dst[filled..s + window_len].copy_from_slice(&src[filled - s..]);
        }
        filled = s + window_len;
    }
    let picks = parts.iter().map(|(s, j, _)| (*s, *j)).collect();
    Ok((Signal::new(chans, signal.sample_rate())?, picks))
}

/// Best bank member against a clean reference, with every member's MSE.
pub fn oracle_selection(noisy: &Signal<f64>, clean: &Signal<f64>, bank: &BankDenoiser) -> Result<(usize, Vec<f64>)> {
    let mses = (0..bank.len())
        .map(|j| bank.denoise_with(noisy, j)?.mse(clean))
        .collect::<Result<Vec<f64>>>()?;
    let neg: Vec<f64> = mses.iter().map(|m| -m).collect();
    Ok((argmax(&neg), mses))
}

/// Enhances a long stationary capture: the classifier votes on consecutive
/// windows, and the winning basis denoises the whole capture at the deepest
/// feasible level.
pub fn static_enhance(capture: &Signal<f64>, model: &Model, bank: &BankDenoiser, window_len: usize) -> Result<(Signal<f64>, usize)> {
    if capture.len() < window_len {
        return Err(Error::Input(format!("capture of {} samples is shorter than one window", capture.len())));
    }
    let starts: Vec<usize> = (0..=(capture.len() - window_len)).step_by(window_len).collect();
    let picks = starts
        .par_iter()
        .map(|&s| select(&capture.window(s, window_len)?, model))
        .collect::<Result<Vec<usize>>>()?;
    let mut votes = vec![0usize; bank.len()];
    picks.iter().for_each(|&j| votes[j] += 1);
    let votes_f: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
    let j = argmax(&votes_f);
    let deep = BankDenoiser {
        bank: vec![bank.bank[j].clone()],
        config: DenoiseConfig { levels: max_level(capture.len()), ..bank.config },
    };
    Ok((deep.denoise_with(capture, 0)?, j))
}
