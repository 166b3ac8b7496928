//! Candidate wavelet bank, Mallat decomposition and threshold denoising.

mod denoise;
mod dwt;
pub(crate) mod tables;

pub use denoise::{
    denoise, denoise_channel, estimate_noise_sigma, soft_threshold, universal_threshold,
    DenoiseConfig, ThresholdRule,
};
pub use dwt::{coefficient_len, dwt, idwt, max_level, BoundaryMode, Decomposition};
pub use tables::TABLE_VERSION;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bank sizes the selector can be trained with.
pub const BANK_SIZES: [usize; 3] = [5, 10, 16];

/// An orthogonal wavelet: analysis and synthesis filter pairs.
///
/// `dec_hi[n] = (-1)^n dec_lo[L-1-n]`; the synthesis filters are the time
/// reversals of the analysis filters.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis<T> {
    pub name: String,
    pub dec_lo: Vec<T>,
    pub dec_hi: Vec<T>,
    pub rec_lo: Vec<T>,
    pub rec_hi: Vec<T>,
    pub vanishing_moments: usize,
    pub support_length: usize,
}

impl<T: Real> WaveletBasis<T> {
    /// Builds the four filters from a low-pass analysis filter.
    pub fn from_scaling_filter(name: &str, dec_lo: Vec<T>, vanishing_moments: usize) -> Self {
        let len = dec_lo.len();
        let dec_hi: Vec<T> = (0..len)
            .map(|n| {
                let v = dec_lo[len - 1 - n];
                if n % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let rec_lo = dec_lo.iter().rev().copied().collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        Self {
            name: name.to_string(),
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
            vanishing_moments,
            support_length: len,
        }
    }

    /// Looks a basis up in the full 16-entry bank.
    pub fn by_name(name: &str) -> Result<Self> {
        tables::BANK
            .iter()
            .find(|e| e.name == name)
            .map(entry_to_basis)
            .ok_or_else(|| Error::Config(format!("unknown wavelet `{name}`")))
    }

    pub fn filter_len(&self) -> usize {
        self.dec_lo.len()
    }
}

/// Largest deviations of a basis from the defining filter identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResiduals {
    /// `|sum dec_lo - sqrt 2|`
    pub dc_gain: f64,
    /// `|sum dec_lo^2 - 1|`
    pub energy: f64,
    /// `max_k |sum_n dec_lo[n] dec_lo[n + 2k]|` over `k != 0`.
    pub shift_orthogonality: f64,
    /// `max_n |dec_hi[n] - (-1)^n dec_lo[L-1-n]|`
    pub mirror: f64,
    /// `max_p |sum_n dec_hi[n] x_n^p|` over `p < vanishing_moments`, with
    /// `x_n = n / (L - 1)`.
    pub moments: f64,
}

impl<T: Real> WaveletBasis<T> {
    pub fn residuals(&self) -> FilterResiduals {
        let lo: Vec<f64> = self.dec_lo.iter().map(|v| v.as_f64()).collect();
        let hi: Vec<f64> = self.dec_hi.iter().map(|v| v.as_f64()).collect();
        let len = lo.len();
        let shift_orthogonality = (1..len.div_ceil(2))
            .map(|k| (0..len - 2 * k).map(|n| lo[n] * lo[n + 2 * k]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        let mirror = (0..len)
            .map(|n| (hi[n] - if n % 2 == 0 { lo[len - 1 - n] } else { -lo[len - 1 - n] }).abs())
            .fold(0.0, f64::max);
        let scale = (len - 1).max(1) as f64;
        let moments = (0..self.vanishing_moments)
            .map(|p| hi.iter().enumerate().map(|(n, h)| h * (n as f64 / scale).powi(p as i32)).sum::<f64>().abs())
            .fold(0.0, f64::max);
        FilterResiduals {
            dc_gain: (lo.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs(),
            energy: (lo.iter().map(|v| v * v).sum::<f64>() - 1.0).abs(),
            shift_orthogonality,
            mirror,
            moments,
        }
    }
}

fn entry_to_basis<T: Real>(e: &tables::FilterEntry) -> WaveletBasis<T> {
    let lo = e.dec_lo.iter().map(|&c| T::lit(c)).collect();
    WaveletBasis::from_scaling_filter(e.name, lo, e.vanishing_moments)
}

/// Names of the full bank in its fixed order.
pub fn bank_names() -> impl Iterator<Item = &'static str> {
    tables::BANK.iter().map(|e| e.name)
}

/// Returns the first `count` bases of the fixed ordered bank
/// `haar, db2..db6, sym2..sym6, coif1..coif5`.
pub fn standard_bank<T: Real>(count: usize) -> Result<Vec<WaveletBasis<T>>> {
    if !BANK_SIZES.contains(&count) {
        return Err(Error::Config(format!(
            "unsupported bank size {count}; allowed values are 5, 10, 16"
        )));
    }
    Ok(tables::BANK[..count].iter().map(entry_to_basis).collect())
}
