use serde::{Deserialize, Serialize};

use super::WaveletBasis;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Signal extension used at the window edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Half-sample symmetric reflection.
    #[default]
    Symmetric,
    /// Periodization; the transform is orthogonal.
    Periodic,
    /// Zero padding.
    Zero,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Self::Symmetric),
            "periodic" => Ok(Self::Periodic),
            "zero" => Ok(Self::Zero),
            other => Err(Error::Config(format!(
                "unknown boundary mode `{other}` (expected symmetric, periodic or zero)"
            ))),
        }
    }
}

/// Multi-level decomposition. `details[0]` is the finest level.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub approx: Vec<T>,
    pub details: Vec<Vec<T>>,
    pub levels: usize,
    pub original_length: usize,
    pub boundary_mode: BoundaryMode,
}

impl<T: Real> Decomposition<T> {
    /// All coefficients, approximation first.
    pub fn coefficients(&self) -> impl Iterator<Item = &T> {
        self.approx.iter().chain(self.details.iter().flatten())
    }
}

/// Length of one level's output for an input of length `n`.
pub fn coefficient_len(n: usize, filter_len: usize, mode: BoundaryMode) -> usize {
    match mode {
        BoundaryMode::Symmetric | BoundaryMode::Zero => (n + filter_len - 1) / 2,
        BoundaryMode::Periodic => n.div_ceil(2),
    }
}

/// Deepest level allowed for a signal of length `n` (`2^levels <= n`).
pub fn max_level(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n.ilog2() as usize
    }
}

fn level_lengths(n: usize, levels: usize, filter_len: usize, mode: BoundaryMode) -> Vec<usize> {
    let mut lens = Vec::with_capacity(levels + 1);
    lens.push(n);
    for _ in 0..levels {
        let prev = *lens.last().unwrap();
        lens.push(coefficient_len(prev, filter_len, mode));
    }
    lens
}

#[inline]
fn extend<T: Real>(x: &[T], idx: isize, mode: BoundaryMode) -> T {
    let n = x.len() as isize;
    match mode {
        BoundaryMode::Zero => {
            if (0..n).contains(&idx) {
                x[idx as usize]
            } else {
                T::zero()
            }
        }
        BoundaryMode::Symmetric => {
            let p = idx.rem_euclid(2 * n);
            x[if p < n { p } else { 2 * n - 1 - p } as usize]
        }
        BoundaryMode::Periodic => x[idx.rem_euclid(n) as usize],
    }
}

fn analyze_level<T: Real>(x: &[T], basis: &WaveletBasis<T>, mode: BoundaryMode) -> (Vec<T>, Vec<T>) {
    let f = basis.filter_len() as isize;
    let padded;
    let x = if mode == BoundaryMode::Periodic && x.len() % 2 == 1 {
        padded = x.iter().copied().chain(std::iter::once(x[x.len() - 1])).collect::<Vec<_>>();
        &padded[..]
    } else {
        x
    };
    let m = coefficient_len(x.len(), basis.filter_len(), mode);
    let mut approx = Vec::with_capacity(m);
    let mut detail = Vec::with_capacity(m);
    for i in 0..m {
        let start = 2 * i as isize + 2 - f;
        let mut a = T::zero();
        let mut d = T::zero();
        // Fast path when the whole support lies inside the signal.
        if start >= 0 && start + f <= x.len() as isize {
            let window = &x[start as usize..(start + f) as usize];
            for ((&v, &lo), &hi) in window.iter().zip(&basis.dec_lo).zip(&basis.dec_hi) {
                a = a + lo * v;
                d = d + hi * v;
            }
        } else {
            for k in 0..f {
                let v = extend(x, start + k, mode);
                a = a + basis.dec_lo[k as usize] * v;
                d = d + basis.dec_hi[k as usize] * v;
            }
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

fn synthesize_level<T: Real>(
    approx: &[T],
    detail: &[T],
    basis: &WaveletBasis<T>,
    mode: BoundaryMode,
    target_len: usize,
) -> Vec<T> {
    let f = basis.filter_len();
    let m = approx.len();
    match mode {
        BoundaryMode::Periodic => {
            let np = 2 * m;
            let mut out = vec![T::zero(); np];
            for i in 0..m {
                let start = 2 * i as isize + 2 - f as isize;
                for k in 0..f {
                    let pos = (start + k as isize).rem_euclid(np as isize) as usize;
                    out[pos] = out[pos]
                        + approx[i] * basis.rec_lo[f - 1 - k]
                        + detail[i] * basis.rec_hi[f - 1 - k];
                }
            }
            out.truncate(target_len);
            out
        }
        BoundaryMode::Symmetric | BoundaryMode::Zero => {
            // x[o] = sum_i a[i] rec_lo[2i + 1 - o] + d[i] rec_hi[2i + 1 - o]
            let full = 2 * m + 2 - f;
            let len = target_len.min(full);
            let mut out = Vec::with_capacity(len);
            for o in 0..len {
                let mut acc = T::zero();
                // 0 <= 2i + 1 - o < f  =>  i in [ceil((o-1)/2), floor((o+f-2)/2)]
                let i_lo = if o == 0 { 0 } else { o / 2 };
                let i_hi = ((o + f - 2) / 2).min(m - 1);
                for i in i_lo..=i_hi {
                    let j = 2 * i + 1;
                    if j < o {
                        continue;
                    }
                    let j = j - o;
                    if j >= f {
                        continue;
                    }
                    acc = acc + approx[i] * basis.rec_lo[j] + detail[i] * basis.rec_hi[j];
                }
                out.push(acc);
            }
            out
        }
    }
}

/// Mallat cascade: filters with `dec_lo`/`dec_hi` and downsamples by two at
/// each of `levels` levels.
pub fn dwt<T: Real>(
    signal: &[T],
    basis: &WaveletBasis<T>,
    levels: usize,
    mode: BoundaryMode,
) -> Result<Decomposition<T>> {
    let n = signal.len();
    let max = max_level(n);
    if levels == 0 {
        return Err(Error::Decomposition {
            message: "at least one level is required".into(),
            max_level: max,
        });
    }
    if levels > max {
        return Err(Error::Decomposition {
            message: format!("signal of length {n} is too short for {levels} levels"),
            max_level: max,
        });
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = analyze_level(&current, basis, mode);
        details.push(d);
        current = a;
    }
    Ok(Decomposition {
        approx: current,
        details,
        levels,
        original_length: n,
        boundary_mode: mode,
    })
}

/// Inverse of [`dwt`]; returns `original_length` samples.
pub fn idwt<T: Real>(decomp: &Decomposition<T>, basis: &WaveletBasis<T>) -> Result<Vec<T>> {
    if decomp.details.len() != decomp.levels || decomp.levels == 0 {
        return Err(Error::Structural(format!(
            "decomposition records {} levels but holds {} detail sequences",
            decomp.levels,
            decomp.details.len()
        )));
    }
    let lens = level_lengths(
        decomp.original_length,
        decomp.levels,
        basis.filter_len(),
        decomp.boundary_mode,
    );
    if decomp.approx.len() != lens[decomp.levels] {
        return Err(Error::Structural(format!(
            "approximation has length {}, expected {} for this basis and boundary mode",
            decomp.approx.len(),
            lens[decomp.levels]
        )));
    }
    for (lvl, d) in decomp.details.iter().enumerate() {
        if d.len() != lens[lvl + 1] {
            return Err(Error::Structural(format!(
                "detail level {} has length {}, expected {}",
                lvl + 1,
                d.len(),
                lens[lvl + 1]
            )));
        }
    }
    let mut current = decomp.approx.clone();
    for lvl in (0..decomp.levels).rev() {
        current = synthesize_level(
            &current,
            &decomp.details[lvl],
            basis,
            decomp.boundary_mode,
            lens[lvl],
        );
    }
    Ok(current)
}
