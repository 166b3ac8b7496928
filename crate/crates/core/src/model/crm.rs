//! Category representation regularizers and the feature-alignment score.
//!
//! The classifier weight matrix `W` (`d x C`) has one column per candidate
//! wavelet. Its Gram matrix, normalized to unit trace, defines an order-2
//! Rényi entropy; the reciprocal of that entropy is the encoding penalty,
//! while the L1 norm of the decision vector is the sparsity penalty.

use crate::autodiff::{sigmoid, Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Classifier weight matrix `d x C`, column `j` representing wavelet `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CategoryMatrix {
    /// Row-major `d x C` values.
    pub fn new(feature_dim: usize, categories: usize, values: Vec<f64>) -> Result<Self> {
        if feature_dim * categories != values.len() || feature_dim == 0 || categories == 0 {
            return Err(Error::Structural(format!(
                "category matrix {feature_dim}x{categories} needs {} values, got {}",
                feature_dim * categories,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("category matrix has non-finite entries".into()));
        }
        Ok(Self { rows: feature_dim, cols: categories, values })
    }

    /// Builds the matrix from its columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Structural("columns differ in length".into()));
        }
        let mut values = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                values[i * cols + j] = *v;
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match t.shape() {
            [d, c] => Self::new(*d, *c, t.values().to_vec()),
            s => Err(Error::Structural(format!("category matrix needs a 2-D tensor, got {s:?}"))),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.rows
    }

    pub fn categories(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.values[i * self.cols + j]).collect()
    }

    /// Inner products `<h, W^(j)>` for every column.
    pub fn scores(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.rows {
            return Err(Error::Structural(format!(
                "feature of dimension {} against a {}x{} category matrix",
                h.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, hv) in h.iter().enumerate() {
            let row = &self.values[i * self.cols..(i + 1) * self.cols];
            out.iter_mut().zip(row).for_each(|(o, w)| *o += hv * w);
        }
        Ok(out)
    }
}

/// Sigmoid classifier output; every entry lies in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::Input("decision entries must lie in (0, 1)".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Share of the total activation carried by the largest entry.
    pub fn top1_mass(&self) -> f64 {
        let total: f64 = self.0.iter().sum();
        self.0[self.argmax()] / total
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// `y[j] = sigmoid(<h, W^(j)>)`.
pub fn classify(h: &[f64], w: &CategoryMatrix) -> Result<DecisionVector> {
    let scores = w.scores(h)?;
    // Sigmoid saturates to exactly 0 or 1 in f64 for |z| > ~37; keep the
    // open-interval invariant.
    let y = scores.into_iter().map(|z| sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)).collect();
    DecisionVector::new(y)
}

/// Sparsity penalty `||y||_1`.
pub fn r_sparse(y: &DecisionVector) -> f64 {
    y.values().iter().map(|v| v.abs()).sum()
}

/// Gram matrix `G[i][j] = <W^(i), W^(j)>`, row-major `C x C`.
pub fn gram(w: &CategoryMatrix) -> Vec<f64> {
    let c = w.categories();
    let cols: Vec<Vec<f64>> = (0..c).map(|j| w.column(j)).collect();
    let mut g = vec![0.0; c * c];
    for i in 0..c {
        for j in i..c {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            g[i * c + j] = v;
            g[j * c + i] = v;
        }
    }
    g
}

/// `G~[i][j] = G[i][j] / (C sqrt(G[i][i] G[j][j]))`, so `tr(G~) = 1`.
pub fn normalized_gram(g: &[f64], categories: usize) -> Result<Vec<f64>> {
    let c = categories;
    if g.len() != c * c {
        return Err(Error::Structural(format!("Gram matrix of {} entries is not {c}x{c}", g.len())));
    }
    if let Some(col) = (0..c).find(|&i| !(g[i * c + i] > 0.0)) {
        return Err(Error::DegenerateMatrix { column: col });
    }
    let scale = 1.0 / c as f64;
    let mut out = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            out[i * c + j] = if i == j {
                scale
            } else {
                scale * g[i * c + j] / (g[i * c + i] * g[j * c + j]).sqrt()
            };
        }
    }
    Ok(out)
}

/// Order-`alpha` matrix Rényi entropy of `W`; only `alpha = 2` is supported,
/// where it reduces to `-log2 tr(G~^2)`.
pub fn renyi_entropy(w: &CategoryMatrix, alpha: f64) -> Result<f64> {
    if alpha != 2.0 {
        return Err(Error::Config(format!("only order-2 entropy is supported, got alpha = {alpha}")));
    }
    let gt = normalized_gram(&gram(w), w.categories())?;
    // G~ is symmetric, so tr(G~^2) is its squared Frobenius norm.
    let tr: f64 = gt.iter().map(|v| v * v).sum();
    Ok(-tr.log2())
}

/// Default floor below which the encoding penalty is considered saturated.
pub const ENTROPY_FLOOR: f64 = 1e-6;

/// Encoding penalty `1 / S_2(W)`.
pub fn r_encode(w: &CategoryMatrix, entropy_floor: f64) -> Result<f64> {
    let s = renyi_entropy(w, 2.0)?;
    if s <= entropy_floor {
        return Err(Error::RegularizerSaturation { entropy: s, floor: entropy_floor });
    }
    Ok(1.0 / s)
}

/// Soft selection weights `w[j] = y[j] / sum(y)` together with the gradient
/// mask that blocks entries below `epsilon`.
pub fn truncated_selection_weights(y: &DecisionVector, epsilon: f64) -> Result<(Vec<f64>, Vec<bool>)> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Input(format!("truncation threshold must lie in [0, 1), got {epsilon}")));
    }
    let mask = selection_mask(y.values(), epsilon)?;
    let total: f64 = y.values().iter().sum();
    Ok((y.values().iter().map(|v| v / total).collect(), mask))
}

pub(crate) fn selection_mask(y: &[f64], epsilon: f64) -> Result<Vec<bool>> {
    let mask: Vec<bool> = y.iter().map(|&v| v >= epsilon).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptySelection { epsilon });
    }
    Ok(mask)
}

/// Margin `<h, W^(n)> - max_{j != n} <h, W^(j)>`.
pub fn fsm_alignment_score(h: &[f64], w: &CategoryMatrix, n: usize) -> Result<f64> {
    if n >= w.categories() {
        return Err(Error::Input(format!("class {n} out of range for {} categories", w.categories())));
    }
    let s = w.scores(h)?;
    let rival = s.iter().enumerate().filter(|(j, _)| *j != n).map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    Ok(if rival.is_finite() { s[n] - rival } else { s[n] })
}

/// Graph form of `S_2(W)` for a `[d, C]` node.
pub fn renyi2_entropy_node(g: &mut Graph, w: Var) -> Result<Var> {
    let shape = g.shape(w).to_vec();
    let [d, c] = shape[..] else {
        return Err(Error::Structural(format!("category matrix node has shape {shape:?}")));
    };
    let vals = g.value(w);
    if let Some(col) = (0..c).find(|&j| (0..d).all(|i| vals[i * c + j] == 0.0)) {
        return Err(Error::DegenerateMatrix { column: col });
    }
    let sq = g.square(w)?;
    let col_sq = g.sum_rows(sq)?;
    let norms = g.sqrt(col_sq)?;
    let inv = g.reciprocal(norms)?;
    let unit = g.scale_columns(w, inv)?;
    let unit_t = g.transpose(unit)?;
    let cos = g.matmul(unit_t, unit)?;
    let gt = g.scale(cos, 1.0 / c as f64)?;
    let gt2 = g.square(gt)?;
    let tr = g.sum(gt2)?;
    let lg = g.log2(tr)?;
    g.scale(lg, -1.0)
}

/// Graph form of `1 / S_2(W)`.
pub fn r_encode_node(g: &mut Graph, w: Var) -> Result<Var> {
    let s = renyi2_entropy_node(g, w)?;
    g.reciprocal(s)
}

/// Graph form of the truncated normalization: forward `y / sum(y)`, with
/// gradients through entries below `epsilon` blocked.
pub fn truncated_selection_node(g: &mut Graph, y: Var, epsilon: f64) -> Result<Var> {
    let mask = selection_mask(g.value(y), epsilon)?;
    let masked = g.stop_gradient_mask(y, &mask)?;
    let total = g.sum(masked)?;
    let inv = g.reciprocal(total)?;
    g.mul_scalar(masked, inv)
}
