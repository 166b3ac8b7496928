use super::{Activation, Model};
use crate::autodiff::{Graph, Var};
use crate::error::Result;

/// Parameter leaves of a [`Model`] inside one graph.
#[derive(Debug, Clone)]
pub struct Bound {
    activation: Activation,
    stride: usize,
    pad: usize,
    blocks: usize,
    head_blocks: usize,
    feature_dim: usize,
    head_channels: usize,
    vars: Vec<Var>,
}

impl Bound {
    pub(super) fn new(model: &Model, vars: Vec<Var>) -> Self {
        let a = model.arch();
        Self {
            activation: a.activation,
            stride: a.stem_stride,
            pad: a.stem_kernel / 2,
            blocks: a.blocks,
            head_blocks: a.head_blocks,
            feature_dim: a.feature_dim,
            head_channels: a.head_channels,
            vars,
        }
    }

    /// Leaves in the model's parameter order.
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn w(&self) -> Var {
        self.vars[2 * self.blocks + 2]
    }

    fn act(&self, g: &mut Graph, x: Var) -> Result<Var> {
        match self.activation {
            Activation::Relu => g.relu(x),
            Activation::Identity => Ok(x),
        }
    }

    fn trunk(&self, g: &mut Graph, x: Var, params: &[Var], blocks: usize) -> Result<Var> {
        let h = g.conv1d(x, params[0], self.stride, self.pad)?;
        let mut h = self.act(g, h)?;
        for b in 0..blocks {
            let r = g.conv1d(h, params[1 + 2 * b], 1, 1)?;
            let r = self.act(g, r)?;
            let r = g.conv1d(r, params[2 + 2 * b], 1, 1)?;
            let s = g.add(h, r)?;
            h = self.act(g, s)?;
        }
        Ok(h)
    }

    /// `h = pool(proj(trunk(x)))` for an input node of shape `[6, len]`.
    pub fn features(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let n = 2 * self.blocks + 1;
        let t = self.trunk(g, x, &self.vars[..n], self.blocks)?;
        let p = g.conv1d(t, self.vars[n], 1, 0)?;
        g.mean_over_length(p)
    }

    /// Sigmoid decision node `[C]` from a feature node.
    pub fn classify(&self, g: &mut Graph, h: Var) -> Result<Var> {
        let row = g.reshape(h, vec![1, self.feature_dim])?;
        let z = g.matmul(row, self.w())?;
        let c = g.shape(z)[1];
        let z = g.reshape(z, vec![c])?;
        g.sigmoid(z)
    }

    /// `(attitude [3], displacement [3])` nodes for an input node `[6, len]`.
    pub fn guidance(&self, g: &mut Graph, x: Var) -> Result<(Var, Var)> {
        let start = 2 * self.blocks + 3;
        let n = 2 * self.head_blocks + 1;
        let t = self.trunk(g, x, &self.vars[start..start + n], self.head_blocks)?;
        let pooled = g.mean_over_length(t)?;
        let row = g.reshape(pooled, vec![1, self.head_channels])?;
        let att = g.matmul(row, self.vars[start + n])?;
        let disp = g.matmul(row, self.vars[start + n + 1])?;
        Ok((g.reshape(att, vec![3])?, g.reshape(disp, vec![3])?))
    }
}
