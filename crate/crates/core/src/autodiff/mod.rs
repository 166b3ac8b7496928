//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Graph`] records every forward primitive in append order. Parameters
//! enter as leaves through [`Graph::tensor`]; after [`Graph::backward`] their
//! gradients are read back with [`Graph::grad`] and folded into the owning
//! [`Tensor`] via [`Tensor::accumulate_grad`].

mod graph;
mod optim;
mod tensor;

pub use graph::{Graph, Var};
pub(crate) use graph::sigmoid;
pub use optim::{sgd_step, Sgd};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
