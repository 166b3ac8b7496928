use super::Tensor;
use crate::error::{Error, Result};

/// `p <- p - lr * grad` for every tensor, then clears the gradients.
pub fn sgd_step(params: &mut [Tensor], learning_rate: f64) -> Result<()> {
    check_grads(params)?;
    for p in params.iter_mut() {
        let g = p.grad().expect("checked").to_vec();
        p.values_mut().iter_mut().zip(&g).for_each(|(v, d)| *v -= learning_rate * d);
        p.clear_grad();
    }
    Ok(())
}

fn check_grads(params: &[Tensor]) -> Result<()> {
    if let Some(i) = params.iter().position(|p| p.grad().is_none()) {
        return Err(Error::Usage(format!("parameter {i} has no gradient; run backward first")));
    }
    Ok(())
}

/// SGD with heavy-ball momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Self { learning_rate, momentum, velocity: Vec::new() }
    }

    pub fn step(&mut self, params: &mut [Tensor]) -> Result<()> {
        if self.momentum == 0.0 {
            return sgd_step(params, self.learning_rate);
        }
        check_grads(params)?;
        if self.velocity.len() != params.len() {
            self.velocity = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        for (p, vel) in params.iter_mut().zip(&mut self.velocity) {
            let g = p.grad().expect("checked").to_vec();
            for ((v, m), d) in p.values_mut().iter_mut().zip(vel.iter_mut()).zip(&g) {
                *m = self.momentum * *m + d;
                *v -= self.learning_rate * *m;
            }
            p.clear_grad();
        }
        Ok(())
    }
}
