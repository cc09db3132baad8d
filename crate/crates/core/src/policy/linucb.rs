use nalgebra::{DMatrix, DVector};

use super::argmax;
use crate::error::{Error, Result};

/// Per-arm design block `I_{n,i}` and response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmBlock {
    pub gram: DMatrix<f64>,
    pub xty: DVector<f64>,
}

impl ArmBlock {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            xty: DVector::zeros(dim),
        }
    }

    pub fn update(&mut self, context: &[f64], y: f64) {
        let x = DVector::from_column_slice(context);
        self.gram += &x * x.transpose();
        self.xty += x * y;
    }
}

/// `argmax_i x′ᵀθ̂_i + α √(x′ᵀ(I_{n,i} + λI)⁻¹x′)` with ridge estimates θ̂_i.
pub fn lin_ucb_select(blocks: &[ArmBlock], context: &[f64], alpha: f64, ridge: f64) -> Result<usize> {
    if !(ridge > 0.0) {
        return Err(Error::Config(format!("ridge must be positive, got {ridge}")));
    }
    if context.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite context".into()));
    }
    let x = DVector::from_column_slice(context);
    let d = x.len();
    let mut scores = Vec::with_capacity(blocks.len());
    for b in blocks {
        if b.xty.len() != d {
            return Err(Error::Dimension {
                expected: b.xty.len(),
                got: d,
            });
        }
        let reg = &b.gram + DMatrix::identity(d, d) * ridge;
        let chol = reg.cholesky().ok_or(Error::Singular { lambda_min: 0.0 })?;
        let theta = chol.solve(&b.xty);
        let width = x.dot(&chol.solve(&x)).max(0.0).sqrt();
        scores.push(x.dot(&theta) + alpha * width);
    }
    Ok(argmax(scores))
}

/// Stateful lin-UCB with a round-robin warm start of `m·d` pulls.
#[derive(Debug, Clone)]
pub struct LinUcb {
    alpha: f64,
    ridge: f64,
    blocks: Vec<ArmBlock>,
}

impl LinUcb {
    pub fn new(num_arms: usize, context_dim: usize, alpha: f64, ridge: f64) -> Result<Self> {
        if num_arms == 0 || context_dim == 0 {
            return Err(Error::Config("lin-UCB needs at least one arm and one context dimension".into()));
        }
        if !(ridge > 0.0) {
            return Err(Error::Config(format!("ridge must be positive, got {ridge}")));
        }
        Ok(Self {
            alpha,
            ridge,
            blocks: vec![ArmBlock::new(context_dim); num_arms],
        })
    }

    pub fn blocks(&self) -> &[ArmBlock] {
        &self.blocks
    }

    pub fn warmup_len(&self) -> u64 {
        (self.blocks.len() * self.blocks[0].xty.len()) as u64
    }

    /// Arm for 1-based `step`.
    pub fn select(&self, step: u64, context: &[f64]) -> Result<usize> {
        if step <= self.warmup_len() {
            return Ok(((step.max(1) - 1) % self.blocks.len() as u64) as usize);
        }
        lin_ucb_select(&self.blocks, context, self.alpha, self.ridge)
    }

    pub fn update(&mut self, arm: usize, context: &[f64], y: f64) {
        self.blocks[arm].update(context, y);
    }
}
