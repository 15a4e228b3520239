use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected blocks of equal-width layers; each block halves the width
/// of the previous one. Every hidden layer is linear → batchnorm → sine and a
/// plain linear head maps to the outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub first_block_width: usize,
    pub layers_per_block: usize,
    pub num_blocks: usize,
    pub output_dim: usize,
    pub batchnorm_epsilon: f64,
    pub batchnorm_momentum: f64,
    /// Initialization scale of the first layer.
    pub first_layer_omega: f64,
    /// Initialization scale of every other layer.
    pub hidden_omega: f64,
}

impl ModelConfig {
    /// Default architecture for neighborhoods of `2N + 1` points.
    pub fn for_half_width(half_width: usize) -> Self {
        Self {
            input_dim: 2 * (2 * half_width + 1),
            first_block_width: 128,
            layers_per_block: 3,
            num_blocks: 4,
            output_dim: 2,
            batchnorm_epsilon: 1e-5,
            batchnorm_momentum: 0.1,
            first_layer_omega: 1.0,
            hidden_omega: 1.0,
        }
    }

    /// Neighborhood half-width `N` implied by `input_dim`.
    pub fn half_width(&self) -> Option<usize> {
        (self.input_dim % 4 == 2).then(|| (self.input_dim / 2 - 1) / 2)
    }

    pub fn block_widths(&self) -> Vec<usize> {
        (0..self.num_blocks)
            .map(|b| self.first_block_width >> b)
            .collect()
    }

    /// Width of each hidden layer in order.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.block_widths()
            .into_iter()
            .flat_map(|w| std::iter::repeat_n(w, self.layers_per_block))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.input_dim == 0 || self.first_block_width == 0 || self.layers_per_block == 0 || self.num_blocks == 0 {
            return bad("all layer counts and widths must be >= 1".into());
        }
        if self.output_dim != 2 {
            return bad(format!("output_dim must be 2, got {}", self.output_dim));
        }
        if self.num_blocks > 63 || self.first_block_width % (1usize << (self.num_blocks - 1)) != 0 {
            return bad(format!(
                "first block width {} cannot be halved exactly over {} blocks",
                self.first_block_width, self.num_blocks
            ));
        }
        if !(self.batchnorm_epsilon > 0.0) || !(self.batchnorm_momentum > 0.0 && self.batchnorm_momentum <= 1.0) {
            return bad("batchnorm epsilon must be > 0 and momentum in (0, 1]".into());
        }
        if !(self.first_layer_omega > 0.0 && self.hidden_omega > 0.0) {
            return bad("initialization scales must be positive".into());
        }
        Ok(())
    }
}
