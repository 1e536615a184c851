//! Reference numerical kernels and the SchNet forward pass.
//!
//! Everything is generic over [`Real`] so the same code runs in single
//! precision and in a double-precision reference path.

mod basis;
mod exact_sum;
mod matrix;
mod params;
mod schnet;
mod scatter;

pub use basis::{cosine_cutoff, rbf_expand, shifted_softplus, softplus_opt, softplus_ref, RadialBasis};
pub use exact_sum::{exact_sum, ExactSum};
pub use matrix::Matrix;
pub use params::{BlockParams, DenseParams, ModelConfig, ModelParams, TensorEntry, WeightsSidecar, WEIGHTS_FORMAT};
pub use schnet::{interaction_block, schnet_forward, Dense, EdgeFeatures, InteractionBlock, SchNet};
pub use scatter::{gather, scatter_add};

use std::fmt::Debug;

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("index {value} at position {position} is out of range for {rows} rows")]
    OutOfBounds {
        position: usize,
        value: usize,
        rows: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("atomic number {z} has no embedding row (table has {rows})")]
    UnknownSpecies { z: u8, rows: usize },
    #[error("invalid model parameters: {0}")]
    Params(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Floating-point element type for kernels.
pub trait Real: Float + Default + Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}
