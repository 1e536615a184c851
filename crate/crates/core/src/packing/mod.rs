//! Packing whole molecular graphs into fixed-capacity packs.
//!
//! Packing works at histogram granularity: [`lpfhp`] only sees how many
//! graphs of each node count exist and produces a [`PackingStrategy`] of pack
//! compositions with multiplicities. [`materialize`] then binds the strategy
//! to concrete graphs and [`assemble`] lays a pack out as a padded tensor
//! batch.

mod batch;
mod histogram;
mod lpfhp;
mod manifest;
mod oracle;

pub use batch::{assemble, assemble_graphs, materialize, EdgeCapacityRule, Pack, PackedBatch};
pub use histogram::SizeHistogram;
pub use lpfhp::{lpfhp, naive_padding_plan, padding_fraction, PackingStrategy};
pub use manifest::{PackManifest, PackRecord};
pub use oracle::{exact_pack_oracle, MAX_ORACLE_GRAPHS};

use thiserror::Error;

use crate::moldata::MolError;

#[derive(Debug, Error)]
pub enum PackError {
    #[error("graph size {size} exceeds pack capacity {capacity}")]
    Capacity { size: usize, capacity: usize },
    #[error("pack {pack} holds {edges} edges but edge capacity is {capacity}")]
    EdgeCapacity {
        pack: usize,
        edges: usize,
        capacity: usize,
    },
    #[error("graph sizes do not match the strategy: {0}")]
    Consistency(String),
    #[error("exact oracle is limited to {max} graphs, got {got}")]
    TooLarge { got: usize, max: usize },
    #[error("invalid histogram: {0}")]
    Histogram(String),
    #[error(transparent)]
    Store(#[from] MolError),
}
