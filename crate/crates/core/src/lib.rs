//! Packing, planning and reference kernels for molecular graph neural networks.
//!
//! The crate is organised around four layers:
//!
//! * [`moldata`]: XYZ ingestion, radius/KNN graph construction, dataset
//!   statistics and a two-level (disk + memory) graph store.
//! * [`packing`]: longest-pack-first histogram packing (LPFHP) of graphs into
//!   fixed-capacity packs, an exhaustive optimum for small instances, and
//!   assembly of padded batches.
//! * [`kernels`]: gather / scatter-add, radial basis expansion, softplus
//!   variants and a SchNet forward pass over packed batches.
//! * [`planner`]: a cycle-cost model for tile-partitioned gather and scatter,
//!   exhaustive plan search, a bulk-synchronous execution simulator and the
//!   broadcast-scatter fusion rewrite.
//!
//! [`cli`] wires these together into the `stats`, `pack`, `plan`, `forward`
//! and `bench` commands of the `molpack` binary.

pub mod cli;
pub mod kernels;
pub mod moldata;
pub mod packing;
pub mod planner;
