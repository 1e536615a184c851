//! Tile partitioning for gather and scatter.
//!
//! A plan splits the `I` (index), `M` (indexed rows) and `N` (feature)
//! dimensions of an operation by divisors `(P_I, P_M, P_N)`, one partition per
//! tile. [`plan_search`] picks the divisors minimising the simplified cycle
//! model in [`cost`]; [`simulate_gather`] and [`simulate_scatter`] execute a
//! plan tile by tile and must reproduce the reference kernels exactly.

mod cost;
mod opgraph;
mod profile;
mod simulate;

pub use cost::{
    exchange_cycles, gather_cost, op_cost, plan_search, scatter_cost, tile_bytes, CostBreakdown,
    Divisors, OpKind, OpSpec, Plan, PlanReport,
};
pub use opgraph::{
    fuse_broadcast_scatter, ElementOp, NodeId, OpGraph, OpNode, ScatterForm, TensorShape, Value,
};
pub use profile::HardwareProfile;
pub use simulate::{
    balanced_ranges, simulate_gather, simulate_scatter, Phase, PhaseKind, SimTrace, Transfer,
};

use thiserror::Error;

use crate::kernels::KernelError;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid plan {divisors:?} for {spec}: {reason}")]
    InvalidPlan {
        spec: String,
        divisors: (usize, usize, usize),
        reason: String,
    },
    #[error("no plan fits in {sram} bytes of tile memory; smallest partition {shape:?} needs {bytes} bytes")]
    Infeasible {
        shape: (usize, usize, usize),
        bytes: usize,
        sram: usize,
    },
    #[error("invalid operation: {0}")]
    Spec(String),
    #[error("invalid hardware profile: {0}")]
    Profile(String),
    #[error("op graph: {0}")]
    Graph(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
