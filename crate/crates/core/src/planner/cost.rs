//! Simplified per-tile cycle model.
//!
//! With `I_t, M_t, N_t` the ceiling-divided partition sizes and
//! `e(b) = b / exchange_bytes_per_cycle`:
//!
//! ```text
//! gather   exchange = e(M_t N_t B_data) + e(I_t B_index)
//!          compute  = W ceil(I_t / W) * N_t M_t B_data / (M B_vwidth)
//!          reduce   = e(I_t N_t B_data) + I_t N_t B_data / B_vwidth   if P_M > 1
//! scatter  exchange = e(I_t N_t B_data) + e(I_t B_index)
//!          compute  = W ceil(M_t / W) * I_t N_t B_data / (M B_vwidth)
//!          reduce   = e(M_t N_t B_data) + M_t N_t B_data / B_vwidth   if P_I > 1
//! ```
//!
//! `M` in the compute denominators is the full indexed dimension, not the
//! tile's share of it.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{HardwareProfile, PlanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Gather,
    Scatter,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Gather => "gather",
            OpKind::Scatter => "scatter",
        })
    }
}

impl std::str::FromStr for OpKind {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gather" => Ok(OpKind::Gather),
            "scatter" => Ok(OpKind::Scatter),
            other => Err(PlanError::Spec(format!("unknown operation kind {other:?}"))),
        }
    }
}

/// Gather reads `I` rows of an `M x N` matrix; scatter adds `I` rows of
/// width `N` into one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpSpec {
    pub kind: OpKind,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl OpSpec {
    pub fn new(kind: OpKind, i: usize, m: usize, n: usize) -> Self {
        OpSpec { kind, i, m, n }
    }

    pub fn gather(i: usize, m: usize, n: usize) -> Self {
        Self::new(OpKind::Gather, i, m, n)
    }

    pub fn scatter(i: usize, m: usize, n: usize) -> Self {
        Self::new(OpKind::Scatter, i, m, n)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.i == 0 || self.m == 0 || self.n == 0 {
            return Err(PlanError::Spec(format!("{self} has a zero dimension")));
        }
        Ok(())
    }
}

impl fmt::Display for OpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(I={}, M={}, N={})", self.kind, self.i, self.m, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Divisors {
    #[serde(rename = "P_I")]
    pub p_i: usize,
    #[serde(rename = "P_M")]
    pub p_m: usize,
    #[serde(rename = "P_N")]
    pub p_n: usize,
}

impl Divisors {
    pub const ONE: Divisors = Divisors { p_i: 1, p_m: 1, p_n: 1 };

    pub fn new(p_i: usize, p_m: usize, p_n: usize) -> Self {
        Divisors { p_i, p_m, p_n }
    }

    pub fn tiles(&self) -> usize {
        self.p_i * self.p_m * self.p_n
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.p_i, self.p_m, self.p_n)
    }

    /// `(I_t, M_t, N_t)`.
    pub fn tile_shape(&self, spec: &OpSpec) -> (usize, usize, usize) {
        (
            spec.i.div_ceil(self.p_i),
            spec.m.div_ceil(self.p_m),
            spec.n.div_ceil(self.p_n),
        )
    }

    /// Divisors must be positive, no larger than their dimension (a zero
    /// dimension admits only 1) and fit on the machine.
    pub fn check(&self, spec: &OpSpec, hw: &HardwareProfile) -> Result<(), PlanError> {
        let fail = |reason: String| PlanError::InvalidPlan {
            spec: spec.to_string(),
            divisors: self.as_tuple(),
            reason,
        };
        for (p, dim, name) in [(self.p_i, spec.i, "P_I"), (self.p_m, spec.m, "P_M"), (self.p_n, spec.n, "P_N")] {
            if p == 0 || p > dim.max(1) {
                return Err(fail(format!("{name} = {p} outside 1..={}", dim.max(1))));
            }
        }
        if self.tiles() > hw.num_tiles {
            return Err(fail(format!("needs {} tiles, profile has {}", self.tiles(), hw.num_tiles)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub exchange: f64,
    pub compute: f64,
    pub reduce: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(exchange: f64, compute: f64, reduce: f64) -> Self {
        CostBreakdown {
            exchange,
            compute,
            reduce,
            total: exchange + compute + reduce,
        }
    }
}

pub fn exchange_cycles(bytes: f64, hw: &HardwareProfile) -> f64 {
    bytes / hw.exchange_bytes_per_cycle
}

pub fn gather_cost(spec: &OpSpec, d: Divisors, hw: &HardwareProfile) -> CostBreakdown {
    let (it, mt, nt) = d.tile_shape(spec);
    let (it, mt, nt) = (it as f64, mt as f64, nt as f64);
    let (bd, bi, bv) = (hw.b_data as f64, hw.b_index as f64, hw.b_vwidth as f64);
    let w = hw.workers as f64;
    let m = spec.m as f64;
    let e = |b: f64| exchange_cycles(b, hw);

    let exchange = e(mt * nt * bd) + e(it * bi);
    let compute = w * (it / w).ceil() * (nt * mt * bd) / (m * bv);
    let (rx, rc) = reduce_parts(spec, d, hw);
    CostBreakdown::new(exchange, compute, rx + rc)
}

pub fn scatter_cost(spec: &OpSpec, d: Divisors, hw: &HardwareProfile) -> CostBreakdown {
    let (it, mt, nt) = d.tile_shape(spec);
    let (it, mt, nt) = (it as f64, mt as f64, nt as f64);
    let (bd, bi, bv) = (hw.b_data as f64, hw.b_index as f64, hw.b_vwidth as f64);
    let w = hw.workers as f64;
    let m = spec.m as f64;
    let e = |b: f64| exchange_cycles(b, hw);

    let exchange = e(it * nt * bd) + e(it * bi);
    let compute = w * (mt / w).ceil() * (it * nt * bd) / (m * bv);
    let (rx, rc) = reduce_parts(spec, d, hw);
    CostBreakdown::new(exchange, compute, rx + rc)
}

/// Exchange and on-tile cycles of the reduction step, zero when the guard
/// fails. Gather reduces when `P_M > 1`; scatter when `P_I > 1`, since a
/// single index partition leaves nothing to reduce.
pub(super) fn reduce_parts(spec: &OpSpec, d: Divisors, hw: &HardwareProfile) -> (f64, f64) {
    let (it, mt, nt) = d.tile_shape(spec);
    let (bd, bv) = (hw.b_data as f64, hw.b_vwidth as f64);
    let rows = match spec.kind {
        OpKind::Gather if d.p_m > 1 => it,
        OpKind::Scatter if d.p_i > 1 => mt,
        _ => return (0.0, 0.0),
    };
    let bytes = rows as f64 * nt as f64 * bd;
    (exchange_cycles(bytes, hw), bytes / bv)
}

pub fn op_cost(spec: &OpSpec, d: Divisors, hw: &HardwareProfile) -> CostBreakdown {
    match spec.kind {
        OpKind::Gather => gather_cost(spec, d, hw),
        OpKind::Scatter => scatter_cost(spec, d, hw),
    }
}

/// Bytes one tile holds: its slice of the `M x N` operand, its indices and
/// its `I_t x N_t` slice of the gathered or scattered rows.
pub fn tile_bytes(spec: &OpSpec, d: Divisors, hw: &HardwareProfile) -> usize {
    let (it, mt, nt) = d.tile_shape(spec);
    (mt * nt + it * nt) * hw.b_data + it * hw.b_index
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub spec: OpSpec,
    pub divisors: Divisors,
    pub tile_shape: (usize, usize, usize),
    pub cost: CostBreakdown,
}

impl Plan {
    pub fn evaluate(spec: OpSpec, divisors: Divisors, hw: &HardwareProfile) -> Self {
        Plan {
            spec,
            divisors,
            tile_shape: divisors.tile_shape(&spec),
            cost: op_cost(&spec, divisors, hw),
        }
    }

    pub fn report(&self, hw: &HardwareProfile) -> PlanReport {
        PlanReport {
            kind: self.spec.kind,
            shape: Shape {
                i: self.spec.i,
                m: self.spec.m,
                n: self.spec.n,
            },
            plan: self.divisors,
            cost: self.cost,
            profile: hw.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Serialised form of a chosen plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub kind: OpKind,
    pub shape: Shape,
    pub plan: Divisors,
    pub cost: CostBreakdown,
    pub profile: HardwareProfile,
}

/// Smallest divisor for each distinct partition size of `dim`, ascending.
///
/// Cost, reduce guards and memory depend on a divisor only through
/// `ceil(dim / p)`, and the smallest divisor giving a size is also the
/// lexicographically preferred one, so searching these loses nothing.
fn canonical_divisors(dim: usize, limit: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 1;
    while p <= dim && p <= limit {
        out.push(p);
        let t = dim.div_ceil(p);
        if t == 1 {
            break;
        }
        p = dim.div_ceil(t - 1);
    }
    out
}

/// Minimum-cost feasible plan; ties go to the lexicographically smallest
/// `(P_I, P_M, P_N)`.
pub fn plan_search(spec: &OpSpec, hw: &HardwareProfile) -> Result<Plan, PlanError> {
    spec.validate()?;
    hw.validate()?;
    let tiles = hw.num_tiles;
    let mut best: Option<Plan> = None;
    let mut smallest: Option<(usize, (usize, usize, usize))> = None;

    for p_i in canonical_divisors(spec.i, tiles) {
        for p_m in canonical_divisors(spec.m, tiles / p_i) {
            for p_n in canonical_divisors(spec.n, tiles / (p_i * p_m)) {
                let d = Divisors::new(p_i, p_m, p_n);
                let bytes = tile_bytes(spec, d, hw);
                if bytes > hw.sram_bytes_per_tile {
                    if smallest.is_none_or(|(b, _)| bytes < b) {
                        smallest = Some((bytes, d.tile_shape(spec)));
                    }
                    continue;
                }
                let cost = op_cost(spec, d, hw);
                // Candidates arrive in lexicographic order, so strict `<`
                // keeps the earliest of equal-cost plans.
                if best.is_none_or(|b| cost.total < b.cost.total) {
                    best = Some(Plan {
                        spec: *spec,
                        divisors: d,
                        tile_shape: d.tile_shape(spec),
                        cost,
                    });
                }
            }
        }
    }
    best.ok_or_else(|| {
        let (bytes, shape) = smallest.expect("at least one candidate was examined");
        PlanError::Infeasible {
            shape,
            bytes,
            sram: hw.sram_bytes_per_tile,
        }
    })
}
