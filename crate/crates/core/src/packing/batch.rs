use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{PackError, PackingStrategy};
use crate::moldata::{GraphStore, MolecularGraph, PADDING_ATOMIC_NUMBER};

/// How the per-pack edge capacity is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EdgeCapacityRule {
    /// Largest real edge count over all packs, rounded up to `multiple`.
    MaxRounded { multiple: usize },
    /// The same fixed capacity for every pack.
    Fixed { capacity: usize },
    /// `per_node` edges for every node slot.
    PerNode { per_node: usize },
}

impl Default for EdgeCapacityRule {
    fn default() -> Self {
        EdgeCapacityRule::MaxRounded { multiple: 8 }
    }
}

impl EdgeCapacityRule {
    fn resolve(&self, node_capacity: usize, max_real_edges: usize) -> usize {
        match *self {
            EdgeCapacityRule::MaxRounded { multiple } => {
                let m = multiple.max(1);
                max_real_edges.div_ceil(m) * m
            }
            EdgeCapacityRule::Fixed { capacity } => capacity,
            EdgeCapacityRule::PerNode { per_node } => per_node * node_capacity,
        }
    }
}

/// Concrete graphs assigned to one pack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pack {
    pub graph_ids: Vec<String>,
    pub node_capacity: usize,
    pub edge_capacity: usize,
    pub real_node_count: usize,
    pub real_edge_count: usize,
}

impl Pack {
    /// A pack holding exactly one graph with no padding at all.
    pub fn single(g: &MolecularGraph) -> Self {
        Pack {
            graph_ids: vec![g.id().to_string()],
            node_capacity: g.num_nodes(),
            edge_capacity: g.num_edges(),
            real_node_count: g.num_nodes(),
            real_edge_count: g.num_edges(),
        }
    }

    pub fn padding_nodes(&self) -> usize {
        self.node_capacity - self.real_node_count
    }
}

/// Binds a histogram-level strategy to concrete graphs.
///
/// Packs are emitted in strategy order; graphs of equal size are consumed in
/// input order.
pub fn materialize(
    strategy: &PackingStrategy,
    graphs: &[MolecularGraph],
    rule: EdgeCapacityRule,
) -> Result<Vec<Pack>, PackError> {
    let mut by_size: HashMap<usize, VecDeque<&MolecularGraph>> = HashMap::new();
    for g in graphs {
        by_size.entry(g.num_nodes()).or_default().push_back(g);
    }

    let s_m = strategy.capacity();
    let mut packs = Vec::with_capacity(strategy.num_packs());
    for comp in strategy.packs() {
        let mut pack = Pack {
            graph_ids: Vec::with_capacity(comp.len()),
            node_capacity: s_m,
            edge_capacity: 0,
            real_node_count: 0,
            real_edge_count: 0,
        };
        for &s in comp {
            let g = by_size
                .get_mut(&s)
                .and_then(VecDeque::pop_front)
                .ok_or_else(|| {
                    PackError::Consistency(format!("strategy needs more graphs of size {s}"))
                })?;
            pack.graph_ids.push(g.id().to_string());
            pack.real_node_count += g.num_nodes();
            pack.real_edge_count += g.num_edges();
        }
        packs.push(pack);
    }
    if let Some((s, left)) = by_size.iter().find(|(_, q)| !q.is_empty()) {
        return Err(PackError::Consistency(format!(
            "{} graph(s) of size {s} left unassigned",
            left.len()
        )));
    }

    let max_edges = packs.iter().map(|p| p.real_edge_count).max().unwrap_or(0);
    let edge_capacity = rule.resolve(s_m, max_edges);
    for (k, pack) in packs.iter_mut().enumerate() {
        if pack.real_edge_count > edge_capacity {
            return Err(PackError::EdgeCapacity {
                pack: k,
                edges: pack.real_edge_count,
                capacity: edge_capacity,
            });
        }
        pack.edge_capacity = edge_capacity;
    }
    Ok(packs)
}

/// A pack laid out as fixed-shape tensors.
///
/// Graph `k` occupies node slots `node_offsets[k]..node_offsets[k + 1]` and
/// edge slots `edge_offsets[k]..edge_offsets[k + 1]`. Padding nodes carry
/// atomic number 0 and graph id -1. Padding edges are self-loops on the
/// dummy slot (the last node slot) with `edge_mask == false`. A pack with no
/// free node slot that still needs padding edges gets one extra sentinel
/// slot to serve as the dummy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedBatch {
    pub node_capacity: usize,
    pub atomic_numbers: Vec<u8>,
    pub positions: Vec<[f64; 3]>,
    /// `[sources, targets]`, each of length edge capacity.
    pub edge_index: [Vec<u32>; 2],
    pub edge_mask: Vec<bool>,
    pub graph_id_per_node: Vec<i32>,
    pub graph_ids: Vec<String>,
    pub labels: Vec<Option<f64>>,
    pub node_offsets: Vec<usize>,
    pub edge_offsets: Vec<usize>,
}

impl PackedBatch {
    pub fn num_slots(&self) -> usize {
        self.atomic_numbers.len()
    }

    pub fn num_graphs(&self) -> usize {
        self.graph_ids.len()
    }

    pub fn edge_capacity(&self) -> usize {
        self.edge_mask.len()
    }

    pub fn graph_nodes(&self, k: usize) -> Range<usize> {
        self.node_offsets[k]..self.node_offsets[k + 1]
    }

    pub fn graph_edges(&self, k: usize) -> Range<usize> {
        self.edge_offsets[k]..self.edge_offsets[k + 1]
    }

    pub fn real_nodes(&self) -> usize {
        *self.node_offsets.last().unwrap_or(&0)
    }

    pub fn real_edges(&self) -> usize {
        *self.edge_offsets.last().unwrap_or(&0)
    }

    /// Slot that padding edges point at, if any padding edge exists.
    pub fn dummy_slot(&self) -> Option<usize> {
        (self.real_edges() < self.edge_capacity()).then(|| self.num_slots() - 1)
    }
}

/// Lays out `graphs` (in pack order) as a padded batch.
pub fn assemble_graphs(pack: &Pack, graphs: &[&MolecularGraph]) -> Result<PackedBatch, PackError> {
    if graphs.len() != pack.graph_ids.len()
        || graphs.iter().zip(&pack.graph_ids).any(|(g, id)| g.id() != id)
    {
        return Err(PackError::Consistency(
            "graphs do not match the pack's id list".into(),
        ));
    }
    let real_nodes: usize = graphs.iter().map(|g| g.num_nodes()).sum();
    let real_edges: usize = graphs.iter().map(|g| g.num_edges()).sum();
    if real_nodes > pack.node_capacity {
        return Err(PackError::Capacity {
            size: real_nodes,
            capacity: pack.node_capacity,
        });
    }
    if real_edges > pack.edge_capacity {
        return Err(PackError::EdgeCapacity {
            pack: 0,
            edges: real_edges,
            capacity: pack.edge_capacity,
        });
    }

    let needs_dummy = real_edges < pack.edge_capacity;
    let slots = if needs_dummy && real_nodes == pack.node_capacity {
        pack.node_capacity + 1
    } else {
        pack.node_capacity
    };

    let mut batch = PackedBatch {
        node_capacity: pack.node_capacity,
        atomic_numbers: Vec::with_capacity(slots),
        positions: Vec::with_capacity(slots),
        edge_index: [
            Vec::with_capacity(pack.edge_capacity),
            Vec::with_capacity(pack.edge_capacity),
        ],
        edge_mask: Vec::with_capacity(pack.edge_capacity),
        graph_id_per_node: Vec::with_capacity(slots),
        graph_ids: pack.graph_ids.clone(),
        labels: graphs.iter().map(|g| g.molecule.label).collect(),
        node_offsets: vec![0],
        edge_offsets: vec![0],
    };

    for (k, g) in graphs.iter().enumerate() {
        let offset = batch.atomic_numbers.len() as u32;
        batch.atomic_numbers.extend_from_slice(&g.molecule.atomic_numbers);
        batch.positions.extend_from_slice(&g.molecule.positions);
        batch
            .graph_id_per_node
            .extend(std::iter::repeat_n(k as i32, g.num_nodes()));
        for &(s, t) in &g.edges {
            batch.edge_index[0].push(s + offset);
            batch.edge_index[1].push(t + offset);
            batch.edge_mask.push(true);
        }
        batch.node_offsets.push(batch.atomic_numbers.len());
        batch.edge_offsets.push(batch.edge_mask.len());
    }

    batch
        .atomic_numbers
        .resize(slots, PADDING_ATOMIC_NUMBER);
    batch.positions.resize(slots, [0.0; 3]);
    batch.graph_id_per_node.resize(slots, -1);
    let dummy = (slots - 1) as u32;
    batch.edge_index[0].resize(pack.edge_capacity, dummy);
    batch.edge_index[1].resize(pack.edge_capacity, dummy);
    batch.edge_mask.resize(pack.edge_capacity, false);
    Ok(batch)
}

/// Fetches the pack's graphs from `store` and lays them out.
pub fn assemble(pack: &Pack, store: &GraphStore) -> Result<PackedBatch, PackError> {
    let graphs = pack
        .graph_ids
        .iter()
        .map(|id| store.get(id))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&MolecularGraph> = graphs.iter().map(|g| g.as_ref()).collect();
    assemble_graphs(pack, &refs)
}
