use serde::{Deserialize, Serialize};

use super::{distance, Molecule};

/// Default radial cutoff in Ångström.
pub const DEFAULT_R_CUT: f64 = 6.0;
/// Default neighbour cap for KNN construction.
pub const DEFAULT_K: usize = 28;

/// A molecule with a directed edge list.
///
/// Edges are `(source, target)` pairs: a message travels from `source` to
/// `target`. Both constructors emit edges sorted by `(target, source)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularGraph {
    pub molecule: Molecule,
    pub edges: Vec<(u32, u32)>,
    pub distances: Vec<f64>,
    pub r_cut: f64,
}

impl MolecularGraph {
    pub fn id(&self) -> &str {
        &self.molecule.id
    }

    pub fn num_nodes(&self) -> usize {
        self.molecule.num_atoms()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Connects every ordered pair `i != j` with `d_ij < r_cut`.
pub fn build_radius_graph(mol: &Molecule, r_cut: f64) -> MolecularGraph {
    assert!(r_cut > 0.0, "r_cut must be positive, got {r_cut}");
    let n = mol.num_atoms();
    let mut edges = Vec::new();
    let mut distances = Vec::new();
    for target in 0..n {
        for source in 0..n {
            if source == target {
                continue;
            }
            let d = distance(&mol.positions[source], &mol.positions[target]);
            if d < r_cut {
                edges.push((source as u32, target as u32));
                distances.push(d);
            }
        }
    }
    MolecularGraph {
        molecule: mol.clone(),
        edges,
        distances,
        r_cut,
    }
}

/// Gives every atom in-edges from at most `k` nearest atoms inside `r_cut`.
///
/// Equal distances are ordered by the smaller source index.
pub fn build_knn_graph(mol: &Molecule, k: usize, r_cut: f64) -> MolecularGraph {
    assert!(k >= 1, "k must be at least 1");
    assert!(r_cut > 0.0, "r_cut must be positive, got {r_cut}");
    let n = mol.num_atoms();
    let mut edges = Vec::new();
    let mut distances = Vec::new();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    for target in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&s| s != target).filter_map(|source| {
            let d = distance(&mol.positions[source], &mol.positions[target]);
            (d < r_cut).then_some((d, source))
        }));
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate(k);
        candidates.sort_by_key(|&(_, source)| source);
        for &(d, source) in &candidates {
            edges.push((source as u32, target as u32));
            distances.push(d);
        }
    }
    MolecularGraph {
        molecule: mol.clone(),
        edges,
        distances,
        r_cut,
    }
}
