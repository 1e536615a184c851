use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{MolError, MolecularGraph};

/// Size and sparsity distributions over a dataset of graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub node_count_histogram: BTreeMap<usize, usize>,
    pub edge_count_histogram: BTreeMap<usize, usize>,
    /// `(graph id, |E| / (|V| (|V| - 1)))`, in input order.
    pub sparsity_samples: Vec<(String, f64)>,
}

/// Directed edge density; zero for graphs with fewer than two nodes.
pub fn sparsity(num_nodes: usize, num_edges: usize) -> f64 {
    if num_nodes < 2 {
        return 0.0;
    }
    num_edges as f64 / (num_nodes as f64 * (num_nodes as f64 - 1.0))
}

pub fn dataset_stats<'a, I>(graphs: I) -> Result<DatasetStats, MolError>
where
    I: IntoIterator<Item = &'a MolecularGraph>,
{
    let mut stats = DatasetStats {
        node_count_histogram: BTreeMap::new(),
        edge_count_histogram: BTreeMap::new(),
        sparsity_samples: Vec::new(),
    };
    for g in graphs {
        *stats.node_count_histogram.entry(g.num_nodes()).or_default() += 1;
        *stats.edge_count_histogram.entry(g.num_edges()).or_default() += 1;
        stats
            .sparsity_samples
            .push((g.id().to_string(), sparsity(g.num_nodes(), g.num_edges())));
    }
    if stats.sparsity_samples.is_empty() {
        return Err(MolError::EmptyDataset);
    }
    Ok(stats)
}

impl DatasetStats {
    pub fn num_graphs(&self) -> usize {
        self.sparsity_samples.len()
    }

    /// `size,count` CSV of the node-count histogram.
    pub fn node_histogram_csv(&self) -> String {
        histogram_csv(&self.node_count_histogram)
    }

    /// `size,count` CSV of the edge-count histogram.
    pub fn edge_histogram_csv(&self) -> String {
        histogram_csv(&self.edge_count_histogram)
    }

    /// `graph_id,sparsity` CSV.
    pub fn sparsity_csv(&self) -> String {
        let mut out = String::from("graph_id,sparsity\n");
        for (id, s) in &self.sparsity_samples {
            let _ = writeln!(out, "{id},{s}");
        }
        out
    }
}

fn histogram_csv(hist: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("size,count\n");
    for (size, count) in hist {
        let _ = writeln!(out, "{size},{count}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moldata::{build_radius_graph, Molecule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(id: &str, n: usize, edges: Vec<(u32, u32)>) -> MolecularGraph {
        let positions = (0..n).map(|k| [k as f64, 0.0, 0.0]).collect();
        let distances = edges
            .iter()
            .map(|&(s, t)| (s as f64 - t as f64).abs())
            .collect();
        MolecularGraph {
            molecule: Molecule::new(id, vec![1; n], positions, None).unwrap(),
            edges,
            distances,
            r_cut: 100.0,
        }
    }

    #[test]
    fn complete_graph_has_unit_sparsity() {
        let edges = vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
        let stats = dataset_stats(&[graph("a", 3, edges)]).unwrap();
        assert_eq!(stats.sparsity_samples, vec![("a".to_string(), 1.0)]);
    }

    #[test]
    fn empty_graph_has_zero_sparsity() {
        let stats = dataset_stats(&[graph("a", 2, vec![])]).unwrap();
        assert_eq!(stats.sparsity_samples[0].1, 0.0);
    }

    #[test]
    fn histogram_counts_sizes() {
        let graphs = vec![graph("a", 9, vec![]), graph("b", 9, vec![]), graph("c", 12, vec![])];
        let stats = dataset_stats(&graphs).unwrap();
        assert_eq!(
            stats.node_count_histogram,
            BTreeMap::from([(9, 2), (12, 1)])
        );
        assert_eq!(stats.edge_count_histogram.values().sum::<usize>(), 3);
        assert_eq!(stats.node_histogram_csv(), "size,count\n9,2\n12,1\n");
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let none: Vec<MolecularGraph> = vec![];
        assert!(matches!(dataset_stats(&none), Err(MolError::EmptyDataset)));
    }

    /// Mean sparsity of radius graphs over uniform clouds at fixed number
    /// density falls as the cloud grows.
    #[test]
    fn sparsity_falls_with_size_at_fixed_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let density = 0.1; // atoms per cubic Ångström
        let mut means = Vec::new();
        for n in [10usize, 20, 40, 80] {
            let box_len = (n as f64 / density).cbrt();
            let total: f64 = (0..100)
                .map(|_| {
                    let pos = (0..n)
                        .map(|_| [0, 1, 2].map(|_| rng.gen_range(0.0..box_len)))
                        .collect();
                    let mol = Molecule::new("m", vec![1; n], pos, None).unwrap();
                    let g = build_radius_graph(&mol, 3.0);
                    sparsity(g.num_nodes(), g.num_edges())
                })
                .sum();
            means.push(total / 100.0);
        }
        for w in means.windows(2) {
            assert!(w[1] < w[0], "{means:?}");
        }
    }
}
