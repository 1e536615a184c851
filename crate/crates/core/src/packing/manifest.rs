use serde::{Deserialize, Serialize};

use super::{padding_fraction, Pack, PackingStrategy};

/// JSON description of a materialised packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackManifest {
    pub s_m: usize,
    pub edge_capacity: usize,
    pub packs: Vec<PackRecord>,
    pub padding_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackRecord {
    pub graphs: Vec<String>,
    pub real_nodes: usize,
    pub real_edges: usize,
}

impl PackManifest {
    pub fn new(strategy: &PackingStrategy, packs: &[Pack]) -> Self {
        PackManifest {
            s_m: strategy.capacity(),
            edge_capacity: packs.first().map_or(0, |p| p.edge_capacity),
            packs: packs
                .iter()
                .map(|p| PackRecord {
                    graphs: p.graph_ids.clone(),
                    real_nodes: p.real_node_count,
                    real_edges: p.real_edge_count,
                })
                .collect(),
            padding_fraction: padding_fraction(strategy),
        }
    }

    /// Rebuilds the packs the manifest describes.
    pub fn packs(&self) -> Vec<Pack> {
        self.packs
            .iter()
            .map(|r| Pack {
                graph_ids: r.graphs.clone(),
                node_capacity: self.s_m,
                edge_capacity: self.edge_capacity,
                real_node_count: r.real_nodes,
                real_edge_count: r.real_edges,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{lpfhp, SizeHistogram};

    #[test]
    fn json_shape() {
        let st = lpfhp(&SizeHistogram::from_counts([(4, 1), (2, 1)]), 6).unwrap();
        let packs = vec![Pack {
            graph_ids: vec!["a".into(), "b".into()],
            node_capacity: 6,
            edge_capacity: 8,
            real_node_count: 6,
            real_edge_count: 4,
        }];
        let m = PackManifest::new(&st, &packs);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["s_m"], 6);
        assert_eq!(v["edge_capacity"], 8);
        assert_eq!(v["packs"][0]["graphs"][1], "b");
        assert_eq!(v["packs"][0]["real_nodes"], 6);
        assert_eq!(v["packs"][0]["real_edges"], 4);
        assert_eq!(v["padding_fraction"], 0.0);
        assert_eq!(m.packs(), packs);
    }
}
