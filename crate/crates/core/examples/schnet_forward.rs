//! Runs a randomly initialised SchNet over LPFHP packs and compares each
//! prediction with the same graph run on its own.

use molpack::kernels::{schnet_forward, ModelConfig, ModelParams, SchNet};
use molpack::moldata::{build_radius_graph, synthetic_dataset, MolecularGraph};
use molpack::packing::{assemble_graphs, lpfhp, materialize, EdgeCapacityRule, Pack, SizeHistogram};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mols = synthetic_dataset(11, &[4, 7, 9, 12, 15, 18, 18, 21, 25, 29]);
    let graphs: Vec<MolecularGraph> = mols.iter().map(|m| build_radius_graph(m, 6.0)).collect();
    let params = ModelParams::init(ModelConfig { hidden: 32, n_blocks: 2, ..ModelConfig::default() })?;
    let model = SchNet::<f32>::new(&params);

    let strategy = lpfhp(&SizeHistogram::from_graphs(&graphs), 32)?;
    let packs = materialize(&strategy, &graphs, EdgeCapacityRule::default())?;
    let mut worst = 0.0f32;
    for pack in &packs {
        let members: Vec<&MolecularGraph> =
            pack.graph_ids.iter().map(|id| graphs.iter().find(|g| g.id() == id).unwrap()).collect();
        let preds = schnet_forward(&assemble_graphs(pack, &members)?, &model)?;
        for (g, p) in members.iter().zip(&preds) {
            let alone = schnet_forward(&assemble_graphs(&Pack::single(g), &[g])?, &model)?[0];
            println!("{:>6} ({:>2} atoms) packed {p:>10.5} alone {alone:>10.5}", g.id(), g.num_nodes());
            worst = worst.max((p - alone).abs() / alone.abs());
        }
    }
    println!("{} packs, max relative deviation {worst:e}", packs.len());
    Ok(())
}
