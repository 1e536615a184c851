//! Builds radius graphs for a synthetic dataset, round-trips them through the
//! XYZ format and the on-disk graph store, and prints dataset statistics.

use molpack::moldata::{
    build_radius_graph, dataset_stats, format_xyz, parse_xyz, synthetic_dataset, GraphStore, DEFAULT_R_CUT,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mols = synthetic_dataset(7, &[5, 9, 12, 12, 18, 18, 18, 23, 29]);
    let text = format_xyz(&mols);
    let parsed = parse_xyz(&text)?;
    assert_eq!(parsed.len(), mols.len());

    let graphs: Vec<_> = parsed.iter().map(|m| build_radius_graph(m, DEFAULT_R_CUT)).collect();
    let stats = dataset_stats(&graphs)?;
    print!("{}", stats.node_histogram_csv());
    print!("{}", stats.edge_histogram_csv());

    let dir = tempfile_dir()?;
    let store = GraphStore::open(&dir)?;
    for g in &graphs {
        store.put(g)?;
    }
    let back = store.get("mol-4")?;
    println!("mol-4: {} atoms, {} edges", back.num_nodes(), back.num_edges());
    let _ = store.get("mol-4")?;
    println!("store counters: {:?}", store.counters());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("molpack-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
