//! Packs a QM9-like size histogram at several capacities and compares LPFHP
//! with one-graph-per-pack padding. Small instances are checked against the
//! exhaustive optimum.

use molpack::packing::{exact_pack_oracle, lpfhp, naive_padding_plan, padding_fraction, SizeHistogram};

const FIXTURE: &str = include_str!("../tests/data/qm9_like_histogram.csv");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hist = SizeHistogram::from_csv(FIXTURE)?;
    println!("{} graphs, largest {}", hist.num_graphs(), hist.s_max_observed());
    println!("s_m,naive,lpfhp,packs");
    for s_m in [29, 32, 37, 48, 58, 87, 116] {
        let packed = lpfhp(&hist, s_m)?;
        let naive = padding_fraction(&naive_padding_plan(&hist, s_m)?);
        println!("{s_m},{naive:.4},{:.4},{}", padding_fraction(&packed), packed.num_packs());
    }

    let small = SizeHistogram::from_sizes([7, 5, 5, 4, 3, 3, 2, 9, 6]);
    let heuristic = lpfhp(&small, 12)?.num_packs();
    let optimum = exact_pack_oracle(&small, 12)?;
    println!("small instance: lpfhp {heuristic} packs, optimum {optimum}");
    Ok(())
}
