//! Finds the cheapest tile partitioning for a gather and a scatter and shows
//! how the cost splits between exchange, compute and reduction.

use molpack::planner::{op_cost, plan_search, Divisors, HardwareProfile, OpSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hw = HardwareProfile::default();
    for spec in [OpSpec::gather(65_536, 4_096, 128), OpSpec::scatter(65_536, 4_096, 128)] {
        let plan = plan_search(&spec, &hw)?;
        println!("{spec}: {:?} -> {:?}", plan.divisors, plan.cost);
        let flat = op_cost(&spec, Divisors::new(hw.num_tiles, 1, 1), &hw);
        println!("  splitting I only would cost {:.1}", flat.total);
    }
    let spot = OpSpec::gather(1_000_000, 50_000, 64);
    let cost = op_cost(&spot, Divisors::new(64, 4, 4), &hw);
    println!("{spot} at (64, 4, 4): {}", cost.total);
    Ok(())
}
