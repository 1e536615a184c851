//! Executes a scatter-add tile by tile under a chosen plan and confirms the
//! result is identical to the single-device kernel.

use molpack::kernels::{scatter_add, Matrix};
use molpack::planner::{simulate_scatter, Divisors, HardwareProfile, PhaseKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (i, m, n) = (2_000, 300, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = Matrix::<f32>::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let values = Matrix::<f32>::from_fn(i, n, |_, _| rng.gen_range(-1.0..1.0));
    let index: Vec<u32> = (0..i).map(|_| rng.gen_range(0..m as u32)).collect();

    let hw = HardwareProfile::with_tiles(64);
    let reference = scatter_add(&a, &index, &values)?;
    for d in [Divisors::new(1, 1, 1), Divisors::new(4, 2, 8), Divisors::new(8, 8, 1)] {
        let (out, trace) = simulate_scatter(&a, &index, &values, d, &hw)?;
        println!(
            "{:?}: {} tiles, {} exchange phases, {} bytes moved, balanced {}, identical {}",
            d,
            trace.num_tiles(),
            trace.count(PhaseKind::Exchange),
            trace.inter_tile_bytes(),
            trace.is_balanced(),
            out == reference
        );
    }
    Ok(())
}
