//! Property tests across module boundaries.

use molpack::kernels::{gather, scatter_add, Matrix};
use molpack::moldata::{build_radius_graph, synthetic_dataset};
use molpack::packing::{lpfhp, materialize, naive_padding_plan, EdgeCapacityRule, PackManifest, SizeHistogram};
use molpack::planner::{op_cost, plan_search, simulate_gather, simulate_scatter, tile_bytes, Divisors, HardwareProfile, OpSpec};
use proptest::prelude::*;

fn arb_spec() -> impl Strategy<Value = OpSpec> {
    (any::<bool>(), 1usize..3000, 1usize..3000, 1usize..200)
        .prop_map(|(g, i, m, n)| if g { OpSpec::gather(i, m, n) } else { OpSpec::scatter(i, m, n) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn searched_plan_beats_any_feasible_plan(spec in arb_spec(), p in (1usize..16, 1usize..16, 1usize..16)) {
        let hw = HardwareProfile::with_tiles(256);
        let d = Divisors::new(p.0.min(spec.i), p.1.min(spec.m), p.2.min(spec.n));
        let plan = plan_search(&spec, &hw).unwrap();
        prop_assert!(tile_bytes(&spec, plan.divisors, &hw) <= hw.sram_bytes_per_tile);
        prop_assert!(plan.divisors.tiles() <= hw.num_tiles);
        if d.check(&spec, &hw).is_ok() && tile_bytes(&spec, d, &hw) <= hw.sram_bytes_per_tile {
            prop_assert!(plan.cost.total <= op_cost(&spec, d, &hw).total);
        }
    }

    #[test]
    fn any_valid_plan_reproduces_the_kernels(
        (m, n, idx) in (1usize..30, 1usize..6).prop_flat_map(|(m, n)| (Just(m), Just(n), prop::collection::vec(0..m as u32, 1..60))),
        p in (1usize..7, 1usize..7, 1usize..7),
        seed in any::<u64>(),
    ) {
        let hw = HardwareProfile::default();
        let i = idx.len();
        let d = Divisors::new(p.0.min(i), p.1.min(m), p.2.min(n));
        let val = |r: usize, c: usize, k: u64| ((seed ^ k).wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add((r * 31 + c) as u64) % 2001) as f32 / 1000.0 - 1.0;
        let a = Matrix::from_fn(m, n, |r, c| val(r, c, 1));
        let v = Matrix::from_fn(i, n, |r, c| val(r, c, 2));
        prop_assert_eq!(simulate_gather(&a, &idx, d, &hw).unwrap().0, gather(&a, &idx).unwrap());
        let (out, trace) = simulate_scatter(&a, &idx, &v, d, &hw).unwrap();
        prop_assert_eq!(out, scatter_add(&a, &idx, &v).unwrap());
        prop_assert!(trace.is_balanced());
    }

    #[test]
    fn lpfhp_never_needs_more_packs_than_naive(sizes in prop::collection::vec(1usize..40, 1..300), extra in 0usize..80) {
        let hist = SizeHistogram::from_sizes(sizes.iter().copied());
        let s_m = hist.s_max_observed() + extra;
        let packed = lpfhp(&hist, s_m).unwrap();
        packed.validate(&hist).unwrap();
        prop_assert!(packed.num_packs() <= naive_padding_plan(&hist, s_m).unwrap().num_packs());
        prop_assert!(packed.num_packs() * s_m >= hist.total_nodes());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn manifest_round_trips_through_json(seed in any::<u64>(), sizes in prop::collection::vec(1usize..20, 1..25)) {
        let graphs: Vec<_> = synthetic_dataset(seed, &sizes).iter().map(|m| build_radius_graph(m, 5.0)).collect();
        let strategy = lpfhp(&SizeHistogram::from_graphs(&graphs), 24).unwrap();
        let packs = materialize(&strategy, &graphs, EdgeCapacityRule::default()).unwrap();
        let manifest = PackManifest::new(&strategy, &packs);
        let back: PackManifest = serde_json::from_str(&manifest.to_json()).unwrap();
        prop_assert_eq!(back.packs(), packs);
        let mut ids: Vec<String> = back.packs.iter().flat_map(|p| p.graphs.clone()).collect();
        ids.sort();
        let mut want: Vec<String> = graphs.iter().map(|g| g.id().to_string()).collect();
        want.sort();
        prop_assert_eq!(ids, want);
    }
}
