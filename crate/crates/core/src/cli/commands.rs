use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{write_csv, write_json, CliError, GraphKind, Precision, RunConfig};
use crate::kernels::{gather, scatter_add, schnet_forward, Matrix, ModelParams, Real, SchNet};
use crate::moldata::{
    build_knn_graph, build_radius_graph, dataset_stats, parse_xyz, qm9_like_size_weights,
    sample_sizes, Molecule, MolecularGraph,
};
use crate::packing::{
    assemble_graphs, lpfhp, materialize, naive_padding_plan, padding_fraction, Pack, PackManifest,
    PackingStrategy, SizeHistogram,
};
use crate::planner::{
    plan_search, simulate_gather, simulate_scatter, Divisors, HardwareProfile, OpKind, OpSpec,
    PlanReport,
};

pub fn load_molecules(cfg: &RunConfig) -> Result<Vec<Molecule>, CliError> {
    let path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Config("no dataset given".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mols = parse_xyz(&text)?;
    if mols.is_empty() {
        return Err(CliError::NoMolecules(path.display().to_string()));
    }
    Ok(mols)
}

pub fn build_graphs(cfg: &RunConfig, mols: &[Molecule]) -> Vec<MolecularGraph> {
    mols.iter()
        .map(|m| match cfg.graph {
            GraphKind::Radius => build_radius_graph(m, cfg.r_cut),
            GraphKind::Knn => build_knn_graph(m, cfg.k, cfg.r_cut),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub graphs: usize,
    pub max_size: usize,
    pub mode_size: usize,
    pub mean_size: f64,
    pub mean_sparsity: f64,
    pub files: Vec<PathBuf>,
}

/// Writes `node_histogram.csv`, `edge_histogram.csv` and `sparsity.csv`.
pub fn cmd_stats(cfg: &RunConfig) -> Result<StatsSummary, CliError> {
    let mols = load_molecules(cfg)?;
    let graphs = build_graphs(cfg, &mols);
    let stats = dataset_stats(&graphs)?;
    let files = vec![
        write_csv(cfg, "node_histogram.csv", &stats.node_histogram_csv())?,
        write_csv(cfg, "edge_histogram.csv", &stats.edge_histogram_csv())?,
        write_csv(cfg, "sparsity.csv", &stats.sparsity_csv())?,
    ];
    let hist = &stats.node_count_histogram;
    let total: usize = hist.iter().map(|(s, c)| s * c).sum();
    Ok(StatsSummary {
        graphs: graphs.len(),
        max_size: *hist.keys().next_back().expect("nonempty"),
        mode_size: hist
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(s, _)| *s)
            .expect("nonempty"),
        mean_size: total as f64 / graphs.len() as f64,
        mean_sparsity: stats.sparsity_samples.iter().map(|s| s.1).sum::<f64>()
            / stats.sparsity_samples.len() as f64,
        files,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub s_m: usize,
    pub naive_padding_fraction: f64,
    pub lpfhp_padding_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PackSummary {
    pub graphs: usize,
    pub rows: Vec<SweepRow>,
    pub chosen_s_m: usize,
    pub num_packs: usize,
    pub padding_fraction: f64,
    pub files: Vec<PathBuf>,
    pub seconds: f64,
}

#[derive(Serialize)]
struct StrategyReport<'a> {
    s_m: usize,
    num_packs: usize,
    padding_fraction: f64,
    entries: Vec<StrategyEntry<'a>>,
}

#[derive(Serialize)]
struct StrategyEntry<'a> {
    multiplicity: usize,
    composition: &'a [usize],
}

fn sweep_values(cfg: &RunConfig, s_obs: usize) -> Result<Vec<usize>, CliError> {
    let values = if cfg.s_max.is_empty() {
        (s_obs..=4 * s_obs).collect()
    } else {
        cfg.s_max.clone()
    };
    if let Some(&bad) = values.iter().find(|&&s| s < s_obs) {
        return Err(crate::packing::PackError::Capacity { size: s_obs, capacity: bad }.into());
    }
    Ok(values)
}

/// Sweeps pack capacities, writing `packing_sweep.csv` with naive and LPFHP
/// padding fractions, plus `pack_manifest.json` (dataset input) or
/// `pack_strategy.json` (histogram input) for the chosen capacity.
pub fn cmd_pack(cfg: &RunConfig) -> Result<PackSummary, CliError> {
    let start = Instant::now();
    let (hist, graphs) = match (&cfg.dataset, &cfg.histogram) {
        (Some(_), _) => {
            let graphs = build_graphs(cfg, &load_molecules(cfg)?);
            (SizeHistogram::from_graphs(&graphs), Some(graphs))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            (SizeHistogram::from_csv(&text)?, None)
        }
        (None, None) => return Err(CliError::Config("pack needs a dataset or a histogram".into())),
    };
    if hist.is_empty() {
        return Err(CliError::Config("histogram is empty".into()));
    }
    let sweep = sweep_values(cfg, hist.s_max_observed())?;

    let mut rows = Vec::with_capacity(sweep.len());
    let mut strategies: BTreeMap<usize, PackingStrategy> = BTreeMap::new();
    for &s_m in &sweep {
        let packed = lpfhp(&hist, s_m)?;
        rows.push(SweepRow {
            s_m,
            naive_padding_fraction: padding_fraction(&naive_padding_plan(&hist, s_m)?),
            lpfhp_padding_fraction: padding_fraction(&packed),
        });
        strategies.insert(s_m, packed);
    }
    let chosen = match cfg.pack_s_m {
        Some(s) => s,
        None => rows
            .iter()
            .min_by(|a, b| a.lpfhp_padding_fraction.total_cmp(&b.lpfhp_padding_fraction))
            .expect("sweep is nonempty")
            .s_m,
    };
    let strategy = match strategies.remove(&chosen) {
        Some(s) => s,
        None => lpfhp(&hist, chosen)?,
    };

    let mut csv = String::from("s_m,naive_padding_fraction,lpfhp_padding_fraction\n");
    for r in &rows {
        csv += &format!("{},{},{}\n", r.s_m, r.naive_padding_fraction, r.lpfhp_padding_fraction);
    }
    let mut files = vec![write_csv(cfg, "packing_sweep.csv", &csv)?];
    match &graphs {
        Some(graphs) => {
            let packs = materialize(&strategy, graphs, cfg.edge_capacity)?;
            files.push(write_json(cfg, "pack_manifest.json", &PackManifest::new(&strategy, &packs))?);
        }
        None => {
            let report = StrategyReport {
                s_m: chosen,
                num_packs: strategy.num_packs(),
                padding_fraction: padding_fraction(&strategy),
                entries: strategy
                    .entries()
                    .map(|(multiplicity, _, composition)| StrategyEntry { multiplicity, composition })
                    .collect(),
            };
            files.push(write_json(cfg, "pack_strategy.json", &report)?);
        }
    }
    Ok(PackSummary {
        graphs: hist.num_graphs(),
        rows,
        chosen_s_m: chosen,
        num_packs: strategy.num_packs(),
        padding_fraction: padding_fraction(&strategy),
        files,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanOutcome {
    pub report: PlanReport,
    /// Plans checked by `--verify`, with the instance they ran on.
    pub verified_plans: Option<usize>,
    pub verify_shape: Option<(usize, usize, usize)>,
    pub files: Vec<PathBuf>,
}

/// Largest instance `--verify` simulates; bigger specs are verified on a
/// clamped copy with the same divisor sweep.
const VERIFY_MAX: (usize, usize, usize) = (1024, 1024, 64);

/// Finds the cheapest plan and writes `plan.json`. With `verify`, every
/// feasible plan in `{1,2,4,8}^3`, and the chosen one, is simulated on a
/// seeded random instance and compared with the reference kernel.
pub fn cmd_plan(cfg: &RunConfig, spec: OpSpec, verify: bool) -> Result<PlanOutcome, CliError> {
    let hw = match &cfg.profile {
        Some(p) => HardwareProfile::load(p)?,
        None => HardwareProfile::default(),
    };
    let plan = plan_search(&spec, &hw)?;
    let report = plan.report(&hw);
    let files = vec![write_json(cfg, "plan.json", &report)?];

    let (mut verified_plans, mut verify_shape) = (None, None);
    if verify {
        let small = OpSpec::new(
            spec.kind,
            spec.i.min(VERIFY_MAX.0),
            spec.m.min(VERIFY_MAX.1),
            spec.n.min(VERIFY_MAX.2),
        );
        let mut plans: Vec<Divisors> = Vec::new();
        for p_i in [1, 2, 4, 8] {
            for p_m in [1, 2, 4, 8] {
                for p_n in [1, 2, 4, 8] {
                    plans.push(Divisors::new(p_i, p_m, p_n));
                }
            }
        }
        if small == spec {
            plans.push(plan.divisors);
        }
        plans.retain(|d| d.check(&small, &hw).is_ok());
        plans.sort();
        plans.dedup();
        let mismatches = verify_plans(&small, &plans, &hw, cfg.seed.unwrap_or(0))?;
        if !mismatches.is_empty() {
            return Err(CliError::Check(format!(
                "{} plan(s) differ from the reference: {mismatches:?}",
                mismatches.len()
            )));
        }
        verified_plans = Some(plans.len());
        verify_shape = Some((small.i, small.m, small.n));
    }
    Ok(PlanOutcome {
        report,
        verified_plans,
        verify_shape,
        files,
    })
}

fn verify_plans(
    spec: &OpSpec,
    plans: &[Divisors],
    hw: &HardwareProfile,
    seed: u64,
) -> Result<Vec<(usize, usize, usize)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::<f32>::from_fn(spec.m, spec.n, |_, _| rng.gen_range(-1.0..1.0));
    let idx: Vec<u32> = (0..spec.i).map(|_| rng.gen_range(0..spec.m as u32)).collect();
    let mut bad = Vec::new();
    match spec.kind {
        OpKind::Gather => {
            let reference = gather(&a, &idx)?;
            for &d in plans {
                if simulate_gather(&a, &idx, d, hw)?.0 != reference {
                    bad.push(d.as_tuple());
                }
            }
        }
        OpKind::Scatter => {
            let v = Matrix::<f32>::from_fn(spec.i, spec.n, |_, _| rng.gen_range(-1.0..1.0));
            let reference = scatter_add(&a, &idx, &v)?;
            for &d in plans {
                if simulate_scatter(&a, &idx, &v, d, hw)?.0 != reference {
                    bad.push(d.as_tuple());
                }
            }
        }
    }
    Ok(bad)
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardSummary {
    pub graphs: usize,
    pub packs: usize,
    pub s_m: usize,
    pub precision: Precision,
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

fn relative_deviation(packed: f64, alone: f64) -> f64 {
    if packed == alone {
        0.0
    } else {
        (packed - alone).abs() / alone.abs().max(f64::MIN_POSITIVE)
    }
}

/// Runs `f` over `items` on `workers` threads; output order follows input.
fn parallel_map<I: Sync, O: Send>(
    items: &[I],
    workers: usize,
    f: impl Fn(&I) -> Result<O, CliError> + Sync,
) -> Result<Vec<O>, CliError> {
    let chunk = items.len().div_ceil(workers.max(1)).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Result<Vec<O>, _>>()))
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().expect("worker panicked")?);
        }
        Ok(out)
    })
}

fn forward_in<T: Real>(
    params: &ModelParams,
    packs: &[Pack],
    graphs: &[MolecularGraph],
    workers: usize,
) -> Result<(BTreeMap<String, f64>, f64), CliError> {
    let model = SchNet::<T>::new(params);
    let by_id: BTreeMap<&str, &MolecularGraph> = graphs.iter().map(|g| (g.id(), g)).collect();

    let packed = parallel_map(packs, workers, |pack| {
        let members: Vec<&MolecularGraph> = pack.graph_ids.iter().map(|id| by_id[id.as_str()]).collect();
        let batch = assemble_graphs(pack, &members)?;
        let preds = schnet_forward(&batch, &model)?;
        Ok(pack
            .graph_ids
            .iter()
            .cloned()
            .zip(preds.into_iter().map(Real::as_f64))
            .collect::<Vec<_>>())
    })?;
    let alone = parallel_map(graphs, workers, |g| {
        let batch = assemble_graphs(&Pack::single(g), &[g])?;
        Ok((g.id().to_string(), schnet_forward(&batch, &model)?[0].as_f64()))
    })?;

    let predictions: BTreeMap<String, f64> = packed.into_iter().flatten().collect();
    let mut worst = 0.0f64;
    for (id, u) in alone {
        worst = worst.max(relative_deviation(predictions[&id], u));
    }
    Ok((predictions, worst))
}

/// Predicts every graph through packed batches, writes `predictions.csv`
/// (`graph_id,prediction`, sorted by id) and `forward_report.json` with the
/// largest packed-versus-alone relative deviation.
pub fn cmd_forward(cfg: &RunConfig) -> Result<ForwardSummary, CliError> {
    let params = match (&cfg.weights, cfg.seed) {
        (Some(stem), _) => ModelParams::load(stem)?,
        (None, Some(_)) => ModelParams::init(cfg.model.clone())?,
        (None, None) => {
            return Err(CliError::Config(
                "forward needs weights or a seed for random weights".into(),
            ))
        }
    };
    let graphs = build_graphs(cfg, &load_molecules(cfg)?);
    let hist = SizeHistogram::from_graphs(&graphs);
    let s_m = cfg
        .pack_s_m
        .or_else(|| cfg.s_max.first().copied())
        .unwrap_or_else(|| hist.s_max_observed());
    let strategy = lpfhp(&hist, s_m)?;
    let packs = materialize(&strategy, &graphs, cfg.edge_capacity)?;

    let (predictions, worst, tolerance) = match cfg.precision {
        Precision::F32 => {
            let (p, w) = forward_in::<f32>(&params, &packs, &graphs, cfg.workers)?;
            (p, w, 1e-5)
        }
        Precision::F64 => {
            let (p, w) = forward_in::<f64>(&params, &packs, &graphs, cfg.workers)?;
            (p, w, 1e-10)
        }
    };

    let mut csv = String::from("graph_id,prediction\n");
    for (id, p) in &predictions {
        csv += &format!("{id},{p}\n");
    }
    let mut summary = ForwardSummary {
        graphs: graphs.len(),
        packs: packs.len(),
        s_m,
        precision: cfg.precision,
        max_relative_deviation: worst,
        tolerance,
        passed: worst < tolerance,
        files: Vec::new(),
    };
    summary.files.push(write_csv(cfg, "predictions.csv", &csv)?);
    summary.files.push(write_json(cfg, "forward_report.json", &summary)?);
    if !summary.passed {
        return Err(CliError::Check(format!(
            "packed predictions deviate from unpacked by {worst:e} (tolerance {tolerance:e})"
        )));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    /// `(graphs, seconds)` per step, best of the configured repeats.
    pub rows: Vec<(usize, f64)>,
    pub growth_exponent: f64,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

/// Least-squares slope of `ln t` against `ln n`.
fn growth_exponent(rows: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(n, t)| ((n as f64).ln(), t.max(1e-12).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Times histogram construction plus LPFHP at doubling graph counts drawn
/// from a QM9-like size distribution and fits the growth exponent, which
/// must stay below 1.3.
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchSummary, CliError> {
    let b = &cfg.bench;
    if b.steps < 2 || b.base == 0 || b.repeats == 0 {
        return Err(CliError::Config("bench needs base > 0, steps >= 2, repeats >= 1".into()));
    }
    let s_m = cfg.pack_s_m.unwrap_or(58);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let weights = qm9_like_size_weights();
    let mut rows = Vec::with_capacity(b.steps);
    for step in 0..b.steps {
        let n = b.base << step;
        let sizes = sample_sizes(&mut rng, &weights, n);
        let mut best = f64::INFINITY;
        for _ in 0..b.repeats {
            let t = Instant::now();
            let hist = SizeHistogram::from_sizes(sizes.iter().copied());
            let strategy = lpfhp(&hist, s_m)?;
            std::hint::black_box(strategy.num_packs());
            best = best.min(t.elapsed().as_secs_f64());
        }
        rows.push((n, best));
    }
    let exponent = growth_exponent(&rows);
    let mut csv = String::from("graphs,seconds\n");
    for (n, t) in &rows {
        csv += &format!("{n},{t}\n");
    }
    let files = vec![write_csv(cfg, "bench.csv", &csv)?];
    let passed = exponent < 1.3;
    if !passed {
        return Err(CliError::Check(format!("lpfhp growth exponent {exponent:.3} >= 1.3")));
    }
    Ok(BenchSummary {
        rows,
        growth_exponent: exponent,
        passed,
        files,
    })
}
