//! Tile-by-tile execution of a plan under a bulk-synchronous schedule.
//!
//! Every dimension is split into balanced ranges (sizes differ by at most
//! one), so tile `(a, b, c)` owns index rows `I[a]`, operand rows `M[b]` and
//! feature columns `N[c]`. Tiles are numbered `(a * P_M + b) * P_N + c`.
//!
//! Gather: each tile copies the rows whose index lands in its `M[b]` range
//! and leaves zeros elsewhere; with `P_M > 1` the `P_M` partials of each
//! output block are summed. Scatter: each tile accumulates the contributions
//! of its index rows that land in `M[b]`; with `P_I > 1` the `P_I` partials
//! of each operand block are merged. Scatter partials travel as exact sum
//! accumulators, so the merged result equals the reference kernel bit for
//! bit whatever the partitioning.
//!
//! A single-tile plan is one compute phase with no exchange.

use std::ops::Range;

use serde::Serialize;

use super::cost::reduce_parts;
use super::{op_cost, CostBreakdown, Divisors, HardwareProfile, OpKind, OpSpec, PlanError};
use crate::kernels::{ExactSum, KernelError, Matrix, Real};

/// `len` split into `parts` contiguous ranges, longer ones first.
pub fn balanced_ranges(len: usize, parts: usize) -> Vec<Range<usize>> {
    let (q, r) = (len / parts, len % parts);
    let mut start = 0;
    (0..parts)
        .map(|k| {
            let size = q + usize::from(k < r);
            let range = start..start + size;
            start += size;
            range
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Compute,
    Sync,
    Exchange,
}

/// A block received by `tile`; `from` is `None` for initial distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub tile: usize,
    pub from: Option<usize>,
    pub tensor: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub label: &'static str,
    /// Modelled cycles; sync is free in the simplified model.
    pub cycles: f64,
    pub transfers: Vec<Transfer>,
}

impl Phase {
    fn new(kind: PhaseKind, label: &'static str, cycles: f64) -> Self {
        Phase {
            kind,
            label,
            cycles,
            transfers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub spec: OpSpec,
    pub divisors: Divisors,
    pub phases: Vec<Phase>,
    pub cost: CostBreakdown,
    /// Per tile, how many of its index rows fell inside its operand rows.
    pub local_hits: Vec<usize>,
}

impl SimTrace {
    pub fn num_tiles(&self) -> usize {
        self.divisors.tiles()
    }

    pub fn count(&self, kind: PhaseKind) -> usize {
        self.phases.iter().filter(|p| p.kind == kind).count()
    }

    pub fn inter_tile_bytes(&self) -> usize {
        self.phases
            .iter()
            .flat_map(|p| &p.transfers)
            .map(|t| t.bytes)
            .sum()
    }

    pub fn received_bytes(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_tiles()];
        for t in self.phases.iter().flat_map(|p| &p.transfers) {
            out[t.tile] += t.bytes;
        }
        out
    }

    /// Within each phase, blocks of the same tensor differ across tiles by at
    /// most one row and one column.
    pub fn is_balanced(&self) -> bool {
        self.phases.iter().all(|phase| {
            let mut tensors: Vec<&str> = phase.transfers.iter().map(|t| t.tensor).collect();
            tensors.sort_unstable();
            tensors.dedup();
            tensors.iter().all(|&name| {
                let blocks = phase.transfers.iter().filter(|t| t.tensor == name);
                let spread = |f: fn(&Transfer) -> usize| {
                    let (lo, hi) = blocks
                        .clone()
                        .map(f)
                        .fold((usize::MAX, 0), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    hi - lo
                };
                spread(|t| t.rows) <= 1 && spread(|t| t.cols) <= 1
            })
        })
    }
}

struct Grid {
    ri: Vec<Range<usize>>,
    rm: Vec<Range<usize>>,
    rn: Vec<Range<usize>>,
    d: Divisors,
}

impl Grid {
    fn new(spec: &OpSpec, d: Divisors) -> Self {
        Grid {
            ri: balanced_ranges(spec.i, d.p_i),
            rm: balanced_ranges(spec.m, d.p_m),
            rn: balanced_ranges(spec.n, d.p_n),
            d,
        }
    }

    fn tile(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.d.p_m + b) * self.d.p_n + c
    }

    fn tiles(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let d = self.d;
        (0..d.p_i).flat_map(move |a| (0..d.p_m).flat_map(move |b| (0..d.p_n).map(move |c| (a, b, c))))
    }
}

fn check_indices(index: &[u32], rows: usize) -> Result<(), KernelError> {
    match index.iter().position(|&i| i as usize >= rows) {
        Some(position) => Err(KernelError::OutOfBounds {
            position,
            value: index[position] as usize,
            rows,
        }),
        None => Ok(()),
    }
}

fn opening_phases(trace: &mut SimTrace, distribute: Vec<Transfer>) {
    let cost = trace.cost;
    if trace.num_tiles() > 1 {
        trace.phases.push(Phase::new(PhaseKind::Sync, "distribute", 0.0));
        let mut ex = Phase::new(PhaseKind::Exchange, "distribute", cost.exchange);
        ex.transfers = distribute;
        trace.phases.push(ex);
    }
    trace.phases.push(Phase::new(PhaseKind::Compute, "local", cost.compute));
}

fn reduction_phases(trace: &mut SimTrace, transfers: Vec<Transfer>, hw: &HardwareProfile) {
    let (rx, rc) = reduce_parts(&trace.spec, trace.divisors, hw);
    trace.phases.push(Phase::new(PhaseKind::Sync, "reduce", 0.0));
    let mut ex = Phase::new(PhaseKind::Exchange, "reduce", rx);
    ex.transfers = transfers;
    trace.phases.push(ex);
    trace.phases.push(Phase::new(PhaseKind::Compute, "reduce", rc));
}

/// Runs `gather(a, index)` under divisors `d`.
pub fn simulate_gather<T: Real>(
    a: &Matrix<T>,
    index: &[u32],
    d: Divisors,
    hw: &HardwareProfile,
) -> Result<(Matrix<T>, SimTrace), PlanError> {
    let spec = OpSpec::new(OpKind::Gather, index.len(), a.rows(), a.cols());
    d.check(&spec, hw)?;
    check_indices(index, a.rows())?;
    let grid = Grid::new(&spec, d);
    let mut trace = SimTrace {
        spec,
        divisors: d,
        phases: Vec::new(),
        cost: op_cost(&spec, d, hw),
        local_hits: vec![0; d.tiles()],
    };

    let mut distribute = Vec::new();
    let mut partials: Vec<Matrix<T>> = Vec::with_capacity(d.tiles());
    for (ta, tb, tc) in grid.tiles() {
        let tile = grid.tile(ta, tb, tc);
        let (ri, rm, rn) = (&grid.ri[ta], &grid.rm[tb], &grid.rn[tc]);
        distribute.push(Transfer {
            tile,
            from: None,
            tensor: "operand",
            rows: rm.len(),
            cols: rn.len(),
            bytes: rm.len() * rn.len() * hw.b_data,
        });
        distribute.push(Transfer {
            tile,
            from: None,
            tensor: "indices",
            rows: ri.len(),
            cols: 1,
            bytes: ri.len() * hw.b_index,
        });
        let mut local = Matrix::zeros(ri.len(), rn.len());
        for (lr, r) in ri.clone().enumerate() {
            let m = index[r] as usize;
            if rm.contains(&m) {
                trace.local_hits[tile] += 1;
                local.row_mut(lr).copy_from_slice(&a.row(m)[rn.clone()]);
            }
        }
        partials.push(local);
    }
    opening_phases(&mut trace, distribute);

    let mut out = Matrix::zeros(spec.i, spec.n);
    if d.p_m == 1 {
        for (ta, _, tc) in grid.tiles() {
            let local = &partials[grid.tile(ta, 0, tc)];
            for (lr, r) in grid.ri[ta].clone().enumerate() {
                out.row_mut(r)[grid.rn[tc].clone()].copy_from_slice(local.row(lr));
            }
        }
        return Ok((out, trace));
    }

    // Output block (a, c) is split by rows across the P_M tiles holding its
    // partials; each owner receives its rows from every other partial.
    let mut transfers = Vec::new();
    for ta in 0..d.p_i {
        for tc in 0..d.p_n {
            let shares = balanced_ranges(grid.ri[ta].len(), d.p_m);
            for (owner, share) in shares.iter().enumerate() {
                let to = grid.tile(ta, owner, tc);
                for src in (0..d.p_m).filter(|&s| s != owner) {
                    transfers.push(Transfer {
                        tile: to,
                        from: Some(grid.tile(ta, src, tc)),
                        tensor: "partial",
                        rows: share.len(),
                        cols: grid.rn[tc].len(),
                        bytes: share.len() * grid.rn[tc].len() * hw.b_data,
                    });
                }
                for lr in share.clone() {
                    let r = grid.ri[ta].start + lr;
                    for (lc, col) in grid.rn[tc].clone().enumerate() {
                        let v: ExactSum<T> = (0..d.p_m)
                            .map(|b| partials[grid.tile(ta, b, tc)].get(lr, lc))
                            .collect();
                        out.set(r, col, v.value());
                    }
                }
            }
        }
    }
    reduction_phases(&mut trace, transfers, hw);
    Ok((out, trace))
}

/// Runs `scatter_add(a, index, values)` under divisors `d`.
pub fn simulate_scatter<T: Real>(
    a: &Matrix<T>,
    index: &[u32],
    values: &Matrix<T>,
    d: Divisors,
    hw: &HardwareProfile,
) -> Result<(Matrix<T>, SimTrace), PlanError> {
    if values.rows() != index.len() || values.cols() != a.cols() {
        return Err(KernelError::Shape(format!(
            "values {:?} for {} indices into {:?}",
            values.shape(),
            index.len(),
            a.shape()
        ))
        .into());
    }
    let spec = OpSpec::new(OpKind::Scatter, index.len(), a.rows(), a.cols());
    d.check(&spec, hw)?;
    check_indices(index, a.rows())?;
    let grid = Grid::new(&spec, d);
    let mut trace = SimTrace {
        spec,
        divisors: d,
        phases: Vec::new(),
        cost: op_cost(&spec, d, hw),
        local_hits: vec![0; d.tiles()],
    };

    let mut distribute = Vec::new();
    // partials[tile] is an M[b] x N[c] block of accumulators.
    let mut partials: Vec<Vec<ExactSum<T>>> = Vec::with_capacity(d.tiles());
    for (ta, tb, tc) in grid.tiles() {
        let tile = grid.tile(ta, tb, tc);
        let (ri, rm, rn) = (&grid.ri[ta], &grid.rm[tb], &grid.rn[tc]);
        distribute.push(Transfer {
            tile,
            from: None,
            tensor: "indices",
            rows: ri.len(),
            cols: 1,
            bytes: ri.len() * hw.b_index,
        });
        distribute.push(Transfer {
            tile,
            from: None,
            tensor: "values",
            rows: ri.len(),
            cols: rn.len(),
            bytes: ri.len() * rn.len() * hw.b_data,
        });
        let width = rn.len();
        let mut acc = vec![ExactSum::new(); rm.len() * width];
        if d.p_i == 1 {
            // No reduction follows, so the operand is added on this tile.
            distribute.push(Transfer {
                tile,
                from: None,
                tensor: "operand",
                rows: rm.len(),
                cols: width,
                bytes: rm.len() * width * hw.b_data,
            });
            for (lm, m) in rm.clone().enumerate() {
                for (lc, col) in rn.clone().enumerate() {
                    acc[lm * width + lc].add(a.get(m, col));
                }
            }
        }
        for r in ri.clone() {
            let m = index[r] as usize;
            if rm.contains(&m) {
                trace.local_hits[tile] += 1;
                let lm = m - rm.start;
                for (lc, col) in rn.clone().enumerate() {
                    acc[lm * width + lc].add(values.get(r, col));
                }
            }
        }
        partials.push(acc);
    }
    opening_phases(&mut trace, distribute);

    let mut out = Matrix::zeros(spec.m, spec.n);
    if d.p_i == 1 {
        for (_, tb, tc) in grid.tiles() {
            let acc = &partials[grid.tile(0, tb, tc)];
            let width = grid.rn[tc].len();
            for (lm, m) in grid.rm[tb].clone().enumerate() {
                for (lc, col) in grid.rn[tc].clone().enumerate() {
                    out.set(m, col, acc[lm * width + lc].value());
                }
            }
        }
        return Ok((out, trace));
    }

    // Operand block (b, c) is split by rows across the P_I tiles holding its
    // partials; each owner merges its rows from every partial and adds the
    // operand rows it receives.
    let mut transfers = Vec::new();
    for tb in 0..d.p_m {
        for tc in 0..d.p_n {
            let (rm, rn) = (&grid.rm[tb], &grid.rn[tc]);
            let width = rn.len();
            let shares = balanced_ranges(rm.len(), d.p_i);
            for (owner, share) in shares.iter().enumerate() {
                let to = grid.tile(owner, tb, tc);
                for src in (0..d.p_i).filter(|&s| s != owner) {
                    transfers.push(Transfer {
                        tile: to,
                        from: Some(grid.tile(src, tb, tc)),
                        tensor: "partial",
                        rows: share.len(),
                        cols: width,
                        bytes: share.len() * width * hw.b_data,
                    });
                }
                transfers.push(Transfer {
                    tile: to,
                    from: None,
                    tensor: "operand",
                    rows: share.len(),
                    cols: width,
                    bytes: share.len() * width * hw.b_data,
                });
                for lm in share.clone() {
                    let m = rm.start + lm;
                    for (lc, col) in rn.clone().enumerate() {
                        let mut total = ExactSum::new();
                        total.add(a.get(m, col));
                        for ta in 0..d.p_i {
                            total.merge(&partials[grid.tile(ta, tb, tc)][lm * width + lc]);
                        }
                        out.set(m, col, total.value());
                    }
                }
            }
        }
    }
    reduction_phases(&mut trace, transfers, hw);
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gather, scatter_add};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f32> {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0) * 10f32.powi(rng.gen_range(-4..4)))
    }

    fn sweep(spec: &OpSpec, hw: &HardwareProfile) -> Vec<Divisors> {
        let mut out = Vec::new();
        for p_i in [1, 2, 4, 8] {
            for p_m in [1, 2, 4, 8] {
                for p_n in [1, 2, 4, 8] {
                    let d = Divisors::new(p_i, p_m, p_n);
                    if d.check(spec, hw).is_ok() {
                        out.push(d);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn balanced_ranges_cover_and_balance() {
        for len in 0..40 {
            for parts in 1..10 {
                let r = balanced_ranges(len, parts);
                assert_eq!(r.len(), parts);
                assert_eq!(r[0].start, 0);
                assert_eq!(r[parts - 1].end, len);
                assert!(r.windows(2).all(|w| w[0].end == w[1].start));
                let sizes: Vec<usize> = r.iter().map(|x| x.len()).collect();
                assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                assert_eq!(*sizes.iter().max().unwrap(), len.div_ceil(parts));
            }
        }
    }

    #[test]
    fn single_tile_plan_is_one_compute_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hw = HardwareProfile::default();
        let a = random(&mut rng, 12, 5);
        let idx: Vec<u32> = (0..9).map(|_| rng.gen_range(0..12)).collect();
        let (out, trace) = simulate_gather(&a, &idx, Divisors::ONE, &hw).unwrap();
        assert_eq!(out, gather(&a, &idx).unwrap());
        assert_eq!(trace.phases.len(), 1);
        assert_eq!(trace.count(PhaseKind::Compute), 1);
        assert_eq!(trace.inter_tile_bytes(), 0);

        let v = random(&mut rng, 9, 5);
        let (out, trace) = simulate_scatter(&a, &idx, &v, Divisors::ONE, &hw).unwrap();
        assert_eq!(out, scatter_add(&a, &idx, &v).unwrap());
        assert_eq!(trace.inter_tile_bytes(), 0);
    }

    #[test]
    fn gather_sweep_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hw = HardwareProfile::with_tiles(512);
        let a = random(&mut rng, 32, 8);
        let idx: Vec<u32> = (0..40).map(|_| rng.gen_range(0..32)).collect();
        let reference = gather(&a, &idx).unwrap();
        let spec = OpSpec::gather(40, 32, 8);
        let plans = sweep(&spec, &hw);
        assert_eq!(plans.len(), 64);
        for d in plans {
            let (out, trace) = simulate_gather(&a, &idx, d, &hw).unwrap();
            assert_eq!(out, reference, "{d:?}");
            assert!(trace.is_balanced(), "{d:?}");
            assert_eq!(trace.cost, op_cost(&spec, d, &hw));
            assert_eq!(trace.count(PhaseKind::Exchange) > 1, d.p_m > 1);
        }
    }

    #[test]
    fn gather_partials_split_by_operand_rows() {
        let hw = HardwareProfile::default();
        let a = Matrix::from_fn(8, 2, |r, c| (r * 2 + c + 1) as f64);
        // three indices in the low half, two in the high half
        let idx = [0, 7, 3, 5, 1];
        let (out, trace) = simulate_gather(&a, &idx, Divisors::new(1, 2, 1), &hw).unwrap();
        assert_eq!(trace.local_hits, vec![3, 2]);
        assert_eq!(out, gather(&a, &idx).unwrap());
    }

    #[test]
    fn scatter_sweep_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hw = HardwareProfile::with_tiles(512);
        for trial in 0..5 {
            let (i, m, n) = (rng.gen_range(8..60), rng.gen_range(8..40), rng.gen_range(8..12));
            let a = random(&mut rng, m, n);
            let v = random(&mut rng, i, n);
            let idx: Vec<u32> = (0..i).map(|_| rng.gen_range(0..m as u32)).collect();
            let reference = scatter_add(&a, &idx, &v).unwrap();
            for d in sweep(&OpSpec::scatter(i, m, n), &hw) {
                let (out, trace) = simulate_scatter(&a, &idx, &v, d, &hw).unwrap();
                assert_eq!(out, reference, "trial {trial} {d:?}");
                assert!(trace.is_balanced(), "{d:?}");
                assert_eq!(trace.local_hits.iter().sum::<usize>(), i * d.p_n);
            }
        }
    }

    #[test]
    fn empty_scatter_returns_operand() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hw = HardwareProfile::default();
        let a = random(&mut rng, 10, 4);
        for d in [Divisors::ONE, Divisors::new(1, 2, 2), Divisors::new(1, 8, 4)] {
            let (out, _) = simulate_scatter(&a, &[], &Matrix::zeros(0, 4), d, &hw).unwrap();
            assert_eq!(out, a);
        }
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let hw = HardwareProfile::with_tiles(4);
        let a = Matrix::<f64>::zeros(4, 2);
        assert!(matches!(
            simulate_gather(&a, &[0, 1], Divisors::new(1, 8, 1), &hw),
            Err(PlanError::InvalidPlan { .. })
        ));
        assert!(matches!(
            simulate_gather(&a, &[0, 1], Divisors::new(2, 2, 2), &hw),
            Err(PlanError::InvalidPlan { .. })
        ));
        assert!(matches!(
            simulate_gather(&a, &[9], Divisors::ONE, &hw),
            Err(PlanError::Kernel(KernelError::OutOfBounds { .. }))
        ));
    }
}
