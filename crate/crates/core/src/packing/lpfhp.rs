use serde::{Deserialize, Serialize};

use super::{PackError, SizeHistogram};

/// Pack compositions with multiplicities, indexed by remaining space.
///
/// `bins()[r]` lists `(multiplicity, composition)` entries whose compositions
/// leave exactly `r` free node slots. Entries keep the order in which the
/// packing pass appended them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingStrategy {
    capacity: usize,
    bins: Vec<Vec<(usize, Vec<usize>)>>,
}

impl PackingStrategy {
    fn empty(capacity: usize) -> Self {
        PackingStrategy {
            capacity,
            bins: vec![Vec::new(); capacity + 1],
        }
    }

    /// Node capacity `s_m` of every pack.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn bins(&self) -> &[Vec<(usize, Vec<usize>)>] {
        &self.bins
    }

    /// `(remaining space, multiplicity, composition)` for every entry, by
    /// ascending remaining space then insertion order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &[usize])> + '_ {
        self.bins.iter().enumerate().flat_map(|(r, list)| {
            list.iter()
                .map(move |(count, comp)| (r, *count, comp.as_slice()))
        })
    }

    /// Every pack as its composition, multiplicities expanded.
    pub fn packs(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.entries()
            .flat_map(|(_, count, comp)| std::iter::repeat_n(comp, count))
    }

    pub fn num_packs(&self) -> usize {
        self.entries().map(|(_, count, _)| count).sum()
    }

    pub fn total_nodes(&self) -> usize {
        self.entries()
            .map(|(_, count, comp)| count * comp.iter().sum::<usize>())
            .sum()
    }

    pub fn padding_nodes(&self) -> usize {
        self.num_packs() * self.capacity - self.total_nodes()
    }

    /// Checks the capacity, remaining-space and assignment invariants against
    /// the histogram the strategy was built from.
    pub fn validate(&self, hist: &SizeHistogram) -> Result<(), PackError> {
        let mut assigned = SizeHistogram::new();
        for (r, count, comp) in self.entries() {
            let used: usize = comp.iter().sum();
            if used > self.capacity || self.capacity - used != r {
                return Err(PackError::Consistency(format!(
                    "composition {comp:?} filed under remaining space {r} with capacity {}",
                    self.capacity
                )));
            }
            if count == 0 {
                return Err(PackError::Consistency(format!(
                    "entry {comp:?} has zero multiplicity"
                )));
            }
            for &s in comp {
                assigned.add(s, count);
            }
        }
        if &assigned != hist {
            return Err(PackError::Consistency(
                "graphs are not assigned exactly once".into(),
            ));
        }
        Ok(())
    }
}

fn check_capacity(hist: &SizeHistogram, s_m: usize) -> Result<(), PackError> {
    match hist.s_max_observed() {
        s if s > s_m => Err(PackError::Capacity {
            size: s,
            capacity: s_m,
        }),
        _ => Ok(()),
    }
}

/// Longest-pack-first histogram packing.
///
/// Sizes are visited from `s_m` down to 1. Each size's count is placed into
/// the existing entries with the smallest remaining space that still fits,
/// splitting an entry when only part of its multiplicity is needed, and a new
/// pack entry is opened for whatever does not fit anywhere.
pub fn lpfhp(hist: &SizeHistogram, s_m: usize) -> Result<PackingStrategy, PackError> {
    check_capacity(hist, s_m)?;
    let mut strategy = PackingStrategy::empty(s_m);
    let bins = &mut strategy.bins;

    for s in (1..=s_m).rev() {
        let mut c = hist.count(s);
        let r = s_m - s;
        while c > 0 {
            // Best fit: smallest remaining space that can still take `s`.
            match (s..=s_m).find(|&j| !bins[j].is_empty()) {
                None => {
                    bins[r].push((c, vec![s]));
                    c = 0;
                }
                Some(i) => c = update(bins, i, c, s),
            }
        }
    }
    Ok(strategy)
}

fn update(bins: &mut [Vec<(usize, Vec<usize>)>], i: usize, c: usize, s: usize) -> usize {
    let (c_p, mut p) = bins[i].pop().expect("bin selected as non-empty");
    if c >= c_p {
        p.push(s);
        bins[i - s].push((c_p, p));
        c - c_p
    } else {
        bins[i].push((c_p - c, p.clone()));
        p.push(s);
        bins[i - s].push((c, p));
        0
    }
}

/// One pack per graph: padding every graph up to `s_m`.
pub fn naive_padding_plan(hist: &SizeHistogram, s_m: usize) -> Result<PackingStrategy, PackError> {
    check_capacity(hist, s_m)?;
    let mut strategy = PackingStrategy::empty(s_m);
    for (s, c) in hist.iter().collect::<Vec<_>>().into_iter().rev() {
        strategy.bins[s_m - s].push((c, vec![s]));
    }
    Ok(strategy)
}

/// Share of node slots holding padding.
pub fn padding_fraction(strategy: &PackingStrategy) -> f64 {
    let slots = strategy.num_packs() * strategy.capacity();
    if slots == 0 {
        return 0.0;
    }
    strategy.padding_nodes() as f64 / slots as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::exact_pack_oracle;
    use proptest::prelude::*;

    fn packs(strategy: &PackingStrategy) -> Vec<Vec<usize>> {
        strategy.packs().map(<[usize]>::to_vec).collect()
    }

    #[test]
    fn maximal_graphs_stay_single() {
        let hist = SizeHistogram::from_counts([(10, 4)]);
        let st = lpfhp(&hist, 10).unwrap();
        assert_eq!(st.num_packs(), 4);
        assert_eq!(st.padding_nodes(), 0);
        st.validate(&hist).unwrap();
    }

    #[test]
    fn traced_example() {
        let hist = SizeHistogram::from_counts([(10, 1), (7, 1), (3, 2)]);
        let st = lpfhp(&hist, 10).unwrap();
        let mut got = packs(&st);
        got.sort();
        assert_eq!(got, vec![vec![3], vec![7, 3], vec![10]]);
        assert_eq!(st.padding_nodes(), 7);
        assert!((padding_fraction(&st) - 7.0 / 30.0).abs() < 1e-15);
        st.validate(&hist).unwrap();
    }

    #[test]
    fn perfect_pairs() {
        let hist = SizeHistogram::from_counts([(6, 2), (4, 2)]);
        let st = lpfhp(&hist, 10).unwrap();
        assert_eq!(packs(&st), vec![vec![6, 4], vec![6, 4]]);
        assert_eq!(st.bins()[0], vec![(2, vec![6, 4])]);
        assert_eq!(padding_fraction(&st), 0.0);
        assert_eq!(exact_pack_oracle(&hist, 10).unwrap(), 2);
    }

    #[test]
    fn partial_split_keeps_remainder_on_stack() {
        // Three 6s leave (3, [6]) at R=4; two 4s take two of them.
        let hist = SizeHistogram::from_counts([(6, 3), (4, 2)]);
        let st = lpfhp(&hist, 10).unwrap();
        assert_eq!(st.bins()[4], vec![(1, vec![6])]);
        assert_eq!(st.bins()[0], vec![(2, vec![6, 4])]);
    }

    #[test]
    fn oversize_graph_is_rejected() {
        let hist = SizeHistogram::from_counts([(12, 1)]);
        let err = lpfhp(&hist, 10).unwrap_err();
        assert!(matches!(err, PackError::Capacity { size: 12, capacity: 10 }));
        assert!(naive_padding_plan(&hist, 10).is_err());
    }

    #[test]
    fn naive_plan_values() {
        let st = naive_padding_plan(&SizeHistogram::from_counts([(29, 1)]), 29).unwrap();
        assert_eq!((st.num_packs(), st.padding_nodes()), (1, 0));
        let st = naive_padding_plan(&SizeHistogram::from_counts([(9, 2)]), 29).unwrap();
        assert_eq!((st.num_packs(), st.padding_nodes()), (2, 40));
        let st = naive_padding_plan(&SizeHistogram::from_counts([(4, 1)]), 10).unwrap();
        assert!((padding_fraction(&st) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn empty_histogram() {
        let st = lpfhp(&SizeHistogram::new(), 5).unwrap();
        assert_eq!(st.num_packs(), 0);
        assert_eq!(padding_fraction(&st), 0.0);
    }

    fn arb_hist() -> impl Strategy<Value = (SizeHistogram, usize)> {
        (1usize..40).prop_flat_map(|s_max| {
            (
                proptest::collection::vec((1..=s_max, 1usize..50), 1..12),
                0usize..3,
            )
                .prop_map(move |(pairs, extra)| {
                    let hist = SizeHistogram::from_counts(pairs);
                    let s_m = hist.s_max_observed() * (extra + 1);
                    (hist, s_m)
                })
        })
    }

    proptest! {
        #[test]
        fn assignment_is_complete((hist, s_m) in arb_hist()) {
            let st = lpfhp(&hist, s_m).unwrap();
            st.validate(&hist).unwrap();
            let naive = naive_padding_plan(&hist, s_m).unwrap();
            naive.validate(&hist).unwrap();
            prop_assert!(padding_fraction(&st) <= padding_fraction(&naive));
            prop_assert_eq!(lpfhp(&hist, s_m).unwrap(), st);
        }
    }
}
