use super::{PackError, SizeHistogram};

/// Largest instance the exhaustive search accepts.
pub const MAX_ORACLE_GRAPHS: usize = 12;

/// Minimal number of packs, by exhaustive search over assignments.
///
/// Graphs are placed largest first into every open pack with room, or into
/// one new pack. Packs with identical loads are interchangeable and are only
/// tried once; branches that cannot beat the incumbent are cut.
pub fn exact_pack_oracle(hist: &SizeHistogram, s_m: usize) -> Result<usize, PackError> {
    let n = hist.num_graphs();
    if n > MAX_ORACLE_GRAPHS {
        return Err(PackError::TooLarge {
            got: n,
            max: MAX_ORACLE_GRAPHS,
        });
    }
    if hist.s_max_observed() > s_m {
        return Err(PackError::Capacity {
            size: hist.s_max_observed(),
            capacity: s_m,
        });
    }
    let mut sizes = hist.sizes();
    sizes.reverse();
    let mut best = n;
    let mut loads = Vec::with_capacity(n);
    search(&sizes, s_m, &mut loads, &mut best);
    Ok(best)
}

fn search(sizes: &[usize], s_m: usize, loads: &mut Vec<usize>, best: &mut usize) {
    let Some((&s, rest)) = sizes.split_first() else {
        *best = (*best).min(loads.len());
        return;
    };
    if loads.len() >= *best {
        return;
    }
    for k in 0..loads.len() {
        if loads[k] + s <= s_m && !loads[..k].contains(&loads[k]) {
            loads[k] += s;
            search(rest, s_m, loads, best);
            loads[k] -= s;
        }
    }
    if loads.len() + 1 < *best {
        loads.push(s);
        search(rest, s_m, loads, best);
        loads.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_values() {
        let h = |pairs: &[(usize, usize)]| SizeHistogram::from_counts(pairs.iter().copied());
        assert_eq!(exact_pack_oracle(&h(&[(10, 3)]), 10).unwrap(), 3);
        assert_eq!(exact_pack_oracle(&h(&[(5, 4)]), 10).unwrap(), 2);
        assert_eq!(exact_pack_oracle(&h(&[(7, 2), (3, 2), (4, 1)]), 10).unwrap(), 3);
        assert_eq!(exact_pack_oracle(&h(&[]), 10).unwrap(), 0);
    }

    #[test]
    fn limits() {
        let big = SizeHistogram::from_counts([(1, 13)]);
        assert!(matches!(
            exact_pack_oracle(&big, 10),
            Err(PackError::TooLarge { got: 13, .. })
        ));
        let wide = SizeHistogram::from_counts([(11, 1)]);
        assert!(matches!(
            exact_pack_oracle(&wide, 10),
            Err(PackError::Capacity { .. })
        ));
    }

    /// Cross-check against plain enumeration of every labelled assignment.
    #[test]
    fn agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(1..=7);
            let s_m = rng.gen_range(5..=15);
            let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=s_m)).collect();
            let hist = SizeHistogram::from_sizes(sizes.iter().copied());
            assert_eq!(exact_pack_oracle(&hist, s_m).unwrap(), brute(&sizes, s_m));
        }
    }

    fn brute(sizes: &[usize], s_m: usize) -> usize {
        let n = sizes.len();
        let mut best = n;
        let total = n.pow(n as u32);
        for code in 0..total {
            let mut loads = vec![0usize; n];
            let mut c = code;
            for &s in sizes {
                loads[c % n] += s;
                c /= n;
            }
            if loads.iter().all(|&l| l <= s_m) {
                best = best.min(loads.iter().filter(|&&l| l > 0).count());
            }
        }
        best
    }
}
