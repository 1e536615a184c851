use super::{ExactSum, KernelError, Matrix, Real};

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

/// Row `r` of the result is row `index[r]` of `a`.
pub fn gather<T: Real>(a: &Matrix<T>, index: &[u32]) -> Result<Matrix<T>, KernelError> {
    check_indices(index, a.rows())?;
    let mut out = Matrix::zeros(index.len(), a.cols());
    for (r, &i) in index.iter().enumerate() {
        out.row_mut(r).copy_from_slice(a.row(i as usize));
    }
    Ok(out)
}

/// `out[m] = a[m] + sum of values[r] over every r with index[r] == m`.
///
/// Each output element is the correctly rounded exact sum of its terms, so
/// the result does not depend on the order of `(index, values)` rows.
pub fn scatter_add<T: Real>(
    a: &Matrix<T>,
    index: &[u32],
    values: &Matrix<T>,
) -> Result<Matrix<T>, KernelError> {
    if values.rows() != index.len() || values.cols() != a.cols() {
        return Err(KernelError::Shape(format!(
            "values {:?} for {} indices into {:?}",
            values.shape(),
            index.len(),
            a.shape()
        )));
    }
    check_indices(index, a.rows())?;

    // Contributions grouped by destination row, in index order.
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); a.rows()];
    for (r, &m) in index.iter().enumerate() {
        by_row[m as usize].push(r);
    }
    let mut out = a.clone();
    for (m, sources) in by_row.iter().enumerate() {
        if sources.is_empty() {
            continue;
        }
        for n in 0..a.cols() {
            let mut acc = ExactSum::new();
            acc.add(a.get(m, n));
            for &r in sources {
                acc.add(values.get(r, n));
            }
            out.set(m, n, acc.value());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_gather() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(&mut rng, 5, 3);
        let idx: Vec<u32> = (0..5).collect();
        assert_eq!(gather(&a, &idx).unwrap(), a);
    }

    #[test]
    fn repeated_gather() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, 4, 3);
        let g = gather(&a, &[2, 2]).unwrap();
        assert_eq!(g.row(0), a.row(2));
        assert_eq!(g.row(1), a.row(2));
    }

    #[test]
    fn gather_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 7, 3);
        let idx: Vec<u32> = (0..11).map(|_| rng.gen_range(0..7)).collect();
        let g = gather(&a, &idx).unwrap();
        for r in 0..11 {
            for c in 0..3 {
                assert_eq!(g.get(r, c), a.get(idx[r] as usize, c));
            }
        }
    }

    #[test]
    fn out_of_range_names_position() {
        let a = Matrix::<f64>::zeros(3, 2);
        let err = gather(&a, &[0, 3]).unwrap_err();
        assert!(matches!(err, KernelError::OutOfBounds { position: 1, value: 3, rows: 3 }));
        let v = Matrix::zeros(2, 2);
        assert!(matches!(
            scatter_add(&a, &[5, 0], &v),
            Err(KernelError::OutOfBounds { position: 0, .. })
        ));
        assert!(matches!(scatter_add(&a, &[0], &v), Err(KernelError::Shape(_))));
    }

    #[test]
    fn empty_scatter_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random(&mut rng, 4, 2);
        assert_eq!(scatter_add(&a, &[], &Matrix::zeros(0, 2)).unwrap(), a);
    }

    #[test]
    fn scatter_definition() {
        let a = Matrix::<f64>::zeros(3, 2);
        let v = Matrix::from_vec(2, 2, vec![1.0, 2.0, 10.0, 20.0]).unwrap();
        let out = scatter_add(&a, &[0, 0], &v).unwrap();
        assert_eq!(out.as_slice(), &[11.0, 22.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn scatter_matches_naive_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(&mut rng, 9, 4);
        let v = random(&mut rng, 30, 4);
        let idx: Vec<u32> = (0..30).map(|_| rng.gen_range(0..9)).collect();
        let out = scatter_add(&a, &idx, &v).unwrap();
        let mut naive = a.clone();
        for (r, &m) in idx.iter().enumerate() {
            for c in 0..4 {
                naive.set(m as usize, c, naive.get(m as usize, c) + v.get(r, c));
            }
        }
        assert!(out.max_abs_diff(&naive) < 1e-12);
    }

    #[test]
    fn scatter_is_row_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let a = random(&mut rng, 6, 3);
            let v = Matrix::from_fn(25, 3, |_, _| rng.gen_range(-1e3..1e3) * rng.gen_range(1e-8..1.0));
            let idx: Vec<u32> = (0..25).map(|_| rng.gen_range(0..6)).collect();
            let mut perm: Vec<usize> = (0..25).collect();
            perm.shuffle(&mut rng);
            let idx2: Vec<u32> = perm.iter().map(|&p| idx[p]).collect();
            let v2 = Matrix::from_fn(25, 3, |r, c| v.get(perm[r], c));
            assert_eq!(scatter_add(&a, &idx, &v).unwrap(), scatter_add(&a, &idx2, &v2).unwrap());
        }
    }

    #[test]
    fn permutation_gather_scatter_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(&mut rng, 10, 3);
        let mut p: Vec<u32> = (0..10).collect();
        p.shuffle(&mut rng);
        let round = scatter_add(&Matrix::zeros(10, 3), &p, &gather(&a, &p).unwrap()).unwrap();
        assert_eq!(round, a);
    }
}
