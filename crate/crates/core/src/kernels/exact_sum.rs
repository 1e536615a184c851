//! Order-independent floating-point summation.
//!
//! [`ExactSum`] keeps the running total as a list of non-overlapping partials
//! (Shewchuk's algorithm) and rounds once at the end, so the result is the
//! correctly rounded value of the exact sum whatever order the terms arrive
//! in. Two accumulators can be merged without losing exactness, which is
//! what lets partitioned scatter reproduce the unpartitioned result bit for
//! bit.

use super::Real;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum<T> {
    partials: Vec<T>,
}

impl<T: Real> ExactSum<T> {
    pub fn new() -> Self {
        ExactSum {
            partials: Vec::new(),
        }
    }

    pub fn add(&mut self, value: T) {
        let mut x = value;
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != T::zero() {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Folds another accumulator in; the result is as if every term had been
    /// added to `self` directly.
    pub fn merge(&mut self, other: &ExactSum<T>) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// The exact sum rounded to nearest, ties to even.
    pub fn value(&self) -> T {
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return T::zero();
        };
        let mut hi = p[n];
        let mut lo = T::zero();
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != T::zero() {
                break;
            }
        }
        // Round-half-even correction when the remainder sits exactly on a
        // tie and further partials push it one way.
        if n > 0
            && ((lo < T::zero() && p[n - 1] < T::zero())
                || (lo > T::zero() && p[n - 1] > T::zero()))
        {
            let y = lo + lo;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl<T: Real> FromIterator<T> for ExactSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Correctly rounded sum of `values`.
pub fn exact_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    values.into_iter().collect::<ExactSum<T>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, SeedableRng};

    #[test]
    fn cancellation_is_exact() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1f64; 10]), 1.0);
        assert_eq!(exact_sum([1e16, 1.0, 1e-16]), 1.0000000000000002e16);
        assert_eq!(exact_sum(Vec::<f64>::new()), 0.0);
    }

    #[test]
    fn ties_round_to_even() {
        // 2^53 + 1 is halfway between representable neighbours.
        let two53 = 9007199254740992.0f64;
        assert_eq!(exact_sum([two53, 1.0]), two53);
        assert_eq!(exact_sum([two53, 1.0, 1e-6]), two53 + 2.0);
        assert_eq!(exact_sum([two53, 1.0, -1e-6]), two53);
    }

    #[test]
    fn matches_rational_reference_in_f32() {
        // Dyadic f32 values with a small exponent spread sum exactly in f64,
        // so one cast gives the correctly rounded f32 result.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        use rand::Rng;
        for _ in 0..500 {
            let xs: Vec<f32> = (0..20)
                .map(|_| rng.gen_range(-(1i64 << 40)..(1i64 << 40)) as f32 / 1024.0)
                .collect();
            let reference = xs.iter().map(|&x| x as f64).sum::<f64>() as f32;
            assert_eq!(exact_sum(xs.iter().copied()), reference);
        }
    }

    #[test]
    fn merge_equals_direct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(-1e6..1e6) * rng.gen_range(1e-9..1.0)).collect();
        let direct = exact_sum(xs.iter().copied());
        let mut left: ExactSum<f64> = xs[..77].iter().copied().collect();
        let right: ExactSum<f64> = xs[77..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.value(), direct);
    }

    proptest! {
        #[test]
        fn order_does_not_matter(xs in proptest::collection::vec(-1e12f64..1e12, 0..40), seed in any::<u64>()) {
            let mut shuffled = xs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(exact_sum(xs), exact_sum(shuffled));
        }
    }
}
