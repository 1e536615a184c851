//! Seeded random molecules for tests, examples and benchmarks.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Molecule;

const ELEMENTS: [u8; 5] = [1, 6, 7, 8, 9];
const ELEMENT_WEIGHTS: [f64; 5] = [0.5, 0.35, 0.06, 0.08, 0.01];
const MIN_SEPARATION: f64 = 0.9;

/// Atom-count weights over `3..=29` from a discretised normal with mean 18
/// and standard deviation 3, the rough shape of small organic molecules.
pub fn qm9_like_size_weights() -> Vec<(usize, f64)> {
    (3..=29)
        .map(|s| (s, (-0.5 * ((s as f64 - 18.0) / 3.0).powi(2)).exp()))
        .collect()
}

/// `n` sizes drawn from `weights`.
pub fn sample_sizes(rng: &mut impl Rng, weights: &[(usize, f64)], n: usize) -> Vec<usize> {
    let dist = WeightedIndex::new(weights.iter().map(|w| w.1)).expect("positive weights");
    (0..n).map(|_| weights[dist.sample(rng)].0).collect()
}

/// A molecule of `n` atoms at roughly liquid density, no two atoms closer
/// than 0.9 Å. The label is a deterministic function of the composition.
pub fn random_molecule(rng: &mut impl Rng, id: &str, n: usize) -> Molecule {
    let species = WeightedIndex::new(ELEMENT_WEIGHTS).expect("positive weights");
    let radius = 1.2 * (n as f64).cbrt() + 0.5;
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut grow = 1.0;
    while positions.len() < n {
        for _ in 0..200 {
            let p = [0, 1, 2].map(|_| rng.gen_range(-radius..radius) * grow);
            if positions
                .iter()
                .all(|q| super::distance(&p, q) >= MIN_SEPARATION)
            {
                positions.push(p);
                break;
            }
        }
        grow *= 1.05;
    }
    let atomic_numbers: Vec<u8> = (0..n).map(|_| ELEMENTS[species.sample(rng)]).collect();
    let label = -0.5 * atomic_numbers.iter().map(|&z| z as f64).sum::<f64>();
    Molecule::new(id, atomic_numbers, positions, Some(label)).expect("generated molecule is valid")
}

/// One molecule per entry of `sizes`, ids `mol-<k>`.
pub fn synthetic_dataset(seed: u64, sizes: &[usize]) -> Vec<Molecule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| random_molecule(&mut rng, &format!("mol-{k}"), n))
        .collect()
}
