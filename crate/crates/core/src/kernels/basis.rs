use serde::{Deserialize, Serialize};

use super::Real;

/// Uniform grid of Gaussians over `[0, r_cut)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBasis {
    pub n_rbf: usize,
    pub delta_mu: f64,
    pub gamma: f64,
}

impl RadialBasis {
    /// `n_rbf = round(r_cut / delta_mu)`; `gamma` defaults to `1 / (2 delta_mu^2)`.
    pub fn new(r_cut: f64, delta_mu: f64, gamma: Option<f64>) -> Self {
        RadialBasis {
            n_rbf: (r_cut / delta_mu).round() as usize,
            delta_mu,
            gamma: gamma.unwrap_or(1.0 / (2.0 * delta_mu * delta_mu)),
        }
    }

    pub fn center(&self, k: usize) -> f64 {
        k as f64 * self.delta_mu
    }
}

/// `exp(-gamma (d - k delta_mu)^2)` for `k = 0..n_rbf`.
pub fn rbf_expand<T: Real>(d: T, basis: &RadialBasis) -> Vec<T> {
    let gamma = T::of(basis.gamma);
    (0..basis.n_rbf)
        .map(|k| {
            let diff = d - T::of(basis.center(k));
            (-gamma * diff * diff).exp()
        })
        .collect()
}

/// Smooth distance weight: `0.5 (cos(pi d / r_cut) + 1)` inside the cutoff,
/// zero at and beyond it.
pub fn cosine_cutoff<T: Real>(d: T, r_cut: T) -> T {
    if d < r_cut {
        let half = T::of(0.5);
        half * ((T::of(std::f64::consts::PI) * d / r_cut).cos() + T::one())
    } else {
        T::zero()
    }
}

/// Thresholded softplus: `ln(1 + exp(beta x)) / beta` while `beta x <= tau`,
/// the identity above it.
pub fn softplus_ref<T: Real>(x: T, beta: T, tau: T) -> T {
    let bx = beta * x;
    if bx <= tau {
        bx.exp().ln_1p() / beta
    } else {
        x
    }
}

/// Branch-free stable softplus, `ln(1 + exp(-|x|)) + max(x, 0)`.
pub fn softplus_opt<T: Real>(x: T) -> T {
    (-x.abs()).exp().ln_1p() + x.max(T::zero())
}

/// `softplus_opt(x) - ln 2`, which maps zero to zero.
pub fn shifted_softplus<T: Real>(x: T) -> T {
    softplus_opt(x) - T::of(std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_from_grid() {
        let b = RadialBasis::new(6.0, 0.24, None);
        assert_eq!(b.n_rbf, 25);
        assert!((b.gamma - 1.0 / (2.0 * 0.0576)).abs() < 1e-12);
        assert_eq!(RadialBasis::new(5.0, 0.25, Some(8.0)).gamma, 8.0);
    }

    #[test]
    fn rbf_peaks_on_grid_points() {
        let b = RadialBasis::new(5.0, 0.25, Some(8.0));
        assert_eq!(rbf_expand(0.0f64, &b)[0], 1.0);
        for k in 0..b.n_rbf {
            let v = rbf_expand(b.center(k), &b);
            assert_eq!(v[k], 1.0);
        }
    }

    #[test]
    fn rbf_matches_scalar_formula() {
        let b = RadialBasis::new(5.0, 0.25, Some(8.0));
        let v = rbf_expand(1.0f64, &b);
        assert_eq!(v.len(), 20);
        for (k, &x) in v.iter().enumerate() {
            let expected = (-8.0 * (1.0 - 0.25 * k as f64).powi(2)).exp();
            assert!((x - expected).abs() <= 1e-15 * expected.max(1e-300), "k={k}");
        }
    }

    #[test]
    fn rbf_components_bounded_and_peak_at_nearest_center() {
        let b = RadialBasis::new(6.0, 0.24, None);
        for step in 0..600 {
            let d = step as f64 * 0.01 + 0.003;
            let v = rbf_expand(d, &b);
            assert!(v.iter().all(|&x| x > 0.0 && x <= 1.0));
            let argmax = (0..b.n_rbf)
                .max_by(|&i, &j| v[i].total_cmp(&v[j]))
                .unwrap();
            let nearest = (0..b.n_rbf)
                .min_by(|&i, &j| {
                    (d - b.center(i)).abs().total_cmp(&(d - b.center(j)).abs())
                })
                .unwrap();
            assert_eq!(argmax, nearest, "d={d}");
        }
    }

    #[test]
    fn cutoff_values() {
        assert_eq!(cosine_cutoff(0.0f64, 5.0), 1.0);
        assert_eq!(cosine_cutoff(5.0f64, 5.0), 0.0);
        assert_eq!(cosine_cutoff(7.0f64, 5.0), 0.0);
        assert!((cosine_cutoff(2.5f64, 5.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softplus_fixed_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((softplus_ref(0.0f64, 1.0, 20.0) - ln2).abs() < 1e-15);
        assert_eq!(softplus_ref(25.0f64, 1.0, 20.0), 25.0);
        assert!((softplus_opt(0.0f64) - ln2).abs() < 1e-15);
        let far = softplus_opt(-1000.0f64);
        assert!(far.is_finite() && far.abs() < 1e-300);
        assert_eq!(softplus_opt(1000.0f64), 1000.0);
        assert_eq!(shifted_softplus(0.0f64), 0.0);
    }

    #[test]
    fn softplus_opt_is_monotone_with_logistic_slope() {
        let h = 1e-5;
        let mut prev = softplus_opt(-20.0f64 - 1e-3);
        for step in 0..=40_000 {
            let x = -20.0 + step as f64 * 1e-3;
            let y = softplus_opt(x);
            assert!(y >= prev, "x={x}");
            prev = y;
            let slope = (softplus_opt(x + h) - softplus_opt(x - h)) / (2.0 * h);
            let logistic = 1.0 / (1.0 + (-x).exp());
            assert!((slope - logistic).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn single_precision_path_tracks_double() {
        for step in 0..=1000 {
            let x = -50.0 + step as f64 * 0.1;
            let lo = softplus_opt(x as f32) as f64;
            let hi = softplus_opt(x);
            assert!((lo - hi).abs() <= 1e-4 * hi.abs().max(1e-30) + 1e-30, "x={x}");
        }
    }
}
