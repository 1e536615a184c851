//! Softplus forms against 50-digit reference values from
//! `data/gen_softplus_oracle.py`.

use molpack::kernels::{shifted_softplus, softplus_opt, softplus_ref};

const ORACLE: &str = include_str!("data/softplus_oracle.csv");

fn rows() -> Vec<(f64, f64, f64, f64)> {
    ORACLE
        .lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2], v[3])
        })
        .collect()
}

fn rel(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs()
    }
}

#[test]
fn thresholded_form_matches_reference() {
    let rows = rows();
    assert_eq!(rows.len(), 402);
    for (x, beta, thresholded, _) in rows {
        let got = softplus_ref(x, beta, 20.0);
        assert!(rel(got, thresholded) < 1e-12, "x={x} beta={beta}: {got} vs {thresholded}");
    }
}

#[test]
fn stable_form_matches_exact_softplus() {
    for (x, beta, _, exact) in rows().into_iter().filter(|r| r.1 == 1.0) {
        let got = softplus_opt(x);
        assert!(rel(got, exact) < 1e-12, "x={x} beta={beta}: {got} vs {exact}");
    }
}

#[test]
fn single_precision_stays_close() {
    for (x, _, _, exact) in rows().into_iter().filter(|r| r.1 == 1.0) {
        let got = softplus_opt(x as f32) as f64;
        assert!(rel(got, exact) < 1e-6, "x={x}: {got} vs {exact}");
    }
}

#[test]
fn extreme_inputs_stay_finite() {
    for x in [-1e30f64, -1000.0, -745.0, 0.0, 709.0, 1000.0, 1e30] {
        assert!(softplus_opt(x).is_finite(), "{x}");
        assert!(softplus_opt(x as f32).is_finite(), "{x}");
    }
    assert_eq!(shifted_softplus(0.0f64), 0.0);
}
