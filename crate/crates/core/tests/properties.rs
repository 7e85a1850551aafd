//! Sampled properties of the energy and response layers.

use std::f64::consts::PI;

use casimir_roughness::lifshitz::{self, ideal_reduced_energy};
use casimir_roughness::mirror::{Mirror, ReducedMirror};
use casimir_roughness::oracle;
use casimir_roughness::quadrature;
use casimir_roughness::response::{self, g_perfect_zero};

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect()
}

#[test]
fn energy_monotone_and_bounded() {
    let mut prev = 0.0;
    for kp in log_grid(1e-3, 1e3, 2) {
        let e = lifshitz::reduced_energy(ReducedMirror::Plasma { k_p: kp }, 1e-10).unwrap().e;
        assert!(e < prev && e >= ideal_reduced_energy(), "K_P = {kp}: {e}");
        prev = e;
    }
}

#[test]
fn curvature_ratio_rises_from_three_to_six() {
    let mut prev = 3.0;
    for kp in log_grid(1e-3, 1e3, 2) {
        let c = lifshitz::energy_curvature(ReducedMirror::Plasma { k_p: kp }, 1e-8).unwrap().curvature_ratio();
        assert!(c > prev && c < 6.0, "K_P = {kp}: {c}");
        prev = c;
    }
}

#[test]
fn energy_negative_and_increasing_in_separation() {
    let m = Mirror::plasma(136.0).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for l in log_grid(10.0, 1e4, 2) {
        let e = lifshitz::energy_per_area(l, m, 1e-10).unwrap();
        assert!(e < 0.0 && e > prev, "L = {l}: {e}");
        prev = e;
    }
}

#[test]
fn reduced_quantities_depend_on_k_p_only() {
    let (l, lp) = (180.0, 136.0);
    let e0 = lifshitz::energy_per_area(l, Mirror::plasma(lp).unwrap(), 1e-10).unwrap();
    let c0 = lifshitz::pfa_curvature_ratio(l, Mirror::plasma(lp).unwrap(), 1e-10).unwrap();
    let r0 = response::rho_estimate(0.02, l, Mirror::plasma(lp).unwrap(), 1e-10).unwrap().rho;
    let h0 = response::rho_high_k(0.5, l, Mirror::plasma(lp).unwrap(), 1e-10).unwrap();
    for s in [0.5, 2.0, 10.0] {
        let m = Mirror::plasma(lp * s).unwrap();
        let e = lifshitz::energy_per_area(l * s, m, 1e-10).unwrap();
        assert!((e * s.powi(3) / e0 - 1.0).abs() < 1e-10);
        let c = lifshitz::pfa_curvature_ratio(l * s, m, 1e-10).unwrap();
        assert!((c / c0 - 1.0).abs() < 1e-10);
        let r = response::rho_estimate(0.02 / s, l * s, m, 1e-10).unwrap().rho;
        assert!((r / r0 - 1.0).abs() < 1e-10);
        let h = response::rho_high_k(0.5 / s, l * s, m, 1e-10).unwrap();
        assert!((h / h0 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn g0_matches_differentiation_under_the_integral() {
    for l in [20.0, 200.0, 1360.0] {
        let m = Mirror::plasma(136.0).unwrap();
        let kp = m.at_separation(l).k_p().unwrap();
        let fd = lifshitz::pfa_g0(l, m, 1e-10).unwrap();
        let analytic = oracle::trapezoid_g0(Some(kp), 1024, 30.0);
        assert!((fd / analytic - 1.0).abs() < 1e-4, "L = {l}: {fd} vs {analytic}");
    }
}

#[test]
fn alpha_decreases_while_alpha_k_p_peaks_then_settles() {
    let grid = log_grid(1e-3, 1e3, 2);
    let values: Vec<f64> = grid.iter().map(|&kp| response::alpha(kp, 1e-8).unwrap().alpha_over_l).collect();
    for w in values.windows(2) {
        assert!(w[1] < w[0] && w[1] > 0.0);
    }
    // (alpha/L) K_P rises to a maximum near K_P ~ 15 and approaches 14/15 from above.
    let products: Vec<f64> = grid.iter().zip(&values).map(|(k, a)| k * a).collect();
    let peak = products.iter().cloned().fold(f64::MIN, f64::max);
    let peak_at = products.iter().position(|&p| p == peak).unwrap();
    assert!(products[..=peak_at].windows(2).all(|w| w[1] > w[0]));
    assert!(products[peak_at..].windows(2).all(|w| w[1] < w[0]));
    assert!(peak < 0.98 && peak > 14.0 / 15.0);
    assert!((products.last().unwrap() / (14.0 / 15.0) - 1.0).abs() < 0.01);
}

#[test]
fn rho_perfect_at_least_one_above_q_one() {
    let mut below = Vec::new();
    for i in 0..=500 {
        let q = 0.1 * i as f64;
        let r = response::rho_perfect(q, 1e-9).unwrap();
        if r < 1.0 {
            below.push((q, r));
        }
    }
    if !below.is_empty() {
        println!("rho_perfect < 1 at {} of 501 samples, all below q = 1: {below:?}", below.len());
    }
    assert!(below.iter().all(|&(q, r)| q < 1.0 && r > 0.99));
}

#[test]
fn g_perfect_split_matches_unsplit_grid() {
    // Outer trapezoid on a uniform K grid that does not contain the kink at K = q.
    let brute = |q: f64| {
        let (n, k_max) = (3001, 30.0 + q);
        let h = k_max / (n - 1) as f64;
        let mut total = 0.0;
        for i in 1..n {
            let k = i as f64 * h;
            let (lo, hi) = ((k - q).abs(), k + q);
            let inner = quadrature::integrate(
                |kp| ((k * kp).powi(2) + 0.25 * (k * k + kp * kp - q * q).powi(2)) / -(-2.0 * kp).exp_m1(),
                lo.max(1e-300),
                hi,
                1e-12,
            )
            .unwrap()
            .value;
            let w = if i == n - 1 { 0.5 * h } else { h };
            total += w * (-2.0 * k).exp() / -(-2.0 * k).exp_m1() * inner;
        }
        -total / (4.0 * PI * PI * q)
    };
    for q in [0.7, 2.345, 7.1] {
        let split = response::g_perfect_quadrature(q, 1e-10).unwrap().value;
        let b = brute(q);
        assert!((split / b - 1.0).abs() < 1e-4, "q = {q}: {split} vs {b}");
    }
    assert!((response::g_perfect(0.0, 1e-10).unwrap().value - g_perfect_zero()).abs() < 1e-15);
}
