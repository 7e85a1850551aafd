//! Brute-force validators for the adaptive engine.
//!
//! Everything here is deliberately naive: fixed-grid trapezoid sums over the
//! literal textbook integrands (`eps = 1 + K_P^2 / Omega^2` for the plasma
//! permittivity, `ln(1 - r^2 e^{-2K})` evaluated as written), and a spectral
//! filter of white noise for random surfaces. None of it shares code with
//! [`crate::mirror`], [`crate::lifshitz`] or [`crate::response`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{HBAR_C, NM};
use crate::spectra::RoughnessSpectrum;

/// Oracle grid used for the committed golden values.
pub const GOLDEN_N: usize = 2048;
pub const GOLDEN_K_MAX: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid of {extent} nm spans fewer than {min_ratio} correlation lengths ({l_c} nm)")]
    GridTooSmall { extent: f64, l_c: f64, min_ratio: f64 },
    #[error("grid step {step} nm does not resolve the correlation length {l_c} nm")]
    GridTooCoarse { step: f64, l_c: f64 },
    #[error("spectrum has no correlation length")]
    EmptySpectrum,
    #[error("invalid oracle parameter: {0}")]
    InvalidParameter(String),
}

/// Value with first and second derivative along one variable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Dual2 { v, d: 0.0, dd: 0.0 }
    }

    pub fn variable(v: f64) -> Self {
        Dual2 { v, d: 1.0, dd: 0.0 }
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual2 {
            v: s,
            d: self.d / (2.0 * s),
            dd: self.dd / (2.0 * s) - self.d * self.d / (4.0 * s * s * s),
        }
    }

    pub fn ln(self) -> Self {
        Dual2 {
            v: self.v.ln(),
            d: self.d / self.v,
            dd: self.dd / self.v - self.d * self.d / (self.v * self.v),
        }
    }

    pub fn recip(self) -> Self {
        let v2 = self.v * self.v;
        Dual2 {
            v: 1.0 / self.v,
            d: -self.d / v2,
            dd: -self.dd / v2 + 2.0 * self.d * self.d / (v2 * self.v),
        }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v + o.v, d: self.d + o.d, dd: self.dd + o.dd }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v - o.v, d: self.d - o.d, dd: self.dd - o.dd }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
            dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Dual2) -> Dual2 {
        self * o.recip()
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    fn mul(self, s: f64) -> Dual2 {
        Dual2 { v: self.v * s, d: self.d * s, dd: self.dd * s }
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    fn add(self, s: f64) -> Dual2 {
        Dual2 { v: self.v + s, ..self }
    }
}

/// Trapezoid rule for `int_0^upper f` on `n` intervals. With `grading = Some(a)`
/// the nodes are `x = a sinh(s)`, uniform in `s`: linear below `a`,
/// logarithmic above.
fn trapezoid<T>(upper: f64, n: usize, grading: Option<f64>, mut f: impl FnMut(f64) -> T) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let mut sum = T::default();
    match grading {
        None => {
            let h = upper / n as f64;
            for i in 0..=n {
                let w = if i == 0 || i == n { 0.5 * h } else { h };
                sum = sum + f(i as f64 * h) * w;
            }
        }
        Some(a) => {
            let h = (upper / a).asinh() / n as f64;
            for i in 0..=n {
                let s = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 * h } else { h };
                sum = sum + f(a * s.sinh()) * (w * a * s.cosh());
            }
        }
    }
    sum
}

fn grading(k_p: Option<f64>) -> Option<f64> {
    k_p.filter(|&kp| kp < 1.0)
}

/// `ln(1 - r_TE^2 e^{-2K}) + ln(1 - r_TM^2 e^{-2K})` with `K_P` as the
/// differentiation variable.
fn log_terms(k: f64, omega: f64, k_p: Dual2) -> Dual2 {
    let x = (-2.0 * k).exp();
    let kk = Dual2::constant(k);
    let kt = (k_p * k_p + k * k).sqrt();
    let r_te = (kk - kt) / (kt + k);
    let r_tm = if omega == 0.0 {
        Dual2::constant(1.0)
    } else {
        let eps = k_p * k_p * (1.0 / (omega * omega)) + 1.0;
        (eps * kk - kt) / (eps * kk + kt)
    };
    let one = Dual2::constant(1.0);
    (one - r_te * r_te * x).ln() + (one - r_tm * r_tm * x).ln()
}

fn energy_dual(k_p: Option<f64>, n_k: usize, n_omega: usize, k_max: f64) -> Dual2 {
    let g = grading(k_p);
    let total = trapezoid(k_max, n_k, g, |k| {
        if k == 0.0 {
            return Dual2::default();
        }
        let inner = trapezoid(k, n_omega, g, |omega| match k_p {
            Some(kp) => log_terms(k, omega, Dual2::variable(kp)),
            None => Dual2::constant(2.0 * (1.0 - (-2.0 * k).exp()).ln()),
        });
        inner * k
    });
    total * (1.0 / (4.0 * PI * PI))
}

/// Reduced energy `e(K_P)` on an `n_k x n_omega` trapezoid grid over the
/// wedge `0 <= Omega <= K <= k_max`. `None` is the perfect mirror.
pub fn trapezoid_energy(k_p: Option<f64>, n_k: usize, n_omega: usize, k_max: f64) -> f64 {
    energy_dual(k_p, n_k, n_omega, k_max).v
}

/// `(e, de/dK_P, d^2e/dK_P^2)` with the derivatives taken under the integral.
pub fn trapezoid_energy_derivatives(k_p: f64, n: usize, k_max: f64) -> (f64, f64, f64) {
    let e = energy_dual(Some(k_p), n, n, k_max);
    (e.v, e.d, e.dd)
}

/// `g0 = L^2 E'' / 2` in reduced units, from `e(K_P x) / x^3` differentiated
/// twice at `x = 1`.
pub fn trapezoid_g0(k_p: Option<f64>, n: usize, k_max: f64) -> f64 {
    match k_p {
        None => 6.0 * trapezoid_energy(None, n, n, k_max),
        Some(kp) => {
            let (e, d1, d2) = trapezoid_energy_derivatives(kp, n, k_max);
            0.5 * (kp * kp * d2 - 6.0 * kp * d1 + 12.0 * e)
        }
    }
}

fn alpha_integrand(k_p: f64, k: f64, omega: f64) -> f64 {
    let x = (-2.0 * k).exp();
    let kt2 = k * k + k_p * k_p;
    let kt = kt2.sqrt();
    let r_te = (k - kt) / (k + kt);
    let r_tm = if omega == 0.0 {
        1.0
    } else {
        let eps = 1.0 + k_p * k_p / (omega * omega);
        (eps * k - kt) / (eps * k + kt)
    };
    let f = |r: f64| r * r * x / (1.0 - r * r * x);
    let d = k * k - omega * omega;
    let bracket = (2.0 * d * d - kt2 * (2.0 * k * k - 3.0 * omega * omega)) / (k * k * kt2 - d * d);
    k * (k_p * k_p / (2.0 * omega * omega + k_p * k_p)) * (k * f(r_te) + bracket * k * f(r_tm))
}

/// High-k slope `alpha / L` on an `n x n` trapezoid grid.
pub fn trapezoid_alpha(k_p: f64, n: usize, k_max: f64) -> f64 {
    let g = grading(Some(k_p));
    let integral = trapezoid(k_max, n, g, |k| {
        if k == 0.0 {
            return 0.0;
        }
        trapezoid(k, n, g, |omega| alpha_integrand(k_p, k, omega))
    });
    integral / (4.0 * PI * PI * trapezoid_g0(Some(k_p), n, k_max))
}

/// Perfect-reflector response `G L^5 / (hbar c A)` at `q > 0`: `n` intervals on
/// each of `[0, q]` and `[q, k_max]` in `K`, and `n` across each `K'` window.
pub fn trapezoid_g_perfect(q: f64, n: usize, k_max: f64) -> f64 {
    let outer = |k: f64| {
        if k == 0.0 {
            return 0.0;
        }
        let lo = (k - q).abs();
        let width = k + q - lo;
        let inner = trapezoid(width, n, None, |t| {
            let kp = lo + t;
            let num = (k * kp).powi(2) + 0.25 * (k * k + kp * kp - q * q).powi(2);
            if kp == 0.0 {
                0.0
            } else {
                num / (1.0 - (-2.0 * kp).exp())
            }
        });
        (-2.0 * k).exp() / (1.0 - (-2.0 * k).exp()) * inner
    };
    let below = trapezoid(q, n, None, outer);
    let above = trapezoid(k_max - q, n, None, |t| outer(q + t));
    -(below + above) / (4.0 * PI * PI * q)
}

/// Discretised height profile `h(x, y)` on an `n x n` periodic grid.
#[derive(Debug, Clone)]
pub struct HeightField {
    pub n: usize,
    /// nm
    pub step: f64,
    /// row-major, nm
    pub heights: Vec<f64>,
}

/// One annulus of a radially averaged periodogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBin {
    /// mean `|k|` of the modes in the bin, nm^-1
    pub k: f64,
    /// mean periodogram estimate of `sigma`, nm^4
    pub sigma: f64,
    pub modes: usize,
}

fn wavenumber(i: usize, n: usize, step: f64) -> f64 {
    let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * PI * m / (n as f64 * step)
}

fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex::default(); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = data[i * n + j];
        }
        fft.process(&mut column);
        for i in 0..n {
            data[i * n + j] = column[i];
        }
    }
}

impl HeightField {
    pub fn mean(&self) -> f64 {
        self.heights.iter().sum::<f64>() / self.heights.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.heights.iter().map(|h| (h - m).powi(2)).sum::<f64>() / self.heights.len() as f64
    }

    /// Periodogram `|H_m|^2 dx^2 / N` averaged over annuli of width `dk`
    /// (the grid's fundamental wavenumber), skipping `k = 0`.
    pub fn radial_spectrum(&self) -> Vec<RadialBin> {
        let n = self.n;
        let total = (n * n) as f64;
        let mut data: Vec<Complex<f64>> = self.heights.iter().map(|&h| Complex::new(h, 0.0)).collect();
        fft2(&mut data, n, false);
        let dk = 2.0 * PI / (n as f64 * self.step);
        let mut bins = vec![(0.0, 0.0, 0usize); n / 2];
        for i in 0..n {
            for j in 0..n {
                let k = wavenumber(i, n, self.step).hypot(wavenumber(j, n, self.step));
                let b = (k / dk).round() as usize;
                if b == 0 || b >= bins.len() {
                    continue;
                }
                let bin = &mut bins[b];
                bin.0 += k;
                bin.1 += data[i * n + j].norm_sqr() * self.step * self.step / total;
                bin.2 += 1;
            }
        }
        bins.into_iter()
            .filter(|b| b.2 > 0)
            .map(|(k, s, m)| RadialBin { k: k / m as f64, sigma: s / m as f64, modes: m })
            .collect()
    }
}

/// Minimum grid extent in correlation lengths.
pub const MIN_EXTENT_RATIO: f64 = 10.0;

/// Zero-mean Gaussian random surface with ensemble spectrum `sigma(k)`:
/// white noise filtered by `sqrt(sigma(k)) / dx` in Fourier space, the `k = 0`
/// mode removed.
pub fn synthesize_surface(
    spectrum: &RoughnessSpectrum,
    grid_n: usize,
    grid_step: f64,
    seed: u64,
) -> Result<HeightField, OracleError> {
    if !grid_n.is_power_of_two() || grid_n < 2 {
        return Err(OracleError::NotPowerOfTwo(grid_n));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(OracleError::InvalidParameter(format!("grid step {grid_step}")));
    }
    let l_c = spectrum.correlation_length().ok_or(OracleError::EmptySpectrum)?;
    let extent = grid_n as f64 * grid_step;
    if extent < MIN_EXTENT_RATIO * l_c {
        return Err(OracleError::GridTooSmall { extent, l_c, min_ratio: MIN_EXTENT_RATIO });
    }
    if grid_step > 0.5 * l_c {
        return Err(OracleError::GridTooCoarse { step: grid_step, l_c });
    }

    let n = grid_n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<Complex<f64>> = (0..n * n)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    fft2(&mut data, n, false);
    for i in 0..n {
        for j in 0..n {
            let k = wavenumber(i, n, grid_step).hypot(wavenumber(j, n, grid_step));
            let filter = if i == 0 && j == 0 {
                0.0
            } else {
                spectrum.sigma_unchecked(k).sqrt() / grid_step
            };
            data[i * n + j] *= filter;
        }
    }
    fft2(&mut data, n, true);
    let norm = (n * n) as f64;
    Ok(HeightField {
        n,
        step: grid_step,
        heights: data.iter().map(|c| c.re / norm).collect(),
    })
}

/// A committed reference value with the inputs and oracle settings that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenValue {
    pub name: String,
    pub value: f64,
    pub inputs: BTreeMap<String, f64>,
    pub oracle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenSet {
    pub grid_n: usize,
    pub k_max: f64,
    pub hbar_c: f64,
    pub values: Vec<GoldenValue>,
}

impl GoldenSet {
    pub fn get(&self, name: &str) -> Option<&GoldenValue> {
        self.values.iter().find(|g| g.name == name)
    }
}

fn golden(name: &str, value: f64, inputs: &[(&str, f64)], oracle: &str) -> GoldenValue {
    GoldenValue {
        name: name.into(),
        value,
        inputs: inputs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        oracle: oracle.into(),
    }
}

/// Regenerates every golden value from the oracles on an `n`-interval grid.
pub fn golden_values(n: usize, k_max: f64) -> Result<GoldenSet, OracleError> {
    if n < 16 || k_max < 20.0 {
        return Err(OracleError::InvalidParameter(format!("n = {n}, k_max = {k_max}")));
    }
    let gold = 136.0;
    let kp = |l: f64| 2.0 * PI * l / gold;
    let g_zero = -PI * PI / 120.0;

    let e_62 = trapezoid_energy(Some(62.832), n, n, k_max);
    let e_200 = trapezoid_energy(Some(kp(200.0)), n, n, k_max);
    let l_m = 200.0 * NM;
    let energy_200 = HBAR_C / l_m.powi(3) * e_200;
    let radius = 100e3 * NM;
    let alpha_924 = trapezoid_alpha(kp(200.0), n, k_max);
    let g_1 = trapezoid_g_perfect(1.0, n, k_max);
    let g_6 = trapezoid_g_perfect(6.0, n, k_max);

    // stitched response ratio at L = 100 nm, k = 0.05 nm^-1
    let (l, k) = (100.0, 0.05);
    let (q, kp_100) = (k * l, kp(l));
    let e_100 = trapezoid_energy(Some(kp_100), n, n, k_max);
    let g0_100 = trapezoid_g0(Some(kp_100), n, k_max);
    let alpha_100 = trapezoid_alpha(kp_100, n, k_max);
    let rho_window = if q < kp_100 {
        trapezoid_g_perfect(q, n, k_max.max(q + 20.0)) / g_zero
    } else {
        0.0
    };
    let rho_100 = 1f64.max(alpha_100 * q).max(rho_window);
    let ratio_100 = g0_100 / e_100 * rho_100 / (l * l);

    let energy = "trapezoid_energy";
    Ok(GoldenSet {
        grid_n: n,
        k_max,
        hbar_c: HBAR_C,
        values: vec![
            golden("reduced_energy", e_62, &[("k_p", 62.832)], energy),
            golden(
                "energy_per_area_j_m2",
                energy_200,
                &[("separation_nm", 200.0), ("lambda_p_nm", gold)],
                energy,
            ),
            golden(
                "plane_sphere_force_n",
                2.0 * PI * radius * energy_200,
                &[("separation_nm", 200.0), ("lambda_p_nm", gold), ("radius_nm", 100e3)],
                energy,
            ),
            golden("alpha_over_l", alpha_924, &[("k_p", kp(200.0))], "trapezoid_alpha"),
            golden("g_perfect", g_1, &[("q", 1.0)], "trapezoid_g_perfect"),
            golden("rho_perfect", g_6 / g_zero, &[("q", 6.0)], "trapezoid_g_perfect"),
            golden(
                "response_ratio_nm2",
                ratio_100,
                &[("separation_nm", l), ("lambda_p_nm", gold), ("k_nm_inv", k)],
                "trapezoid_energy, trapezoid_g0, trapezoid_alpha, trapezoid_g_perfect",
            ),
        ],
    })
}
