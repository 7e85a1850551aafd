//! Plasma-model reflection at imaginary frequencies, in reduced variables.
//!
//! `K` is the imaginary z-wavevector times `L`, `Omega` the imaginary
//! frequency times `L/c`, and `K_P = omega_P L / c = 2 pi L / lambda_P`.
//! Vacuum dispersion at imaginary frequency requires `K >= Omega >= 0`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MirrorError {
    #[error("plasma wavelength must be positive and finite, got {0} nm")]
    InvalidPlasmaWavelength(f64),
    #[error("invalid reduced point K = {k}, Omega = {omega}, K_P = {k_p} (need K >= Omega >= 0, K_P >= 0)")]
    InvalidPoint { k: f64, omega: f64, k_p: f64 },
    #[error("reflection coefficient is undefined at K = {k}, Omega = {omega}, K_P = {k_p}")]
    Undefined { k: f64, omega: f64, k_p: f64 },
    #[error("round-trip factor r^2 exp(-2K) = {0} reaches the cavity pole")]
    Pole(f64),
}

/// Metal of both plates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mirror {
    /// `epsilon = 1 - omega_P^2 / omega^2` with plasma wavelength in nm.
    Plasma { lambda_p: f64 },
    /// Ideal reflector, `r_TE = -1`, `r_TM = 1`.
    Perfect,
}

impl Mirror {
    pub fn plasma(lambda_p: f64) -> Result<Self, MirrorError> {
        if lambda_p.is_finite() && lambda_p > 0.0 {
            Ok(Mirror::Plasma { lambda_p })
        } else {
            Err(MirrorError::InvalidPlasmaWavelength(lambda_p))
        }
    }

    /// `0` selects the perfect mirror.
    pub fn from_lambda_p(lambda_p: f64) -> Result<Self, MirrorError> {
        if lambda_p == 0.0 {
            Ok(Mirror::Perfect)
        } else {
            Mirror::plasma(lambda_p)
        }
    }

    /// Plasma wavelength in nm, `0` for the perfect mirror.
    pub fn lambda_p(&self) -> f64 {
        match *self {
            Mirror::Plasma { lambda_p } => lambda_p,
            Mirror::Perfect => 0.0,
        }
    }

    /// The mirror seen from a cavity of length `separation` (nm).
    pub fn at_separation(&self, separation: f64) -> ReducedMirror {
        match *self {
            Mirror::Plasma { lambda_p } => ReducedMirror::Plasma {
                k_p: 2.0 * PI * separation / lambda_p,
            },
            Mirror::Perfect => ReducedMirror::Perfect,
        }
    }
}

/// Mirror in reduced units: everything dimensionless depends on `K_P` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReducedMirror {
    Plasma { k_p: f64 },
    Perfect,
}

impl ReducedMirror {
    pub fn k_p(&self) -> Option<f64> {
        match *self {
            ReducedMirror::Plasma { k_p } => Some(k_p),
            ReducedMirror::Perfect => None,
        }
    }

    /// Scales along which the integrands vary, for seeding quadrature.
    pub(crate) fn scales(&self) -> Vec<f64> {
        match *self {
            ReducedMirror::Plasma { k_p } if k_p > 0.0 => {
                (-3..=8).map(|j| k_p * 2f64.powi(j)).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Squared reflection coefficients `(r_TE^2, 1 - r_TE^2, r_TM^2, 1 - r_TM^2)`.
    ///
    /// The complements are formed algebraically so that they stay accurate
    /// where `|r| -> 1`.
    #[inline]
    pub(crate) fn squared_coefficients(&self, k: f64, omega: f64) -> [f64; 4] {
        match *self {
            ReducedMirror::Perfect => [1.0, 0.0, 1.0, 0.0],
            ReducedMirror::Plasma { k_p } => {
                let kt = (k * k + k_p * k_p).sqrt();
                let sum_te = kt + k;
                let r_te = (kt - k) / sum_te;
                let c_te = 4.0 * k * kt / (sum_te * sum_te);

                let w2 = omega * omega;
                let a = (w2 + k_p * k_p) * k;
                let b = w2 * kt;
                let sum_tm = a + b;
                let (r_tm, c_tm) = if sum_tm > 0.0 {
                    ((a - b) / sum_tm, 4.0 * a * b / (sum_tm * sum_tm))
                } else {
                    (0.0, 1.0)
                };
                [r_te * r_te, c_te, r_tm * r_tm, c_tm]
            }
        }
    }
}

/// A point of the imaginary-frequency integration domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub k: f64,
    pub omega: f64,
    pub k_p: f64,
}

impl ReducedPoint {
    pub fn new(k: f64, omega: f64, k_p: f64) -> Result<Self, MirrorError> {
        let ok = k.is_finite() && omega.is_finite() && k_p.is_finite();
        if ok && k >= omega && omega >= 0.0 && k_p >= 0.0 {
            Ok(ReducedPoint { k, omega, k_p })
        } else {
            Err(MirrorError::InvalidPoint { k, omega, k_p })
        }
    }

    fn undefined(&self) -> MirrorError {
        MirrorError::Undefined {
            k: self.k,
            omega: self.omega,
            k_p: self.k_p,
        }
    }
}

/// `K_t = sqrt(K^2 + K_P^2)`, the reduced z-wavevector inside the metal.
pub fn k_t(point: &ReducedPoint) -> f64 {
    point.k.hypot(point.k_p)
}

/// `r_TE = -(K_t - K) / (K_t + K)`.
pub fn r_te(point: &ReducedPoint) -> Result<f64, MirrorError> {
    let kt = k_t(point);
    if kt + point.k == 0.0 {
        return Err(point.undefined());
    }
    Ok(-(kt - point.k) / (kt + point.k))
}

/// `r_TM` with the `1 + K_P^2 / Omega^2` factor cleared:
/// `[(Omega^2 + K_P^2) K - Omega^2 K_t] / [(Omega^2 + K_P^2) K + Omega^2 K_t]`.
/// Continuous at `Omega = 0`, where it equals one.
pub fn r_tm(point: &ReducedPoint) -> Result<f64, MirrorError> {
    let kt = k_t(point);
    let w2 = point.omega * point.omega;
    let a = (w2 + point.k_p * point.k_p) * point.k;
    let b = w2 * kt;
    if a + b == 0.0 {
        return Err(point.undefined());
    }
    Ok((a - b) / (a + b))
}

/// Cavity loop function `f = r^2 e^{-2K} / (1 - r^2 e^{-2K})`.
pub fn loop_function(r: f64, k: f64) -> Result<f64, MirrorError> {
    let r2 = r * r;
    let x = r2 * (-2.0 * k).exp();
    // 1 - r^2 e^{-2K} = (1 - r^2) - r^2 (e^{-2K} - 1)
    let gap = (1.0 - r2) - r2 * (-2.0 * k).exp_m1();
    if !(gap > 0.0) {
        return Err(MirrorError::Pole(x));
    }
    Ok(x / gap)
}

/// Loop function from `r^2` and its complement `1 - r^2`.
#[inline]
pub(crate) fn loop_from_squared(r2: f64, one_minus_r2: f64, k: f64) -> f64 {
    let x = r2 * (-2.0 * k).exp();
    x / (one_minus_r2 - r2 * (-2.0 * k).exp_m1())
}

/// `ln(1 - r^2 e^{-2K})` from `r^2` and its complement.
#[inline]
pub(crate) fn log_round_trip(r2: f64, one_minus_r2: f64, k: f64) -> f64 {
    let x = r2 * (-2.0 * k).exp();
    if x < 0.5 {
        (-x).ln_1p()
    } else {
        (one_minus_r2 - r2 * (-2.0 * k).exp_m1()).ln()
    }
}
