//! Roughness response `G(k)` and the deviation factor `rho(k) = G(k) / G(0)`.
//!
//! Only the asymptotic pieces of `G` are available in closed integral form:
//!
//! - `k -> 0`: `G(0) = E''_PP / 2` (proximity force approximation),
//! - `k >> omega_P / c, 1/L`: `rho = alpha k` with `alpha / L` a function of
//!   `K_P` given by a wedge integral over `(K, Omega)`,
//! - `lambda_P -> 0`: the perfect-reflector response as a double integral
//!   over `K` and the diffracted wavevector `K'`.
//!
//! Reduced responses are `g = G L^5 / (hbar c A)`. The perfect-reflector
//! prefactor is normalised so that `g(q -> 0) = -pi^2/120`, the ideal-mirror
//! `E''/2`, and `g(q) -> -pi^2 q / 360` for `q >> 1`.
//!
//! The stitched estimator is a heuristic for intermediate `k`, where the full
//! polarization-mixing response is not computed here:
//!
//! ```text
//! rho_stitched(q) = max(1, (alpha/L) q, rho_perfect(q) if q < K_P)
//! ```
//!
//! i.e. the PFA floor, the high-k line, and the perfect-reflector curve
//! restricted to its window `k < omega_P / c`. The estimate jumps down at
//! `q = K_P` where the perfect-reflector window closes.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::lifshitz::{energy_curvature, EnergyCurvature, LifshitzError};
use crate::mirror::{loop_from_squared, Mirror, ReducedMirror};
use crate::quadrature::{self, QuadratureError, QuadratureResult};

/// Below this `q` the perfect-reflector response is replaced by `G(0)`.
pub const SMALL_Q: f64 = 1e-3;
/// Above this `q` the perfect-reflector response is replaced by its
/// `-pi^2 q / 360` asymptote.
pub const LARGE_Q: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("the {model} model is unavailable: {reason}")]
    ModelUnavailable { model: ResponseModel, reason: String },
    #[error("TM bracket denominator is not positive at K = {k}, Omega = {omega}")]
    DomainViolation { k: f64, omega: f64 },
    #[error(transparent)]
    Lifshitz(#[from] LifshitzError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseModel {
    /// `rho = 1`.
    Pfa,
    /// `rho = alpha k`.
    HighK,
    /// `rho` of ideal mirrors.
    PerfectReflector,
    /// Heuristic envelope of the three asymptotes.
    Stitched,
}

impl ResponseModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResponseModel::Pfa => "pfa",
            ResponseModel::HighK => "high_k",
            ResponseModel::PerfectReflector => "perfect_reflector",
            ResponseModel::Stitched => "stitched",
        }
    }
}

impl fmt::Display for ResponseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResponseModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pfa" => Ok(ResponseModel::Pfa),
            "high_k" | "high-k" => Ok(ResponseModel::HighK),
            "perfect_reflector" | "perfect-reflector" | "perfect" => {
                Ok(ResponseModel::PerfectReflector)
            }
            "stitched" => Ok(ResponseModel::Stitched),
            other => Err(format!("unknown response model '{other}'")),
        }
    }
}

/// One evaluated point of `rho(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseSample {
    /// nm^-1
    pub k: f64,
    pub q: f64,
    pub rho: f64,
    pub model: ResponseModel,
    /// `G L^5 / (hbar c A)` when known.
    pub g_reduced: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaCoefficient {
    /// `alpha / L`
    pub alpha_over_l: f64,
    pub abs_error: f64,
}

/// Reduced perfect-reflector response at `q = 0`, `-pi^2/120`.
pub fn g_perfect_zero() -> f64 {
    -PI * PI / 120.0
}

/// Integrand of the high-k wedge integral, without the `1/(4 pi^2 g0)`
/// normalisation. `None` flags a non-positive TM bracket denominator.
#[inline]
fn alpha_integrand(k_p: f64, k: f64, omega: f64) -> Option<f64> {
    let mirror = ReducedMirror::Plasma { k_p };
    let [te2, cte, tm2, ctm] = mirror.squared_coefficients(k, omega);
    let f_te = loop_from_squared(te2, cte, k);
    let f_tm = loop_from_squared(tm2, ctm, k);

    let (k2, w2, kp2) = (k * k, omega * omega, k_p * k_p);
    // (K K_t)^2 - (K^2 - Omega^2)^2 and 2(K^2 - Omega^2)^2 - K_t^2 (2K^2 - 3 Omega^2),
    // expanded so that no large terms cancel.
    let denominator = k2 * kp2 + w2 * (2.0 * k2 - w2);
    if !(denominator > 0.0) {
        return None;
    }
    let numerator = w2 * (2.0 * w2 - k2) - kp2 * (2.0 * k2 - 3.0 * w2);
    let weight = kp2 / (2.0 * w2 + kp2);
    Some(k * weight * (k * f_te + numerator / denominator * k * f_tm))
}

/// `alpha / L` as a function of `K_P`, normalised by the PFA response `g0`.
pub fn alpha(k_p: f64, rel_tol: f64) -> Result<AlphaCoefficient, ResponseError> {
    if !(k_p.is_finite() && k_p > 0.0) {
        return Err(ResponseError::InvalidArgument(format!(
            "alpha needs a finite K_P > 0, got {k_p}"
        )));
    }
    let mirror = ReducedMirror::Plasma { k_p };
    let curvature = energy_curvature(mirror, rel_tol)?;
    alpha_with_g0(k_p, curvature.g0(), rel_tol)
}

fn alpha_with_g0(k_p: f64, g0: f64, rel_tol: f64) -> Result<AlphaCoefficient, ResponseError> {
    let violation = RefCell::new(None);
    let integral = quadrature::integrate_triangle_with_scales(
        |k, omega| match alpha_integrand(k_p, k, omega) {
            Some(v) => v,
            None => {
                violation.borrow_mut().get_or_insert((k, omega));
                f64::NAN
            }
        },
        &ReducedMirror::Plasma { k_p }.scales(),
        rel_tol,
    );
    if let Some((k, omega)) = violation.into_inner() {
        return Err(ResponseError::DomainViolation { k, omega });
    }
    let integral = integral?;
    let norm = 1.0 / (4.0 * PI * PI * g0);
    Ok(AlphaCoefficient {
        alpha_over_l: norm * integral.value,
        abs_error: (norm * integral.abs_error).abs(),
    })
}

/// `(KK')^2 + (K^2 + K'^2 - q^2)^2 / 4`
#[inline]
fn diffraction_kernel(k: f64, kd: f64, q: f64) -> f64 {
    let s = k * k + kd * kd - q * q;
    (k * kd).powi(2) + 0.25 * s * s
}

/// Reduced perfect-reflector response `G L^5 / (hbar c A)` at `q = kL`:
///
/// ```text
/// g(q) = -1/(4 pi^2 q) int_0^inf dK e^{-2K}/(1 - e^{-2K})
///          int_{|K-q|}^{K+q} dK' [(KK')^2 + (K^2+K'^2-q^2)^2/4] / (1 - e^{-2K'})
/// ```
///
/// Below `q = 1e-3` returns `-pi^2/120`, above `q = 50` returns
/// `-pi^2 q / 360`.
pub fn g_perfect(q: f64, rel_tol: f64) -> Result<QuadratureResult, ResponseError> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(ResponseError::InvalidArgument(format!(
            "q must be finite and >= 0, got {q}"
        )));
    }
    let analytic = |value| QuadratureResult {
        value,
        abs_error: 0.0,
        evaluations: 1,
    };
    if q < SMALL_Q {
        return Ok(analytic(g_perfect_zero()));
    }
    if q > LARGE_Q {
        return Ok(analytic(-PI * PI * q / 360.0));
    }
    let r = g_perfect_quadrature(q, rel_tol)?;
    Ok(r)
}

/// The double integral without the small/large-q shortcuts.
pub fn g_perfect_quadrature(q: f64, rel_tol: f64) -> Result<QuadratureResult, ResponseError> {
    let inner_tol = (0.1 * rel_tol).max(1e-14);
    let failure = RefCell::new(None);
    let inner_evaluations = std::cell::Cell::new(0usize);

    let outer = |k: f64| -> f64 {
        let lo = (k - q).abs();
        let hi = k + q;
        let inner = quadrature::integrate(
            |kd: f64| diffraction_kernel(k, kd, q) / -(-2.0 * kd).exp_m1(),
            lo,
            hi,
            inner_tol,
        );
        match inner {
            Ok(r) => {
                inner_evaluations.set(inner_evaluations.get() + r.evaluations);
                (-2.0 * k).exp() / -(-2.0 * k).exp_m1() * r.value
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let r = quadrature::integrate_semi_infinite_with_breaks(outer, &[q], rel_tol);
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    let r = r?;
    let norm = -1.0 / (4.0 * PI * PI * q);
    Ok(QuadratureResult {
        value: norm * r.value,
        abs_error: (norm * r.abs_error).abs() + inner_tol * (norm * r.value).abs(),
        evaluations: r.evaluations + inner_evaluations.get(),
    })
}

/// `rho` of ideal mirrors, `g_perfect(q) / g_perfect(0)`.
pub fn rho_perfect(q: f64, rel_tol: f64) -> Result<f64, ResponseError> {
    Ok(g_perfect(q, rel_tol)?.value / g_perfect_zero())
}

/// Precomputed response of one cavity (fixed `K_P`); cheap to query at many
/// `q`. Safe to share between threads.
#[derive(Debug)]
pub struct ResponseProfile {
    mirror: ReducedMirror,
    rel_tol: f64,
    curvature: EnergyCurvature,
    alpha: OnceLock<Result<AlphaCoefficient, ResponseError>>,
}

impl ResponseProfile {
    pub fn new(mirror: ReducedMirror, rel_tol: f64) -> Result<Self, ResponseError> {
        let curvature = energy_curvature(mirror, rel_tol)?;
        Ok(ResponseProfile {
            mirror,
            rel_tol,
            curvature,
            alpha: OnceLock::new(),
        })
    }

    pub fn mirror(&self) -> ReducedMirror {
        self.mirror
    }

    pub fn curvature(&self) -> &EnergyCurvature {
        &self.curvature
    }

    pub fn g0(&self) -> f64 {
        self.curvature.g0()
    }

    pub fn curvature_ratio(&self) -> f64 {
        self.curvature.curvature_ratio()
    }

    /// `alpha / L`; zero in the ideal-mirror limit.
    pub fn alpha(&self) -> Result<AlphaCoefficient, ResponseError> {
        self.alpha
            .get_or_init(|| match self.mirror {
                ReducedMirror::Plasma { k_p } => alpha_with_g0(k_p, self.g0(), self.rel_tol),
                ReducedMirror::Perfect => Err(ResponseError::ModelUnavailable {
                    model: ResponseModel::HighK,
                    reason: "alpha vanishes for perfect mirrors (lambda_P = 0)".into(),
                }),
            })
            .clone()
    }

    /// `rho(q)` under `model`.
    pub fn rho(&self, model: ResponseModel, q: f64) -> Result<f64, ResponseError> {
        if !(q.is_finite() && q >= 0.0) {
            return Err(ResponseError::InvalidArgument(format!(
                "q must be finite and >= 0, got {q}"
            )));
        }
        match model {
            ResponseModel::Pfa => Ok(1.0),
            ResponseModel::HighK => Ok(self.alpha()?.alpha_over_l * q),
            ResponseModel::PerfectReflector => rho_perfect(q, self.rel_tol),
            ResponseModel::Stitched => {
                let line = match self.mirror {
                    ReducedMirror::Plasma { .. } => self.alpha()?.alpha_over_l * q,
                    ReducedMirror::Perfect => 0.0,
                };
                let perfect = match self.mirror {
                    ReducedMirror::Plasma { k_p } if q >= k_p => 0.0,
                    _ => rho_perfect(q, self.rel_tol)?,
                };
                Ok(1f64.max(line).max(perfect))
            }
        }
    }

    /// `q` values where `rho` under `model` changes analytic form.
    pub(crate) fn kinks(&self, model: ResponseModel) -> Vec<f64> {
        match model {
            ResponseModel::Pfa | ResponseModel::HighK => Vec::new(),
            ResponseModel::PerfectReflector => vec![SMALL_Q, LARGE_Q],
            ResponseModel::Stitched => {
                let mut v = vec![SMALL_Q, LARGE_Q];
                if let Some(k_p) = self.mirror.k_p() {
                    v.push(k_p);
                }
                v
            }
        }
    }
}

fn check_wavevector(k: f64, separation: f64) -> Result<(), ResponseError> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(ResponseError::InvalidArgument(format!(
            "k must be finite and >= 0, got {k}"
        )));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(ResponseError::InvalidArgument(format!(
            "separation must be positive, got {separation}"
        )));
    }
    Ok(())
}

/// High-k law `rho = alpha k`, valid only for `k >> max(2 pi / lambda_P, 1/L)`.
pub fn rho_high_k(k: f64, separation: f64, mirror: Mirror, rel_tol: f64) -> Result<f64, ResponseError> {
    check_wavevector(k, separation)?;
    let profile = ResponseProfile::new(mirror.at_separation(separation), rel_tol)?;
    profile.rho(ResponseModel::HighK, k * separation)
}

/// Stitched heuristic estimate of `rho(k)`; see the module docs. Not the
/// exact intermediate-k response.
pub fn rho_estimate(
    k: f64,
    separation: f64,
    mirror: Mirror,
    rel_tol: f64,
) -> Result<ResponseSample, ResponseError> {
    check_wavevector(k, separation)?;
    let profile = ResponseProfile::new(mirror.at_separation(separation), rel_tol)?;
    sample(&profile, ResponseModel::Stitched, k, separation)
}

/// Evaluates `rho` for `model` at wavevector `k` (nm^-1).
pub fn sample(
    profile: &ResponseProfile,
    model: ResponseModel,
    k: f64,
    separation: f64,
) -> Result<ResponseSample, ResponseError> {
    check_wavevector(k, separation)?;
    let q = k * separation;
    let rho = profile.rho(model, q)?;
    Ok(ResponseSample {
        k,
        q,
        rho,
        model,
        g_reduced: Some(profile.g0() * rho),
    })
}

/// `G(k) / E_PP` in nm^-2.
pub fn response_ratio(
    k: f64,
    separation: f64,
    mirror: Mirror,
    model: ResponseModel,
    rel_tol: f64,
) -> Result<f64, ResponseError> {
    check_wavevector(k, separation)?;
    let profile = ResponseProfile::new(mirror.at_separation(separation), rel_tol)?;
    let rho = profile.rho(model, k * separation)?;
    Ok(profile.curvature_ratio() * rho / (separation * separation))
}
