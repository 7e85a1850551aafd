//! Relative roughness correction
//!
//! ```text
//! Delta = dF_PS / F_PS = dE_PP / E_PP
//!       = [L^2 E'' / (2E)] (1/L^2) (1/2pi) int_0^inf k rho(kL) sigma(k) dk
//! ```
//!
//! plus the regime classification by the ordering of `L`, `lambda_P`, `l_C`
//! and the closed-form power laws valid deep inside each regime.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::mirror::{Mirror, ReducedMirror};
use crate::quadrature::{self, QuadratureError, QuadratureResult};
use crate::response::{ResponseError, ResponseModel, ResponseProfile};
use crate::spectra::{RoughnessSpectrum, SpectrumError};

/// Ratio realising "much smaller than".
pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Coefficient of `sqrt(pi) a^2 / (l_C L)` quoted for `l_C << L << lambda_P`.
pub const PLASMON_ROUGH_COEFFICIENT: f64 = 2.7;
/// `6 alpha / L` with `alpha = 0.4492 L`, the unrounded form of the quoted 2.7.
pub const PLASMON_ROUGH_QUOTED: f64 = 6.0 * 0.4492;
/// `3 alpha / L`: `alpha = 0.4492 L` composed with the short-distance
/// curvature ratio 3.
pub const PLASMON_ROUGH_COMPOSED: f64 = 3.0 * 0.4492;

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no closed-form scaling law in the {0} regime")]
    NoClosedForm(Regime),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `L << lambda_P << l_C` (also `L << l_C << lambda_P`): `3 a^2 / L^2`.
    PfaShort,
    /// `lambda_P << L << l_C`: `6 a^2 / L^2`.
    PfaLong,
    /// `lambda_P << l_C << L`: `2 sqrt(pi) a^2 / (l_C L)`.
    PerfectRough,
    /// `l_C << L << lambda_P`: `2.7 sqrt(pi) a^2 / (l_C L)`.
    PlasmonRough,
    /// `l_C << lambda_P << L`: `(14 / 5 sqrt(pi)) (lambda_P / l_C) (a^2 / L^2)`.
    Saturated,
    Crossover,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::PfaShort => "pfa_short",
            Regime::PfaLong => "pfa_long",
            Regime::PerfectRough => "perfect_rough",
            Regime::PlasmonRough => "plasmon_rough",
            Regime::Saturated => "saturated",
            Regime::Crossover => "crossover",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Response model requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// `pfa` when `l_C >= 10 L`, `perfect_reflector` when `lambda_P` is at
    /// least ten times below both `l_C` and `L`, `stitched` otherwise.
    Auto,
    Fixed(ResponseModel),
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            Ok(ModelChoice::Auto)
        } else {
            s.parse().map(ModelChoice::Fixed)
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::Auto => f.write_str("auto"),
            ModelChoice::Fixed(m) => m.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionResult {
    /// Relative correction, identical for the plane-plane energy and the
    /// plane-sphere force.
    pub delta: f64,
    pub model: ResponseModel,
    pub regime: Regime,
    pub quad_error: f64,
    pub warnings: Vec<String>,
    /// `L^2 E'' / (2E)`
    pub curvature_ratio: f64,
    /// `a^2`, nm^2
    pub variance: f64,
    /// nm; `None` for a zero spectrum.
    pub correlation_length: Option<f64>,
    /// `curvature_ratio a^2 / L^2`
    pub pfa_delta: f64,
    /// `Delta l_C L / (sqrt(pi) a^2)`, set in the plasmon_rough regime.
    pub plasmon_coefficient: Option<f64>,
}

fn much_less(small: f64, large: f64, threshold: f64) -> bool {
    large >= threshold * small
}

/// Classifies `(L, lambda_P, l_C)`; `lambda_P = 0` stands for perfect
/// mirrors. Each "much less than" is a ratio of at least `threshold`.
pub fn classify_regime(separation: f64, lambda_p: f64, l_c: f64, threshold: f64) -> Regime {
    let (l, lp, lc, t) = (separation, lambda_p, l_c, threshold);
    let lt = |a: f64, b: f64| much_less(a, b, t);
    if lp > 0.0 && lt(l, lp) && lt(lp, lc) {
        Regime::PfaShort
    } else if lp > 0.0 && lt(l, lc) && lt(lc, lp) {
        Regime::PfaShort
    } else if lt(lp, l) && lt(l, lc) {
        Regime::PfaLong
    } else if lt(lp, lc) && lt(lc, l) {
        Regime::PerfectRough
    } else if lp > 0.0 && lt(lc, l) && lt(l, lp) {
        Regime::PlasmonRough
    } else if lp > 0.0 && lt(lc, lp) && lt(lp, l) {
        Regime::Saturated
    } else {
        Regime::Crossover
    }
}

/// Closed-form power law of `regime`.
pub fn scaling_delta(
    regime: Regime,
    separation: f64,
    lambda_p: f64,
    l_c: f64,
    a2: f64,
) -> Result<f64, CorrectionError> {
    let (l, sqrt_pi) = (separation, PI.sqrt());
    Ok(match regime {
        Regime::PfaShort => 3.0 * a2 / (l * l),
        Regime::PfaLong => 6.0 * a2 / (l * l),
        Regime::PerfectRough => 2.0 * sqrt_pi * a2 / (l_c * l),
        Regime::PlasmonRough => PLASMON_ROUGH_COEFFICIENT * sqrt_pi * a2 / (l_c * l),
        Regime::Saturated => 14.0 / (5.0 * sqrt_pi) * (lambda_p / l_c) * a2 / (l * l),
        Regime::Crossover => return Err(CorrectionError::NoClosedForm(regime)),
    })
}

/// Resolves [`ModelChoice::Auto`] for a spectrum of correlation length `l_c`.
pub fn select_model(choice: ModelChoice, separation: f64, lambda_p: f64, l_c: Option<f64>) -> ResponseModel {
    match choice {
        ModelChoice::Fixed(m) => m,
        ModelChoice::Auto => match l_c {
            Some(lc) if lc >= DEFAULT_THRESHOLD * separation => ResponseModel::Pfa,
            Some(lc)
                if DEFAULT_THRESHOLD * lambda_p <= lc && DEFAULT_THRESHOLD * lambda_p <= separation =>
            {
                ResponseModel::PerfectReflector
            }
            _ => ResponseModel::Stitched,
        },
    }
}

fn validity_warnings(model: ResponseModel, separation: f64, mirror: ReducedMirror, l_c: f64) -> Vec<String> {
    let q_dominant = 2.0 * separation / l_c;
    let mut warnings = Vec::new();
    match (model, mirror) {
        (ResponseModel::Pfa, _) if l_c < DEFAULT_THRESHOLD * separation => warnings.push(format!(
            "PFA needs l_C >> L; l_C / L = {:.3}",
            l_c / separation
        )),
        (ResponseModel::HighK, ReducedMirror::Plasma { k_p })
            if q_dominant < DEFAULT_THRESHOLD * k_p.max(1.0) =>
        {
            warnings.push(format!(
                "high-k law needs k >> max(omega_P/c, 1/L); dominant kL = {q_dominant:.3}, K_P = {k_p:.3}"
            ))
        }
        (ResponseModel::PerfectReflector, ReducedMirror::Plasma { k_p })
            if k_p < DEFAULT_THRESHOLD || DEFAULT_THRESHOLD * q_dominant > k_p =>
        {
            warnings.push(format!(
                "perfect-reflector response needs lambda_P << L and lambda_P << 1/k; K_P = {k_p:.3}, dominant kL = {q_dominant:.3}"
            ))
        }
        (ResponseModel::Stitched, _) => warnings.push(
            "stitched response: intermediate-k rho is a heuristic envelope of the asymptotes, not the full response"
                .into(),
        ),
        _ => {}
    }
    warnings
}

/// `(1/2pi) int_0^inf k [rho(kL) - 1] sigma(k) dk` in nm^2: the part of the
/// weighted variance beyond PFA.
fn excess_variance(
    profile: &ResponseProfile,
    model: ResponseModel,
    separation: f64,
    spectrum: &RoughnessSpectrum,
    rel_tol: f64,
) -> Result<QuadratureResult, CorrectionError> {
    let failure = RefCell::new(None);
    let rho = |q: f64| match profile.rho(model, q) {
        Ok(r) => r - 1.0,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let q_kinks = profile.kinks(model);

    let result = match spectrum {
        RoughnessSpectrum::Gaussian(g) => {
            // u = k l_C
            let lc = g.l_c;
            let mut breaks: Vec<f64> = q_kinks.iter().map(|q| q * lc / separation).collect();
            breaks.push(2.0);
            quadrature::integrate_semi_infinite_with_breaks(
                |u| {
                    let k = u / lc;
                    u / (lc * lc) * rho(k * separation) * g.sigma(k) / (2.0 * PI)
                },
                &breaks,
                rel_tol,
            )
        }
        RoughnessSpectrum::Tabulated(t) => {
            let breaks: Vec<f64> = q_kinks.iter().map(|q| q / separation).collect();
            let mut total = QuadratureResult {
                value: 0.0,
                abs_error: 0.0,
                evaluations: 0,
            };
            for w in t.samples().windows(2) {
                let ((k0, s0), (k1, s1)) = (w[0], w[1]);
                if s0 == 0.0 && s1 == 0.0 {
                    continue;
                }
                let piece = quadrature::integrate_with_breaks(
                    |k| k * rho(k * separation) * t.sigma(k) / (2.0 * PI),
                    k0,
                    k1,
                    &breaks,
                    rel_tol,
                )?;
                total.value += piece.value;
                total.abs_error += piece.abs_error;
                total.evaluations += piece.evaluations;
            }
            Ok(total)
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(result?)
}

/// Relative correction `Delta` for plates at `separation` (nm).
pub fn delta(
    separation: f64,
    mirror: Mirror,
    spectrum: &RoughnessSpectrum,
    model: ModelChoice,
    rel_tol: f64,
) -> Result<CorrectionResult, CorrectionError> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(CorrectionError::InvalidArgument(format!(
            "separation must be positive, got {separation}"
        )));
    }
    let profile = ResponseProfile::new(mirror.at_separation(separation), rel_tol)?;
    delta_with_profile(&profile, separation, mirror, spectrum, model, rel_tol)
}

/// As [`delta`], reusing a profile computed for `mirror.at_separation(separation)`.
pub fn delta_with_profile(
    profile: &ResponseProfile,
    separation: f64,
    mirror: Mirror,
    spectrum: &RoughnessSpectrum,
    choice: ModelChoice,
    rel_tol: f64,
) -> Result<CorrectionResult, CorrectionError> {
    let lambda_p = mirror.lambda_p();
    let variance = spectrum.variance(rel_tol)?;
    let l_c = spectrum.correlation_length();
    let curvature_ratio = profile.curvature_ratio();
    let l2 = separation * separation;
    let pfa_delta = curvature_ratio * variance / l2;
    let model = select_model(choice, separation, lambda_p, l_c);

    let l_c = match l_c {
        Some(lc) if variance > 0.0 => lc,
        _ => {
            return Ok(CorrectionResult {
                delta: 0.0,
                model,
                regime: Regime::Crossover,
                quad_error: 0.0,
                warnings: vec!["spectrum is identically zero; Delta = 0".into()],
                curvature_ratio,
                variance,
                correlation_length: None,
                pfa_delta,
                plasmon_coefficient: None,
            })
        }
    };
    let regime = classify_regime(separation, lambda_p, l_c, DEFAULT_THRESHOLD);
    let warnings = validity_warnings(model, separation, profile.mirror(), l_c);

    let (delta, quad_error) = match model {
        ResponseModel::Pfa => (pfa_delta, 0.0),
        _ => {
            let r = excess_variance(profile, model, separation, spectrum, rel_tol)?;
            (pfa_delta + curvature_ratio * r.value / l2, (curvature_ratio * r.abs_error / l2).abs())
        }
    };
    let plasmon_coefficient =
        (regime == Regime::PlasmonRough).then(|| delta * l_c * separation / (PI.sqrt() * variance));
    Ok(CorrectionResult {
        delta,
        model,
        regime,
        quad_error,
        warnings,
        curvature_ratio,
        variance,
        correlation_length: Some(l_c),
        pfa_delta,
        plasmon_coefficient,
    })
}

/// `Delta` for roughness of variance `a2` concentrated on the ring `|k| = k`,
/// i.e. `curvature_ratio rho(kL) a^2 / L^2`. Its correlation length is `2 / k`.
pub fn delta_ring(
    profile: &ResponseProfile,
    separation: f64,
    mirror: Mirror,
    k: f64,
    a2: f64,
    choice: ModelChoice,
) -> Result<CorrectionResult, CorrectionError> {
    if !(k.is_finite() && k > 0.0 && a2.is_finite() && a2 >= 0.0) {
        return Err(CorrectionError::InvalidArgument(format!("ring k = {k}, a^2 = {a2}")));
    }
    let lambda_p = mirror.lambda_p();
    let l_c = 2.0 / k;
    let model = select_model(choice, separation, lambda_p, Some(l_c));
    let curvature_ratio = profile.curvature_ratio();
    let l2 = separation * separation;
    let rho = profile.rho(model, k * separation)?;
    let regime = classify_regime(separation, lambda_p, l_c, DEFAULT_THRESHOLD);
    let delta = curvature_ratio * rho * a2 / l2;
    Ok(CorrectionResult {
        delta,
        model,
        regime,
        quad_error: 0.0,
        warnings: validity_warnings(model, separation, profile.mirror(), l_c),
        curvature_ratio,
        variance: a2,
        correlation_length: Some(l_c),
        pfa_delta: curvature_ratio * a2 / l2,
        plasmon_coefficient: (regime == Regime::PlasmonRough)
            .then(|| delta * l_c * separation / (PI.sqrt() * a2)),
    })
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn stitched_never_below_pfa(
            l in 10.0f64..2000.0,
            lp in 20.0f64..2000.0,
            lc in 1.0f64..5000.0,
            a in 0.1f64..10.0,
        ) {
            let s = RoughnessSpectrum::gaussian(a * a, lc).unwrap();
            let m = Mirror::plasma(lp).unwrap();
            let stitched = delta(l, m, &s, ModelChoice::Fixed(ResponseModel::Stitched), 1e-8).unwrap();
            let pfa = delta(l, m, &s, ModelChoice::Fixed(ResponseModel::Pfa), 1e-8).unwrap();
            prop_assert!(stitched.delta >= pfa.delta * (1.0 - 1e-9));
            prop_assert!(stitched.delta > 0.0);
        }
    }
}
