//! Plane-plane Casimir energy under the plasma model, its separation
//! derivatives, and the plane-sphere force in the proximity approximation.
//!
//! The energy is written as `E_PP = (hbar c A / L^3) e(K_P)` with
//!
//! ```text
//! e(K_P) = 1/(4 pi^2) int_0^inf dK K int_0^K dOmega  sum_p ln(1 - r_p^2 e^{-2K})
//! ```
//!
//! so that every dimensionless quantity depends on `K_P = 2 pi L / lambda_P`
//! alone. The ideal-mirror limit is `e = -pi^2 / 720`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::constants::{HBAR_C, NM};
use crate::mirror::{log_round_trip, Mirror, ReducedMirror};
use crate::quadrature::{self, QuadratureError};

/// Relative step of the separation derivatives, as a fraction of `L`.
pub const DERIVATIVE_STEP: f64 = 0.05;
/// Tolerance floor for energies that feed finite differences.
const DIFFERENTIATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LifshitzError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Plate separation `L` (nm), plate area `A` (nm^2), optional sphere radius
/// `R` (nm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    pub separation: f64,
    pub area: f64,
    pub sphere_radius: Option<f64>,
}

impl Geometry {
    pub fn new(separation: f64) -> Result<Self, LifshitzError> {
        check_positive("separation L", separation)?;
        Ok(Geometry {
            separation,
            area: 1.0,
            sphere_radius: None,
        })
    }

    pub fn with_area(mut self, area: f64) -> Result<Self, LifshitzError> {
        check_positive("area A", area)?;
        self.area = area;
        Ok(self)
    }

    pub fn with_sphere(mut self, radius: f64) -> Result<Self, LifshitzError> {
        check_positive("sphere radius R", radius)?;
        self.sphere_radius = Some(radius);
        Ok(self)
    }
}

fn check_positive(name: &str, value: f64) -> Result<(), LifshitzError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(LifshitzError::InvalidGeometry(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// `e(K_P)` in `E_PP = (hbar c A / L^3) e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedEnergy {
    pub e: f64,
    pub error_estimate: f64,
}

/// Ideal-mirror reduced energy, `-pi^2/720`.
pub fn ideal_reduced_energy() -> f64 {
    -PI.powi(2) / 720.0
}

/// Reduced energy integrand at `(K, Omega)`.
#[inline]
fn energy_integrand(mirror: &ReducedMirror, k: f64, omega: f64) -> f64 {
    let [te2, cte, tm2, ctm] = mirror.squared_coefficients(k, omega);
    k * (log_round_trip(te2, cte, k) + log_round_trip(tm2, ctm, k))
}

pub fn reduced_energy(mirror: ReducedMirror, rel_tol: f64) -> Result<ReducedEnergy, LifshitzError> {
    if let ReducedMirror::Plasma { k_p } = mirror {
        if !(k_p.is_finite() && k_p >= 0.0) {
            return Err(LifshitzError::InvalidGeometry(format!(
                "reduced plasma frequency must be finite and >= 0, got {k_p}"
            )));
        }
        if k_p == 0.0 {
            return Ok(ReducedEnergy {
                e: 0.0,
                error_estimate: 0.0,
            });
        }
    }
    let norm = 1.0 / (4.0 * PI * PI);
    let r = quadrature::integrate_triangle_with_scales(
        |k, omega| energy_integrand(&mirror, k, omega),
        &mirror.scales(),
        rel_tol,
    )?;
    Ok(ReducedEnergy {
        e: norm * r.value,
        error_estimate: norm * r.abs_error,
    })
}

/// `eps(x) = e(K_P x) / x^3` and its first two derivatives at `x = 1`.
///
/// `eps` is the energy at separation `x L` in units of `hbar c A / L^3`, so
/// `dE/dL = (hbar c A / L^4) slope` and `d2E/dL2 = (hbar c A / L^5) curvature`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCurvature {
    pub energy: ReducedEnergy,
    pub slope: f64,
    pub curvature: f64,
}

impl EnergyCurvature {
    /// `g0 = G(0) L^5 / (hbar c A) = curvature / 2`.
    pub fn g0(&self) -> f64 {
        0.5 * self.curvature
    }

    /// `L^2 E'' / (2E)`, the PFA prefactor of `a^2 / L^2`.
    pub fn curvature_ratio(&self) -> f64 {
        self.curvature / (2.0 * self.energy.e)
    }
}

pub fn energy_curvature(mirror: ReducedMirror, rel_tol: f64) -> Result<EnergyCurvature, LifshitzError> {
    let tol = rel_tol.min(DIFFERENTIATION_TOL);
    let energy = reduced_energy(mirror, tol)?;
    let k_p = match mirror {
        ReducedMirror::Perfect => {
            return Ok(EnergyCurvature {
                energy,
                slope: -3.0 * energy.e,
                curvature: 12.0 * energy.e,
            })
        }
        ReducedMirror::Plasma { k_p } => k_p,
    };
    if k_p == 0.0 {
        return Ok(EnergyCurvature {
            energy,
            slope: 0.0,
            curvature: 0.0,
        });
    }

    let failure = std::cell::RefCell::new(None);
    let eps = |x: f64| -> f64 {
        match reduced_energy(ReducedMirror::Plasma { k_p: k_p * x }, tol) {
            Ok(r) => r.e / (x * x * x),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let slope = quadrature::first_derivative(&eps, 1.0, DERIVATIVE_STEP);
    let curvature = quadrature::second_derivative(&eps, 1.0, DERIVATIVE_STEP);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(EnergyCurvature {
        energy,
        slope: slope?,
        curvature: curvature?,
    })
}

/// Energy per unit area in J/m^2 at separation `separation` (nm).
pub fn energy_per_area(separation: f64, mirror: Mirror, rel_tol: f64) -> Result<f64, LifshitzError> {
    check_positive("separation L", separation)?;
    let e = reduced_energy(mirror.at_separation(separation), rel_tol)?;
    let l = separation * NM;
    Ok(HBAR_C / (l * l * l) * e.e)
}

/// Reduced PFA response `g0 = G(0) L^5 / (hbar c A) = L^5 E''_PP / (2 hbar c A)`.
pub fn pfa_g0(separation: f64, mirror: Mirror, rel_tol: f64) -> Result<f64, LifshitzError> {
    check_positive("separation L", separation)?;
    Ok(energy_curvature(mirror.at_separation(separation), rel_tol)?.g0())
}

/// `L^2 E'' / (2E)`: 3 for `L << lambda_P`, 6 for `L >> lambda_P`.
pub fn pfa_curvature_ratio(separation: f64, mirror: Mirror, rel_tol: f64) -> Result<f64, LifshitzError> {
    check_positive("separation L", separation)?;
    Ok(energy_curvature(mirror.at_separation(separation), rel_tol)?.curvature_ratio())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneSphereForce {
    /// Newtons; negative means attractive.
    pub force: f64,
    pub warnings: Vec<String>,
}

/// `F_PS = 2 pi R E_PP / A`.
///
/// Warns when `R < 10 L` or, for a roughness correlation length `l_c`, when
/// `R L < 10 l_c^2`.
pub fn plane_sphere_force(
    geometry: &Geometry,
    mirror: Mirror,
    correlation_length: Option<f64>,
    rel_tol: f64,
) -> Result<PlaneSphereForce, LifshitzError> {
    let radius = geometry
        .sphere_radius
        .ok_or_else(|| LifshitzError::InvalidGeometry("sphere radius R is required".into()))?;
    check_positive("sphere radius R", radius)?;
    let l = geometry.separation;
    let force = 2.0 * PI * radius * NM * energy_per_area(l, mirror, rel_tol)?;

    let mut warnings = Vec::new();
    if radius < 10.0 * l {
        warnings.push(format!(
            "R = {radius} nm is not much larger than L = {l} nm; the proximity approximation for the sphere is doubtful"
        ));
    }
    if let Some(lc) = correlation_length {
        if radius * l < 10.0 * lc * lc {
            warnings.push(format!(
                "R L = {} nm^2 is not much larger than l_C^2 = {} nm^2; few correlation areas fit in the interaction zone",
                radius * l,
                lc * lc
            ));
        }
    }
    Ok(PlaneSphereForce { force, warnings })
}
