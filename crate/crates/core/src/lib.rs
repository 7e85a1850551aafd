//! Roughness correction to the Casimir force between plasma-model plates,
//! beyond the proximity force approximation.
//!
//! Layers, bottom-up:
//!
//! - [`quadrature`]: adaptive Gauss-Kronrod on `[a, b]`, `[0, inf)` and the
//!   wedge `0 <= Omega <= K`, plus extrapolated finite differences.
//! - [`mirror`]: plasma reflection coefficients and cavity loop functions at
//!   imaginary frequency.
//! - [`lifshitz`]: plane-plane energy, its separation derivatives and the
//!   plane-sphere force.
//! - [`response`]: roughness response `G(k)`, the high-k slope `alpha` and
//!   the deviation factor `rho(k) = G(k) / G(0)`.
//! - [`spectra`]: Gaussian and tabulated roughness spectra.
//! - [`correction`]: the relative correction `Delta`, regimes and their
//!   closed-form scaling laws.
//! - [`oracle`]: fixed-grid and stochastic cross-checks.
//! - [`cli`]: the `casimir` command-line front end.

pub mod cli;
pub mod correction;
pub mod lifshitz;
pub mod mirror;
pub mod oracle;
pub mod quadrature;
pub mod response;
pub mod spectra;

/// Physical constants and unit conversions.
pub mod constants {
    /// Reduced Planck constant times the speed of light, J m.
    pub const HBAR_C: f64 = 3.161_526_77e-26;
    /// One nanometre in metres.
    pub const NM: f64 = 1e-9;
}
