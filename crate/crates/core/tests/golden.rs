//! Adaptive results against the committed oracle fixture.

use std::f64::consts::PI;

use casimir_roughness::lifshitz::{self, Geometry};
use casimir_roughness::mirror::{Mirror, ReducedMirror};
use casimir_roughness::oracle::{GoldenSet, GOLDEN_K_MAX, GOLDEN_N};
use casimir_roughness::response::{self, ResponseModel};

const TOL: f64 = 1e-10;
const AGREEMENT: f64 = 1e-4;

fn fixture() -> GoldenSet {
    serde_json::from_str(include_str!("fixtures/golden.json")).unwrap()
}

fn golden(set: &GoldenSet, name: &str) -> (f64, std::collections::BTreeMap<String, f64>) {
    let g = set.get(name).unwrap_or_else(|| panic!("missing golden value {name}"));
    (g.value, g.inputs.clone())
}

fn assert_close(name: &str, got: f64, want: f64) {
    let rel = (got / want - 1.0).abs();
    assert!(rel < AGREEMENT, "{name}: {got} vs golden {want} (rel {rel:.2e})");
}

#[test]
fn fixture_records_its_oracle() {
    let set = fixture();
    assert_eq!(set.grid_n, GOLDEN_N);
    assert_eq!(set.k_max, GOLDEN_K_MAX);
    assert_eq!(set.hbar_c, casimir_roughness::constants::HBAR_C);
    assert!(set.values.iter().all(|g| !g.oracle.is_empty() && g.value.is_finite()));
}

#[test]
fn energies() {
    let set = fixture();
    let (e, inputs) = golden(&set, "reduced_energy");
    let got = lifshitz::reduced_energy(ReducedMirror::Plasma { k_p: inputs["k_p"] }, TOL).unwrap().e;
    assert_close("reduced_energy", got, e);

    let (e, inputs) = golden(&set, "energy_per_area_j_m2");
    let m = Mirror::plasma(inputs["lambda_p_nm"]).unwrap();
    let got = lifshitz::energy_per_area(inputs["separation_nm"], m, TOL).unwrap();
    assert_close("energy_per_area", got, e);

    let (f, inputs) = golden(&set, "plane_sphere_force_n");
    let m = Mirror::plasma(inputs["lambda_p_nm"]).unwrap();
    let g = Geometry::new(inputs["separation_nm"]).unwrap().with_sphere(inputs["radius_nm"]).unwrap();
    let got = lifshitz::plane_sphere_force(&g, m, None, TOL).unwrap();
    assert_close("plane_sphere_force", got.force, f);
    assert!(got.warnings.is_empty());
}

#[test]
fn responses() {
    let set = fixture();
    let (a, inputs) = golden(&set, "alpha_over_l");
    let got = response::alpha(inputs["k_p"], TOL).unwrap().alpha_over_l;
    assert_close("alpha_over_l", got, a);
    assert!(got > 14.0 / (15.0 * inputs["k_p"]) && got < 0.4492);

    let (g, inputs) = golden(&set, "g_perfect");
    assert_close("g_perfect", response::g_perfect(inputs["q"], TOL).unwrap().value, g);

    let (r, inputs) = golden(&set, "rho_perfect");
    assert_close("rho_perfect", response::rho_perfect(inputs["q"], TOL).unwrap(), r);

    let (r, inputs) = golden(&set, "response_ratio_nm2");
    let m = Mirror::plasma(inputs["lambda_p_nm"]).unwrap();
    let got = response::response_ratio(inputs["k_nm_inv"], inputs["separation_nm"], m, ResponseModel::Stitched, TOL)
        .unwrap();
    assert_close("response_ratio", got, r);
}

#[test]
fn gold_reduction_factor_is_partial() {
    let set = fixture();
    let (e, inputs) = golden(&set, "energy_per_area_j_m2");
    let l = inputs["separation_nm"] * 1e-9;
    let ideal = -PI * PI * casimir_roughness::constants::HBAR_C / (720.0 * l.powi(3));
    let factor = e / ideal;
    assert!(factor > 0.0 && factor < 1.0);
}
