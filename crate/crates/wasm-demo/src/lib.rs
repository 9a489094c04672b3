//! Browser bindings: a thin JSON façade over the library for the static demo
//! page. Every function takes and returns JSON strings so the JS side stays
//! free of bindgen classes; errors come back as `{"error": "..."}` payloads.
//!
//! The same functions compile and run natively, which is how they are tested.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use twoweight::constants::Evaluator;
use twoweight::geometry::{
    carleson_shadow, end_side_classify, maximal_deep_subcubes, Cube, Place,
};
use twoweight::measure::{LineSpec, Scenario, WhichMeasure};
use twoweight::report::to_json_canonical;
use twoweight::transform::KernelParams;
use twoweight::verify::{generate_scenario, ExponentRegime, GeneratorConfig};

fn err_json(message: impl std::fmt::Display) -> String {
    format!("{{\"error\":{}}}", serde_json::Value::from(message.to_string()))
}

fn parse_scenario(json: &str) -> Result<Scenario, String> {
    let scenario: Scenario =
        serde_json::from_str(json).map_err(|e| format!("scenario parse error: {e}"))?;
    scenario.validate().map_err(|e| e.to_string())?;
    Ok(scenario)
}

fn respond<T: Serialize>(value: &T) -> String {
    to_json_canonical(value).unwrap_or_else(|e| err_json(e))
}

/// Deterministic demo scenario as JSON (ω on the x₁-axis).
#[wasm_bindgen]
pub fn demo_scenario(seed: u64, alpha: f64, atoms_sigma: u32, atoms_omega: u32) -> String {
    let mut config =
        GeneratorConfig::new(seed, 2, alpha, atoms_sigma as usize, atoms_omega as usize);
    config.which_on_line = Some(WhichMeasure::Omega);
    config.level_max = 5;
    match generate_scenario(&config) {
        Ok(s) => respond(&s),
        Err(e) => err_json(e),
    }
}

/// All constants (with witnesses) for a scenario.
#[wasm_bindgen]
pub fn constants_report(scenario_json: &str) -> String {
    let scenario = match parse_scenario(scenario_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let mut evaluator = match Evaluator::new(&scenario) {
        Ok(ev) => ev,
        Err(e) => return err_json(e),
    };
    match evaluator.compute_all(false) {
        Ok(report) => respond(&report),
        Err(e) => err_json(e),
    }
}

#[derive(Serialize)]
struct BoxPayload {
    lower: Vec<f64>,
    upper: Vec<f64>,
    level: i32,
    good: bool,
    subgood_omega: f64,
    dilated_lower: Vec<f64>,
    dilated_upper: Vec<f64>,
}

#[derive(Serialize)]
struct DecompositionPayload {
    grid: usize,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    gamma: f64,
    cubes: Vec<BoxPayload>,
}

/// The maximal deep subcube decomposition of one grid's root (pruned by ω,
/// the projection measure of the forward energy), with goodness flags,
/// subgood projection norms and the γ-dilations — everything the canvas
/// needs to draw the dyadic machinery.
#[wasm_bindgen]
pub fn deep_decomposition(scenario_json: &str, grid_index: usize, ell: u32) -> String {
    let scenario = match parse_scenario(scenario_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    if grid_index >= scenario.grids.len() {
        return err_json("grid index out of range");
    }
    let mut evaluator = match Evaluator::new(&scenario) {
        Ok(ev) => ev,
        Err(e) => return err_json(e),
    };
    let grid = &scenario.grids[grid_index];
    let root = grid.root();
    let family = evaluator.refined_deep(grid_index, WhichMeasure::Omega, &root, ell);
    let gamma = scenario.goodness.gamma;
    let cubes: Vec<BoxPayload> = family
        .iter()
        .map(|j| {
            let (dl, du) = j.dilated_box(grid, gamma);
            BoxPayload {
                lower: j.lower(grid),
                upper: j.upper(grid),
                level: j.level,
                good: twoweight::geometry::is_good(grid, j, &scenario.goodness),
                subgood_omega: twoweight::energy::projection_norm_subgood(
                    grid,
                    j,
                    &scenario.omega,
                    &scenario.goodness,
                ),
                dilated_lower: dl,
                dilated_upper: du,
            }
        })
        .collect();
    respond(&DecompositionPayload {
        grid: grid_index,
        root_lower: root.lower(grid),
        root_upper: root.upper(grid),
        gamma,
        cubes,
    })
}

#[derive(Serialize)]
struct ShadowCube {
    lower: Vec<f64>,
    upper: Vec<f64>,
    place: String,
    tail_term: f64,
}

#[derive(Serialize)]
struct ShadowPayload {
    point: Vec<f64>,
    shadow_lo: f64,
    shadow_hi: f64,
    f_value: f64,
    regime: String,
    cubes: Vec<ShadowCube>,
}

/// End/side classification of a probe point against the deep decomposition
/// of one grid's root, the point's Carleson shadow on the axis, and its
/// Poisson-tail sum F in the regime dictated by α.
#[wasm_bindgen]
pub fn shadow_diagnostics(scenario_json: &str, grid_index: usize, px: f64, py: f64) -> String {
    let scenario = match parse_scenario(scenario_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    if scenario.dimension != 2 {
        return err_json("shadow diagnostics are a planar view (n = 2)");
    }
    if grid_index >= scenario.grids.len() {
        return err_json("grid index out of range");
    }
    let grid = &scenario.grids[grid_index];
    let root = grid.root();
    let family = maximal_deep_subcubes(grid, &root, &scenario.goodness, &scenario.omega);
    let gamma = scenario.goodness.gamma;
    let point = vec![px, py];
    let regime = ExponentRegime::for_alpha(2, scenario.alpha);
    let p = match KernelParams::new(2, scenario.alpha) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let exponent = match regime {
        ExponentRegime::HighAlpha => p.dimension as f64 + 1.0 - p.alpha,
        ExponentRegime::LowAlpha => 2.0,
    };
    let mut f_value = 0.0;
    let cubes: Vec<ShadowCube> = family
        .iter()
        .map(|j: &Cube| {
            let place = end_side_classify(grid, &root, j, gamma, &point);
            let tail_term = if place == Place::Side {
                let side = j.side();
                let c = j.center(grid);
                let d = point
                    .iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (side / (side + d)).powf(exponent)
            } else {
                0.0
            };
            f_value += tail_term;
            ShadowCube {
                lower: j.lower(grid),
                upper: j.upper(grid),
                place: format!("{place:?}"),
                tail_term,
            }
        })
        .collect();
    let shadow = carleson_shadow(&point, gamma, &LineSpec::x1_axis(2));
    respond(&ShadowPayload {
        point,
        shadow_lo: shadow.lo(),
        shadow_hi: shadow.hi(),
        f_value,
        regime: format!("{regime:?}"),
        cubes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_scenario_round_trips() {
        let json = demo_scenario(7, 1.0, 4, 4);
        assert!(!json.contains("error"), "{json}");
        let report = constants_report(&json);
        assert!(report.contains("op_norm"), "{report}");
        assert!(!report.contains("error"), "{report}");
    }

    #[test]
    fn decomposition_payload_has_boxes() {
        let json = demo_scenario(3, 1.0, 5, 6);
        // Grid 2 is shifted transversally, so its root straddles the axis.
        let payload = deep_decomposition(&json, 2, 0);
        assert!(payload.contains("root_lower"), "{payload}");
        let parsed: serde_json::Value = serde_json::from_str(&payload).unwrap();
        assert!(parsed["cubes"].is_array());
    }

    #[test]
    fn shadow_payload_classifies_probe() {
        let json = demo_scenario(3, 1.5, 5, 6);
        let payload = shadow_diagnostics(&json, 2, 0.8, 0.2);
        let parsed: serde_json::Value = serde_json::from_str(&payload).unwrap();
        assert_eq!(parsed["regime"], "HighAlpha");
        assert!(parsed["shadow_hi"].as_f64().unwrap() >= parsed["shadow_lo"].as_f64().unwrap());
    }

    #[test]
    fn bad_input_reports_error_payload() {
        let out = constants_report("{not json");
        assert!(out.contains("error"));
        let out2 = deep_decomposition(&demo_scenario(1, 1.0, 3, 3), 99, 0);
        assert!(out2.contains("error"));
    }
}
