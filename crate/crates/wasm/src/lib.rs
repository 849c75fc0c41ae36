//! WebAssembly bindings for the static demo page in `web/`.
//!
//! Structured results are returned as JSON strings.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(js_err)
}

/// Boundary polyline and extent of one guidance field.
#[wasm_bindgen(js_name = fieldShape)]
pub fn field_shape(mode: &str, d1: f64, d2: f64, angle_deg: f64, n: usize) -> Result<String, JsError> {
    to_json(&demo::field_shape(mode, d1, d2, angle_deg, n).map_err(js_err)?)
}

/// `n × n` manipulability grid for a two-link arm (NaN outside the workspace).
#[wasm_bindgen(js_name = manipulabilityMap)]
pub fn manipulability_map(l1: f64, l2: f64, n: usize) -> Result<Vec<f64>, JsError> {
    demo::manipulability_map(l1, l2, n).map_err(js_err)
}

/// Runs a scripted episode with the default configuration.
#[wasm_bindgen]
pub fn simulate(scenario: &str, method: &str, seed: u32, noise_deg: f64) -> Result<String, JsError> {
    to_json(&demo::simulate(scenario, method, seed as u64, noise_deg).map_err(js_err)?)
}
