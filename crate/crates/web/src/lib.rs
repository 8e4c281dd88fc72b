//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the `*_json` functions hold the logic
//! so they can be tested natively.

use rigiditylab::gaps::{dolgopyat_sweep, net_growth_experiment, torus_gap_scan, ProbeSet};
use rigiditylab::{Rotation, Spin, TorusElement};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Demo limits keep a single call well under a second in the browser.
pub const MAX_SPIN_TWICE: u32 = 60;
pub const MAX_RADIUS: u32 = 7;
pub const MAX_PROBES: usize = 50_000;
pub const MAX_WEIGHT_BOUND: u32 = 100_000;

fn rotations(angle_z: f64, angle_x: f64) -> Vec<Rotation> {
    vec![Rotation::new([0.0, 0.0, 1.0], angle_z), Rotation::new([1.0, 0.0, 0.0], angle_x)]
}

fn check_angle(name: &str, a: f64) -> Result<(), String> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be a finite number"))
    }
}

pub fn sweep_json(max_spin_twice: u32, angle_z: f64, angle_x: f64) -> Result<String, String> {
    check_angle("angle_z", angle_z)?;
    check_angle("angle_x", angle_x)?;
    if max_spin_twice == 0 || max_spin_twice > MAX_SPIN_TWICE {
        return Err(format!("2j must be in 1..={MAX_SPIN_TWICE}"));
    }
    let r = dolgopyat_sweep(&rotations(angle_z, angle_x), Spin::from_twice(max_spin_twice)).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}

pub fn torus_json(theta: f64, weight_bound: u32, alpha: u32) -> Result<String, String> {
    check_angle("theta", theta)?;
    if weight_bound == 0 || weight_bound > MAX_WEIGHT_BOUND {
        return Err(format!("weight bound must be in 1..={MAX_WEIGHT_BOUND}"));
    }
    let t = TorusElement::new(vec![theta.rem_euclid(1.0)]);
    // Running minimum over L = 1, 2, 4, ... for the plot.
    let mut curve = Vec::new();
    let mut l = 1;
    loop {
        let r = torus_gap_scan(&t, l, alpha).map_err(|e| e.to_string())?;
        curve.push(json!({ "weight_bound": l, "epsilon": r.epsilon }));
        if l == weight_bound {
            break;
        }
        l = (l * 2).min(weight_bound);
    }
    let full = torus_gap_scan(&t, weight_bound, alpha).map_err(|e| e.to_string())?;
    serde_json::to_string(&json!({ "report": full, "curve": curve })).map_err(|e| e.to_string())
}

pub fn net_json(radius: u32, probe_size: usize, angle_z: f64, angle_x: f64) -> Result<String, String> {
    check_angle("angle_z", angle_z)?;
    check_angle("angle_x", angle_x)?;
    if radius > MAX_RADIUS {
        return Err(format!("radius must be at most {MAX_RADIUS}"));
    }
    if probe_size == 0 || probe_size > MAX_PROBES {
        return Err(format!("probe size must be in 1..={MAX_PROBES}"));
    }
    let probes = ProbeSet::new(probe_size);
    let g = net_growth_experiment(&rotations(angle_z, angle_x), radius, &probes).map_err(|e| e.to_string())?;
    serde_json::to_string(&g).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn sweep(max_spin_twice: u32, angle_z: f64, angle_x: f64) -> Result<String, JsError> {
    sweep_json(max_spin_twice, angle_z, angle_x).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn torus(theta: f64, weight_bound: u32, alpha: u32) -> Result<String, JsError> {
    torus_json(theta, weight_bound, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn net(radius: u32, probe_size: u32, angle_z: f64, angle_x: f64) -> Result<String, JsError> {
    net_json(radius, probe_size as usize, angle_z, angle_x).map_err(|e| JsError::new(&e))
}
