//! Browser bindings for the routed dense coding demo: the closed-form
//! baseline curve, interactive single-letter routing, and a small capacity
//! search. Every function returns a JSON string so the page needs no
//! framework, just `JSON.parse`.

use wasm_bindgen::prelude::*;

use qdense_core::capacity::{
    figure_of_merit, optimize_global_capacity, OptimizationConfig, ProbabilityMode,
};
use qdense_core::encoding::SingleQubitUnitaryParams;
use qdense_core::information::chi_sdc_gghz;
use qdense_core::routing::{route_pure, to_protocol_order, RoutingLetter};
use qdense_core::states::gghz_state;

fn err_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// Standard dense-coding baseline chi_SDC(theta) on a uniform grid over
/// [0, pi], with the chi_SDC + 1 comparison level alongside.
#[wasm_bindgen]
pub fn baseline_curve(points: usize) -> String {
    let n = points.clamp(2, 2048);
    let thetas: Vec<f64> = (0..n)
        .map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect();
    let chi: Vec<f64> = thetas.iter().map(|&t| chi_sdc_gghz(t)).collect();
    let reference: Vec<f64> = chi.iter().map(|c| c + 1.0).collect();
    serde_json::json!({
        "theta": thetas,
        "chi_sdc": chi,
        "chi_sdc_plus_one": reference,
    })
    .to_string()
}

/// Routes a generalized GHZ state through one letter (U on the first lab, V
/// on the second) and post-selects the |+> control outcome. Returns the lab
/// amplitudes, basis labels, and the success probability.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn route_ghz(
    theta: f64,
    u_theta: f64,
    u_phi: f64,
    u_lam: f64,
    v_alpha: f64,
    v_theta: f64,
    v_phi: f64,
    v_lam: f64,
) -> String {
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    let physical = match gghz_state(3, theta, 0.0) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let psi = match to_protocol_order(&physical, 2) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let letter = match RoutingLetter::from_params(&[
        SingleQubitUnitaryParams::special(u_theta, u_phi, u_lam),
        SingleQubitUnitaryParams::with_phase(v_alpha, v_theta, v_phi, v_lam),
    ]) {
        Ok(l) => l,
        Err(e) => return err_json(e),
    };
    match route_pure(&psi, &letter, 2) {
        Ok((state, success)) => {
            let labels: Vec<String> = (0..16).map(|i| format!("{i:04b}")).collect();
            let re: Vec<f64> = state.amplitudes().iter().map(|z| z.re).collect();
            let im: Vec<f64> = state.amplitudes().iter().map(|z| z.im).collect();
            serde_json::json!({
                "labels": labels,
                "re": re,
                "im": im,
                "success_probability": success,
            })
            .to_string()
        }
        Err(e) => err_json(e),
    }
}

/// Small multi-restart capacity search for the gGHZ input at one theta.
/// Budgets are clamped so a click stays responsive in the browser.
#[wasm_bindgen]
pub fn optimize_capacity(
    theta: f64,
    alphabet: usize,
    restarts: usize,
    max_iterations: usize,
    seed: u32,
) -> String {
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    let alphabet = alphabet.clamp(1, 8);
    let cfg = OptimizationConfig {
        restarts: restarts.clamp(1, 64),
        max_iterations: max_iterations.clamp(10, 500),
        seed: seed as u64,
        gradient_step: 1e-6,
        convergence_tolerance: 1e-9,
        probability_mode: ProbabilityMode::Free,
    };
    let rho = match gghz_state(3, theta, 0.0) {
        Ok(s) => s.to_density(),
        Err(e) => return err_json(e),
    };
    match optimize_global_capacity(&rho, 2, alphabet, &cfg) {
        Ok(result) => {
            let chi_sdc = chi_sdc_gghz(theta);
            serde_json::json!({
                "theta": theta,
                "alphabet": alphabet,
                "best_value": result.best_value,
                "chi_sdc": chi_sdc,
                "delta": figure_of_merit(result.best_value, chi_sdc, 2),
                "per_restart": result.per_restart_values,
                "converged": result.converged,
            })
            .to_string()
        }
        Err(e) => err_json(e),
    }
}
