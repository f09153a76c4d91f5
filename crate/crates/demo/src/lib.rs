//! Browser bindings: the passivity region of the gradient feedforward
//! system, closed-form gain curves, and the SMIB circle criterion.
//!
//! Curves come back as flat `Float64Array`s of fixed-width rows.

use std::sync::Arc;

use eid_core::certify::sample_local_pairs;
use eid_core::equilibria::{EquilibriumMap, Region};
use eid_core::gains::{self, FeasibleRegion};
use eid_core::interconnect::{circle_criterion, CircleOptions, LurieLoop};
use eid_core::sim::{simulate_ct, Input};
use eid_core::systems::{SectorBounds, SmibParams, StaticNonlinearity};
use eid_core::Vector;
use wasm_bindgen::prelude::*;

fn js(e: eid_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Rows `(ν, ρ feedthrough bound, ρ drift bound, ρ_max)` for `ν ∈ [0, j)`.
#[wasm_bindgen]
pub fn region_boundary(mu: f64, g: f64, j: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let reg = FeasibleRegion::new(mu, g, j).map_err(js)?;
    let mut out = Vec::with_capacity(4 * points);
    for (nu, rho_max) in reg.boundary(0.0, points) {
        out.extend([nu, (j - nu) / (j * j), reg.rho_bound(nu), rho_max]);
    }
    Ok(out)
}

/// `[ν-intercept, ρ-intercept, ρ cap]`
#[wasm_bindgen]
pub fn region_intercepts(mu: f64, g: f64, j: f64) -> Result<Vec<f64>, JsError> {
    let reg = FeasibleRegion::new(mu, g, j).map_err(js)?;
    Ok(vec![reg.nu_intercept(), reg.rho_intercept(), reg.rho_cap()])
}

#[wasm_bindgen]
pub fn region_contains(mu: f64, g: f64, j: f64, nu: f64, rho: f64) -> Result<bool, JsError> {
    Ok(FeasibleRegion::new(mu, g, j).map_err(js)?.contains(nu, rho))
}

/// Rows `(α, γ)` for the discrete gradient step on `(0, alpha_max]`.
#[wasm_bindgen]
pub fn dt_gradient_curve(mu: f64, alpha_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let alphas: Vec<f64> = (1..=points)
        .map(|i| alpha_max * i as f64 / points as f64)
        .collect();
    let curve = gains::dt_gradient_curve(mu, &alphas).map_err(js)?;
    Ok(curve.into_iter().flat_map(|(a, g)| [a, g]).collect())
}

#[wasm_bindgen]
pub fn ifp_osp_gain(a: f64, b: f64) -> Result<f64, JsError> {
    Ok(gains::ifp_osp_gain(a, b).map_err(js)?.gamma)
}

fn smib(damping: f64, p_m: f64) -> Result<eid_core::systems::System, JsError> {
    SmibParams {
        d: damping,
        p_m,
        ..SmibParams::default()
    }
    .build()
    .map_err(js)
}

/// Largest certified ε for the sector `[lo, hi]`, or NaN when the loop
/// transformation cannot be certified.
#[wasm_bindgen]
pub fn smib_circle(damping: f64, p_m: f64, lo: f64, hi: f64) -> Result<f64, JsError> {
    let sys = smib(damping, p_m)?;
    let emap = EquilibriumMap::new(&sys).map_err(js)?;
    let pairs = sample_local_pairs(&emap, &Region::cube(2, 1.0), 0.5, 200, 7).map_err(js)?;
    let gen = sys.storage().expect("smib carries its energy");
    let bounds = SectorBounds::scalar(lo, hi).map_err(js)?;
    let opts = CircleOptions {
        refine_steps: 20,
        ..CircleOptions::default()
    };
    let report = circle_criterion(&sys, &bounds, gen, &pairs, None, &opts).map_err(js)?;
    Ok(report
        .epsilon
        .filter(|_| report.verdict.is_pass())
        .unwrap_or(f64::NAN))
}

/// Rows `(t, θ − θ̄, ω)` for the swing equation with the frequency fed back
/// through a saturation of level `sat`, started at `θ̄ + dtheta`, `ω = omega0`.
#[wasm_bindgen]
pub fn smib_trajectory(
    damping: f64,
    p_m: f64,
    sat: f64,
    dtheta: f64,
    omega0: f64,
    t_end: f64,
) -> Result<Vec<f64>, JsError> {
    let sys = smib(damping, p_m)?;
    let emap = EquilibriumMap::new(&sys).map_err(js)?;
    let xbar = emap.project(&Vector::zeros(2)).map_err(js)?;
    let eq = emap.ku_ky(&xbar).map_err(js)?;
    let psi = StaticNonlinearity::new(
        "saturation",
        1,
        Arc::new(move |z: &Vector| z.map(|v| v.clamp(-sat, sat))),
    );
    let v1 = &eq.ubar + psi.eval(&eq.ybar);
    let lp = LurieLoop::new(sys, psi).map_err(js)?;
    let u = Input::Constant(Vector::from_vec(vec![v1[0], 0.0]));
    let x0 = Vector::from_vec(vec![xbar[0] + dtheta, omega0]);
    let traj = simulate_ct(&lp, &x0, &u, t_end, 1e-2).map_err(js)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .flat_map(|(t, x)| [*t, x[0] - xbar[0], x[1]])
        .collect())
}
