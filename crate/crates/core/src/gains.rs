//! Closed-form L2/ℓ2 gain bounds from IFP/OSP indices, the feasible
//! `(ν, ρ)` region of the gradient system with feedthrough, and empirical
//! gain estimates from simulated disturbance responses.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::equilibria::IoSample;
use crate::numerics::{psd_check, rank, sym_eigen, Matrix, Vector, DEFAULT_PSD_TOL};
use crate::sim::{simulate_ct, simulate_dt, Horizon, Input};
use crate::systems::Model;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    IfpOsp,
    Ahu,
    DtGradient,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainBound {
    pub gamma: f64,
    pub formula: Formula,
    pub params: BTreeMap<String, f64>,
}

impl GainBound {
    fn new(gamma: f64, formula: Formula, params: &[(&str, f64)]) -> Self {
        Self {
            gamma,
            formula,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// `Γ(δ) = (b + δ/2)/(a − 1/(2δ))`, the squared gain certified by completing
/// the square with weight `δ > 1/(2a)`.
pub fn gamma_sq_of_delta(a: f64, b: f64, delta: f64) -> f64 {
    (b + delta / 2.0) / (a - 1.0 / (2.0 * delta))
}

/// L2 gain of a system that is OSP with index `a > 0` and IFP with index
/// `−b ≤ 0`, i.e. dissipative for `(−a, ½, b)`:
/// `γ² = (1/a²)(ab + (1+s)/4)/(1 − 1/(1+s))` with `s = √(4ab+1)`, attained
/// at `δ⋆ = (s+1)/(2a)`.
pub fn ifp_osp_gain(a: f64, b: f64) -> Result<GainBound> {
    if !(a > 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "need a > 0 and b ≥ 0, got a = {a}, b = {b}"
        )));
    }
    let s = (4.0 * a * b + 1.0).sqrt();
    let g2 = (a * b + (1.0 + s) / 4.0) / (1.0 - 1.0 / (1.0 + s)) / (a * a);
    Ok(GainBound::new(
        g2.sqrt(),
        Formula::IfpOsp,
        &[("a", a), ("b", b), ("delta_star", (s + 1.0) / (2.0 * a))],
    ))
}

/// ℓ2 gain bound for `x⁺ = x − α(∇φ(x) − v)`, `y = x` with `φ`
/// `μ`-strongly convex:
/// `γ² = (1/μ²)(μα/2 + (1+√(2μα+1))/4)/(1 − 1/(1+√(2μα+1)))`.
///
/// Only a bound when `αL ≤ 1` for `L` the Lipschitz constant of `∇φ`.
/// Past that the step overshoots: for `φ = μx²/2` the true gain is
/// `α/(2 − αμ)`, already 3 at `μ = 1, α = 1.5` where this gives 1.5.
pub fn dt_gradient_gain(mu: f64, alpha: f64) -> Result<GainBound> {
    if !(mu > 0.0) || !(alpha > 0.0) || !mu.is_finite() || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "need μ > 0 and α > 0, got μ = {mu}, α = {alpha}"
        )));
    }
    let s = (2.0 * mu * alpha + 1.0).sqrt();
    let g2 = (mu * alpha / 2.0 + (1.0 + s) / 4.0) / (1.0 - 1.0 / (1.0 + s)) / (mu * mu);
    Ok(GainBound::new(
        g2.sqrt(),
        Formula::DtGradient,
        &[("mu", mu), ("alpha", alpha)],
    ))
}

/// `(α, γ)` pairs for plotting.
pub fn dt_gradient_curve(mu: f64, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .map(|&a| Ok((a, dt_gradient_gain(mu, a)?.gamma)))
        .collect()
}

/// `γ⋆ = 1/λ_min(M + AᵀKA)` for the saddle-point dynamics, with the
/// certifying storage weight `α = 2γ⋆²λ_min`.
pub fn ahu_gain(mu: &[f64], a: &Matrix, k: &Matrix) -> Result<GainBound> {
    let (n2, n1) = a.shape();
    if mu.len() != n1 || k.shape() != (n2, n2) {
        return Err(Error::DimensionMismatch(
            "A is n2×n1, M has n1 diagonal entries, K is n2×n2".into(),
        ));
    }
    if mu.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Domain("M must be diagonal positive".into()));
    }
    if rank(a, 1e-10) != n2 {
        return Err(Error::RankDeficientA);
    }
    let kp = psd_check(k, DEFAULT_PSD_TOL)?;
    if !kp.is_psd() {
        return Err(Error::StorageNotPsd {
            min_eigenvalue: kp.min_eigenvalue,
        });
    }
    let m = crate::numerics::diag(mu) + a.transpose() * k * a;
    let lmin = sym_eigen(&((&m + m.transpose()) * 0.5))?.min();
    let gamma = 1.0 / lmin;
    Ok(GainBound::new(
        gamma,
        Formula::Ahu,
        &[("lambda_min", lmin), ("alpha", 2.0 * gamma * gamma * lmin)],
    ))
}

/// Achievable `(ν, ρ)` for the gradient system with feedthrough:
/// `j − ρj² > ν` and `ρ ≤ (μ/g²)(ν−j)/(ν−j−μj²/g²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibleRegion {
    pub mu: f64,
    pub g: f64,
    pub j: f64,
}

impl FeasibleRegion {
    pub fn new(mu: f64, g: f64, j: f64) -> Result<Self> {
        if !(mu > 0.0 && g > 0.0 && j > 0.0) {
            return Err(Error::Domain(format!(
                "need μ, g, j > 0, got μ = {mu}, g = {g}, j = {j}"
            )));
        }
        Ok(Self { mu, g, j })
    }

    /// `j − ρj² > ν`
    pub fn feedthrough_condition(&self, nu: f64, rho: f64) -> bool {
        self.j - rho * self.j * self.j > nu
    }

    /// Upper bound on ρ from the drift condition, for `ν < j`.
    pub fn rho_bound(&self, nu: f64) -> f64 {
        let (mu, g2, j) = (self.mu, self.g * self.g, self.j);
        (mu / g2) * (nu - j) / (nu - j - mu * j * j / g2)
    }

    pub fn drift_condition(&self, nu: f64, rho: f64) -> bool {
        rho <= self.rho_bound(nu)
    }

    pub fn contains(&self, nu: f64, rho: f64) -> bool {
        self.feedthrough_condition(nu, rho) && self.drift_condition(nu, rho)
    }

    /// Supremum of feasible ρ at `ν` (the region's upper boundary), or
    /// `None` when `ν > j`. Zero at `ν = j`.
    pub fn rho_max(&self, nu: f64) -> Option<f64> {
        (nu <= self.j).then(|| {
            ((self.j - nu) / (self.j * self.j))
                .min(self.rho_bound(nu))
                .max(0.0)
        })
    }

    /// `ν` where the feedthrough boundary meets `ρ = 0`.
    pub fn nu_intercept(&self) -> f64 {
        self.j
    }

    /// `ρ` where the feedthrough boundary meets `ν = 0`.
    pub fn rho_intercept(&self) -> f64 {
        1.0 / self.j
    }

    /// `μ/(μj + g²)`: the drift bound at `ν = 0`.
    pub fn rho_cap(&self) -> f64 {
        self.mu / (self.mu * self.j + self.g * self.g)
    }

    /// `(ν, ρ_max(ν))` on `count` points of `[nu_lo, j]`.
    pub fn boundary(&self, nu_lo: f64, count: usize) -> Vec<(f64, f64)> {
        let hi = self.j;
        (0..count)
            .filter_map(|i| {
                let nu = nu_lo + (hi - nu_lo) * i as f64 / (count.max(2) - 1) as f64;
                self.rho_max(nu).map(|r| (nu, r))
            })
            .collect()
    }
}

/// Test signals for [`empirical_gain`]. Random signals are active on the
/// first `active_fraction` of the horizon and zero afterwards; all are
/// scaled to energy `amplitude²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisturbanceSpec {
    pub gaussian: usize,
    pub sinusoids: usize,
    /// Power-iteration rounds (two simulations each); skipped unless the
    /// model is square.
    pub power_iterations: usize,
    pub active_fraction: f64,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        Self {
            gaussian: 20,
            sinusoids: 20,
            power_iterations: 10,
            active_fraction: 0.5,
            amplitude: 1.0,
            seed: 0,
        }
    }
}

impl DisturbanceSpec {
    pub fn total(&self) -> usize {
        self.gaussian + self.sinusoids + self.power_iterations
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalGain {
    pub gamma: f64,
    /// `(kind, ‖y − ȳ‖/‖v‖)` per disturbance.
    pub ratios: Vec<(String, f64)>,
    pub worst: usize,
    /// Disturbances whose terminal state was still away from `x̄`
    /// (`‖x(T) − x̄‖² > 1e-6‖v‖²`); their ratios are still valid lower
    /// bounds.
    pub truncated: usize,
    pub skipped: usize,
}

impl EmpiricalGain {
    pub fn bound(&self) -> GainBound {
        GainBound::new(
            self.gamma,
            Formula::Empirical,
            &[("disturbances", self.ratios.len() as f64)],
        )
    }
}

type Signal = Vec<Vector>;

fn energy(sig: &Signal, dt: Option<f64>) -> f64 {
    // ZOH inputs: exact rectangle sum
    let s: f64 = sig.iter().map(|v| v.norm_squared()).sum();
    s * dt.unwrap_or(1.0)
}

fn output_energy(err: &[Vector], dt: Option<f64>) -> f64 {
    match dt {
        Some(dt) => {
            let n = err.len();
            let mut s = 0.0;
            for k in 0..n.saturating_sub(1) {
                s += 0.5 * dt * (err[k].norm_squared() + err[k + 1].norm_squared());
            }
            s
        }
        None => err.iter().map(|v| v.norm_squared()).sum(),
    }
}

struct Response {
    ratio: f64,
    err: Signal,
    truncated: bool,
}

fn respond(
    model: &dyn Model,
    eq: &IoSample,
    d: &Signal,
    horizon: Horizon,
) -> Result<Option<Response>> {
    let dt = match horizon {
        Horizon::Continuous { dt, .. } => Some(dt),
        Horizon::Discrete { .. } => None,
    };
    let e_in = energy(d, dt);
    if !(e_in > 0.0) {
        return Ok(None);
    }
    let u: Signal = d.iter().map(|v| &eq.ubar + v).collect();
    let input = Input::Sequence(u);
    let traj = match horizon {
        Horizon::Continuous { t_end, dt } => simulate_ct(model, &eq.xbar, &input, t_end, dt)?,
        Horizon::Discrete { steps } => simulate_dt(model, &eq.xbar, &input, steps)?,
    };
    let err: Signal = traj.outputs.iter().map(|y| y - &eq.ybar).collect();
    let e_out = output_energy(&err, dt);
    let truncated = (traj.final_state() - &eq.xbar).norm_squared() > 1e-6 * e_in;
    Ok(Some(Response {
        ratio: (e_out / e_in).sqrt(),
        err,
        truncated,
    }))
}

fn scaled(mut sig: Signal, target: f64, dt: Option<f64>) -> Signal {
    let e = energy(&sig, dt);
    if e > 0.0 {
        let s = target / e.sqrt();
        for v in &mut sig {
            *v *= s;
        }
    }
    sig
}

/// Lower bound on the incremental gain at `eq`: the largest
/// `‖y − ȳ‖/‖v‖` over a disturbance set, for `u = ū + v` applied from
/// `x(0) = x̄`. CT output energies use the trapezoidal rule at the
/// integrator step; inputs are held, so their energy is exact.
pub fn empirical_gain(
    model: &dyn Model,
    eq: &IoSample,
    spec: &DisturbanceSpec,
    horizon: Horizon,
) -> Result<EmpiricalGain> {
    let (steps, dt) = match horizon {
        Horizon::Continuous { t_end, dt } => ((t_end / dt).round().max(1.0) as usize, Some(dt)),
        Horizon::Discrete { steps } => (steps, None),
    };
    let len = steps + 1;
    let m = model.input_dim();
    let square = model.output_dim() == m;
    let power = if square { spec.power_iterations } else { 0 };
    if spec.gaussian + spec.sinusoids + power == 0 {
        return Err(Error::EmptyDisturbanceSet);
    }
    let active = ((len as f64 * spec.active_fraction).ceil() as usize).clamp(1, len);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut signals: Vec<(String, Signal)> = Vec::new();
    for _ in 0..spec.gaussian {
        let sig: Signal = (0..len)
            .map(|k| {
                if k < active {
                    Vector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
                } else {
                    Vector::zeros(m)
                }
            })
            .collect();
        signals.push(("gaussian".into(), scaled(sig, spec.amplitude, dt)));
    }
    for _ in 0..spec.sinusoids {
        let (wmax, step) = match dt {
            Some(dt) => (5.0f64.min(std::f64::consts::PI / dt), dt),
            None => (std::f64::consts::PI, 1.0),
        };
        let omega: Vec<f64> = (0..m).map(|_| rng.random_range(0.02..wmax)).collect();
        let phase: Vec<f64> = (0..m)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let sig: Signal = (0..len)
            .map(|k| {
                let t = k as f64 * step;
                if k < active {
                    Vector::from_fn(m, |i, _| (omega[i] * t + phase[i]).sin())
                } else {
                    Vector::zeros(m)
                }
            })
            .collect();
        signals.push(("sinusoid".into(), scaled(sig, spec.amplitude, dt)));
    }
    let responses = par::map(&signals, |(_, s)| respond(model, eq, s, horizon));
    let mut ratios = Vec::new();
    let (mut truncated, mut skipped) = (0, 0);
    let mut seed_signal: Option<(f64, Signal)> = None;
    for ((kind, sig), r) in signals.into_iter().zip(responses) {
        match r? {
            Some(r) => {
                truncated += r.truncated as usize;
                if seed_signal.as_ref().is_none_or(|(best, _)| r.ratio > *best) {
                    seed_signal = Some((r.ratio, sig));
                }
                ratios.push((kind, r.ratio));
            }
            None => skipped += 1,
        }
    }
    // power iteration on v ↦ R T R T v (R reverses time), which is T*T for
    // linear systems with symmetric impulse response
    if power > 0 {
        let mut d = match seed_signal {
            Some((_, s)) => s,
            None => {
                let sig: Signal = (0..len)
                    .map(|_| Vector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal)))
                    .collect();
                scaled(sig, spec.amplitude, dt)
            }
        };
        for _ in 0..power {
            let Some(r) = respond(model, eq, &d, horizon)? else {
                skipped += 1;
                break;
            };
            truncated += r.truncated as usize;
            ratios.push(("power".into(), r.ratio));
            let back: Signal = r.err.into_iter().rev().collect();
            let Some(r2) = respond(model, eq, &scaled(back, spec.amplitude, dt), horizon)? else {
                break;
            };
            d = scaled(r2.err.into_iter().rev().collect(), spec.amplitude, dt);
        }
    }
    if ratios.is_empty() {
        return Err(Error::EmptyDisturbanceSet);
    }
    let mut worst = 0;
    for (i, (_, r)) in ratios.iter().enumerate() {
        if *r > ratios[worst].1 {
            worst = i;
        }
    }
    Ok(EmpiricalGain {
        gamma: ratios[worst].1,
        ratios,
        worst,
        truncated,
        skipped,
    })
}
