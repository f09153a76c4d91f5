//! Fixed-step simulation (RK4 with zero-order hold in continuous time,
//! plain iteration in discrete time), dissipation audits along trajectories
//! and probe-shell stability experiments.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::certify::StorageFamily;
use crate::equilibria::IoSample;
use crate::numerics::{rk4_step, Vector};
use crate::systems::{Model, SupplyRate, TimeDomain};
use crate::{io, par, Error, Result, Verdict};

pub type SignalFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

/// Input signal. Continuous-time simulation samples it at the start of each
/// step and holds the value over the step.
#[derive(Clone)]
pub enum Input {
    Constant(Vector),
    /// `values[k]` on step `k`; the last value is held afterwards.
    Sequence(Vec<Vector>),
    /// Evaluated at `t` (continuous time) or at `k as f64` (discrete time).
    Function(SignalFn),
}

impl Input {
    pub fn zero(m: usize) -> Self {
        Input::Constant(Vector::zeros(m))
    }

    pub fn at(&self, t: f64, k: usize) -> Vector {
        match self {
            Input::Constant(u) => u.clone(),
            Input::Sequence(vs) => vs
                .get(k)
                .or_else(|| vs.last())
                .cloned()
                .unwrap_or_else(|| Vector::zeros(0)),
            Input::Function(f) => f(t),
        }
    }
}

/// States, inputs and outputs at `times`. `inputs[k]` is the value applied
/// on `[t_k, t_{k+1})`; the final entry repeats the input at the end time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub domain: TimeDomain,
    pub dt: Option<f64>,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<Vector>,
    #[serde(skip)]
    pub inputs: Vec<Vector>,
    #[serde(skip)]
    pub outputs: Vec<Vector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Vector {
        self.states
            .last()
            .expect("trajectories hold at least the initial state")
    }

    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut header = vec![if self.dt.is_some() { "t" } else { "k" }.to_string()];
        let n = self.states.first().map_or(0, |x| x.len());
        let m = self.inputs.first().map_or(0, |u| u.len());
        let p = self.outputs.first().map_or(0, |y| y.len());
        header.extend(io::indexed("x", n));
        header.extend(io::indexed("u", m));
        header.extend(io::indexed("y", p));
        let rows = (0..self.len())
            .map(|k| {
                let mut row = vec![self.times[k]];
                row.extend(self.states[k].iter());
                row.extend(self.inputs[k].iter());
                row.extend(self.outputs[k].iter());
                row
            })
            .collect();
        (header, rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let (h, r) = self.table();
        io::write_csv(path, &h, &r)
    }
}

fn check_dims(model: &dyn Model, x0: &Vector, u0: &Vector) -> Result<()> {
    if x0.len() != model.state_dim() || u0.len() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "model has (n, m) = ({}, {}), got x0 of length {} and input of length {}",
            model.state_dim(),
            model.input_dim(),
            x0.len(),
            u0.len()
        )));
    }
    Ok(())
}

/// RK4 with the input held over each step. The number of steps is
/// `round(t_end / dt)`.
pub fn simulate_ct(
    model: &dyn Model,
    x0: &Vector,
    u: &Input,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if model.domain() != TimeDomain::Continuous {
        return Err(Error::WrongDomain {
            expected: "continuous-time",
        });
    }
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidParam {
            key: "dt".into(),
            reason: format!("need dt > 0 and T > 0, got dt = {dt}, T = {t_end}"),
        });
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    check_dims(model, x0, &u.at(0.0, 0))?;
    let rhs = |x: &Vector, v: &Vector| model.rhs(x, v);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let mut outputs = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let uk = u.at(t, k);
        let yk = model.output(&x, &uk);
        if !yk.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        times.push(t);
        states.push(x.clone());
        outputs.push(yk);
        if k < steps {
            x = rk4_step(&rhs, &x, &uk, dt).map_err(|_| Error::NonFinite { t: t + dt })?;
        }
        inputs.push(uk);
    }
    Ok(Trajectory {
        domain: TimeDomain::Continuous,
        dt: Some(dt),
        times,
        states,
        inputs,
        outputs,
    })
}

/// `x_{k+1} = rhs(x_k, u_k)` for `steps` steps.
pub fn simulate_dt(model: &dyn Model, x0: &Vector, u: &Input, steps: usize) -> Result<Trajectory> {
    if model.domain() != TimeDomain::Discrete {
        return Err(Error::WrongDomain {
            expected: "discrete-time",
        });
    }
    if steps == 0 {
        return Err(Error::InvalidParam {
            key: "steps".into(),
            reason: "need at least one step".into(),
        });
    }
    check_dims(model, x0, &u.at(0.0, 0))?;
    let mut x = x0.clone();
    let mut traj = Trajectory {
        domain: TimeDomain::Discrete,
        dt: None,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let uk = u.at(k as f64, k);
        let yk = model.output(&x, &uk);
        if !x.iter().chain(yk.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t: k as f64 });
        }
        traj.times.push(k as f64);
        traj.states.push(x.clone());
        traj.outputs.push(yk);
        if k < steps {
            x = model.rhs(&x, &uk);
        }
        traj.inputs.push(uk);
    }
    Ok(traj)
}

/// Default audit tolerance: `1e-6 + 10·dt⁴·T` in continuous time, `1e-9` in
/// discrete time.
pub fn default_audit_tol(traj: &Trajectory) -> f64 {
    match traj.dt {
        Some(dt) => 1e-6 + 10.0 * dt.powi(4) * traj.times.last().copied().unwrap_or(0.0),
        None => 1e-9,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipationAudit {
    /// `V_x̄(x_k)`
    pub storage: Vec<f64>,
    /// Cumulative supply `∫₀^{t_k} w` (or the running sum).
    pub supplied: Vec<f64>,
    /// Per-step `ΔV − ∫w`; the first entry is zero.
    pub step_violation: Vec<f64>,
    pub max_step_violation: f64,
    /// `max_{i<j} [(V_j − V_i) − ∫_{t_i}^{t_j} w]`: the worst violation over
    /// any window, so slow drifts are caught as well as single-step ones.
    pub max_violation: f64,
    /// `max |ΔV − ∫w|` per step; for exact identities this is pure
    /// discretization error.
    pub max_gap: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

impl DissipationAudit {
    pub fn write_csv(&self, traj: &Trajectory, path: &Path) -> Result<()> {
        let (mut h, mut rows) = traj.table();
        h.extend(["V", "supplied", "violation"].map(String::from));
        for (k, row) in rows.iter_mut().enumerate() {
            row.extend([self.storage[k], self.supplied[k], self.step_violation[k]]);
        }
        io::write_csv(path, &h, &rows)
    }
}

/// Compare storage increments with supplied energy, step by step, for the
/// storage `V_x̄` and the shifted supply `w(u − ū, y − ȳ)`.
///
/// In continuous time each step's supply is integrated by Simpson's rule,
/// with the midpoint state from an RK4 half step under the same held input,
/// so the comparison is accurate to `O(dt⁵)` per step. The discrete-time
/// comparison is exact. `tol` defaults to [`default_audit_tol`].
pub fn audit_dissipation(
    model: &dyn Model,
    traj: &Trajectory,
    storage: &dyn StorageFamily,
    eq: &IoSample,
    supply: &SupplyRate,
    tol: Option<f64>,
) -> Result<DissipationAudit> {
    if traj.domain != model.domain() {
        return Err(Error::WrongDomain {
            expected: match model.domain() {
                TimeDomain::Continuous => "continuous-time",
                TimeDomain::Discrete => "discrete-time",
            },
        });
    }
    if supply.m() != model.input_dim() || supply.p() != model.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "supply is for (p, m) = ({}, {}), model has ({}, {})",
            supply.p(),
            supply.m(),
            model.output_dim(),
            model.input_dim()
        )));
    }
    let tol = tol.unwrap_or_else(|| default_audit_tol(traj));
    let xbar = &eq.xbar;
    let w = |x: &Vector, u: &Vector| supply.eval(&(u - &eq.ubar), &(model.output(x, u) - &eq.ybar));
    let n = traj.len();
    let storage_vals: Vec<f64> = traj.states.iter().map(|x| storage.value(x, xbar)).collect();
    let idx: Vec<usize> = (0..n.saturating_sub(1)).collect();
    let step_supply: Vec<f64> = match traj.dt {
        Some(dt) => {
            let rhs = |x: &Vector, v: &Vector| model.rhs(x, v);
            let out = par::map(&idx, |&k| {
                let (x0, x1, u) = (&traj.states[k], &traj.states[k + 1], &traj.inputs[k]);
                let xm = rk4_step(&rhs, x0, u, 0.5 * dt)
                    .map_err(|_| Error::NonFinite { t: traj.times[k] })?;
                Ok(dt / 6.0 * (w(x0, u) + 4.0 * w(&xm, u) + w(x1, u)))
            });
            out.into_iter().collect::<Result<Vec<f64>>>()?
        }
        None => idx
            .iter()
            .map(|&k| w(&traj.states[k], &traj.inputs[k]))
            .collect(),
    };
    let mut supplied = Vec::with_capacity(n);
    let mut step_violation = Vec::with_capacity(n);
    supplied.push(0.0);
    step_violation.push(0.0);
    let (mut max_step, mut max_gap) = (f64::NEG_INFINITY, 0.0f64);
    // running max rise of C_k = V_k − V_0 − ∫₀^{t_k} w
    let (mut c_min, mut max_rise) = (0.0f64, 0.0f64);
    for k in 0..idx.len() {
        let dv = storage_vals[k + 1] - storage_vals[k];
        let viol = dv - step_supply[k];
        max_step = max_step.max(viol);
        max_gap = max_gap.max(viol.abs());
        supplied.push(supplied[k] + step_supply[k]);
        step_violation.push(viol);
        let c = storage_vals[k + 1] - storage_vals[0] - supplied[k + 1];
        max_rise = max_rise.max(c - c_min);
        c_min = c_min.min(c);
    }
    if idx.is_empty() {
        max_step = 0.0;
    }
    Ok(DissipationAudit {
        storage: storage_vals,
        supplied,
        step_violation,
        max_step_violation: max_step,
        max_violation: max_rise,
        max_gap,
        tol,
        verdict: Verdict::from_bool(max_rise <= tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Horizon {
    Continuous { t_end: f64, dt: f64 },
    Discrete { steps: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub radius: f64,
    pub probes: usize,
    pub converged_fraction: f64,
    /// `‖x(T) − x̄‖` per probe; infinite when the trajectory blew up.
    pub final_distances: Vec<f64>,
    pub max_final_distance: f64,
    pub converged: Vec<bool>,
    /// Fraction of converged probes required for a pass.
    pub required_fraction: f64,
    pub verdict: Verdict,
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `count` deterministic unit directions in `ℝⁿ`: equally spaced angles for
/// `n = 2`, Halton points mapped through Box-Muller and normalized otherwise.
pub fn probe_directions(n: usize, count: usize) -> Vec<Vector> {
    match n {
        0 => vec![],
        1 => (0..count)
            .map(|i| Vector::from_element(1, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
        2 => (0..count)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / count as f64;
                Vector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let pairs = n.div_ceil(2);
            (0..count)
                .map(|i| {
                    let mut z = Vec::with_capacity(2 * pairs);
                    for p in 0..pairs {
                        let b1 = PRIMES[(2 * p) % PRIMES.len()] as u64;
                        let b2 = PRIMES[(2 * p + 1) % PRIMES.len()] as u64;
                        let u1 = radical_inverse(i as u64 + 1, b1).max(1e-12);
                        let u2 = radical_inverse(i as u64 + 1, b2);
                        let r = (-2.0 * u1.ln()).sqrt();
                        let a = std::f64::consts::TAU * u2;
                        z.push(r * a.cos());
                        z.push(r * a.sin());
                    }
                    let v = Vector::from_iterator(n, z.into_iter().take(n));
                    let norm = v.norm();
                    if norm > 0.0 {
                        v / norm
                    } else {
                        let mut e = Vector::zeros(n);
                        e[0] = 1.0;
                        e
                    }
                })
                .collect()
        }
    }
}

/// Simulate from `x̄ + radius·d` for each probe direction `d` with the input
/// held at `ū`; a probe converges when `‖x(T) − x̄‖ ≤ 1e-2·radius`. Pass iff
/// the converged fraction reaches `required_fraction`.
pub fn stability_experiment(
    model: &dyn Model,
    xbar: &Vector,
    ubar: &Vector,
    radius: f64,
    probes: usize,
    horizon: Horizon,
    required_fraction: f64,
) -> Result<StabilityReport> {
    if xbar.len() != model.state_dim() || ubar.len() != model.input_dim() {
        return Err(Error::DimensionMismatch(
            "x̄ and ū must match the model's state and input dimensions".into(),
        ));
    }
    if !(radius > 0.0) || probes == 0 {
        return Err(Error::InvalidParam {
            key: "radius".into(),
            reason: "need a positive radius and at least one probe".into(),
        });
    }
    let dirs = probe_directions(xbar.len(), probes);
    let input = Input::Constant(ubar.clone());
    let finals = par::map(&dirs, |d| {
        let x0 = xbar + d * radius;
        let traj = match horizon {
            Horizon::Continuous { t_end, dt } => simulate_ct(model, &x0, &input, t_end, dt),
            Horizon::Discrete { steps } => simulate_dt(model, &x0, &input, steps),
        };
        match traj {
            Ok(t) => (t.final_state() - xbar).norm(),
            Err(_) => f64::INFINITY,
        }
    });
    let converged: Vec<bool> = finals.iter().map(|&d| d <= 1e-2 * radius).collect();
    let fraction = converged.iter().filter(|&&c| c).count() as f64 / probes as f64;
    Ok(StabilityReport {
        radius,
        probes,
        converged_fraction: fraction,
        max_final_distance: finals.iter().copied().fold(0.0, f64::max),
        final_distances: finals,
        converged,
        required_fraction,
        verdict: Verdict::from_bool(fraction >= required_fraction),
    })
}
