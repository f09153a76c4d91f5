//! Per-command JSON configs. Every field has a default; unknown keys are
//! rejected.

use eid_core::numerics::matrix_from_rows;
use eid_core::systems::SupplyRate;
use eid_core::{Matrix, Result, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupplySpec {
    Matrices {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        #[serde(rename = "S")]
        s: Vec<Vec<f64>>,
        #[serde(rename = "R")]
        r: Vec<Vec<f64>>,
    },
    Named(NamedSupply),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedSupply {
    Passivity,
    L2Gain {
        gamma: f64,
    },
    /// `(−ρI, ½I, −νI)`
    IfpOsp {
        #[serde(default)]
        nu: f64,
        #[serde(default)]
        rho: f64,
    },
    /// `(qI, sI, rI)`
    Scalar {
        q: f64,
        s: f64,
        r: f64,
    },
}

impl Default for SupplySpec {
    fn default() -> Self {
        SupplySpec::Named(NamedSupply::Passivity)
    }
}

impl SupplySpec {
    pub fn build(&self, p: usize, m: usize) -> Result<SupplyRate> {
        match self {
            SupplySpec::Matrices { q, s, r } => SupplyRate::new(
                matrix_from_rows(q)?,
                matrix_from_rows(s)?,
                matrix_from_rows(r)?,
            ),
            SupplySpec::Named(n) => Ok(match *n {
                NamedSupply::Passivity => SupplyRate::scalar(p, m, 0.0, 0.5, 0.0),
                NamedSupply::L2Gain { gamma } => SupplyRate::l2_gain(p, m, gamma),
                NamedSupply::IfpOsp { nu, rho } => SupplyRate::scalar(p, m, -rho, 0.5, -nu),
                NamedSupply::Scalar { q, s, r } => SupplyRate::scalar(p, m, q, s, r),
            }),
        }
    }
}

pub fn matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    Ok(matrix_from_rows(rows)?)
}

pub fn vector(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    #[default]
    Bregman,
    Shifted,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Equality,
    #[default]
    Inequality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub supply: SupplySpec,
    pub storage: StorageKind,
    pub mode: ModeSpec,
    pub pairs: usize,
    /// half-width of the cube `x` is drawn from
    pub radius: f64,
    /// half-width of the cube equilibria are projected from
    pub xbar_radius: f64,
    /// draw `x` around its own `x̄` instead
    pub local_radius: Option<f64>,
    pub tol_a: f64,
    pub tol_b: f64,
    pub tol_c: f64,
    /// `P` for discrete-time certificates; defaults to half the Hessian of
    /// the system's quadratic storage
    #[serde(rename = "P")]
    pub p: Option<Vec<Vec<f64>>>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            supply: SupplySpec::default(),
            storage: StorageKind::Bregman,
            mode: ModeSpec::Inequality,
            pairs: 2000,
            radius: 2.0,
            xbar_radius: 2.0,
            local_radius: None,
            tol_a: 1e-7,
            tol_b: 1e-7,
            tol_c: 1e-10,
            p: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct KypConfig {
    pub supply: SupplySpec,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub mu: f64,
    pub g: f64,
    pub j: f64,
    pub nu_lo: f64,
    pub nu_hi: f64,
    pub points: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            mu: 2.0,
            g: 1.0,
            j: 0.9,
            nu_lo: 0.0,
            nu_hi: 1.0,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "formula", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainConfig {
    IfpOsp {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    DtGradient {
        mu: f64,
        alphas: Vec<f64>,
    },
    Ahu {
        mu: Vec<f64>,
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "K")]
        k: Option<Vec<Vec<f64>>>,
    },
    /// Lower bound from simulation; needs `--system`.
    Empirical {
        #[serde(default)]
        xbar: Option<Vec<f64>>,
        #[serde(default = "default_t_end")]
        t_end: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default = "default_twenty")]
        gaussian: usize,
        #[serde(default = "default_twenty")]
        sinusoids: usize,
        #[serde(default = "default_ten")]
        power_iterations: usize,
    },
}

fn default_t_end() -> f64 {
    20.0
}
fn default_dt() -> f64 {
    1e-2
}
fn default_steps() -> usize {
    200
}
fn default_twenty() -> usize {
    20
}
fn default_ten() -> usize {
    10
}

impl Default for GainConfig {
    fn default() -> Self {
        GainConfig::DtGradient {
            mu: 1.0,
            alphas: (1..=19).map(|i| i as f64 * 0.1).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeConfig {
    pub w1: SupplySpec,
    pub w2: SupplySpec,
    /// channel count for named supplies
    pub dim: usize,
    pub kappa_range: (f64, f64),
    pub grid: usize,
    pub tol: f64,
    /// search over the integrator/gradient family instead of `w1`, `w2`
    pub integrator_gradient: Option<FamilyConfig>,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            w1: SupplySpec::default(),
            w2: SupplySpec::default(),
            dim: 1,
            kappa_range: (1e-4, 1e4),
            grid: 60,
            tol: 1e-9,
            integrator_gradient: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub alpha: f64,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub lambdas: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mu: 1.0,
            l: 1.0,
            lambdas: 19,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    Linear {
        k: Vec<f64>,
    },
    /// Slope `hi` on `[-1, 1]` and `lo` outside it.
    Saturation {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleConfig {
    pub sector: (f64, f64),
    pub pairs: usize,
    pub xbar_radius: f64,
    pub local_radius: f64,
    pub grid: usize,
    pub psi: Option<PsiSpec>,
}

impl Default for CircleConfig {
    fn default() -> Self {
        Self {
            sector: (0.0, 1.0),
            pairs: 500,
            xbar_radius: 1.0,
            local_radius: 0.5,
            grid: 40,
            psi: None,
        }
    }
}

/// Disturbance added to the equilibrium input.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    #[default]
    Zero,
    Constant {
        value: Vec<f64>,
    },
    Sine {
        amplitude: f64,
        omega: f64,
    },
    /// held Gaussian samples, seeded from `--seed`
    Gaussian {
        std: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// initial state; defaults to `x̄`
    pub x0: Option<Vec<f64>>,
    /// guess for the equilibrium, projected onto the equilibrium set
    pub xbar: Option<Vec<f64>>,
    pub input: SignalSpec,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub supply: SupplySpec,
    pub storage: StorageKind,
    #[serde(rename = "P")]
    pub p: Option<Vec<Vec<f64>>>,
    pub tol: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            x0: None,
            xbar: None,
            input: SignalSpec::Zero,
            t_end: 10.0,
            dt: 1e-3,
            steps: 100,
            supply: SupplySpec::default(),
            storage: StorageKind::Bregman,
            p: None,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub xbar: Option<Vec<f64>>,
    pub radius: f64,
    pub probes: usize,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub required_fraction: f64,
    /// close the loop around the system with this static map first
    pub psi: Option<PsiSpec>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            xbar: None,
            radius: 0.1,
            probes: 32,
            t_end: 30.0,
            dt: 1e-2,
            steps: 500,
            required_fraction: 1.0,
            psi: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoRelationConfig {
    pub count: usize,
    pub radius: f64,
    pub supply: SupplySpec,
    pub tol: f64,
}

impl Default for IoRelationConfig {
    fn default() -> Self {
        Self {
            count: 200,
            radius: 2.0,
            supply: SupplySpec::default(),
            tol: 1e-9,
        }
    }
}
