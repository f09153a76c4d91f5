//! Equilibrium-independent dissipativity (EID) toolkit.
//!
//! Verifies incremental Hill-Moylan conditions for control-affine systems on
//! sampled state/equilibrium pairs, composes quadratic supply rates across
//! feedback loops, evaluates closed-form gain bounds and audits dissipation
//! inequalities along simulated trajectories.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod equilibria;
mod error;
pub mod gains;
pub mod interconnect;
pub mod io;
pub mod numerics;
mod par;
pub mod sim;
pub mod systems;

pub use error::{Error, Result};
pub use numerics::{Matrix, Vector};

/// Pass/fail outcome shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}
