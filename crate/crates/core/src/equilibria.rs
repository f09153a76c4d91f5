//! Forced equilibria, the equilibrium input/output relation and sampled
//! monotonicity checks on it.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::numerics::{
    newton_root, project_to_zero_set, pseudo_inverse, sym_eigen, Matrix, Vector,
};
use crate::systems::{random_box, DriftKind, SupplyRate, System};
use crate::{io, par, Error, Result};

/// Equilibrium residual accepted by [`EquilibriumMap::ku_ky`].
pub const ASSIGNABLE_TOL: f64 = 1e-8;

/// Orthonormal rows spanning the orthogonal complement of `range(G)`.
///
/// Returns `FullyActuated` when `G` is square (the complement is empty).
pub fn annihilator(g: &Matrix) -> Result<Matrix> {
    let (n, m) = g.shape();
    if m >= n {
        return Err(Error::FullyActuated);
    }
    let proj = Matrix::identity(n, n) - g * pseudo_inverse(g, 1e-12);
    let proj = (&proj + proj.transpose()) * 0.5;
    let eig = sym_eigen(&proj)?;
    // eigenvalues are 0 (m times) then 1 (n − m times)
    let mut out = Matrix::zeros(n - m, n);
    for k in 0..(n - m) {
        out.set_row(k, &eig.eigenvectors.column(m + k).transpose());
    }
    Ok(out)
}

/// A point `(x̄, ū, ȳ)` of the equilibrium relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IoSample {
    #[serde(serialize_with = "io::ser_vector")]
    pub xbar: Vector,
    #[serde(serialize_with = "io::ser_vector")]
    pub ubar: Vector,
    #[serde(serialize_with = "io::ser_vector")]
    pub ybar: Vector,
}

impl IoSample {
    /// `‖f(x̄) + Gū‖` (continuous) or `‖f(x̄) + Gū − x̄‖` (discrete).
    pub fn residual(&self, sys: &System) -> f64 {
        let mut r = sys.f(&self.xbar) + sys.g() * &self.ubar;
        if sys.is_discrete() {
            r -= &self.xbar;
        }
        r.norm()
    }
}

/// `G⊥`, `(GᵀG)⁻¹Gᵀ` and the maps `k_u`, `k_y` for one system.
#[derive(Debug, Clone)]
pub struct EquilibriumMap {
    sys: System,
    g_perp: Matrix,
    g_pinv: Matrix,
}

impl EquilibriumMap {
    pub fn new(sys: &System) -> Result<Self> {
        let g_perp = match annihilator(sys.g()) {
            Ok(a) => a,
            Err(Error::FullyActuated) => Matrix::zeros(0, sys.n()),
            Err(e) => return Err(e),
        };
        Ok(Self {
            sys: sys.clone(),
            g_perp,
            g_pinv: pseudo_inverse(sys.g(), 1e-12),
        })
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    /// `(n − m) × n`, empty when fully actuated.
    pub fn g_perp(&self) -> &Matrix {
        &self.g_perp
    }

    fn defect(&self, x: &Vector) -> Vector {
        let fx = self.sys.f(x);
        if self.sys.is_discrete() {
            x - fx
        } else {
            -fx
        }
    }

    /// `‖G⊥ f(x)‖` or `‖G⊥ (x − f(x))‖`: zero exactly on `E_Σ`.
    pub fn residual(&self, x: &Vector) -> f64 {
        (&self.g_perp * self.defect(x)).norm()
    }

    pub fn ku(&self, xbar: &Vector) -> Vector {
        &self.g_pinv * self.defect(xbar)
    }

    /// `(ū, ȳ)` for an assignable equilibrium `x̄`.
    pub fn ku_ky(&self, xbar: &Vector) -> Result<IoSample> {
        if xbar.len() != self.sys.n() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, system has n = {}",
                xbar.len(),
                self.sys.n()
            )));
        }
        let residual = self.residual(xbar);
        if !(residual <= ASSIGNABLE_TOL) {
            return Err(Error::NotAssignable { residual });
        }
        let ubar = self.ku(xbar);
        let ybar = self.sys.h(xbar) + self.sys.j() * &ubar;
        Ok(IoSample {
            xbar: xbar.clone(),
            ubar,
            ybar,
        })
    }

    /// Solve `f(x̄) + Gū = 0` (or `= x̄`) from `x0` by Newton.
    pub fn solve_equilibrium(&self, ubar: &Vector, x0: &Vector) -> Result<Vector> {
        let gu = self.sys.g() * ubar;
        let disc = self.sys.is_discrete();
        let n = self.sys.n();
        let sys = &self.sys;
        let f = |x: &Vector| {
            let r = sys.f(x) + &gu;
            if disc {
                r - x
            } else {
                r
            }
        };
        let jac = |x: &Vector| {
            let j = sys.jacobian_f(x);
            if disc {
                j - Matrix::identity(n, n)
            } else {
                j
            }
        };
        Ok(newton_root(&f, Some(&jac), x0, 1e-11, 100)?)
    }

    /// Minimum-norm Gauss-Newton projection of `x0` onto `E_Σ`.
    pub fn project(&self, x0: &Vector) -> Result<Vector> {
        if self.g_perp.nrows() == 0 {
            return Ok(x0.clone());
        }
        let f = |x: &Vector| &self.g_perp * self.defect(x);
        Ok(project_to_zero_set(&f, x0, 1e-12, 100)?)
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lo: Vector,
    pub hi: Vector,
}

impl Region {
    pub fn new(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(hi.iter()).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidParam {
                key: "region".into(),
                reason: "need lo ≤ hi componentwise with matching lengths".into(),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(n: usize, r: f64) -> Self {
        Self {
            lo: Vector::from_element(n, -r),
            hi: Vector::from_element(n, r),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> Vector {
        let unit = random_box(rng, self.dim(), 1.0);
        Vector::from_fn(self.dim(), |i, _| {
            let mid = 0.5 * (self.lo[i] + self.hi[i]);
            let half = 0.5 * (self.hi[i] - self.lo[i]);
            mid + half * unit[i]
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IoSampleSet {
    pub samples: Vec<IoSample>,
    pub requested: usize,
    /// Candidates whose projection onto `E_Σ` or re-substitution failed.
    pub failures: usize,
}

impl IoSampleSet {
    /// Columns `xbar_1..xbar_n, ubar_1..ubar_m, ybar_1..ybar_p`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let (header, rows) = self.table();
        io::write_csv(path, &header, &rows)
    }

    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let first = self.samples.first();
        let (n, m, p) = first.map_or((0, 0, 0), |s| (s.xbar.len(), s.ubar.len(), s.ybar.len()));
        let mut header = io::indexed("xbar", n);
        header.extend(io::indexed("ubar", m));
        header.extend(io::indexed("ybar", p));
        let rows = self
            .samples
            .iter()
            .map(|s| {
                s.xbar
                    .iter()
                    .chain(s.ubar.iter())
                    .chain(s.ybar.iter())
                    .copied()
                    .collect()
            })
            .collect();
        (header, rows)
    }
}

/// Sample the equilibrium relation: draw candidates uniformly in `region`,
/// project onto `E_Σ` when `m < n`, then evaluate `k_u`, `k_y`.
/// Identical seeds give identical samples.
pub fn sample_io_relation(
    emap: &EquilibriumMap,
    region: &Region,
    count: usize,
    seed: u64,
) -> Result<IoSampleSet> {
    if region.dim() != emap.system().n() {
        return Err(Error::DimensionMismatch(format!(
            "region has dimension {}, state has {}",
            region.dim(),
            emap.system().n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Vector> = (0..count).map(|_| region.sample(&mut rng)).collect();
    let results = par::map(&candidates, |x0| {
        let x = emap.project(x0).ok()?;
        let s = emap.ku_ky(&x).ok()?;
        (s.residual(emap.system()) <= ASSIGNABLE_TOL).then_some(s)
    });
    let samples: Vec<IoSample> = results.into_iter().flatten().collect();
    Ok(IoSampleSet {
        failures: count - samples.len(),
        requested: count,
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    pub pairs: usize,
    pub min_value: f64,
    pub max_abs_value: f64,
    /// Up to 100 worst offenders `(i, j, value)`.
    pub violations: Vec<(usize, usize, f64)>,
    pub violation_count: usize,
    pub tol: f64,
    pub dissipative: bool,
}

/// Evaluate `w(ū_i − ū_j, ȳ_i − ȳ_j)` over all sample pairs.
pub fn check_relation_dissipativity(
    samples: &[IoSample],
    supply: &SupplyRate,
    tol: f64,
) -> Result<RelationReport> {
    if samples.len() < 2 {
        return Err(Error::InvalidParam {
            key: "samples".into(),
            reason: "need at least two samples".into(),
        });
    }
    let idx: Vec<usize> = (0..samples.len()).collect();
    let per_row = par::map(&idx, |&i| {
        let mut vals = Vec::new();
        for j in (i + 1)..samples.len() {
            let du = &samples[i].ubar - &samples[j].ubar;
            let dy = &samples[i].ybar - &samples[j].ybar;
            vals.push((i, j, supply.eval(&du, &dy)));
        }
        vals
    });
    let mut min_value = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut violations = Vec::new();
    let mut pairs = 0;
    for (i, j, v) in per_row.into_iter().flatten() {
        pairs += 1;
        min_value = min_value.min(v);
        max_abs = max_abs.max(v.abs());
        if v < -tol {
            violations.push((i, j, v));
        }
    }
    let violation_count = violations.len();
    violations.sort_by(|a, b| a.2.total_cmp(&b.2));
    violations.truncate(100);
    Ok(RelationReport {
        pairs,
        min_value,
        max_abs_value: max_abs,
        violations,
        violation_count,
        tol,
        dissipative: violation_count == 0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalityReport {
    /// Largest `ρ` consistent with the samples:
    /// `min (Δȳᵀ Δū) / ‖Δȳ‖²` over pairs with `Δȳ ≠ 0`.
    pub rho_estimate: Option<f64>,
    /// Requested `ρ` is positive and the sampled form
    /// `Δȳᵀ Δū − ρ‖Δȳ‖²` stays above `−tol`.
    pub cocoercive_sampled: bool,
    /// Jacobian of `f` (continuous) or `f − id` (discrete) nonsingular at
    /// every sample. A hint only.
    pub f_homeomorphism_hint: bool,
    /// `f ≡ 0` (continuous) or `f = id` (discrete), from system metadata.
    pub f_zero_or_identity: bool,
}

impl MaximalityReport {
    pub fn any(&self) -> bool {
        self.cocoercive_sampled || self.f_homeomorphism_hint || self.f_zero_or_identity
    }
}

/// Sufficient conditions for maximal monotonicity of the equilibrium
/// relation of a square system.
pub fn maximality_conditions(
    emap: &EquilibriumMap,
    samples: &[IoSample],
    rho: f64,
    tol: f64,
) -> Result<MaximalityReport> {
    let sys = emap.system();
    if sys.m() != sys.p() {
        return Err(Error::NonSquare {
            m: sys.m(),
            p: sys.p(),
        });
    }
    let mut rho_est: Option<f64> = None;
    let mut form_ok = true;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let du = &samples[i].ubar - &samples[j].ubar;
            let dy = &samples[i].ybar - &samples[j].ybar;
            let inner = dy.dot(&du);
            let dy2 = dy.norm_squared();
            form_ok &= inner - rho * dy2 >= -tol;
            if dy2 > 1e-24 {
                let r = inner / dy2;
                rho_est = Some(rho_est.map_or(r, |e| e.min(r)));
            }
        }
    }
    let n = sys.n();
    let hint = !samples.is_empty()
        && samples.iter().all(|s| {
            let mut j = sys.jacobian_f(&s.xbar);
            if sys.is_discrete() {
                j -= Matrix::identity(n, n);
            }
            let sv = crate::numerics::singular_values(&j);
            let (hi, lo) = (sv[0], sv[sv.len() - 1]);
            lo > 1e-10 * hi.max(1.0)
        });
    let meta = matches!(
        (sys.is_discrete(), sys.drift_kind()),
        (false, DriftKind::Zero) | (true, DriftKind::Identity)
    );
    Ok(MaximalityReport {
        rho_estimate: rho_est,
        cocoercive_sampled: rho > 0.0 && samples.len() >= 2 && form_ok,
        f_homeomorphism_hint: hint,
        f_zero_or_identity: meta,
    })
}
