//! Verification of incremental Hill-Moylan conditions on sampled
//! `(x, x̄)` pairs, Bregman storage families, dissipation-matrix
//! factorization, sector checks and a KYP residual check for linear systems.
//!
//! Checks are pointwise with explicit tolerances: a `Pass` is quantified
//! sampled evidence, not a proof.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibria::{sample_io_relation, EquilibriumMap, IoSample, Region, ASSIGNABLE_TOL};
use crate::numerics::{
    psd_check, pseudo_inverse, rank, sym_eigen, sym_sqrt_psd, Matrix, Vector, DEFAULT_PSD_TOL,
};
use crate::systems::{
    random_box, SectorBounds, StaticNonlinearity, StorageGenerator, SupplyRate, System, VecFn,
};
use crate::{io, par, Error, Result, Verdict};

/// Default number of sampled pairs.
pub const DEFAULT_PAIRS: usize = 2000;

/// A storage family `x̄ ↦ V_x̄`.
pub trait StorageFamily: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, x: &Vector, xbar: &Vector) -> f64;
    /// Gradient with respect to `x`.
    fn grad(&self, x: &Vector, xbar: &Vector) -> Vector;
}

/// `V_x̄(x) = V(x) − V(x̄) − ∇V(x̄)ᵀ(x − x̄)`
pub fn bregman(gen: &StorageGenerator, xbar: &Vector, x: &Vector) -> f64 {
    gen.value(x) - gen.value(xbar) - gen.grad(xbar).dot(&(x - xbar))
}

#[derive(Debug, Clone)]
pub struct Bregman(pub StorageGenerator);

impl StorageFamily for Bregman {
    fn name(&self) -> String {
        format!("bregman({})", self.0.name())
    }

    fn value(&self, x: &Vector, xbar: &Vector) -> f64 {
        bregman(&self.0, xbar, x)
    }

    fn grad(&self, x: &Vector, xbar: &Vector) -> Vector {
        self.0.grad(x) - self.0.grad(xbar)
    }
}

/// The classical shift `V(x) − V(x̄)`. Zero at `x̄` but generally not an
/// EID storage.
#[derive(Debug, Clone)]
pub struct Shifted(pub StorageGenerator);

impl StorageFamily for Shifted {
    fn name(&self) -> String {
        format!("shifted({})", self.0.name())
    }

    fn value(&self, x: &Vector, xbar: &Vector) -> f64 {
        self.0.value(x) - self.0.value(xbar)
    }

    fn grad(&self, x: &Vector, _xbar: &Vector) -> Vector {
        self.0.grad(x)
    }
}

/// `‖x − x̄‖²_P`
#[derive(Debug, Clone)]
pub struct QuadraticP(pub Matrix);

impl StorageFamily for QuadraticP {
    fn name(&self) -> String {
        "quadratic_p".into()
    }

    fn value(&self, x: &Vector, xbar: &Vector) -> f64 {
        let d = x - xbar;
        d.dot(&(&self.0 * &d))
    }

    fn grad(&self, x: &Vector, xbar: &Vector) -> Vector {
        (&self.0 * (x - xbar)) * 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Equality,
    Inequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// drift condition, absolute
    pub a: f64,
    /// input-matching condition, absolute (2-norm)
    pub b: f64,
    /// feedthrough condition, Frobenius
    pub c: f64,
    /// eigenvalue tolerance when checking `R̂ ⪰ 0`
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            a: 1e-7,
            b: 1e-7,
            c: 1e-10,
            psd: DEFAULT_PSD_TOL,
        }
    }
}

pub type PairFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// How `ℓ(x, x̄)` is obtained.
#[derive(Clone, Default)]
pub enum Ell {
    /// Least-squares solve of the input-matching condition per pair,
    /// minimum-norm. In equality mode a kernel component of `Wᵀ` (if any) is
    /// added to close the drift condition.
    #[default]
    Auto,
    Map(PairFn),
    /// `ℓ(x, x̄) = l(x) − l(x̄)`
    Difference(VecFn),
}

impl Ell {
    /// `ℓ(x, x̄)` when it is given explicitly; `None` for [`Ell::Auto`].
    pub fn eval(&self, x: &Vector, xbar: &Vector) -> Option<Vector> {
        match self {
            Ell::Auto => None,
            Ell::Map(f) => Some(f(x, xbar)),
            Ell::Difference(l) => Some(l(x) - l(xbar)),
        }
    }
}

#[derive(Clone)]
pub struct EidOptions {
    pub mode: Mode,
    pub tol: Tolerances,
    /// Defaults to the symmetric square root of `R̂` (resp. `R̂ − GᵀPG`).
    pub w: Option<Matrix>,
    pub ell: Ell,
}

impl Default for EidOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Inequality,
            tol: Tolerances::default(),
            w: None,
            ell: Ell::Auto,
        }
    }
}

/// A state `x` paired with an equilibrium `(x̄, ū, ȳ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pair {
    #[serde(serialize_with = "io::ser_vector")]
    pub x: Vector,
    pub eq: IoSample,
}

/// `count` equilibria from `xbar_region` (projected onto `E_Σ`), each paired
/// with a state drawn uniformly from `x_region`.
pub fn sample_pairs(
    emap: &EquilibriumMap,
    x_region: &Region,
    xbar_region: &Region,
    count: usize,
    seed: u64,
) -> Result<Vec<Pair>> {
    let eqs = sample_io_relation(emap, xbar_region, count, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    Ok(eqs
        .samples
        .into_iter()
        .map(|eq| Pair {
            x: x_region.sample(&mut rng),
            eq,
        })
        .collect())
}

/// Like [`sample_pairs`] but with `x` drawn from the box of half-width
/// `radius` around its own `x̄`.
pub fn sample_local_pairs(
    emap: &EquilibriumMap,
    xbar_region: &Region,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Pair>> {
    let eqs = sample_io_relation(emap, xbar_region, count, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    Ok(eqs
        .samples
        .into_iter()
        .map(|eq| Pair {
            x: &eq.xbar + random_box(&mut rng, eq.xbar.len(), radius),
            eq,
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualStats {
    pub pairs: usize,
    /// Equality mode: `max |lhs − rhs|` of the drift condition; inequality
    /// mode: `max (lhs − rhs)`, clipped below at zero.
    pub max_a_violation: f64,
    /// Smallest slack `rhs − lhs` seen (negative means violated).
    pub min_a_slack: f64,
    pub max_b_residual: f64,
    pub c_residual: f64,
    /// Index into the checked pair list (0 is the degenerate pair).
    pub worst_pair: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EidCertificate {
    pub system: String,
    pub storage: String,
    pub supply: SupplyRate,
    #[serde(serialize_with = "io::ser_matrix")]
    pub w: Matrix,
    pub k: usize,
    pub mode: Mode,
    pub tol: Tolerances,
    pub verdict: Verdict,
    pub stats: ResidualStats,
}

struct PairEval {
    a_violation: f64,
    a_slack: f64,
    b_residual: f64,
}

/// Per-pair ingredients: `lhs` of the drift condition, the vector `t` that
/// must equal `(QJ+S)ᵀΔh − Wᵀℓ`, and `Δh`.
struct PairTerms {
    lhs: f64,
    t: Vector,
    dh: Vector,
}

struct Checker<'a> {
    supply: &'a SupplyRate,
    qjs_t: Matrix,
    w: Matrix,
    wt_pinv: Matrix,
    kernel: Option<Vector>,
    opts: &'a EidOptions,
}

impl<'a> Checker<'a> {
    fn new(
        supply: &'a SupplyRate,
        j: &Matrix,
        rhat: &Matrix,
        opts: &'a EidOptions,
    ) -> Result<(Self, f64)> {
        let w = match &opts.w {
            Some(w) => {
                if w.ncols() != supply.m() {
                    return Err(Error::DimensionMismatch(format!(
                        "W has {} columns, input dimension is {}",
                        w.ncols(),
                        supply.m()
                    )));
                }
                w.clone()
            }
            None => {
                let rep = psd_check(rhat, opts.tol.psd)?;
                if !rep.is_psd() {
                    return Err(Error::RhatNotPsd {
                        min_eigenvalue: rep.min_eigenvalue,
                    });
                }
                sym_sqrt_psd(rhat, opts.tol.psd)?
            }
        };
        let c_residual = (w.transpose() * &w - rhat).norm();
        let wt = w.transpose();
        let wt_pinv = pseudo_inverse(&wt, 1e-12);
        // ker(Wᵀ) = range(W)^⊥ in ℝᵏ
        let k = w.nrows();
        let kernel = if rank(&w, 1e-12 * w.norm().max(1.0)) < k {
            let proj = Matrix::identity(k, k) - &w * pseudo_inverse(&w, 1e-12);
            let proj = (&proj + proj.transpose()) * 0.5;
            let eig = sym_eigen(&proj)?;
            Some(eig.eigenvectors.column(k - 1).clone_owned())
        } else {
            None
        };
        Ok((
            Self {
                supply,
                qjs_t: supply.qj_plus_s(j).transpose(),
                w,
                wt_pinv,
                kernel,
                opts,
            },
            c_residual,
        ))
    }

    fn eval(&self, terms: PairTerms, x: &Vector, xbar: &Vector) -> PairEval {
        let PairTerms { lhs, t, dh } = terms;
        let target = &self.qjs_t * &dh - &t;
        let quad = dh.dot(&(&self.supply.q * &dh));
        let ell = match self.opts.ell.eval(x, xbar) {
            Some(l) => l,
            None => {
                let mut l = &self.wt_pinv * &target;
                if self.opts.mode == Mode::Equality {
                    if let Some(kv) = &self.kernel {
                        let extra = quad - lhs - l.norm_squared();
                        if extra > 0.0 {
                            l += kv * extra.sqrt();
                        }
                    }
                }
                l
            }
        };
        let b_residual = if ell.len() == self.w.nrows() {
            (self.w.transpose() * &ell - &target).norm()
        } else {
            f64::INFINITY
        };
        let rhs = quad - ell.norm_squared();
        let a_violation = match self.opts.mode {
            Mode::Equality => (lhs - rhs).abs(),
            Mode::Inequality => (lhs - rhs).max(0.0),
        };
        PairEval {
            a_violation,
            a_slack: rhs - lhs,
            b_residual,
        }
    }
}

fn with_degenerate(pairs: &[Pair]) -> Vec<Pair> {
    let mut all = Vec::with_capacity(pairs.len() + 1);
    if let Some(p) = pairs.first() {
        all.push(Pair {
            x: p.eq.xbar.clone(),
            eq: p.eq.clone(),
        });
    }
    all.extend_from_slice(pairs);
    all
}

fn check_pairs(sys: &System, pairs: &[Pair]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::InvalidParam {
            key: "pairs".into(),
            reason: "no pairs to check".into(),
        });
    }
    for p in pairs {
        if p.x.len() != sys.n() || p.eq.xbar.len() != sys.n() {
            return Err(Error::DimensionMismatch(format!(
                "pair states must have n = {} entries",
                sys.n()
            )));
        }
        let residual = p.eq.residual(sys);
        if !(residual <= ASSIGNABLE_TOL) {
            return Err(Error::NotAssignable { residual });
        }
    }
    Ok(())
}

fn reduce(evals: &[PairEval], c_residual: f64, tol: &Tolerances) -> (Verdict, ResidualStats) {
    let mut stats = ResidualStats {
        pairs: evals.len(),
        max_a_violation: 0.0,
        min_a_slack: f64::INFINITY,
        max_b_residual: 0.0,
        c_residual,
        worst_pair: 0,
    };
    let mut worst = f64::NEG_INFINITY;
    for (i, e) in evals.iter().enumerate() {
        stats.max_a_violation = stats.max_a_violation.max(e.a_violation);
        stats.min_a_slack = stats.min_a_slack.min(e.a_slack);
        stats.max_b_residual = stats.max_b_residual.max(e.b_residual);
        let score = (e.a_violation / tol.a).max(e.b_residual / tol.b);
        if score > worst {
            worst = score;
            stats.worst_pair = i;
        }
    }
    let pass = stats.max_a_violation <= tol.a
        && stats.max_b_residual <= tol.b
        && stats.c_residual <= tol.c;
    (Verdict::from_bool(pass), stats)
}

/// Check the continuous-time EID conditions with the Bregman family of
/// `gen` on every pair (plus the degenerate pair `x = x̄`):
///
/// * drift: `Δ∇VᵀΔf = ΔhᵀQΔh − ‖ℓ‖²` (`≤` in inequality mode)
/// * input matching: `½GᵀΔ∇V = (QJ+S)ᵀΔh − Wᵀℓ`
/// * feedthrough: `WᵀW = R̂`
pub fn verify_eid_ct(
    sys: &System,
    supply: &SupplyRate,
    gen: &StorageGenerator,
    pairs: &[Pair],
    opts: &EidOptions,
) -> Result<EidCertificate> {
    if sys.is_discrete() {
        return Err(Error::WrongDomain {
            expected: "continuous-time",
        });
    }
    check_dims(sys, supply)?;
    if gen.dim() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "storage generator has dimension {}, state has {}",
            gen.dim(),
            sys.n()
        )));
    }
    check_pairs(sys, pairs)?;
    let rhat = supply.r_hat(sys.j());
    let (checker, c_residual) = Checker::new(supply, sys.j(), &rhat, opts)?;
    let gt_half = sys.g().transpose() * 0.5;
    let all = with_degenerate(pairs);
    let evals = par::map(&all, |p| {
        let xbar = &p.eq.xbar;
        let dgrad = gen.grad(&p.x) - gen.grad(xbar);
        let df = sys.f(&p.x) - sys.f(xbar);
        let terms = PairTerms {
            lhs: dgrad.dot(&df),
            t: &gt_half * &dgrad,
            dh: sys.h(&p.x) - sys.h(xbar),
        };
        checker.eval(terms, &p.x, xbar)
    });
    let (verdict, stats) = reduce(&evals, c_residual, &opts.tol);
    Ok(EidCertificate {
        system: sys.name().into(),
        storage: Bregman(gen.clone()).name(),
        supply: supply.clone(),
        k: checker.w.nrows(),
        w: checker.w,
        mode: opts.mode,
        tol: opts.tol,
        verdict,
        stats,
    })
}

/// Discrete-time analog with `V_x̄(x) = ‖x − x̄‖²_P`:
///
/// * `‖Δf‖²_P − ‖Δx‖²_P = ΔhᵀQΔh − ‖ℓ‖²` (`≤` in inequality mode)
/// * `GᵀPΔf = (QJ+S)ᵀΔh − Wᵀℓ`
/// * `WᵀW = R̂ − GᵀPG`
pub fn verify_eid_dt(
    sys: &System,
    supply: &SupplyRate,
    p: &Matrix,
    pairs: &[Pair],
    opts: &EidOptions,
) -> Result<EidCertificate> {
    if !sys.is_discrete() {
        return Err(Error::WrongDomain {
            expected: "discrete-time",
        });
    }
    check_dims(sys, supply)?;
    if p.shape() != (sys.n(), sys.n()) {
        return Err(Error::DimensionMismatch(format!(
            "P is {}x{}, state dimension is {}",
            p.nrows(),
            p.ncols(),
            sys.n()
        )));
    }
    let prep = psd_check(p, opts.tol.psd)?;
    if !prep.is_psd() {
        return Err(Error::StorageNotPsd {
            min_eigenvalue: prep.min_eigenvalue,
        });
    }
    check_pairs(sys, pairs)?;
    let g = sys.g();
    let rhat = supply.r_hat(sys.j()) - g.transpose() * p * g;
    let (checker, c_residual) = Checker::new(supply, sys.j(), &rhat, opts)?;
    let gtp = g.transpose() * p;
    let all = with_degenerate(pairs);
    let evals = par::map(&all, |pr| {
        let xbar = &pr.eq.xbar;
        let df = sys.f(&pr.x) - sys.f(xbar);
        let dx = &pr.x - xbar;
        let terms = PairTerms {
            lhs: df.dot(&(p * &df)) - dx.dot(&(p * &dx)),
            t: &gtp * &df,
            dh: sys.h(&pr.x) - sys.h(xbar),
        };
        checker.eval(terms, &pr.x, xbar)
    });
    let (verdict, stats) = reduce(&evals, c_residual, &opts.tol);
    Ok(EidCertificate {
        system: sys.name().into(),
        storage: "quadratic_p".into(),
        supply: supply.clone(),
        k: checker.w.nrows(),
        w: checker.w,
        mode: opts.mode,
        tol: opts.tol,
        verdict,
        stats,
    })
}

fn check_dims(sys: &System, supply: &SupplyRate) -> Result<()> {
    if supply.m() != sys.m() || supply.p() != sys.p() {
        return Err(Error::DimensionMismatch(format!(
            "supply is for (p, m) = ({}, {}), system has ({}, {})",
            supply.p(),
            supply.m(),
            sys.p(),
            sys.m()
        )));
    }
    Ok(())
}

/// The dissipation matrix `D(x, x̄)` at one pair and its spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationResult {
    pub a: f64,
    #[serde(serialize_with = "io::ser_vector")]
    pub b: Vector,
    #[serde(serialize_with = "io::ser_matrix")]
    pub r_hat: Matrix,
    #[serde(serialize_with = "io::ser_matrix")]
    pub d: Matrix,
    /// `λ_min(D)`; negative certifies non-dissipativity at this pair.
    pub margin: f64,
    /// Number of eigenvalues of `D` above the PSD tolerance: the smallest
    /// `k` for which `D = [ℓ W]ᵀ[ℓ W]` is possible.
    pub rank: usize,
}

fn assemble(a: f64, b: Vector, r_hat: Matrix) -> Result<FactorizationResult> {
    let m = b.len();
    let mut d = Matrix::zeros(m + 1, m + 1);
    d[(0, 0)] = a;
    for i in 0..m {
        d[(0, i + 1)] = b[i];
        d[(i + 1, 0)] = b[i];
    }
    d.view_mut((1, 1), (m, m)).copy_from(&r_hat);
    let d = (&d + d.transpose()) * 0.5;
    let eig = sym_eigen(&d)?;
    Ok(FactorizationResult {
        a,
        b,
        r_hat,
        margin: eig.min(),
        rank: eig
            .eigenvalues
            .iter()
            .filter(|&&l| l > DEFAULT_PSD_TOL)
            .count(),
        d,
    })
}

/// `D(x, x̄) = [[a, bᵀ], [b, R̂]]` for a continuous-time system and any
/// storage family, where for `ũ = u − ū`
/// `w(ũ, y − ȳ) − V̇_x̄ = [1; ũ]ᵀ D [1; ũ]`:
///
/// * `a = ΔhᵀQΔh − ∇V_x̄(x)ᵀ(f(x) + Gū)`
/// * `b = (QJ+S)ᵀΔh − ½Gᵀ∇V_x̄(x)`
pub fn factor_dissipation(
    sys: &System,
    supply: &SupplyRate,
    family: &dyn StorageFamily,
    x: &Vector,
    eq: &IoSample,
) -> Result<FactorizationResult> {
    if sys.is_discrete() {
        return Err(Error::WrongDomain {
            expected: "continuous-time",
        });
    }
    check_dims(sys, supply)?;
    let grad = family.grad(x, &eq.xbar);
    let dh = sys.h(x) - sys.h(&eq.xbar);
    let drift = sys.f(x) + sys.g() * &eq.ubar;
    let a = dh.dot(&(&supply.q * &dh)) - grad.dot(&drift);
    let b = supply.qj_plus_s(sys.j()).transpose() * &dh - sys.g().transpose() * &grad * 0.5;
    assemble(a, b, supply.r_hat(sys.j()))
}

/// Discrete-time `D(x, x̄)` for `V_x̄ = ‖x − x̄‖²_P`:
/// `a = ‖Δx‖²_P − ‖Δf‖²_P + ΔhᵀQΔh`, `b = (QJ+S)ᵀΔh − GᵀPΔf`,
/// lower-right block `R̂ − GᵀPG`.
pub fn factor_dissipation_dt(
    sys: &System,
    supply: &SupplyRate,
    p: &Matrix,
    x: &Vector,
    eq: &IoSample,
) -> Result<FactorizationResult> {
    if !sys.is_discrete() {
        return Err(Error::WrongDomain {
            expected: "discrete-time",
        });
    }
    check_dims(sys, supply)?;
    let dx = x - &eq.xbar;
    let df = sys.f(x) - sys.f(&eq.xbar);
    let dh = sys.h(x) - sys.h(&eq.xbar);
    let a = dx.dot(&(p * &dx)) - df.dot(&(p * &df)) + dh.dot(&(&supply.q * &dh));
    let b = supply.qj_plus_s(sys.j()).transpose() * &dh - sys.g().transpose() * p * &df;
    let g = sys.g();
    assemble(a, b, supply.r_hat(sys.j()) - g.transpose() * p * g)
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginScan {
    pub pairs: usize,
    pub min_margin: f64,
    pub worst_pair: usize,
    pub verdict: Verdict,
}

/// Smallest `λ_min D(x, x̄)` over the pairs; `Fail` when it drops below
/// `−tol`. Works for any storage family, not only Bregman.
pub fn scan_dissipation(
    sys: &System,
    supply: &SupplyRate,
    family: &dyn StorageFamily,
    pairs: &[Pair],
    tol: f64,
) -> Result<MarginScan> {
    check_pairs(sys, pairs)?;
    let margins = par::map(pairs, |p| {
        factor_dissipation(sys, supply, family, &p.x, &p.eq).map(|r| r.margin)
    });
    let mut min_margin = f64::INFINITY;
    let mut worst_pair = 0;
    for (i, m) in margins.into_iter().enumerate() {
        let m = m?;
        if m < min_margin {
            min_margin = m;
            worst_pair = i;
        }
    }
    Ok(MarginScan {
        pairs: pairs.len(),
        min_margin,
        worst_pair,
        verdict: Verdict::from_bool(min_margin >= -tol),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorReport {
    pub pairs: usize,
    /// `min −(Δψ − K1Δz)ᵀ(Δψ − K2Δz)` over the probes.
    pub min_margin: f64,
    pub verdict: Verdict,
}

/// Random probe pairs `(z₁, z₂)` in `[-scale, scale]ᵐ`.
pub fn sector_probes(m: usize, count: usize, scale: f64, seed: u64) -> Vec<(Vector, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                random_box(&mut rng, m, scale),
                random_box(&mut rng, m, scale),
            )
        })
        .collect()
}

/// Evaluate the sector supply `(−I, (K1+K2)/2, −K1K2)` on increments of `ψ`.
pub fn check_sector(
    psi: &StaticNonlinearity,
    bounds: &SectorBounds,
    probes: &[(Vector, Vector)],
    tol: f64,
) -> Result<SectorReport> {
    if psi.dim() != bounds.dim() {
        return Err(Error::DimensionMismatch(format!(
            "nonlinearity has dimension {}, sector has {}",
            psi.dim(),
            bounds.dim()
        )));
    }
    let w = bounds.supply();
    let mut min_margin = f64::INFINITY;
    for (z1, z2) in probes {
        let dz = z2 - z1;
        let dpsi = psi.eval(z2) - psi.eval(z1);
        min_margin = min_margin.min(w.eval(&dz, &dpsi));
    }
    Ok(SectorReport {
        pairs: probes.len(),
        min_margin,
        verdict: Verdict::from_bool(min_margin >= -tol),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KypReport {
    #[serde(serialize_with = "io::ser_matrix")]
    pub m: Matrix,
    pub lambda_max: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

/// For a given `P`, assemble
/// `M(P) = [[FᵀP + PF, PG], [GᵀP, 0]] − [H J; 0 I]ᵀ [[Q, S], [Sᵀ, R]] [H J; 0 I]`
/// and pass iff `λ_max(M) ≤ tol`, which is equivalent to the existence of
/// the factor `(L, W)` with `−M = [L W]ᵀ[L W]`.
pub fn verify_kyp_lti(
    f: &Matrix,
    g: &Matrix,
    h: &Matrix,
    j: &Matrix,
    supply: &SupplyRate,
    p: &Matrix,
    tol: f64,
) -> Result<KypReport> {
    let n = f.nrows();
    let m = g.ncols();
    let pp = h.nrows();
    if !f.is_square()
        || g.nrows() != n
        || h.ncols() != n
        || j.shape() != (pp, m)
        || p.shape() != (n, n)
        || supply.p() != pp
        || supply.m() != m
    {
        return Err(Error::DimensionMismatch(
            "KYP: F n×n, G n×m, H p×n, J p×m, P n×n and a (p, m) supply".into(),
        ));
    }
    let prep = psd_check(p, DEFAULT_PSD_TOL)?;
    if !prep.is_psd() {
        return Err(Error::StorageNotPsd {
            min_eigenvalue: prep.min_eigenvalue,
        });
    }
    let mut lhs = Matrix::zeros(n + m, n + m);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&(f.transpose() * p + p * f));
    lhs.view_mut((0, n), (n, m)).copy_from(&(p * g));
    lhs.view_mut((n, 0), (m, n)).copy_from(&(g.transpose() * p));
    let mut c = Matrix::zeros(pp + m, n + m);
    c.view_mut((0, 0), (pp, n)).copy_from(h);
    c.view_mut((0, n), (pp, m)).copy_from(j);
    c.view_mut((pp, n), (m, m)).fill_with_identity();
    let mm = lhs - c.transpose() * supply.block() * &c;
    let mm = (&mm + mm.transpose()) * 0.5;
    let lambda_max = sym_eigen(&mm)?.max();
    Ok(KypReport {
        m: mm,
        lambda_max,
        tol,
        verdict: Verdict::from_bool(lambda_max <= tol),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservabilityReport {
    pub rank: usize,
    pub n: usize,
    pub observable: bool,
}

/// Rank of the observability matrix of the linearization at `x̄`. A
/// heuristic stand-in for equilibrium-independent observability.
pub fn linearized_observability(sys: &System, xbar: &Vector) -> ObservabilityReport {
    let n = sys.n();
    let a = sys.jacobian_f(xbar);
    let c = sys.jacobian_h(xbar);
    let p = c.nrows();
    let mut obs = Matrix::zeros(p * n, n);
    let mut block = c;
    for k in 0..n {
        obs.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * &a;
    }
    let r = rank(&obs, 1e-9 * obs.norm().max(1.0));
    ObservabilityReport {
        rank: r,
        n,
        observable: r == n,
    }
}
