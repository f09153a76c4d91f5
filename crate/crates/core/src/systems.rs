//! Control-affine systems, supply rates, storage generators and the catalog
//! of example families.
//!
//! A [`System`] is `ẋ = f(x) + Gu` (continuous) or `x⁺ = f(x) + Gu`
//! (discrete) with output `y = h(x) + Ju`. `G` and `J` are constant.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::numerics::{
    self, diag, fd_gradient, fd_jacobian, matrix_from_rows, psd_check, rank, singular_values,
    sym_eigen, Matrix, Vector, DEFAULT_PSD_TOL,
};
use crate::{Error, Result};

pub type VecFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type JacFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

/// Singular values of `G` at or below this count as rank loss.
pub const G_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

/// What is known structurally about the drift `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftKind {
    General,
    /// `f ≡ 0`
    Zero,
    /// `f(x) = x`
    Identity,
    /// `f(x) = Fx`
    Linear,
}

/// Anything that can be stepped by the simulator: either a vector field
/// (continuous time) or an update map (discrete time), plus an output map.
pub trait Model: Send + Sync {
    fn domain(&self) -> TimeDomain;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// `ẋ` in continuous time, `x⁺` in discrete time.
    fn rhs(&self, x: &Vector, u: &Vector) -> Vector;
    fn output(&self, x: &Vector, u: &Vector) -> Vector;
}

#[derive(Clone)]
pub struct System {
    name: String,
    domain: TimeDomain,
    n: usize,
    m: usize,
    p: usize,
    f: VecFn,
    h: VecFn,
    g: Matrix,
    j: Matrix,
    f_jac: Option<JacFn>,
    drift: DriftKind,
    storage: Option<StorageGenerator>,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("p", &self.p)
            .field("drift", &self.drift)
            .finish_non_exhaustive()
    }
}

impl System {
    /// Build and check `rank(G) = m` and `m, p ≤ n`.
    pub fn new(
        name: impl Into<String>,
        domain: TimeDomain,
        n: usize,
        f: VecFn,
        h: VecFn,
        g: Matrix,
        j: Matrix,
    ) -> Result<Self> {
        let sys = Self::new_unvalidated(name, domain, n, f, h, g, j)?;
        if sys.m > sys.n || sys.p > sys.n {
            return Err(Error::DimensionMismatch(format!(
                "need m, p ≤ n, got n = {}, m = {}, p = {}",
                sys.n, sys.m, sys.p
            )));
        }
        let r = rank(&sys.g, G_RANK_TOL);
        if r != sys.m {
            return Err(Error::RankDeficient {
                what: "G".into(),
                rank: r,
                expected: sys.m,
            });
        }
        Ok(sys)
    }

    /// Shape checks only; use [`validate_system`] to inspect the rest.
    pub fn new_unvalidated(
        name: impl Into<String>,
        domain: TimeDomain,
        n: usize,
        f: VecFn,
        h: VecFn,
        g: Matrix,
        j: Matrix,
    ) -> Result<Self> {
        let name = name.into();
        if g.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name}: G has {} rows, state dimension is {n}",
                g.nrows()
            )));
        }
        let m = g.ncols();
        if j.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "{name}: J has {} columns, G has {m}",
                j.ncols()
            )));
        }
        let p = j.nrows();
        numerics::checked(g.clone())?;
        numerics::checked(j.clone())?;
        let x0 = Vector::zeros(n);
        let f0 = f(&x0);
        let h0 = h(&x0);
        if f0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name}: f returns {} components, expected {n}",
                f0.len()
            )));
        }
        if h0.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{name}: h returns {} components, J has {p} rows",
                h0.len()
            )));
        }
        Ok(Self {
            name,
            domain,
            n,
            m,
            p,
            f,
            h,
            g,
            j,
            f_jac: None,
            drift: DriftKind::General,
            storage: None,
        })
    }

    pub fn with_jacobian(mut self, jac: JacFn) -> Self {
        self.f_jac = Some(jac);
        self
    }

    pub fn with_drift_kind(mut self, kind: DriftKind) -> Self {
        self.drift = kind;
        self
    }

    pub fn with_storage(mut self, storage: StorageGenerator) -> Self {
        self.storage = Some(storage);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn is_discrete(&self) -> bool {
        self.domain == TimeDomain::Discrete
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn j(&self) -> &Matrix {
        &self.j
    }

    pub fn drift_kind(&self) -> DriftKind {
        self.drift
    }

    /// Storage generator shipped with catalog systems.
    pub fn storage(&self) -> Option<&StorageGenerator> {
        self.storage.as_ref()
    }

    pub fn f(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }

    pub fn h(&self, x: &Vector) -> Vector {
        (self.h)(x)
    }

    pub fn f_fn(&self) -> VecFn {
        Arc::clone(&self.f)
    }

    pub fn h_fn(&self) -> VecFn {
        Arc::clone(&self.h)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.f_jac.is_some()
    }

    /// `∂f/∂x`, analytic when available.
    pub fn jacobian_f(&self, x: &Vector) -> Matrix {
        match &self.f_jac {
            Some(jac) => jac(x),
            None => fd_jacobian(&|z: &Vector| (self.f)(z), x),
        }
    }

    pub fn jacobian_h(&self, x: &Vector) -> Matrix {
        fd_jacobian(&|z: &Vector| (self.h)(z), x)
    }
}

impl Model for System {
    fn domain(&self) -> TimeDomain {
        self.domain
    }

    fn state_dim(&self) -> usize {
        self.n
    }

    fn input_dim(&self) -> usize {
        self.m
    }

    fn output_dim(&self) -> usize {
        self.p
    }

    fn rhs(&self, x: &Vector, u: &Vector) -> Vector {
        (self.f)(x) + &self.g * u
    }

    fn output(&self, x: &Vector, u: &Vector) -> Vector {
        (self.h)(x) + &self.j * u
    }
}

/// Quadratic supply `w(u, y) = yᵀQy + 2yᵀSu + uᵀRu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupplyRate {
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub q: Matrix,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub s: Matrix,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub r: Matrix,
}

impl SupplyRate {
    pub fn new(q: Matrix, s: Matrix, r: Matrix) -> Result<Self> {
        numerics::ensure_symmetric(&q)?;
        numerics::ensure_symmetric(&r)?;
        if s.nrows() != q.nrows() || s.ncols() != r.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "supply: Q is {0}x{0}, R is {1}x{1}, S must be {0}x{1} but is {2}x{3}",
                q.nrows(),
                r.nrows(),
                s.nrows(),
                s.ncols()
            )));
        }
        Ok(Self {
            q: numerics::checked(q)?,
            s: numerics::checked(s)?,
            r: numerics::checked(r)?,
        })
    }

    /// Scalar-block supply `(qI_p, sI, rI_m)`; `S` is the `p×m` matrix with
    /// `s` on its diagonal.
    pub fn scalar(p: usize, m: usize, q: f64, s: f64, r: f64) -> Self {
        Self {
            q: Matrix::identity(p, p) * q,
            s: Matrix::identity(p, m) * s,
            r: Matrix::identity(m, m) * r,
        }
    }

    /// `(0, ½I, 0)`
    pub fn passivity(m: usize) -> Self {
        Self::scalar(m, m, 0.0, 0.5, 0.0)
    }

    /// `(−I, 0, γ²I)`
    pub fn l2_gain(p: usize, m: usize, gamma: f64) -> Self {
        Self::scalar(p, m, -1.0, 0.0, gamma * gamma)
    }

    /// `(−ρI, ½I, −νI)`: input feedforward `ν` and output strict `ρ`.
    pub fn ifp_osp(m: usize, nu: f64, rho: f64) -> Self {
        Self::scalar(m, m, -rho, 0.5, -nu)
    }

    pub fn p(&self) -> usize {
        self.q.nrows()
    }

    pub fn m(&self) -> usize {
        self.r.nrows()
    }

    pub fn eval(&self, u: &Vector, y: &Vector) -> f64 {
        y.dot(&(&self.q * y)) + 2.0 * y.dot(&(&self.s * u)) + u.dot(&(&self.r * u))
    }

    /// The full `(p+m)×(p+m)` block matrix.
    pub fn block(&self) -> Matrix {
        let (p, m) = (self.p(), self.m());
        let mut b = Matrix::zeros(p + m, p + m);
        b.view_mut((0, 0), (p, p)).copy_from(&self.q);
        b.view_mut((0, p), (p, m)).copy_from(&self.s);
        b.view_mut((p, 0), (m, p)).copy_from(&self.s.transpose());
        b.view_mut((p, p), (m, m)).copy_from(&self.r);
        b
    }

    /// `R̂ = R + JᵀS + SᵀJ + JᵀQJ`
    pub fn r_hat(&self, j: &Matrix) -> Matrix {
        &self.r + j.transpose() * &self.s + self.s.transpose() * j + j.transpose() * &self.q * j
    }

    /// `QJ + S`
    pub fn qj_plus_s(&self, j: &Matrix) -> Matrix {
        &self.q * j + &self.s
    }

    /// Sign-definite supplies are unusual (they either make every system
    /// dissipative or none); callers may want to warn.
    pub fn is_sign_indefinite(&self) -> bool {
        match psd_check(&self.block(), DEFAULT_PSD_TOL) {
            Ok(rep) => !rep.is_psd() && !rep.is_nsd(),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    StrictlyConvex,
    StronglyConvex(f64),
    /// Convex only on a neighbourhood of the equilibria of interest.
    LocallyConvex,
}

/// A scalar function `V` with gradient, from which Bregman storage
/// families are built.
#[derive(Clone)]
pub struct StorageGenerator {
    name: String,
    dim: usize,
    value: ScalarFn,
    grad: VecFn,
    convexity: Convexity,
    hessian: Option<Matrix>,
}

impl fmt::Debug for StorageGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StorageGenerator")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("convexity", &self.convexity)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradientCheck {
    pub probes: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvexityCheck {
    pub pairs: usize,
    /// `min [∇V(x)−∇V(z)]ᵀ(x−z) / ‖x−z‖²` over the sampled pairs.
    pub min_secant_ratio: f64,
    pub passed: bool,
}

impl StorageGenerator {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: ScalarFn,
        grad: VecFn,
        convexity: Convexity,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            value,
            grad,
            convexity,
            hessian: None,
        }
    }

    /// `V(x) = ½xᵀPx` with `P` symmetric PSD.
    pub fn quadratic(p: Matrix) -> Result<Self> {
        let rep = psd_check(&p, DEFAULT_PSD_TOL)?;
        if !rep.is_psd() {
            return Err(Error::StorageNotPsd {
                min_eigenvalue: rep.min_eigenvalue,
            });
        }
        let convexity = if rep.is_pd() {
            Convexity::StronglyConvex(rep.min_eigenvalue)
        } else {
            Convexity::Convex
        };
        let (pv, pg) = (p.clone(), p.clone());
        Ok(Self {
            name: "quadratic".into(),
            dim: p.nrows(),
            value: Arc::new(move |x: &Vector| 0.5 * x.dot(&(&pv * x))),
            grad: Arc::new(move |x: &Vector| &pg * x),
            convexity,
            hessian: Some(p),
        })
    }

    pub fn separable(potential: SeparablePotential) -> Self {
        let (pv, pg) = (potential.clone(), potential.clone());
        let mu = potential.strong_convexity();
        let convexity = if mu > 0.0 {
            Convexity::StronglyConvex(mu)
        } else {
            Convexity::Convex
        };
        Self {
            name: "separable".into(),
            dim: potential.dim(),
            value: Arc::new(move |x: &Vector| pv.value(x)),
            grad: Arc::new(move |x: &Vector| pg.grad(x)),
            convexity,
            hessian: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    /// Constant Hessian of a quadratic generator.
    pub fn hessian(&self) -> Option<&Matrix> {
        self.hessian.as_ref()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        (self.grad)(x)
    }

    /// Compare `grad` against central differences at random points of the
    /// box `[-scale, scale]ⁿ`; passes at relative error ≤ 1e-5.
    pub fn validate_gradient(&self, probes: usize, scale: f64, seed: u64) -> GradientCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let x = random_box(&mut rng, self.dim, scale);
            let g = self.grad(&x);
            let fd = fd_gradient(&|z: &Vector| self.value(z), &x);
            worst = worst.max((&g - &fd).norm() / g.norm().max(1.0));
        }
        GradientCheck {
            probes,
            max_rel_error: worst,
            passed: worst <= 1e-5,
        }
    }

    /// Sampled secant test of the declared convexity class.
    pub fn validate_convexity(&self, pairs: usize, scale: f64, seed: u64) -> ConvexityCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_ratio = f64::INFINITY;
        let mut ok = true;
        for _ in 0..pairs {
            let x = random_box(&mut rng, self.dim, scale);
            let z = random_box(&mut rng, self.dim, scale);
            let d = &x - &z;
            let dd = d.norm_squared();
            if dd == 0.0 {
                continue;
            }
            let secant = (self.grad(&x) - self.grad(&z)).dot(&d);
            min_ratio = min_ratio.min(secant / dd);
            let slack = 1e-10 * dd.max(1.0);
            ok &= match self.convexity {
                Convexity::StronglyConvex(mu) => secant >= mu * dd - slack,
                Convexity::StrictlyConvex | Convexity::Convex => secant >= -slack,
                Convexity::LocallyConvex => true,
            };
        }
        ConvexityCheck {
            pairs,
            min_secant_ratio: min_ratio,
            passed: ok,
        }
    }
}

pub(crate) fn random_box(rng: &mut impl Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-scale..=scale))
}

/// `log cosh z` without overflow.
pub fn logcosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `φ(z) = Σᵢ (μᵢ/2)zᵢ² + cᵢ log cosh zᵢ + qᵢzᵢ`: strongly convex with
/// modulus `min μᵢ`, gradient Lipschitz with constant `max(μᵢ + cᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparablePotential {
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub q: Vec<f64>,
}

impl SeparablePotential {
    pub fn new(mu: Vec<f64>, c: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let n = mu.len();
        if c.len() != n || q.len() != n {
            return Err(Error::DimensionMismatch(
                "potential coefficient vectors differ in length".into(),
            ));
        }
        if mu.iter().chain(&c).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParam {
                key: "mu/c".into(),
                reason: "potential coefficients must be finite and nonnegative".into(),
            });
        }
        Ok(Self { mu, c, q })
    }

    pub fn uniform(n: usize, mu: f64, c: f64) -> Result<Self> {
        Self::new(vec![mu; n], vec![c; n], vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn value(&self, z: &Vector) -> f64 {
        (0..self.dim())
            .map(|i| 0.5 * self.mu[i] * z[i] * z[i] + self.c[i] * logcosh(z[i]) + self.q[i] * z[i])
            .sum()
    }

    pub fn grad(&self, z: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i, _| {
            self.mu[i] * z[i] + self.c[i] * z[i].tanh() + self.q[i]
        })
    }

    pub fn hessian_diag(&self, z: &Vector) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let t = z[i].tanh();
                self.mu[i] + self.c[i] * (1.0 - t * t)
            })
            .collect()
    }

    pub fn strong_convexity(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lipschitz(&self) -> f64 {
        self.mu
            .iter()
            .zip(&self.c)
            .map(|(m, c)| m + c)
            .fold(0.0, f64::max)
    }
}

/// Static map `ψ : ℝᵐ → ℝᵐ`.
#[derive(Clone)]
pub struct StaticNonlinearity {
    name: String,
    dim: usize,
    map: VecFn,
}

impl fmt::Debug for StaticNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StaticNonlinearity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl StaticNonlinearity {
    pub fn new(name: impl Into<String>, dim: usize, map: VecFn) -> Self {
        Self {
            name: name.into(),
            dim,
            map,
        }
    }

    /// `ψ(z) = kz` channelwise.
    pub fn linear(k: Vec<f64>) -> Self {
        let dim = k.len();
        Self::new(
            "linear",
            dim,
            Arc::new(move |z: &Vector| Vector::from_fn(z.len(), |i, _| k[i] * z[i])),
        )
    }

    /// `ψ(z) = lo·z + (hi − lo)·sat(z)`, slopes in `[lo, hi]`.
    pub fn saturation(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(
            "saturation",
            dim,
            Arc::new(move |z: &Vector| z.map(|v| lo * v + (hi - lo) * v.clamp(-1.0, 1.0))),
        )
    }

    /// `ψ = ∇φ`
    pub fn gradient_of(potential: SeparablePotential) -> Self {
        let dim = potential.dim();
        Self::new(
            "gradient",
            dim,
            Arc::new(move |z: &Vector| potential.grad(z)),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, z: &Vector) -> Vector {
        (self.map)(z)
    }
}

/// Diagonal incremental sector `[K1, K2]` with `K2 − K1 ≻ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorBounds {
    k1: Vec<f64>,
    k2: Vec<f64>,
}

impl SectorBounds {
    pub fn new(k1: Vec<f64>, k2: Vec<f64>) -> Result<Self> {
        if k1.len() != k2.len() || k1.is_empty() {
            return Err(Error::InvalidSector(format!(
                "bounds have lengths {} and {}",
                k1.len(),
                k2.len()
            )));
        }
        if let Some(i) = (0..k1.len()).find(|&i| !(k2[i] - k1[i] > 0.0)) {
            return Err(Error::InvalidSector(format!(
                "K2 − K1 must be positive definite, channel {i} has width {}",
                k2[i] - k1[i]
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn scalar(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    pub fn k1(&self) -> Matrix {
        diag(&self.k1)
    }

    pub fn k2(&self) -> Matrix {
        diag(&self.k2)
    }

    /// `K = K2 − K1`
    pub fn k(&self) -> Matrix {
        self.k2() - self.k1()
    }

    /// `(−I, (K1+K2)/2, −K1K2)`
    pub fn supply(&self) -> SupplyRate {
        let m = self.dim();
        SupplyRate {
            q: -Matrix::identity(m, m),
            s: (self.k1() + self.k2()) * 0.5,
            r: -(self.k1() * self.k2()),
        }
    }
}

// ---------------------------------------------------------------------------
// catalog

pub const FAMILIES: &[&str] = &[
    "second_order",
    "port_hamiltonian",
    "gradient_ff",
    "ahu_saddle",
    "smib",
    "dt_gradient",
    "dt_integrator",
    "lti",
];

/// Strict reader over a JSON parameter object: every key must be consumed.
struct Params<'a> {
    family: &'a str,
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn new(family: &'a str, map: &'a Map<String, Value>) -> Self {
        Self {
            family,
            map,
            used: Vec::new(),
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.map.get(key)
    }

    fn invalid(key: &str, reason: impl Into<String>) -> Error {
        Error::InvalidParam {
            key: key.into(),
            reason: reason.into(),
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Self::invalid(key, "expected a finite number")),
        }
    }

    fn f64_req(&mut self, key: &'static str) -> Result<f64> {
        if !self.map.contains_key(key) {
            return Err(Error::MissingParam {
                family: self.family.into(),
                key: key.into(),
            });
        }
        self.f64_or(key, f64::NAN)
    }

    fn usize_or(&mut self, key: &'static str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .filter(|&x| x > 0)
                .map(|x| x as usize)
                .ok_or_else(|| Self::invalid(key, "expected a positive integer")),
        }
    }

    fn str_or(&mut self, key: &'static str, default: &'static str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.into()),
            Some(v) => v
                .as_str()
                .map(str::to_owned)
                .ok_or_else(|| Self::invalid(key, "expected a string")),
        }
    }

    /// A number (broadcast to length `n`) or an array of length `n`.
    fn vec_or(&mut self, key: &'static str, n: usize, default: f64) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(vec![default; n]),
            Some(Value::Number(x)) => {
                let x = x.as_f64().unwrap_or(f64::NAN);
                if !x.is_finite() {
                    return Err(Self::invalid(key, "expected a finite number"));
                }
                Ok(vec![x; n])
            }
            Some(v) => {
                let out = parse_vec(key, v)?;
                if out.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "`{key}` has length {}, expected {n}",
                        out.len()
                    )));
                }
                Ok(out)
            }
        }
    }

    fn vec_opt(&mut self, key: &'static str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_vec(key, v)).transpose()
    }

    fn matrix_opt(&mut self, key: &'static str) -> Result<Option<Matrix>> {
        self.get(key).map(|v| parse_matrix(key, v)).transpose()
    }

    fn matrix_req(&mut self, key: &'static str) -> Result<Matrix> {
        self.matrix_opt(key)?.ok_or_else(|| Error::MissingParam {
            family: self.family.into(),
            key: key.into(),
        })
    }

    fn finish(self) -> Result<()> {
        for key in self.map.keys() {
            if !self.used.contains(&key.as_str()) {
                return Err(Error::UnknownParam {
                    family: self.family.into(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }
}

fn parse_vec(key: &str, v: &Value) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Params::invalid(key, "expected an array"))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Params::invalid(key, "array entries must be finite numbers"))
        })
        .collect()
}

fn parse_matrix(key: &str, v: &Value) -> Result<Matrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Params::invalid(key, "expected a nested array"))?;
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| parse_vec(key, r))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Params::invalid(key, "matrix has no rows"));
    }
    Ok(matrix_from_rows(&rows)?)
}

/// Build a catalog system from a family name and a JSON parameter object.
/// Unknown keys are rejected.
pub fn catalog_build(family: &str, params: &Map<String, Value>) -> Result<System> {
    let mut p = Params::new(family, params);
    let sys = match family {
        "second_order" => SecondOrderParams {
            k: p.f64_or("k", 1.0)?,
            c: p.f64_or("c", 0.5)?,
            damping: p.f64_or("damping", 1.0)?,
        }
        .build()?,
        "port_hamiltonian" => {
            let mut ph = PortHamiltonianParams::default();
            if let Some(j) = p.matrix_opt("J")? {
                ph.j = j;
            }
            let n = ph.j.nrows();
            ph.r = p.matrix_opt("R")?.unwrap_or_else(|| {
                if n == 4 {
                    ph.r.clone()
                } else {
                    Matrix::identity(n, n) * 0.5
                }
            });
            ph.g = p.matrix_opt("G")?.unwrap_or_else(|| {
                if n == 4 {
                    ph.g.clone()
                } else {
                    Matrix::identity(n, 1)
                }
            });
            if params.contains_key("q") || n != 4 {
                ph.q = p.vec_or("q", n, 1.0)?;
            }
            if params.contains_key("c") || n != 4 {
                ph.c = p.vec_or("c", n, 0.0)?;
            }
            ph.d = p.vec_or("d", n, 0.0)?;
            ph.build()?
        }
        "gradient_ff" => {
            let n = p.usize_or("n", 1)?;
            GradientFfParams {
                tau: p.vec_or("tau", n, 1.0)?,
                g: p.f64_or("g", 1.0)?,
                j: p.f64_or("j", 0.9)?,
                mu: p.vec_or("mu", n, 2.0)?,
                c: p.vec_or("c", n, 0.5)?,
            }
            .build()?
        }
        "ahu_saddle" => {
            let mut ahu = AhuParams::default();
            if let Some(a) = p.matrix_opt("A")? {
                ahu.a = a;
            }
            let (n2, n1) = ahu.a.shape();
            if p.map.contains_key("A") {
                ahu.b = vec![0.0; n2];
                ahu.k = Matrix::zeros(n2, n2);
            }
            if let Some(b) = p.vec_opt("b")? {
                ahu.b = b;
            }
            ahu.mu = p.vec_or("mu", n1, 1.0)?;
            ahu.c = p.vec_or("c", n1, 0.0)?;
            ahu.q = p.vec_or("q", n1, 0.0)?;
            if let Some(k) = p.matrix_opt("K")? {
                ahu.k = k;
            }
            ahu.gamma = match p.get("gamma") {
                None => None,
                Some(v) => Some(
                    v.as_f64()
                        .filter(|g| g.is_finite() && *g > 0.0)
                        .ok_or_else(|| Params::invalid("gamma", "expected a positive number"))?,
                ),
            };
            ahu.build()?
        }
        "smib" => SmibParams {
            m: p.f64_or("M", 1.0)?,
            d: p.f64_or("D", 1.0)?,
            b: p.f64_or("b", 1.0)?,
            v: p.f64_or("V", 1.0)?,
            p_m: p.f64_or("P_m", 0.0)?,
        }
        .build()?,
        "dt_gradient" => {
            let n = p.usize_or("n", 1)?;
            DtGradientParams {
                alpha: p.f64_or("alpha", 0.5)?,
                mu: p.vec_or("mu", n, 1.0)?,
                c: p.vec_or("c", n, 0.0)?,
            }
            .build()?
        }
        "dt_integrator" => {
            let alpha = p.f64_req("alpha")?;
            let n = p.usize_or("n", 1)?;
            dt_integrator(n, alpha)?
        }
        "lti" => {
            let f = p.matrix_req("F")?;
            let g = p.matrix_req("G")?;
            let h = p.matrix_req("H")?;
            let j = p
                .matrix_opt("J")?
                .unwrap_or_else(|| Matrix::zeros(h.nrows(), g.ncols()));
            let domain = match p.str_or("domain", "ct")?.as_str() {
                "ct" | "continuous" => TimeDomain::Continuous,
                "dt" | "discrete" => TimeDomain::Discrete,
                other => {
                    return Err(Params::invalid(
                        "domain",
                        format!("expected `ct` or `dt`, got `{other}`"),
                    ))
                }
            };
            lti(f, g, h, j, domain)?
        }
        other => return Err(Error::UnknownSystem(other.into())),
    };
    p.finish()?;
    Ok(sys)
}

/// Nonlinear oscillator: `ẋ₁ = x₂`, `ẋ₂ = −U′(x₁) − d·x₂ + u`, `y = x₂` with
/// `U(z) = (k/2)z² + c log cosh z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderParams {
    pub k: f64,
    pub c: f64,
    pub damping: f64,
}

impl Default for SecondOrderParams {
    fn default() -> Self {
        Self {
            k: 1.0,
            c: 0.5,
            damping: 1.0,
        }
    }
}

impl SecondOrderParams {
    pub fn potential(&self) -> Result<SeparablePotential> {
        SeparablePotential::uniform(1, self.k, self.c)
    }

    pub fn build(&self) -> Result<System> {
        let u = self.potential()?;
        if !(self.k > 0.0) {
            return Err(Params::invalid("k", "U must be strictly convex (k > 0)"));
        }
        let d = self.damping;
        let uf = u.clone();
        let f: VecFn = Arc::new(move |x: &Vector| {
            let du = uf.grad(&Vector::from_element(1, x[0]))[0];
            Vector::from_vec(vec![x[1], -du - d * x[1]])
        });
        let uj = u.clone();
        let jac: JacFn = Arc::new(move |x: &Vector| {
            let hd = uj.hessian_diag(&Vector::from_element(1, x[0]))[0];
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -hd, -d])
        });
        let h: VecFn = Arc::new(|x: &Vector| Vector::from_element(1, x[1]));
        let (uv, ug) = (u.clone(), u);
        let storage = StorageGenerator::new(
            "U(x1) + x2^2/2",
            2,
            Arc::new(move |x: &Vector| {
                uv.value(&Vector::from_element(1, x[0])) + 0.5 * x[1] * x[1]
            }),
            Arc::new(move |x: &Vector| {
                Vector::from_vec(vec![ug.grad(&Vector::from_element(1, x[0]))[0], x[1]])
            }),
            Convexity::StronglyConvex(self.k.min(1.0)),
        );
        Ok(System::new(
            "second_order",
            TimeDomain::Continuous,
            2,
            f,
            h,
            Matrix::from_column_slice(2, 1, &[0.0, 1.0]),
            Matrix::zeros(1, 1),
        )?
        .with_jacobian(jac)
        .with_storage(storage))
    }
}

/// `ẋ = (J − R)∇H(x) + d + Gu`, `y = Gᵀ∇H(x)` with separable `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortHamiltonianParams {
    pub j: Matrix,
    pub r: Matrix,
    pub g: Matrix,
    /// Hessian diagonal of the quadratic part of `H`.
    pub q: Vec<f64>,
    /// log-cosh weights of `H`.
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl Default for PortHamiltonianParams {
    /// A 4-state chain with damping on states 2 and 4 and actuation there.
    fn default() -> Self {
        let j = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 1.0, 0.0, //
                0.0, -1.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0,
            ],
        );
        Self {
            j,
            r: diag(&[0.0, 0.4, 0.0, 0.6]),
            g: Matrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            q: vec![1.0, 2.0, 1.0, 2.0],
            c: vec![0.5, 0.0, 0.5, 0.0],
            d: vec![0.0; 4],
        }
    }
}

impl PortHamiltonianParams {
    pub fn hamiltonian(&self) -> Result<SeparablePotential> {
        SeparablePotential::new(self.q.clone(), self.c.clone(), vec![0.0; self.q.len()])
    }

    pub fn build(&self) -> Result<System> {
        let n = self.j.nrows();
        if !self.j.is_square() || self.r.shape() != (n, n) || self.d.len() != n {
            return Err(Error::DimensionMismatch(
                "port_hamiltonian: J, R, d must share the state dimension".into(),
            ));
        }
        if (&self.j + self.j.transpose()).norm() > 1e-12 * self.j.norm().max(1.0) {
            return Err(Params::invalid(
                "J",
                "interconnection matrix must be skew-symmetric",
            ));
        }
        if !psd_check(&self.r, DEFAULT_PSD_TOL)?.is_psd() {
            return Err(Params::invalid("R", "dissipation matrix must be PSD"));
        }
        let ham = self.hamiltonian()?;
        if ham.dim() != n {
            return Err(Error::DimensionMismatch(
                "port_hamiltonian: q and c must have length n".into(),
            ));
        }
        let jr = &self.j - &self.r;
        let d = Vector::from_column_slice(&self.d);
        let (hf, jrf) = (ham.clone(), jr.clone());
        let f: VecFn = Arc::new(move |x: &Vector| &jrf * hf.grad(x) + &d);
        let (hj, jrj) = (ham.clone(), jr);
        let jac: JacFn = Arc::new(move |x: &Vector| &jrj * diag(&hj.hessian_diag(x)));
        let gt = self.g.transpose();
        let hh = ham.clone();
        let h: VecFn = Arc::new(move |x: &Vector| &gt * hh.grad(x));
        let p = self.g.ncols();
        Ok(System::new(
            "port_hamiltonian",
            TimeDomain::Continuous,
            n,
            f,
            h,
            self.g.clone(),
            Matrix::zeros(p, p),
        )?
        .with_jacobian(jac)
        .with_storage(StorageGenerator::separable(ham).named("H")))
    }
}

/// Gradient system with feedthrough: `τẋ = −∇φ(x) + gu`, `y = gx + ju`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFfParams {
    pub tau: Vec<f64>,
    pub g: f64,
    pub j: f64,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
}

impl Default for GradientFfParams {
    fn default() -> Self {
        Self {
            tau: vec![1.0],
            g: 1.0,
            j: 0.9,
            mu: vec![2.0],
            c: vec![0.5],
        }
    }
}

impl GradientFfParams {
    pub fn build(&self) -> Result<System> {
        let n = self.tau.len();
        if self.tau.iter().any(|t| !(*t > 0.0)) {
            return Err(Params::invalid("tau", "time constants must be positive"));
        }
        if !(self.g != 0.0) {
            return Err(Params::invalid("g", "input gain must be nonzero"));
        }
        let phi = SeparablePotential::new(self.mu.clone(), self.c.clone(), vec![0.0; n])?;
        let tau_inv: Vec<f64> = self.tau.iter().map(|t| 1.0 / t).collect();
        let (pf, ti) = (phi.clone(), tau_inv.clone());
        let f: VecFn = Arc::new(move |x: &Vector| {
            let g = pf.grad(x);
            Vector::from_fn(g.len(), |i, _| -ti[i] * g[i])
        });
        let (pj, tj) = (phi.clone(), tau_inv.clone());
        let jac: JacFn = Arc::new(move |x: &Vector| {
            let hd = pj.hessian_diag(x);
            diag(&hd.iter().zip(&tj).map(|(h, t)| -h * t).collect::<Vec<_>>())
        });
        let g = self.g;
        let h: VecFn = Arc::new(move |x: &Vector| x * g);
        let gm = diag(&tau_inv) * g;
        let storage = StorageGenerator::quadratic(diag(&self.tau))?.named("x'τx/2");
        Ok(System::new(
            "gradient_ff",
            TimeDomain::Continuous,
            n,
            f,
            h,
            gm,
            Matrix::identity(n, n) * self.j,
        )?
        .with_jacobian(jac)
        .with_storage(storage))
    }
}

/// Primal-dual dynamics for `min φ(z)` subject to
/// `Az = b` with augmentation `K`; state `(z, λ)`, input on `ż`, output `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AhuParams {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Matrix,
    /// Gain level used for the shipped storage; defaults to `γ⋆`.
    pub gamma: Option<f64>,
}

impl Default for AhuParams {
    fn default() -> Self {
        Self {
            a: Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]),
            b: vec![1.0, 0.0],
            mu: vec![1.0, 1.0],
            c: vec![0.0, 0.0],
            q: vec![0.0, 0.0],
            k: Matrix::zeros(2, 2),
            gamma: None,
        }
    }
}

impl AhuParams {
    pub fn potential(&self) -> Result<SeparablePotential> {
        SeparablePotential::new(self.mu.clone(), self.c.clone(), self.q.clone())
    }

    /// `λ_min(M + AᵀKA)` with `M = diag(μ)`.
    pub fn lambda_min(&self) -> Result<f64> {
        let m = diag(&self.mu) + self.a.transpose() * &self.k * &self.a;
        Ok(sym_eigen(&m)?.min())
    }

    /// `α = 2γ²λ_min(M + AᵀKA)`
    pub fn alpha(&self) -> Result<f64> {
        let lmin = self.lambda_min()?;
        let gamma = self.gamma.unwrap_or(1.0 / lmin);
        Ok(2.0 * gamma * gamma * lmin)
    }

    /// The KKT point `(z⋆, λ⋆)` of the quadratic instance (`c = 0`), by a
    /// direct linear solve.
    pub fn kkt_point(&self) -> Result<Vector> {
        let (n2, n1) = self.a.shape();
        let mut kkt = Matrix::zeros(n1 + n2, n1 + n2);
        kkt.view_mut((0, 0), (n1, n1)).copy_from(&diag(&self.mu));
        kkt.view_mut((0, n1), (n1, n2))
            .copy_from(&self.a.transpose());
        kkt.view_mut((n1, 0), (n2, n1)).copy_from(&self.a);
        let mut rhs = Vector::zeros(n1 + n2);
        for i in 0..n1 {
            rhs[i] = -self.q[i];
        }
        for i in 0..n2 {
            rhs[n1 + i] = self.b[i];
        }
        kkt.lu()
            .solve(&rhs)
            .ok_or(Error::Numerics(numerics::NumericsError::SingularJacobian))
    }

    pub fn build(&self) -> Result<System> {
        let (n2, n1) = self.a.shape();
        if self.b.len() != n2 || self.k.shape() != (n2, n2) || self.mu.len() != n1 {
            return Err(Error::DimensionMismatch(
                "ahu_saddle: A is n2×n1, b has n2 entries, K is n2×n2, mu has n1".into(),
            ));
        }
        if rank(&self.a, 1e-10) != n2 {
            return Err(Error::RankDeficientA);
        }
        numerics::ensure_symmetric(&self.k)?;
        if !psd_check(&self.k, DEFAULT_PSD_TOL)?.is_psd() {
            return Err(Params::invalid("K", "augmentation matrix must be PSD"));
        }
        let phi = self.potential()?;
        let n = n1 + n2;
        let a = self.a.clone();
        let at = a.transpose();
        let atk = &at * &self.k;
        let b = Vector::from_column_slice(&self.b);
        let pf = phi.clone();
        let (af, atf, atkf, bf) = (a.clone(), at.clone(), atk.clone(), b.clone());
        let f: VecFn = Arc::new(move |x: &Vector| {
            let z = x.rows(0, n1).clone_owned();
            let lam = x.rows(n1, n2).clone_owned();
            let resid = &af * &z - &bf;
            let zdot = -pf.grad(&z) - &atkf * &resid - &atf * &lam;
            let mut out = Vector::zeros(n1 + n2);
            out.rows_mut(0, n1).copy_from(&zdot);
            out.rows_mut(n1, n2).copy_from(&resid);
            out
        });
        let pj = phi;
        let atka = &atk * &a;
        let jac: JacFn = Arc::new(move |x: &Vector| {
            let z = x.rows(0, n1).clone_owned();
            let mut jm = Matrix::zeros(n1 + n2, n1 + n2);
            jm.view_mut((0, 0), (n1, n1))
                .copy_from(&(-diag(&pj.hessian_diag(&z)) - &atka));
            jm.view_mut((0, n1), (n1, n2)).copy_from(&(-&at));
            jm.view_mut((n1, 0), (n2, n1)).copy_from(&a);
            jm
        });
        let h: VecFn = Arc::new(move |x: &Vector| x.rows(0, n1).clone_owned());
        let mut g = Matrix::zeros(n, n1);
        g.view_mut((0, 0), (n1, n1)).fill_with_identity();
        // (α/2)(‖z‖² + ‖λ‖²): the multiplier block must carry the same
        // weight as the primal block for the cross terms to cancel
        let alpha = self.alpha()?;
        let storage = StorageGenerator::quadratic(Matrix::identity(n, n) * alpha)?
            .named("alpha/2 (|z|^2 + |lambda|^2)");
        Ok(System::new(
            "ahu_saddle",
            TimeDomain::Continuous,
            n,
            f,
            h,
            g,
            Matrix::zeros(n1, n1),
        )?
        .with_jacobian(jac)
        .with_storage(storage))
    }
}

/// Single-machine infinite-bus swing dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct SmibParams {
    pub m: f64,
    pub d: f64,
    pub b: f64,
    pub v: f64,
    pub p_m: f64,
}

impl Default for SmibParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            d: 1.0,
            b: 1.0,
            v: 1.0,
            p_m: 0.0,
        }
    }
}

impl SmibParams {
    /// `bV²`
    pub fn coupling(&self) -> f64 {
        self.b * self.v * self.v
    }

    pub fn build(&self) -> Result<System> {
        for (key, val) in [("M", self.m), ("D", self.d), ("b", self.b), ("V", self.v)] {
            if !(val > 0.0) {
                return Err(Params::invalid(key, "must be positive"));
            }
        }
        let (m, d, k, pm) = (self.m, self.d, self.coupling(), self.p_m);
        let f: VecFn = Arc::new(move |x: &Vector| {
            Vector::from_vec(vec![x[1], (pm - k * x[0].sin() - d * x[1]) / m])
        });
        let jac: JacFn = Arc::new(move |x: &Vector| {
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -k * x[0].cos() / m, -d / m])
        });
        let h: VecFn = Arc::new(|x: &Vector| Vector::from_element(1, x[1]));
        let storage = StorageGenerator::new(
            "M w^2/2 + bV^2 (1 - cos theta)",
            2,
            Arc::new(move |x: &Vector| 0.5 * m * x[1] * x[1] + k * (1.0 - x[0].cos())),
            Arc::new(move |x: &Vector| Vector::from_vec(vec![k * x[0].sin(), m * x[1]])),
            Convexity::LocallyConvex,
        );
        Ok(System::new(
            "smib",
            TimeDomain::Continuous,
            2,
            f,
            h,
            Matrix::from_column_slice(2, 1, &[0.0, 1.0 / m]),
            Matrix::zeros(1, 1),
        )?
        .with_jacobian(jac)
        .with_storage(storage))
    }
}

/// Gradient step in closed loop: `x⁺ = x − α(∇φ(x) − v)`, `y = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtGradientParams {
    pub alpha: f64,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
}

impl Default for DtGradientParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mu: vec![1.0],
            c: vec![0.0],
        }
    }
}

impl DtGradientParams {
    pub fn potential(&self) -> Result<SeparablePotential> {
        SeparablePotential::new(self.mu.clone(), self.c.clone(), vec![0.0; self.mu.len()])
    }

    pub fn build(&self) -> Result<System> {
        if !(self.alpha > 0.0) {
            return Err(Params::invalid("alpha", "step size must be positive"));
        }
        let phi = self.potential()?;
        let n = phi.dim();
        let alpha = self.alpha;
        let pf = phi.clone();
        let f: VecFn = Arc::new(move |x: &Vector| x - pf.grad(x) * alpha);
        let jac: JacFn =
            Arc::new(move |x: &Vector| Matrix::identity(n, n) - diag(&phi.hessian_diag(x)) * alpha);
        let h: VecFn = Arc::new(|x: &Vector| x.clone());
        let storage =
            StorageGenerator::quadratic(Matrix::identity(n, n) / alpha)?.named("|x|^2/(2 alpha)");
        Ok(System::new(
            "dt_gradient",
            TimeDomain::Discrete,
            n,
            f,
            h,
            Matrix::identity(n, n) * alpha,
            Matrix::zeros(n, n),
        )?
        .with_jacobian(jac)
        .with_storage(storage))
    }
}

/// `x⁺ = x + αu`, `y = x`.
pub fn dt_integrator(n: usize, alpha: f64) -> Result<System> {
    if !(alpha > 0.0) {
        return Err(Params::invalid("alpha", "step size must be positive"));
    }
    let f: VecFn = Arc::new(|x: &Vector| x.clone());
    let h: VecFn = Arc::new(|x: &Vector| x.clone());
    let storage =
        StorageGenerator::quadratic(Matrix::identity(n, n) / alpha)?.named("|x|^2/(2 alpha)");
    Ok(System::new(
        "dt_integrator",
        TimeDomain::Discrete,
        n,
        f,
        h,
        Matrix::identity(n, n) * alpha,
        Matrix::zeros(n, n),
    )?
    .with_jacobian(Arc::new(move |_: &Vector| Matrix::identity(n, n)))
    .with_drift_kind(DriftKind::Identity))
    .map(|s| s.with_storage(storage))
}

/// `f(x) = Fx`, `h(x) = Hx`.
pub fn lti(f: Matrix, g: Matrix, h: Matrix, j: Matrix, domain: TimeDomain) -> Result<System> {
    let n = f.nrows();
    if !f.is_square() || h.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "lti: F is {}x{}, H is {}x{}",
            f.nrows(),
            f.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    let kind = if f.iter().all(|v| *v == 0.0) && domain == TimeDomain::Continuous {
        DriftKind::Zero
    } else if domain == TimeDomain::Discrete && f == Matrix::identity(n, n) {
        DriftKind::Identity
    } else {
        DriftKind::Linear
    };
    let (ff, fj) = (f.clone(), f);
    let hh = h;
    Ok(System::new(
        "lti",
        domain,
        n,
        Arc::new(move |x: &Vector| &ff * x),
        Arc::new(move |x: &Vector| &hh * x),
        g,
        j,
    )?
    .with_jacobian(Arc::new(move |_: &Vector| fj.clone()))
    .with_drift_kind(kind))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub system: String,
    pub checks: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Rank of `G`, finiteness of `f` and `h` at 50 random probes in `[-1, 1]ⁿ`,
/// and agreement of an analytic Jacobian with central differences.
pub fn validate_system(sys: &System) -> ValidationReport {
    let mut checks = Vec::new();
    let sv = singular_values(sys.g());
    let r = sv.iter().filter(|&&s| s > G_RANK_TOL).count();
    checks.push(CheckItem {
        name: "rank_g".into(),
        passed: r == sys.m(),
        detail: format!("rank(G) = {r}, m = {}", sys.m()),
    });
    checks.push(CheckItem {
        name: "dimensions".into(),
        passed: sys.m() <= sys.n() && sys.p() <= sys.n(),
        detail: format!("n = {}, m = {}, p = {}", sys.n(), sys.m(), sys.p()),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let probes: Vec<Vector> = (0..50)
        .map(|_| random_box(&mut rng, sys.n(), 1.0))
        .collect();
    let finite = probes
        .iter()
        .all(|x| sys.f(x).iter().all(|v| v.is_finite()) && sys.h(x).iter().all(|v| v.is_finite()));
    checks.push(CheckItem {
        name: "finite_maps".into(),
        passed: finite,
        detail: format!("{} probes", probes.len()),
    });

    if sys.has_analytic_jacobian() {
        let mut worst: f64 = 0.0;
        for x in &probes {
            let ja = sys.jacobian_f(x);
            let jf = fd_jacobian(&|z: &Vector| sys.f(z), x);
            worst = worst.max((&ja - &jf).norm() / jf.norm().max(1.0));
        }
        checks.push(CheckItem {
            name: "jacobian_consistency".into(),
            passed: worst <= 1e-6,
            detail: format!("max relative deviation {worst:.3e}"),
        });
    }
    ValidationReport {
        system: sys.name().into(),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use serde_json::json;

    fn params(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn smib_catalog_example() {
        let sys = catalog_build("smib", &params(json!({"M":1,"D":1,"b":1,"V":1,"P_m":0}))).unwrap();
        assert_eq!((sys.n(), sys.m(), sys.p()), (2, 1, 1));
        let x = v(&[0.7, -0.3]);
        let fx = sys.f(&x);
        assert_abs_diff_eq!(fx[0], -0.3);
        assert_abs_diff_eq!(fx[1], -(0.7f64).sin() + 0.3, epsilon = 1e-15);
        assert_eq!(sys.h(&x)[0], -0.3);
        assert!(validate_system(&sys).passed());
    }

    #[test]
    fn dt_integrator_catalog_example() {
        let sys = catalog_build("dt_integrator", &params(json!({"alpha":0.1,"n":2}))).unwrap();
        assert!(sys.is_discrete());
        let x = v(&[1.0, -2.0]);
        let u = v(&[3.0, 4.0]);
        assert_eq!(sys.rhs(&x, &u), &x + &u * 0.1);
        assert_eq!(sys.output(&x, &u), x);
        assert_eq!(sys.drift_kind(), DriftKind::Identity);
    }

    #[test]
    fn lti_catalog_example() {
        let sys = catalog_build(
            "lti",
            &params(json!({"F":[[-1,0],[0,-1]],"G":[[1,0],[0,1]],"H":[[1,0],[0,1]]})),
        )
        .unwrap();
        let x = v(&[1.0, 2.0]);
        assert_eq!(sys.f(&x), -&x);
        assert_eq!(sys.h(&x), x);
        assert_eq!(sys.j(), &Matrix::zeros(2, 2));
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(
            catalog_build("pendulum", &Map::new()),
            Err(Error::UnknownSystem(_))
        ));
        assert!(matches!(
            catalog_build("dt_integrator", &Map::new()),
            Err(Error::MissingParam { .. })
        ));
        assert!(matches!(
            catalog_build("smib", &params(json!({"Pm": 0.2}))),
            Err(Error::UnknownParam { .. })
        ));
        assert!(matches!(
            catalog_build("gradient_ff", &params(json!({"n": 2, "mu": [1, 2, 3]}))),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn every_family_builds_with_consistent_dimensions() {
        for fam in FAMILIES {
            let p = match *fam {
                "dt_integrator" => params(json!({"alpha": 0.3})),
                "lti" => params(json!({"F":[[-1]],"G":[[1]],"H":[[1]]})),
                _ => Map::new(),
            };
            let sys = catalog_build(fam, &p).unwrap();
            assert!(sys.m() <= sys.n() && sys.p() <= sys.n(), "{fam}");
            let rep = validate_system(&sys);
            assert!(rep.passed(), "{fam}: {:?}", rep.failed());
        }
    }

    #[test]
    fn validation_catches_rank_and_jacobian_defects() {
        let sys = System::new_unvalidated(
            "bad",
            TimeDomain::Continuous,
            2,
            Arc::new(|x: &Vector| -x),
            Arc::new(|x: &Vector| x.clone()),
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            Matrix::zeros(2, 2),
        )
        .unwrap();
        assert_eq!(validate_system(&sys).failed(), vec!["rank_g"]);

        let smib = SmibParams::default().build().unwrap();
        let good = smib.clone();
        let perturbed = smib.with_jacobian(Arc::new(move |x: &Vector| {
            good.jacobian_f(x).add_scalar(1e-2)
        }));
        assert_eq!(
            validate_system(&perturbed).failed(),
            vec!["jacobian_consistency"]
        );
    }

    #[test]
    fn rank_deficient_g_rejected_at_construction() {
        let r = System::new(
            "bad",
            TimeDomain::Continuous,
            2,
            Arc::new(|x: &Vector| -x),
            Arc::new(|x: &Vector| x.rows(0, 1).clone_owned()),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn gradient_ff_drift_and_secant() {
        let p = GradientFfParams {
            tau: vec![2.0, 0.5],
            mu: vec![2.0, 3.0],
            c: vec![0.5, 1.0],
            ..Default::default()
        };
        let sys = p.build().unwrap();
        let phi = SeparablePotential::new(p.mu.clone(), p.c.clone(), vec![0.0; 2]).unwrap();
        let x = v(&[0.3, -1.2]);
        let expect = phi.grad(&x).component_mul(&v(&[-0.5, -2.0]));
        assert!((sys.f(&x) - expect).norm() < 1e-15);
        let check = StorageGenerator::separable(phi).validate_convexity(1000, 3.0, 7);
        assert!(check.passed && check.min_secant_ratio >= 2.0 - 1e-12);
    }

    #[test]
    fn supply_helpers() {
        let w = SupplyRate::passivity(2);
        let (u, y) = (v(&[1.0, 2.0]), v(&[3.0, -1.0]));
        assert_abs_diff_eq!(w.eval(&u, &y), y.dot(&u));
        assert!(w.is_sign_indefinite());
        let j = Matrix::identity(2, 2) * 0.9;
        let wf = SupplyRate::ifp_osp(2, 0.1, 0.2);
        let rh = wf.r_hat(&j);
        assert_abs_diff_eq!(rh[(0, 0)], -0.1 + 0.9 - 0.2 * 0.81, epsilon = 1e-15);
        let bad = SupplyRate::new(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 2),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn storage_generators_validate() {
        for sys in [
            SecondOrderParams::default().build().unwrap(),
            PortHamiltonianParams::default().build().unwrap(),
            AhuParams::default().build().unwrap(),
        ] {
            let st = sys.storage().unwrap();
            assert!(st.validate_gradient(100, 2.0, 1).passed, "{}", sys.name());
            assert!(st.validate_convexity(1000, 2.0, 2).passed, "{}", sys.name());
        }
    }

    #[test]
    fn ahu_vanishes_at_kkt() {
        let p = AhuParams {
            q: vec![0.5, -1.0],
            ..Default::default()
        };
        let sys = p.build().unwrap();
        let kkt = p.kkt_point().unwrap();
        assert!(sys.f(&kkt).norm() < 1e-14);
        let root =
            numerics::newton_root(&|x: &Vector| sys.f(x), None, &Vector::zeros(4), 1e-12, 50)
                .unwrap();
        assert!((root - kkt).norm() < 1e-10);
    }

    #[test]
    fn sector_bounds() {
        assert!(SectorBounds::scalar(1.0, 1.0).is_err());
        let s = SectorBounds::scalar(0.2, 1.0).unwrap();
        let w = s.supply();
        assert_abs_diff_eq!(w.s[(0, 0)], 0.6);
        assert_abs_diff_eq!(w.r[(0, 0)], -0.2);
    }

    #[test]
    fn logcosh_is_stable() {
        assert_abs_diff_eq!(logcosh(0.0), 0.0);
        assert_abs_diff_eq!(logcosh(1.0), (1.0f64).cosh().ln(), epsilon = 1e-15);
        assert!(logcosh(1e4).is_finite());
    }
}
