//! Two-block negative feedback `u1 = v1 − y2`, `u2 = v2 + y1`: closed-loop
//! assembly, supply composition, κ searches, the loop transformation for
//! sector-bounded nonlinearities and an equilibrium solver for intersecting
//! monotone relations.

use std::sync::Arc;

use serde::Serialize;

use crate::certify::{
    check_sector, sector_probes, verify_eid_ct, EidCertificate, EidOptions, Mode, Pair,
    SectorReport, Tolerances,
};
use crate::equilibria::EquilibriumMap;
use crate::numerics::{golden_section, singular_values, sym_eigen, Matrix, Vector};
use crate::systems::{
    Convexity, Model, SectorBounds, StaticNonlinearity, StorageGenerator, SupplyRate, System,
    TimeDomain, VecFn,
};
use crate::{io, par, Error, Result, Verdict};

/// Largest accepted condition number of `I + J1J2`.
pub const MAX_LOOP_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    sys1: System,
    sys2: System,
    /// `(I + J1J2)⁻¹`
    e: Matrix,
    condition: f64,
}

impl FeedbackLoop {
    pub fn new(sys1: System, sys2: System) -> Result<Self> {
        if sys1.domain() != sys2.domain() {
            return Err(Error::DimensionMismatch(
                "cannot interconnect a continuous-time and a discrete-time system".into(),
            ));
        }
        if sys1.m() != sys2.p() || sys1.p() != sys2.m() {
            return Err(Error::DimensionMismatch(format!(
                "need m1 = p2 and p1 = m2, got (m1, p1) = ({}, {}), (m2, p2) = ({}, {})",
                sys1.m(),
                sys1.p(),
                sys2.m(),
                sys2.p()
            )));
        }
        let p1 = sys1.p();
        let a = Matrix::identity(p1, p1) + sys1.j() * sys2.j();
        let sv = singular_values(&a);
        let smin = sv.last().copied().unwrap_or(1.0);
        let condition = if smin > 0.0 {
            sv[0] / smin
        } else {
            f64::INFINITY
        };
        if !(condition <= MAX_LOOP_CONDITION) {
            return Err(Error::IllPosed { condition });
        }
        let e = a.try_inverse().ok_or(Error::IllPosed { condition })?;
        Ok(Self {
            sys1,
            sys2,
            e,
            condition,
        })
    }

    pub fn sys1(&self) -> &System {
        &self.sys1
    }

    pub fn sys2(&self) -> &System {
        &self.sys2
    }

    /// `cond(I + J1J2)`
    pub fn condition(&self) -> f64 {
        self.condition
    }
}

/// Eliminate the algebraic loop and return the closed loop with state
/// `(x1, x2)`, input `(v1, v2)` and output `(y1, y2)`.
///
/// With `E = (I + J1J2)⁻¹`, `y1 = E(h1 − J1h2) + EJ1v1 − EJ1J2v2`, and the
/// rest follows by substitution. For `J1 = 0` or `J2 = 0` this reduces to
/// the familiar `f = [f1 − G1(h2 + J2h1); f2 + G2(h1 + J1h2)]`.
pub fn compose_closed_loop(lp: &FeedbackLoop) -> Result<System> {
    let (s1, s2) = (&lp.sys1, &lp.sys2);
    let (n1, n2) = (s1.n(), s2.n());
    let (m1, m2) = (s1.m(), s2.m());
    let (j1, j2) = (s1.j().clone(), s2.j().clone());
    let e = lp.e.clone();
    let b11 = &e * &j1;
    let b12 = -(&e * &j1 * &j2);
    let i1 = Matrix::identity(m1, m1);
    let i2 = Matrix::identity(m2, m2);
    let (g1, g2) = (s1.g(), s2.g());

    let mut g = Matrix::zeros(n1 + n2, m1 + m2);
    g.view_mut((0, 0), (n1, m1))
        .copy_from(&(g1 * (&i1 - &j2 * &b11)));
    g.view_mut((0, m1), (n1, m2))
        .copy_from(&(-(g1 * (&j2 + &j2 * &b12))));
    g.view_mut((n1, 0), (n2, m1)).copy_from(&(g2 * &b11));
    g.view_mut((n1, m1), (n2, m2))
        .copy_from(&(g2 * (&i2 + &b12)));

    let (p1, p2) = (s1.p(), s2.p());
    let mut j = Matrix::zeros(p1 + p2, m1 + m2);
    j.view_mut((0, 0), (p1, m1)).copy_from(&b11);
    j.view_mut((0, m1), (p1, m2)).copy_from(&b12);
    j.view_mut((p1, 0), (p2, m1)).copy_from(&(&j2 * &b11));
    j.view_mut((p1, m1), (p2, m2))
        .copy_from(&(&j2 + &j2 * &b12));

    // a1 = E(h1 − J1h2), shared by f and h
    let a1_of = {
        let (h1, h2, e, j1) = (s1.h_fn(), s2.h_fn(), e.clone(), j1.clone());
        move |x: &Vector| -> (Vector, Vector) {
            let y2free = h2(&x.rows(n1, n2).clone_owned());
            let a1 = &e * (h1(&x.rows(0, n1).clone_owned()) - &j1 * &y2free);
            (a1, y2free)
        }
    };
    let a1_of = Arc::new(a1_of);
    let f: VecFn = {
        let (f1, f2, g1, g2, j2, a1_of) = (
            s1.f_fn(),
            s2.f_fn(),
            g1.clone(),
            g2.clone(),
            j2.clone(),
            a1_of.clone(),
        );
        Arc::new(move |x: &Vector| {
            let (a1, h2) = a1_of(x);
            let top = f1(&x.rows(0, n1).clone_owned()) - &g1 * (h2 + &j2 * &a1);
            let bottom = f2(&x.rows(n1, n2).clone_owned()) + &g2 * &a1;
            let mut out = Vector::zeros(n1 + n2);
            out.rows_mut(0, n1).copy_from(&top);
            out.rows_mut(n1, n2).copy_from(&bottom);
            out
        })
    };
    let h: VecFn = {
        let j2 = j2.clone();
        Arc::new(move |x: &Vector| {
            let (a1, h2) = a1_of(x);
            let mut out = Vector::zeros(p1 + p2);
            out.rows_mut(0, p1).copy_from(&a1);
            out.rows_mut(p1, p2).copy_from(&(h2 + &j2 * &a1));
            out
        })
    };
    let mut sys = System::new(
        format!("{}+{}", s1.name(), s2.name()),
        s1.domain(),
        n1 + n2,
        f,
        h,
        g,
        j,
    )?;
    if let (Some(v1), Some(v2)) = (s1.storage(), s2.storage()) {
        sys = sys.with_storage(stacked_storage(v1, v2, 1.0));
    }
    Ok(sys)
}

/// `V(x1, x2) = V1(x1) + κV2(x2)`
pub fn stacked_storage(
    v1: &StorageGenerator,
    v2: &StorageGenerator,
    kappa: f64,
) -> StorageGenerator {
    let (n1, n2) = (v1.dim(), v2.dim());
    let (a, b) = (v1.clone(), v2.clone());
    let (c, d) = (v1.clone(), v2.clone());
    let convexity = match (v1.convexity(), v2.convexity()) {
        (Convexity::StronglyConvex(x), Convexity::StronglyConvex(y)) => {
            Convexity::StronglyConvex(x.min(kappa * y))
        }
        (Convexity::LocallyConvex, _) | (_, Convexity::LocallyConvex) => Convexity::LocallyConvex,
        (Convexity::Convex, _) | (_, Convexity::Convex) => Convexity::Convex,
        _ => Convexity::StrictlyConvex,
    };
    StorageGenerator::new(
        format!("{} + {kappa}·{}", v1.name(), v2.name()),
        n1 + n2,
        Arc::new(move |x: &Vector| {
            a.value(&x.rows(0, n1).clone_owned()) + kappa * b.value(&x.rows(n1, n2).clone_owned())
        }),
        Arc::new(move |x: &Vector| {
            let mut g = Vector::zeros(n1 + n2);
            g.rows_mut(0, n1)
                .copy_from(&c.grad(&x.rows(0, n1).clone_owned()));
            g.rows_mut(n1, n2)
                .copy_from(&(d.grad(&x.rows(n1, n2).clone_owned()) * kappa));
            g
        }),
        convexity,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComposedSupply {
    pub kappa: f64,
    pub supply: SupplyRate,
}

/// Supply of the closed loop for the storage `V1 + κV2`, with respect to
/// input `(v1, v2)` and output `(y1, y2)`:
///
/// * `Q_cl = [[Q1 + κR2, −S1 + κS2ᵀ], [−S1ᵀ + κS2, R1 + κQ2]]`
/// * `S_cl = [[S1, κR2], [−R1, κS2]]`
/// * `R_cl = diag(R1, κR2)`
pub fn compose_supply(w1: &SupplyRate, w2: &SupplyRate, kappa: f64) -> Result<ComposedSupply> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParam {
            key: "kappa".into(),
            reason: "must be positive".into(),
        });
    }
    let (p1, m1, p2, m2) = (w1.p(), w1.m(), w2.p(), w2.m());
    if m1 != p2 || p1 != m2 {
        return Err(Error::DimensionMismatch(format!(
            "supplies are for (p, m) = ({p1}, {m1}) and ({p2}, {m2}); need m1 = p2, p1 = m2"
        )));
    }
    let k = kappa;
    let mut q = Matrix::zeros(p1 + p2, p1 + p2);
    q.view_mut((0, 0), (p1, p1)).copy_from(&(&w1.q + &w2.r * k));
    let off = -&w1.s + w2.s.transpose() * k;
    q.view_mut((0, p1), (p1, p2)).copy_from(&off);
    q.view_mut((p1, 0), (p2, p1)).copy_from(&off.transpose());
    q.view_mut((p1, p1), (p2, p2))
        .copy_from(&(&w1.r + &w2.q * k));

    let mut s = Matrix::zeros(p1 + p2, m1 + m2);
    s.view_mut((0, 0), (p1, m1)).copy_from(&w1.s);
    s.view_mut((0, m1), (p1, m2)).copy_from(&(&w2.r * k));
    s.view_mut((p1, 0), (p2, m1)).copy_from(&(-&w1.r));
    s.view_mut((p1, m1), (p2, m2)).copy_from(&(&w2.s * k));

    let mut r = Matrix::zeros(m1 + m2, m1 + m2);
    r.view_mut((0, 0), (m1, m1)).copy_from(&w1.r);
    r.view_mut((m1, m1), (m2, m2)).copy_from(&(&w2.r * k));

    Ok(ComposedSupply {
        kappa,
        supply: SupplyRate { q, s, r },
    })
}

fn q_cl_lambda_max(w1: &SupplyRate, w2: &SupplyRate, kappa: f64) -> Result<f64> {
    let c = compose_supply(w1, w2, kappa)?;
    Ok(sym_eigen(&c.supply.q)?.max())
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaSearch {
    pub kappa: f64,
    /// `λ_max(Q_cl(κ))` at the returned κ.
    pub lambda_max: f64,
    pub tol: f64,
    pub verdict: Verdict,
    /// `(κ, λ_max)` on the log grid.
    pub grid: Vec<(f64, f64)>,
}

/// Minimize `λ_max(Q_cl(κ))` over a log grid on `range`, then refine by
/// golden section in `log κ` around the best grid point. Pass iff the
/// minimum is below `−tol`. Ties go to the smaller κ.
pub fn kappa_search(
    w1: &SupplyRate,
    w2: &SupplyRate,
    range: (f64, f64),
    grid: usize,
    tol: f64,
) -> Result<KappaSearch> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo) || grid == 0 {
        return Err(Error::InvalidParam {
            key: "kappa_range".into(),
            reason: format!("need 0 < lo ≤ hi and a nonempty grid, got [{lo}, {hi}] × {grid}"),
        });
    }
    compose_supply(w1, w2, lo)?;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let kappas: Vec<f64> = (0..grid)
        .map(|i| {
            if grid == 1 {
                lo
            } else {
                (llo + (lhi - llo) * i as f64 / (grid - 1) as f64).exp()
            }
        })
        .collect();
    let values = par::map(&kappas, |&k| q_cl_lambda_max(w1, w2, k));
    let mut pts = Vec::with_capacity(grid);
    for (k, v) in kappas.iter().zip(values) {
        pts.push((*k, v?));
    }
    let (mut best_i, mut best) = (0, pts[0].1);
    for (i, &(_, v)) in pts.iter().enumerate() {
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut kappa = pts[best_i].0;
    if grid > 2 {
        let a = pts[best_i.saturating_sub(1)].0.ln();
        let b = pts[(best_i + 1).min(grid - 1)].0.ln();
        let obj = |t: f64| q_cl_lambda_max(w1, w2, t.exp()).unwrap_or(f64::INFINITY);
        let (t, v) = golden_section(&obj, a, b, 1e-10, 200);
        if v < best {
            best = v;
            kappa = t.exp();
        }
    }
    Ok(KappaSearch {
        kappa,
        lambda_max: best,
        tol,
        verdict: Verdict::from_bool(best < -tol),
        grid: pts,
    })
}

/// Supplies for a pure integrator with gain `α` and for the gradient map of
/// a `μ`-strongly convex, `L`-smooth function, split by `λ ∈ [0, 1]` between
/// cocoercivity and strong monotonicity:
/// `(0, ½I, (α/2)I)` and `(−(λ/L)I, ½I, −(1−λ)μI)`.
pub fn integrator_gradient_supplies(
    m: usize,
    alpha: f64,
    mu: f64,
    lipschitz: f64,
    lambda: f64,
) -> (SupplyRate, SupplyRate) {
    (
        SupplyRate::scalar(m, m, 0.0, 0.5, alpha / 2.0),
        SupplyRate::scalar(m, m, -lambda / lipschitz, 0.5, -(1.0 - lambda) * mu),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilySearch {
    pub lambda: f64,
    pub best: KappaSearch,
    /// `(λ, κ, λ_max)` per family member.
    pub members: Vec<(f64, f64, f64)>,
    pub verdict: Verdict,
}

/// Run [`kappa_search`] for each member of a one-parameter family of supply
/// pairs and keep the best. Ties go to the earlier member.
pub fn family_search<F>(
    lambdas: &[f64],
    build: F,
    range: (f64, f64),
    grid: usize,
    tol: f64,
) -> Result<FamilySearch>
where
    F: Fn(f64) -> (SupplyRate, SupplyRate) + Sync,
{
    if lambdas.is_empty() {
        return Err(Error::InvalidParam {
            key: "lambda".into(),
            reason: "empty family".into(),
        });
    }
    let runs = par::map(lambdas, |&l| {
        let (w1, w2) = build(l);
        kappa_search(&w1, &w2, range, grid, tol)
    });
    let mut members = Vec::with_capacity(lambdas.len());
    let mut best: Option<(f64, KappaSearch)> = None;
    for (&l, run) in lambdas.iter().zip(runs) {
        let run = run?;
        members.push((l, run.kappa, run.lambda_max));
        if best
            .as_ref()
            .is_none_or(|(_, b)| run.lambda_max < b.lambda_max)
        {
            best = Some((l, run));
        }
    }
    let (lambda, best) = best.expect("nonempty family");
    Ok(FamilySearch {
        lambda,
        verdict: best.verdict,
        best,
        members,
    })
}

/// `ẋ = f(x) − GK1h(x) + Gu_ℓ`, `y_ℓ = Kh(x) + u_ℓ` with `K = K2 − K1`.
pub fn loop_transform(sys: &System, bounds: &SectorBounds) -> Result<System> {
    if sys.m() != sys.p() {
        return Err(Error::NonSquare {
            m: sys.m(),
            p: sys.p(),
        });
    }
    if sys.j().iter().any(|&v| v != 0.0) {
        return Err(Error::NonzeroFeedthrough);
    }
    if bounds.dim() != sys.m() {
        return Err(Error::DimensionMismatch(format!(
            "sector has dimension {}, system has m = {}",
            bounds.dim(),
            sys.m()
        )));
    }
    let gk1 = sys.g() * bounds.k1();
    let k = bounds.k();
    let (f0, h0) = (sys.f_fn(), sys.h_fn());
    let h1 = h0.clone();
    let f: VecFn = Arc::new(move |x: &Vector| f0(x) - &gk1 * h1(x));
    let h: VecFn = Arc::new(move |x: &Vector| &k * h0(x));
    let m = sys.m();
    let mut out = System::new(
        format!("{}/transformed", sys.name()),
        sys.domain(),
        sys.n(),
        f,
        h,
        sys.g().clone(),
        Matrix::identity(m, m),
    )?;
    if let Some(v) = sys.storage() {
        out = out.with_storage(v.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CircleOptions {
    pub grid: usize,
    pub eps_range: (f64, f64),
    /// Bisection steps between the largest passing grid point and the next.
    pub refine_steps: usize,
    pub tol: Tolerances,
    /// Certified ε must exceed this for a pass.
    pub eps_tol: f64,
}

impl Default for CircleOptions {
    fn default() -> Self {
        Self {
            grid: 40,
            eps_range: (1e-6, 1.0),
            refine_steps: 30,
            tol: Tolerances::default(),
            eps_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CircleReport {
    pub system: String,
    /// Largest ε for which `(−εI, ½I, 0)` was certified on the transformed
    /// system.
    pub epsilon: Option<f64>,
    /// `(ε, passed)` on the log grid.
    pub grid: Vec<(f64, bool)>,
    pub sector: Option<SectorReport>,
    pub certificate: Option<EidCertificate>,
    pub verdict: Verdict,
}

/// Certify the loop transformation of `sys` for the sector `bounds` with
/// the Bregman family of `gen`, searching for the largest certifiable ε.
///
/// `pairs` are taken from `sys`; their equilibrium inputs and outputs are
/// recomputed for the transformed system (the equilibrium states coincide).
/// When `psi` is given its sector membership is checked first and a failing
/// check makes the whole report fail.
pub fn circle_criterion(
    sys: &System,
    bounds: &SectorBounds,
    gen: &StorageGenerator,
    pairs: &[Pair],
    psi: Option<&StaticNonlinearity>,
    opts: &CircleOptions,
) -> Result<CircleReport> {
    let sector = match psi {
        Some(psi) => {
            let probes = sector_probes(psi.dim(), 500, 5.0, 0);
            Some(check_sector(psi, bounds, &probes, 1e-9)?)
        }
        None => None,
    };
    let transformed = loop_transform(sys, bounds)?;
    let emap = EquilibriumMap::new(&transformed)?;
    let mut tpairs = Vec::with_capacity(pairs.len());
    for p in pairs {
        tpairs.push(Pair {
            x: p.x.clone(),
            eq: emap.ku_ky(&p.eq.xbar)?,
        });
    }
    let m = sys.m();
    let run = |eps: f64| -> Result<Option<EidCertificate>> {
        let supply = SupplyRate::scalar(m, m, -eps, 0.5, 0.0);
        let eid = EidOptions {
            mode: Mode::Inequality,
            tol: opts.tol,
            ..Default::default()
        };
        match verify_eid_ct(&transformed, &supply, gen, &tpairs, &eid) {
            Ok(c) => Ok(Some(c)),
            Err(Error::RhatNotPsd { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let passes = |c: &Option<EidCertificate>| c.as_ref().is_some_and(|c| c.verdict.is_pass());

    let (lo, hi) = opts.eps_range;
    if !(lo > 0.0 && hi >= lo) || opts.grid == 0 {
        return Err(Error::InvalidParam {
            key: "eps_range".into(),
            reason: format!("need 0 < lo ≤ hi, got [{lo}, {hi}]"),
        });
    }
    let n = opts.grid;
    let eps: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect();
    let certs = par::map(&eps, |&e| run(e));
    let mut grid = Vec::with_capacity(n);
    let mut best: Option<(usize, EidCertificate)> = None;
    for (i, c) in certs.into_iter().enumerate() {
        let c = c?;
        let ok = passes(&c);
        grid.push((eps[i], ok));
        if ok {
            best = Some((i, c.expect("passing certificate")));
        }
    }
    let (epsilon, certificate) = match best {
        Some((i, mut cert)) => {
            let mut good = eps[i];
            if i + 1 < n {
                let mut bad = eps[i + 1];
                for _ in 0..opts.refine_steps {
                    let mid = 0.5 * (good + bad);
                    let c = run(mid)?;
                    if passes(&c) {
                        good = mid;
                        cert = c.expect("passing certificate");
                    } else {
                        bad = mid;
                    }
                }
            }
            (Some(good), Some(cert))
        }
        None => (None, None),
    };
    let sector_ok = sector.as_ref().is_none_or(|s| s.verdict.is_pass());
    let verdict = Verdict::from_bool(sector_ok && epsilon.is_some_and(|e| e > opts.eps_tol));
    Ok(CircleReport {
        system: sys.name().into(),
        epsilon,
        grid,
        sector,
        certificate,
        verdict,
    })
}

/// A plant with zero feedthrough in feedback with a static map:
/// `u1 = v1 − y2`, `y2 = ψ(v2 + y1)`, `y1 = h(x)`. Input `(v1, v2)`, output
/// `(y1, y2)`.
#[derive(Debug, Clone)]
pub struct LurieLoop {
    plant: System,
    psi: StaticNonlinearity,
}

impl LurieLoop {
    pub fn new(plant: System, psi: StaticNonlinearity) -> Result<Self> {
        if plant.m() != plant.p() {
            return Err(Error::NonSquare {
                m: plant.m(),
                p: plant.p(),
            });
        }
        if plant.j().iter().any(|&v| v != 0.0) {
            return Err(Error::NonzeroFeedthrough);
        }
        if psi.dim() != plant.m() {
            return Err(Error::DimensionMismatch(format!(
                "nonlinearity has dimension {}, plant has m = {}",
                psi.dim(),
                plant.m()
            )));
        }
        Ok(Self { plant, psi })
    }

    pub fn plant(&self) -> &System {
        &self.plant
    }

    pub fn psi(&self) -> &StaticNonlinearity {
        &self.psi
    }

    fn signals(&self, x: &Vector, v: &Vector) -> (Vector, Vector, Vector) {
        let m = self.plant.m();
        let y1 = self.plant.h(x);
        let y2 = self.psi.eval(&(v.rows(m, m) + &y1));
        let u = v.rows(0, m) - &y2;
        (y1, y2, u)
    }
}

impl Model for LurieLoop {
    fn domain(&self) -> TimeDomain {
        self.plant.domain()
    }

    fn state_dim(&self) -> usize {
        self.plant.n()
    }

    fn input_dim(&self) -> usize {
        2 * self.plant.m()
    }

    fn output_dim(&self) -> usize {
        2 * self.plant.m()
    }

    fn rhs(&self, x: &Vector, v: &Vector) -> Vector {
        let (_, _, u) = self.signals(x, v);
        self.plant.rhs(x, &u)
    }

    fn output(&self, x: &Vector, v: &Vector) -> Vector {
        let (y1, y2, _) = self.signals(x, v);
        let m = self.plant.m();
        let mut out = Vector::zeros(2 * m);
        out.rows_mut(0, m).copy_from(&y1);
        out.rows_mut(m, m).copy_from(&y2);
        out
    }
}

/// An equilibrium input/output relation given as an evaluable map, in
/// either direction.
#[derive(Clone)]
pub enum Relation {
    /// `y = k(u)`
    Forward(VecFn),
    /// `u = k⁻¹(y)`
    Inverse(VecFn),
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionSolution {
    #[serde(serialize_with = "io::ser_vector")]
    pub y1: Vector,
    #[serde(serialize_with = "io::ser_vector")]
    pub y2: Vector,
    pub iterations: usize,
    pub residual: f64,
    /// Strong monotonicity modulus used for the step.
    pub modulus: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct InclusionOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InclusionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

// Lipschitz estimate from random secants around `y0`.
fn lipschitz_estimate(f: &dyn Fn(&Vector) -> Vector, y0: &Vector) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut l: f64 = 0.0;
    for scale in [1e-3, 1e-1, 1.0, 10.0] {
        for _ in 0..16 {
            let a = y0 + crate::systems::random_box(&mut rng, y0.len(), scale);
            let b = y0 + crate::systems::random_box(&mut rng, y0.len(), scale);
            let d = (&a - &b).norm();
            if d > 0.0 {
                l = l.max((f(&a) - f(&b)).norm() / d);
            }
        }
    }
    l
}

fn strong_monotone_fixed_point(
    f: &dyn Fn(&Vector) -> Vector,
    target: &Vector,
    mu: f64,
    opts: &InclusionOptions,
) -> Result<(Vector, usize, f64, f64)> {
    let mut y = target.clone();
    let l = lipschitz_estimate(f, &y).max(mu);
    let mut eta = mu / (l * l);
    let mut r = f(&y) - target;
    let mut res = r.norm();
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok((y, it, res, eta));
        }
        let cand = &y - &r * eta;
        let rc = f(&cand) - target;
        let rn = rc.norm();
        if !rn.is_finite() || rn > res {
            eta *= 0.5;
            if eta < 1e-300 {
                break;
            }
            continue;
        }
        y = cand;
        r = rc;
        res = rn;
    }
    if res <= opts.tol {
        return Ok((y, opts.max_iter, res, eta));
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: res,
    })
}

/// Find `(y1, y2)` with `y1 ∈ K1(v1 − y2)` and `y2 ∈ K2(v2 + y1)`.
///
/// If `R2 + Q1 ≺ 0` (and `K1` is available inverted, `K2` forward) the
/// inclusion `v1 ∈ K1⁻¹(y1) + K2(y1 + v2)` is solved; otherwise if
/// `R1 + Q2 ≺ 0` (with `K2` inverted, `K1` forward) the mirrored
/// `v2 ∈ K2⁻¹(y2) − K1(v1 − y2)`. Both are strongly monotone with modulus
/// `−λ_max` of the respective sum when the supplies have `S = ½I`, and the
/// iteration `y ← y − η(F(y) − v)` with `η = μ/L²` contracts.
pub fn solve_monotone_inclusion(
    k1: &Relation,
    k2: &Relation,
    w1: &SupplyRate,
    w2: &SupplyRate,
    v1: &Vector,
    v2: &Vector,
    opts: &InclusionOptions,
) -> Result<InclusionSolution> {
    if w1.m() != w2.p() || w1.p() != w2.m() || v1.len() != w1.m() || v2.len() != w2.m() {
        return Err(Error::DimensionMismatch(
            "relations must satisfy m1 = p2, p1 = m2 and match v1, v2".into(),
        ));
    }
    let mu_f = if w1.q.shape() == w2.r.shape() {
        -sym_eigen(&(&w2.r + &w1.q))?.max()
    } else {
        f64::NEG_INFINITY
    };
    let mu_g = if w2.q.shape() == w1.r.shape() {
        -sym_eigen(&(&w1.r + &w2.q))?.max()
    } else {
        f64::NEG_INFINITY
    };
    match (k1, k2) {
        (Relation::Inverse(k1inv), Relation::Forward(k2f)) if mu_f > 0.0 => {
            let v2c = v2.clone();
            let f = |y: &Vector| k1inv(y) + k2f(&(y + &v2c));
            let (y1, iterations, residual, step) = strong_monotone_fixed_point(&f, v1, mu_f, opts)?;
            let y2 = k2f(&(&y1 + v2));
            Ok(InclusionSolution {
                y1,
                y2,
                iterations,
                residual,
                modulus: mu_f,
                step,
            })
        }
        (Relation::Forward(k1f), Relation::Inverse(k2inv)) if mu_g > 0.0 => {
            let v1c = v1.clone();
            let f = |y: &Vector| k2inv(y) - k1f(&(&v1c - y));
            let (y2, iterations, residual, step) = strong_monotone_fixed_point(&f, v2, mu_g, opts)?;
            let y1 = k1f(&(v1 - &y2));
            Ok(InclusionSolution {
                y1,
                y2,
                iterations,
                residual,
                modulus: mu_g,
                step,
            })
        }
        _ => Err(Error::ConditionsNotMet(format!(
            "need R2 + Q1 ≺ 0 with (K1⁻¹, K2) or R1 + Q2 ≺ 0 with (K1, K2⁻¹); \
             moduli are {mu_f:.3e} and {mu_g:.3e}"
        ))),
    }
}
