use eid_core::certify::{
    sample_local_pairs, sample_pairs, scan_dissipation, verify_eid_ct, verify_eid_dt,
    verify_kyp_lti, Bregman, EidOptions, Mode, Pair, QuadraticP, Shifted, StorageFamily,
    Tolerances,
};
use eid_core::equilibria::{
    check_relation_dissipativity, sample_io_relation, EquilibriumMap, IoSample, Region,
};
use eid_core::gains::{
    ahu_gain, dt_gradient_gain, empirical_gain, ifp_osp_gain, DisturbanceSpec, FeasibleRegion,
};
use eid_core::interconnect::{
    circle_criterion, compose_supply, family_search, integrator_gradient_supplies, kappa_search,
    CircleOptions, LurieLoop,
};
use eid_core::io::{indexed, matrix_from_value, write_csv};
use eid_core::numerics::matrix_to_rows;
use eid_core::sim::{
    audit_dissipation, simulate_ct, simulate_dt, stability_experiment, Horizon, Input, Trajectory,
};
use eid_core::systems::{
    Model, SectorBounds, StaticNonlinearity, StorageGenerator, System, TimeDomain,
};
use eid_core::{Error, Matrix, Vector, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};
use std::sync::Arc;

use crate::config::*;
use crate::{CliError, CliResult, Ctx, Outcome};

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn outcome<C: Serialize>(verdict: Verdict, metrics: Value, cfg: &C) -> Outcome {
    Outcome {
        verdict,
        metrics,
        resolved: to_value(cfg),
    }
}

fn storage_of(sys: &System) -> CliResult<StorageGenerator> {
    sys.storage()
        .cloned()
        .ok_or_else(|| CliError::new(format!("system `{}` has no storage generator", sys.name())))
}

fn csv(ctx: &mut Ctx, name: &str, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    if let Some(path) = ctx.artifact(name) {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        write_csv(&path, &header, rows)?;
    }
    Ok(())
}

fn check_positive(key: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::new(format!("config: `{key}` must be positive")))
    }
}

fn pairs_for(ctx: &Ctx, sys: &System, cfg: &CertifyConfig) -> CliResult<Vec<Pair>> {
    let emap = EquilibriumMap::new(sys)?;
    let n = sys.n();
    check_positive("xbar_radius", cfg.xbar_radius)?;
    let pairs = match cfg.local_radius {
        Some(r) => {
            check_positive("local_radius", r)?;
            sample_local_pairs(
                &emap,
                &Region::cube(n, cfg.xbar_radius),
                r,
                cfg.pairs,
                ctx.seed,
            )?
        }
        None => {
            check_positive("radius", cfg.radius)?;
            sample_pairs(
                &emap,
                &Region::cube(n, cfg.radius),
                &Region::cube(n, cfg.xbar_radius),
                cfg.pairs,
                ctx.seed,
            )?
        }
    };
    Ok(pairs)
}

fn eid_options(ctx: &Ctx, cfg: &mut CertifyConfig) -> EidOptions {
    if let Some(t) = ctx.tol {
        cfg.tol_a = t;
        cfg.tol_b = t;
    }
    EidOptions {
        mode: match cfg.mode {
            ModeSpec::Equality => Mode::Equality,
            ModeSpec::Inequality => Mode::Inequality,
        },
        tol: Tolerances {
            a: cfg.tol_a,
            b: cfg.tol_b,
            c: cfg.tol_c,
            ..Tolerances::default()
        },
        ..EidOptions::default()
    }
}

/// `R̂ ⋡ 0` means no certificate can exist: a failed run, not an error.
fn rhat_failure<C: Serialize>(e: Error, cfg: &C) -> CliResult<Outcome> {
    match e {
        Error::RhatNotPsd { min_eigenvalue } => Ok(outcome(
            Verdict::Fail,
            json!({"reason": "feedthrough block is not positive semidefinite", "min_eigenvalue": min_eigenvalue}),
            cfg,
        )),
        e => Err(e.into()),
    }
}

pub fn certify(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let mut cfg: CertifyConfig = ctx.config()?;
    let opts = eid_options(ctx, &mut cfg);
    let supply = cfg.supply.build(sys.p(), sys.m())?;
    let gen = storage_of(&sys)?;
    let pairs = pairs_for(ctx, &sys, &cfg)?;
    match cfg.storage {
        StorageKind::Bregman => match verify_eid_ct(&sys, &supply, &gen, &pairs, &opts) {
            Ok(cert) => {
                let metrics = json!({
                    "system": cert.system,
                    "storage": cert.storage,
                    "k": cert.k,
                    "W": matrix_to_rows(&cert.w),
                    "stats": cert.stats,
                    "tol": cert.tol,
                });
                Ok(outcome(cert.verdict, metrics, &cfg))
            }
            Err(e) => rhat_failure(e, &cfg),
        },
        StorageKind::Shifted => {
            let family = Shifted(gen);
            let scan = scan_dissipation(&sys, &supply, &family, &pairs, cfg.tol_a)?;
            let metrics = json!({
                "system": sys.name(),
                "storage": family.name(),
                "pairs": scan.pairs,
                "min_margin": scan.min_margin,
                "worst_pair": pairs.get(scan.worst_pair),
                "tol": cfg.tol_a,
            });
            Ok(outcome(scan.verdict, metrics, &cfg))
        }
    }
}

fn default_p(sys: &System, p: &Option<Vec<Vec<f64>>>) -> CliResult<Matrix> {
    match p {
        Some(rows) => Ok(matrix(rows)?),
        None => {
            let gen = storage_of(sys)?;
            let hess = gen
                .hessian()
                .ok_or_else(|| CliError::new("storage is not quadratic; give `P` in the config"))?;
            Ok(hess * 0.5)
        }
    }
}

pub fn certify_dt(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let mut cfg: CertifyConfig = ctx.config()?;
    let opts = eid_options(ctx, &mut cfg);
    let supply = cfg.supply.build(sys.p(), sys.m())?;
    let p = default_p(&sys, &cfg.p)?;
    let pairs = pairs_for(ctx, &sys, &cfg)?;
    match verify_eid_dt(&sys, &supply, &p, &pairs, &opts) {
        Ok(cert) => {
            let metrics = json!({
                "system": cert.system,
                "storage": cert.storage,
                "P": matrix_to_rows(&p),
                "k": cert.k,
                "W": matrix_to_rows(&cert.w),
                "stats": cert.stats,
                "tol": cert.tol,
            });
            Ok(outcome(cert.verdict, metrics, &cfg))
        }
        Err(e) => rhat_failure(e, &cfg),
    }
}

pub fn kyp(ctx: &mut Ctx) -> CliResult<Outcome> {
    let file = ctx.system_file()?;
    if file.family != "lti" {
        return Err(CliError::new(format!(
            "kyp needs an `lti` system, got `{}`",
            file.family
        )));
    }
    // build once so the parameters get validated
    let sys = file.build()?;
    if sys.is_discrete() {
        return Err(Error::WrongDomain {
            expected: "continuous-time",
        }
        .into());
    }
    let get = |k: &str| -> CliResult<Matrix> {
        match file.params.get(k) {
            Some(v) => Ok(matrix_from_value(k, v)?),
            None => Ok(Matrix::zeros(sys.p(), sys.m())),
        }
    };
    let (f, g, h, j) = (get("F")?, get("G")?, get("H")?, get("J")?);
    let mut cfg: KypConfig = ctx.config()?;
    if cfg.p.is_empty() {
        return Err(CliError::new("config: `P` is required"));
    }
    cfg.tol = Some(ctx.tol.or(cfg.tol).unwrap_or(1e-9));
    let supply = cfg.supply.build(sys.p(), sys.m())?;
    let report = verify_kyp_lti(
        &f,
        &g,
        &h,
        &j,
        &supply,
        &matrix(&cfg.p)?,
        cfg.tol.unwrap_or(1e-9),
    )?;
    let metrics = json!({
        "lambda_max": report.lambda_max,
        "tol": report.tol,
        "M": matrix_to_rows(&report.m),
    });
    Ok(outcome(report.verdict, metrics, &cfg))
}

pub fn region(ctx: &mut Ctx) -> CliResult<Outcome> {
    let cfg: RegionConfig = ctx.config()?;
    let reg = FeasibleRegion::new(cfg.mu, cfg.g, cfg.j)?;
    if cfg.points < 2 || !(cfg.nu_hi > cfg.nu_lo) {
        return Err(CliError::new("config: need points ≥ 2 and nu_hi > nu_lo"));
    }
    let rows: Vec<Vec<f64>> = (0..cfg.points)
        .map(|i| {
            let nu = cfg.nu_lo + (cfg.nu_hi - cfg.nu_lo) * i as f64 / (cfg.points - 1) as f64;
            let feedthrough = (cfg.j - nu) / (cfg.j * cfg.j);
            let drift = if nu <= cfg.j {
                reg.rho_bound(nu)
            } else {
                f64::NAN
            };
            let rho_max = reg.rho_max(nu).unwrap_or(f64::NAN);
            let member = f64::from(u8::from(rho_max > 0.0));
            vec![nu, feedthrough, drift, rho_max, member]
        })
        .collect();
    csv(
        ctx,
        "region.csv",
        &["nu", "rho_max_eq16", "rho_max_eq18", "rho_max", "member"],
        &rows,
    )?;
    let metrics = json!({
        "nu_intercept": reg.nu_intercept(),
        "rho_intercept": reg.rho_intercept(),
        "rho_cap": reg.rho_cap(),
        "rho_max_at_nu_lo": reg.rho_max(cfg.nu_lo),
        "points": rows.len(),
    });
    Ok(outcome(Verdict::Pass, metrics, &cfg))
}

pub fn gain(ctx: &mut Ctx) -> CliResult<Outcome> {
    let cfg: GainConfig = ctx.config()?;
    let metrics = match &cfg {
        GainConfig::IfpOsp { a, b } => {
            let mut rows = Vec::new();
            for &ai in a {
                for &bi in b {
                    let g = ifp_osp_gain(ai, bi)?;
                    rows.push(vec![ai, bi, g.gamma, g.param("delta").unwrap_or(f64::NAN)]);
                }
            }
            csv(ctx, "gain.csv", &["a", "b", "gamma", "delta"], &rows)?;
            json!({"formula": "ifp_osp", "rows": rows.len(), "max_gamma": max_col(&rows, 2)})
        }
        GainConfig::DtGradient { mu, alphas } => {
            // the α → 0 row shows the 1/μ asymptote
            let mut grid = vec![1e-6];
            grid.extend(alphas.iter().copied().filter(|&a| a != 1e-6));
            let mut rows = Vec::new();
            for &alpha in &grid {
                let g = dt_gradient_gain(*mu, alpha)?;
                rows.push(vec![*mu, alpha, g.gamma]);
            }
            csv(ctx, "gain.csv", &["mu", "alpha", "gamma"], &rows)?;
            json!({
                "formula": "dt_gradient",
                "rows": rows.len(),
                "gamma_small_alpha": rows[0][2],
                "asymptote": 1.0 / mu,
            })
        }
        GainConfig::Ahu { mu, a, k } => {
            let a = matrix(a)?;
            let k = match k {
                Some(k) => matrix(k)?,
                None => Matrix::zeros(a.nrows(), a.nrows()),
            };
            let g = ahu_gain(mu, &a, &k)?;
            csv(ctx, "gain.csv", &["gamma"], &[vec![g.gamma]])?;
            json!({"formula": "ahu", "gamma": g.gamma, "params": g.params})
        }
        GainConfig::Empirical {
            xbar,
            t_end,
            dt,
            steps,
            gaussian,
            sinusoids,
            power_iterations,
        } => {
            let sys = ctx.system()?;
            let eq = equilibrium(&sys, xbar.as_deref())?;
            let horizon = horizon(&sys, *t_end, *dt, *steps)?;
            let spec = DisturbanceSpec {
                gaussian: *gaussian,
                sinusoids: *sinusoids,
                power_iterations: *power_iterations,
                seed: ctx.seed,
                ..DisturbanceSpec::default()
            };
            let est = empirical_gain(&sys, &eq, &spec, horizon)?;
            let rows: Vec<Vec<f64>> = est
                .ratios
                .iter()
                .enumerate()
                .map(|(i, (_, r))| vec![i as f64, *r])
                .collect();
            csv(ctx, "gain.csv", &["disturbance", "ratio"], &rows)?;
            json!({
                "formula": "empirical",
                "gamma": est.gamma,
                "worst": est.ratios.get(est.worst),
                "truncated": est.truncated,
                "skipped": est.skipped,
            })
        }
    };
    Ok(outcome(Verdict::Pass, metrics, &cfg))
}

fn max_col(rows: &[Vec<f64>], col: usize) -> f64 {
    rows.iter()
        .map(|r| r[col])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn compose(ctx: &mut Ctx) -> CliResult<Outcome> {
    let mut cfg: ComposeConfig = ctx.config()?;
    if let Some(t) = ctx.tol {
        cfg.tol = t;
    }
    if let Some(fam) = &cfg.integrator_gradient {
        if fam.lambdas == 0 {
            return Err(CliError::new("config: `lambdas` must be at least 1"));
        }
        let lambdas: Vec<f64> = if fam.lambdas == 1 {
            vec![0.5]
        } else {
            (0..fam.lambdas)
                .map(|i| i as f64 / (fam.lambdas - 1) as f64)
                .collect()
        };
        let (dim, alpha, mu, l) = (cfg.dim, fam.alpha, fam.mu, fam.l);
        let found = family_search(
            &lambdas,
            |lam| integrator_gradient_supplies(dim, alpha, mu, l, lam),
            cfg.kappa_range,
            cfg.grid,
            cfg.tol,
        )?;
        let rows: Vec<Vec<f64>> = found
            .members
            .iter()
            .map(|&(a, b, c)| vec![a, b, c])
            .collect();
        csv(ctx, "family.csv", &["lambda", "kappa", "lambda_max"], &rows)?;
        let metrics = json!({
            "lambda": found.lambda,
            "kappa": found.best.kappa,
            "lambda_max": found.best.lambda_max,
            "tol": cfg.tol,
        });
        return Ok(outcome(found.verdict, metrics, &cfg));
    }
    let w1 = cfg.w1.build(cfg.dim, cfg.dim)?;
    let w2 = cfg.w2.build(cfg.dim, cfg.dim)?;
    let search = kappa_search(&w1, &w2, cfg.kappa_range, cfg.grid, cfg.tol)?;
    let rows: Vec<Vec<f64>> = search.grid.iter().map(|&(k, l)| vec![k, l]).collect();
    csv(ctx, "kappa.csv", &["kappa", "lambda_max"], &rows)?;
    let composed = compose_supply(&w1, &w2, search.kappa)?;
    let metrics = json!({
        "kappa": search.kappa,
        "lambda_max": search.lambda_max,
        "tol": search.tol,
        "Q_cl": matrix_to_rows(&composed.supply.q),
        "S_cl": matrix_to_rows(&composed.supply.s),
        "R_cl": matrix_to_rows(&composed.supply.r),
    });
    Ok(outcome(search.verdict, metrics, &cfg))
}

fn psi_of(spec: &PsiSpec, dim: usize) -> CliResult<StaticNonlinearity> {
    match spec {
        PsiSpec::Linear { k } => {
            if k.len() != dim {
                return Err(CliError::new(format!("config: psi needs {dim} gains")));
            }
            Ok(StaticNonlinearity::linear(k.clone()))
        }
        PsiSpec::Saturation { lo, hi } => Ok(StaticNonlinearity::saturation(dim, *lo, *hi)),
    }
}

pub fn circle(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let cfg: CircleConfig = ctx.config()?;
    let gen = storage_of(&sys)?;
    let m = sys.m();
    let bounds = SectorBounds::new(vec![cfg.sector.0; m], vec![cfg.sector.1; m])?;
    check_positive("xbar_radius", cfg.xbar_radius)?;
    check_positive("local_radius", cfg.local_radius)?;
    let emap = EquilibriumMap::new(&sys)?;
    let pairs = sample_local_pairs(
        &emap,
        &Region::cube(sys.n(), cfg.xbar_radius),
        cfg.local_radius,
        cfg.pairs,
        ctx.seed,
    )?;
    let psi = cfg.psi.as_ref().map(|p| psi_of(p, m)).transpose()?;
    let mut opts = CircleOptions {
        grid: cfg.grid,
        ..CircleOptions::default()
    };
    if let Some(t) = ctx.tol {
        opts.tol.a = t;
        opts.tol.b = t;
    }
    let report = circle_criterion(&sys, &bounds, &gen, &pairs, psi.as_ref(), &opts)?;
    let rows: Vec<Vec<f64>> = report
        .grid
        .iter()
        .map(|&(e, ok)| vec![e, f64::from(u8::from(ok))])
        .collect();
    csv(ctx, "circle.csv", &["epsilon", "certified"], &rows)?;
    let metrics = json!({
        "system": report.system,
        "epsilon": report.epsilon,
        "sector": report.sector,
        "stats": report.certificate.as_ref().map(|c| &c.stats),
    });
    Ok(outcome(report.verdict, metrics, &cfg))
}

/// Project a guess (default the origin) onto the equilibrium set.
fn equilibrium(sys: &System, guess: Option<&[f64]>) -> CliResult<IoSample> {
    let x0 = match guess {
        Some(g) if g.len() != sys.n() => {
            return Err(CliError::new(format!(
                "config: xbar needs {} entries",
                sys.n()
            )))
        }
        Some(g) => vector(g),
        None => Vector::zeros(sys.n()),
    };
    let emap = EquilibriumMap::new(sys)?;
    let xbar = emap.project(&x0)?;
    Ok(emap.ku_ky(&xbar)?)
}

fn horizon(sys: &System, t_end: f64, dt: f64, steps: usize) -> CliResult<Horizon> {
    Ok(match sys.domain() {
        TimeDomain::Continuous => {
            check_positive("t_end", t_end)?;
            check_positive("dt", dt)?;
            Horizon::Continuous { t_end, dt }
        }
        TimeDomain::Discrete => Horizon::Discrete { steps },
    })
}

fn input_signal(ctx: &Ctx, spec: &SignalSpec, ubar: &Vector, steps: usize) -> CliResult<Input> {
    let m = ubar.len();
    Ok(match spec {
        SignalSpec::Zero => Input::Constant(ubar.clone()),
        SignalSpec::Constant { value } => {
            if value.len() != m {
                return Err(CliError::new(format!("config: input needs {m} entries")));
            }
            Input::Constant(ubar + vector(value))
        }
        SignalSpec::Sine { amplitude, omega } => {
            let (ub, a, w) = (ubar.clone(), *amplitude, *omega);
            Input::Function(Arc::new(move |t| ub.add_scalar(a * (w * t).sin())))
        }
        SignalSpec::Gaussian { std } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let vals = (0..=steps)
                .map(|_| {
                    ubar + Vector::from_fn(m, |_, _| {
                        std * <StandardNormal as Distribution<f64>>::sample(
                            &StandardNormal,
                            &mut rng,
                        )
                    })
                })
                .collect();
            Input::Sequence(vals)
        }
    })
}

fn run_sim(ctx: &Ctx, sys: &System, cfg: &SimConfig) -> CliResult<(IoSample, Trajectory)> {
    let eq = equilibrium(sys, cfg.xbar.as_deref())?;
    let x0 = match &cfg.x0 {
        Some(x) if x.len() != sys.n() => {
            return Err(CliError::new(format!(
                "config: x0 needs {} entries",
                sys.n()
            )))
        }
        Some(x) => vector(x),
        None => eq.xbar.clone(),
    };
    let traj = match horizon(sys, cfg.t_end, cfg.dt, cfg.steps)? {
        Horizon::Continuous { t_end, dt } => {
            let steps = (t_end / dt).round() as usize;
            let u = input_signal(ctx, &cfg.input, &eq.ubar, steps)?;
            simulate_ct(sys, &x0, &u, t_end, dt)?
        }
        Horizon::Discrete { steps } => {
            let u = input_signal(ctx, &cfg.input, &eq.ubar, steps)?;
            simulate_dt(sys, &x0, &u, steps)?
        }
    };
    Ok((eq, traj))
}

pub fn simulate(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let cfg: SimConfig = ctx.config()?;
    let (eq, traj) = run_sim(ctx, &sys, &cfg)?;
    if let Some(path) = ctx.artifact("trajectory.csv") {
        traj.write_csv(&path)?;
    }
    let fin = traj.final_state();
    let metrics = json!({
        "system": sys.name(),
        "samples": traj.len(),
        "xbar": eq.xbar.as_slice(),
        "ubar": eq.ubar.as_slice(),
        "final_state": fin.as_slice(),
        "final_distance": (fin - &eq.xbar).norm(),
    });
    Ok(outcome(Verdict::Pass, metrics, &cfg))
}

pub fn audit(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let mut cfg: SimConfig = ctx.config()?;
    if ctx.tol.is_some() {
        cfg.tol = ctx.tol;
    }
    let supply = cfg.supply.build(sys.p(), sys.m())?;
    let family: Box<dyn StorageFamily> = match (&cfg.p, cfg.storage) {
        (Some(p), _) => Box::new(QuadraticP(matrix(p)?)),
        (None, StorageKind::Bregman) => Box::new(Bregman(storage_of(&sys)?)),
        (None, StorageKind::Shifted) => Box::new(Shifted(storage_of(&sys)?)),
    };
    let (eq, traj) = run_sim(ctx, &sys, &cfg)?;
    let report = audit_dissipation(&sys, &traj, family.as_ref(), &eq, &supply, cfg.tol)?;
    if let Some(path) = ctx.artifact("trajectory.csv") {
        traj.write_csv(&path)?;
    }
    if let Some(path) = ctx.artifact("audit.csv") {
        report.write_csv(&traj, &path)?;
    }
    let metrics = json!({
        "system": sys.name(),
        "storage": family.name(),
        "samples": traj.len(),
        "max_violation": report.max_violation,
        "max_step_violation": report.max_step_violation,
        "max_gap": report.max_gap,
        "tol": report.tol,
        "xbar": eq.xbar.as_slice(),
        "ubar": eq.ubar.as_slice(),
    });
    Ok(outcome(report.verdict, metrics, &cfg))
}

pub fn stability(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let cfg: StabilityConfig = ctx.config()?;
    let eq = equilibrium(&sys, cfg.xbar.as_deref())?;
    let horizon = horizon(&sys, cfg.t_end, cfg.dt, cfg.steps)?;
    let report = match &cfg.psi {
        None => stability_experiment(
            &sys,
            &eq.xbar,
            &eq.ubar,
            cfg.radius,
            cfg.probes,
            horizon,
            cfg.required_fraction,
        )?,
        Some(spec) => {
            let psi = psi_of(spec, sys.m())?;
            // hold x̄ with v2 = 0: u = v1 − ψ(ȳ) must equal ū
            let v1 = &eq.ubar + psi.eval(&eq.ybar);
            let mut v = v1.as_slice().to_vec();
            v.extend(std::iter::repeat_n(0.0, sys.m()));
            let lp = LurieLoop::new(sys.clone(), psi)?;
            let model: &dyn Model = &lp;
            stability_experiment(
                model,
                &eq.xbar,
                &vector(&v),
                cfg.radius,
                cfg.probes,
                horizon,
                cfg.required_fraction,
            )?
        }
    };
    let rows: Vec<Vec<f64>> = report
        .final_distances
        .iter()
        .zip(&report.converged)
        .enumerate()
        .map(|(i, (&d, &c))| vec![i as f64, d, f64::from(u8::from(c))])
        .collect();
    csv(
        ctx,
        "stability.csv",
        &["probe", "final_distance", "converged"],
        &rows,
    )?;
    let metrics = json!({
        "xbar": eq.xbar.as_slice(),
        "radius": report.radius,
        "probes": report.probes,
        "converged_fraction": report.converged_fraction,
        "max_final_distance": report.max_final_distance,
    });
    Ok(outcome(report.verdict, metrics, &cfg))
}

pub fn io_relation(ctx: &mut Ctx) -> CliResult<Outcome> {
    let sys = ctx.system()?;
    let mut cfg: IoRelationConfig = ctx.config()?;
    if let Some(t) = ctx.tol {
        cfg.tol = t;
    }
    check_positive("radius", cfg.radius)?;
    let supply = cfg.supply.build(sys.p(), sys.m())?;
    let emap = EquilibriumMap::new(&sys)?;
    let set = sample_io_relation(
        &emap,
        &Region::cube(sys.n(), cfg.radius),
        cfg.count,
        ctx.seed,
    )?;
    if let Some(path) = ctx.artifact("io_relation.csv") {
        let (header, rows) = set.table();
        write_csv(&path, &header, &rows)?;
    }
    let report = check_relation_dissipativity(&set.samples, &supply, cfg.tol)?;
    let columns = [indexed("ubar", sys.m()), indexed("ybar", sys.p())].concat();
    let metrics = json!({
        "samples": set.samples.len(),
        "failures": set.failures,
        "columns": columns,
        "pairs": report.pairs,
        "min_value": report.min_value,
        "max_abs_value": report.max_abs_value,
        "violation_count": report.violation_count,
        "tol": report.tol,
    });
    Ok(outcome(
        Verdict::from_bool(report.dissipative),
        metrics,
        &cfg,
    ))
}
