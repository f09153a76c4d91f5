use eid_core::certify::{bregman, Ell};
use eid_core::equilibria::{sample_io_relation, EquilibriumMap, Region};
use eid_core::gains::{dt_gradient_gain, empirical_gain, ifp_osp_gain, DisturbanceSpec};
use eid_core::interconnect::{compose_supply, kappa_search};
use eid_core::numerics::{psd_check, rk4_step, sym_eigen};
use eid_core::sim::{simulate_dt, Horizon, Input};
use eid_core::systems::{
    DtGradientParams, PortHamiltonianParams, SecondOrderParams, SeparablePotential,
    StorageGenerator, SupplyRate,
};
use eid_core::{Matrix, Vector};
use proptest::prelude::*;
use std::sync::Arc;

fn sym(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| {
        let a = Matrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

fn potential(n: usize) -> impl Strategy<Value = SeparablePotential> {
    (
        prop::collection::vec(0.1..3.0f64, n),
        prop::collection::vec(0.0..2.0f64, n),
        prop::collection::vec(-1.0..1.0f64, n),
    )
        .prop_map(|(mu, c, q)| SeparablePotential::new(mu, c, q).unwrap())
}

fn vec3() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-4.0..4.0f64, 3).prop_map(Vector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_decomposition_reconstructs(a in sym(4)) {
        let e = sym_eigen(&a).unwrap();
        let d = Matrix::from_diagonal(&Vector::from_vec(e.eigenvalues.clone()));
        let back = &e.eigenvectors * d * e.eigenvectors.transpose();
        prop_assert!((back - &a).amax() <= 1e-10 * (1.0 + a.amax()));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn psd_check_agrees_with_min_eigenvalue(a in sym(3), shift in -2.0..2.0f64) {
        let a = a + Matrix::identity(3, 3) * shift;
        let r = psd_check(&a, 1e-8).unwrap();
        let lmin = sym_eigen(&a).unwrap().min();
        prop_assert_eq!(r.is_psd(), lmin >= -1e-8);
        // a PSD matrix never has a negative Rayleigh quotient
        if r.is_psd() {
            let x = Vector::from_vec(vec![1.0, -0.5, 0.25]);
            prop_assert!(x.dot(&(&a * &x)) >= -1e-8 * x.norm_squared());
        }
    }

    #[test]
    fn bregman_bounds(p in potential(3), x in vec3(), y in vec3(), xb in vec3(), t in 0.0..1.0f64) {
        let m = p.strong_convexity();
        let gen = StorageGenerator::separable(p);
        let dx = bregman(&gen, &xb, &x);
        let tol = 1e-10 * (1.0 + dx.abs());
        prop_assert!(dx >= 0.5 * m * (&x - &xb).norm_squared() - tol);
        prop_assert_eq!(bregman(&gen, &xb, &xb), 0.0);
        let z = &x * t + &y * (1.0 - t);
        let secant = t * dx + (1.0 - t) * bregman(&gen, &xb, &y) - bregman(&gen, &xb, &z);
        prop_assert!(secant >= -tol);
    }

    #[test]
    fn difference_ell_telescopes(a in vec3(), b in vec3(), c in vec3()) {
        let l = Arc::new(|x: &Vector| x.map(|v| v.sin() + v * v * v));
        let ell = Ell::Difference(l.clone());
        let sum = ell.eval(&a, &b).unwrap() + ell.eval(&b, &c).unwrap() + ell.eval(&c, &a).unwrap();
        let scale = [&a, &b, &c].iter().map(|p| l(p).amax()).fold(1.0, f64::max);
        prop_assert!(sum.amax() <= 4.0 * f64::EPSILON * scale);
    }

    #[test]
    fn sampled_equilibria_satisfy_the_map(seed in 0u64..1000) {
        for sys in [
            PortHamiltonianParams::default().build().unwrap(),
            SecondOrderParams::default().build().unwrap(),
        ] {
            let emap = EquilibriumMap::new(&sys).unwrap();
            let a = sample_io_relation(&emap, &Region::cube(sys.n(), 2.0), 10, seed).unwrap();
            let b = sample_io_relation(&emap, &Region::cube(sys.n(), 2.0), 10, seed).unwrap();
            prop_assert_eq!(a.samples.len() + a.failures, 10);
            for (s, t) in a.samples.iter().zip(&b.samples) {
                prop_assert_eq!(&s.xbar, &t.xbar);
                let drift = sys.f(&s.xbar) + sys.g() * &s.ubar;
                prop_assert!(drift.amax() <= 1e-9, "f(x̄) + gū = {}", drift.amax());
                let y = sys.h(&s.xbar) + sys.j() * &s.ubar;
                prop_assert!((y - &s.ybar).amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradient_gain_increases_with_step(mu in 0.1..5.0f64, f1 in 0.001..0.999f64, f2 in 0.001..0.999f64) {
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let amax = 2.0 / mu;
        let g1 = dt_gradient_gain(mu, lo * amax).unwrap().gamma;
        let g2 = dt_gradient_gain(mu, hi * amax).unwrap().gamma;
        prop_assert!(g1 <= g2 * (1.0 + 1e-12));
        prop_assert!(g1 >= 1.0 / mu * (1.0 - 1e-12));
    }

    #[test]
    fn ifp_osp_gain_never_beats_input_passivity(a in 0.1..10.0f64, b in 0.0..10.0f64) {
        let g = ifp_osp_gain(a, b).unwrap();
        prop_assert!(g.gamma >= 1.0 / a * (1.0 - 1e-12));
    }

    #[test]
    fn kappa_search_monotone_in_tol(nu in 0.0..2.0f64, rho in 0.0..2.0f64, t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let w1 = SupplyRate::ifp_osp(1, nu, rho);
        let w2 = SupplyRate::ifp_osp(1, rho, nu);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = kappa_search(&w1, &w2, (1e-3, 1e3), 30, lo).unwrap();
        let b = kappa_search(&w1, &w2, (1e-3, 1e3), 30, hi).unwrap();
        prop_assert!(!b.verdict.is_pass() || a.verdict.is_pass());
        let cl = compose_supply(&w1, &w2, a.kappa).unwrap();
        let lmax = sym_eigen(&cl.supply.q).unwrap().max();
        prop_assert!((lmax - a.lambda_max).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn empirical_gain_stays_below_bound(frac in 0.05..1.0f64, seed in 0u64..100) {
        // L = μ + c = 1.3
        let alpha = frac / 1.3;
        let sys = DtGradientParams { alpha, mu: vec![1.0, 1.0], c: vec![0.3, 0.0] }.build().unwrap();
        let emap = EquilibriumMap::new(&sys).unwrap();
        let eq = emap.ku_ky(&emap.project(&Vector::from_vec(vec![0.4, -0.2])).unwrap()).unwrap();
        let spec = DisturbanceSpec { gaussian: 4, sinusoids: 4, power_iterations: 3, seed, ..DisturbanceSpec::default() };
        let est = empirical_gain(&sys, &eq, &spec, Horizon::Discrete { steps: 200 }).unwrap();
        let bound = dt_gradient_gain(1.0, alpha).unwrap().gamma;
        prop_assert!(est.gamma <= bound * (1.0 + 1e-9), "{} > {}", est.gamma, bound);
    }

    #[test]
    fn gradient_gain_bound_breaks_past_unit_step(alpha in 1.2..1.9f64) {
        // quadratic φ: the exact gain is α/(2 − α) once α > 1
        let sys = DtGradientParams { alpha, mu: vec![1.0], c: vec![0.0] }.build().unwrap();
        let zero = Vector::zeros(1);
        let eq = eid_core::equilibria::IoSample { xbar: zero.clone(), ubar: zero.clone(), ybar: zero };
        let spec = DisturbanceSpec { gaussian: 0, sinusoids: 0, power_iterations: 8, ..DisturbanceSpec::default() };
        let est = empirical_gain(&sys, &eq, &spec, Horizon::Discrete { steps: 400 }).unwrap();
        prop_assert!(est.gamma > dt_gradient_gain(1.0, alpha).unwrap().gamma);
    }

    #[test]
    fn equilibria_are_invariant(seed in 0u64..1000) {
        let sys = DtGradientParams { alpha: 0.7, mu: vec![1.0, 2.0], c: vec![0.5, 0.2] }.build().unwrap();
        let emap = EquilibriumMap::new(&sys).unwrap();
        let set = sample_io_relation(&emap, &Region::cube(2, 2.0), 5, seed).unwrap();
        for s in &set.samples {
            let traj = simulate_dt(&sys, &s.xbar, &Input::Constant(s.ubar.clone()), 50).unwrap();
            let drift = traj.states.iter().map(|x| (x - &s.xbar).amax()).fold(0.0, f64::max);
            prop_assert!(drift <= 1e-9);
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let f = |x: &Vector, _: &Vector| -x;
    let error = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let mut x = Vector::from_vec(vec![1.0]);
        for _ in 0..steps {
            x = rk4_step(&f, &x, &Vector::zeros(0), dt).unwrap();
        }
        (x[0] - (-1.0f64).exp()).abs()
    };
    for dt in [0.1, 0.05, 0.025] {
        let order = (error(dt) / error(dt / 2.0)).log2();
        assert!(order > 3.8, "observed order {order} at dt = {dt}");
    }
}
