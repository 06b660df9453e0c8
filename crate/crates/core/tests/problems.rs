use exprk::integrator::{integrate, ExecMode, PhiBackend};
use exprk::linalg::{norm_inf, Vector};
use exprk::phi::PhiMethod;
use exprk::problems::{
    by_name, dirichlet_laplacian, discrete_l2, error_at, Autonomized, Heat1d, LinearDecay,
    SemilinearProblem, HEAT1D_LIPSCHITZ,
};
use exprk::tableaus::exprk6s16;
use exprk::Error;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn heat1d_examples() {
    let p = Heat1d::new(200).unwrap();
    assert_eq!(norm_inf(&p.dense_operator().view()), 161604.0);
    assert!((Heat1d::source(0.5, 0.0) - 1.308823529411765).abs() < 1e-14);
    let q = Heat1d::new(201).unwrap();
    let e = q.exact(1.0).unwrap();
    let max = e.iter().copied().fold(f64::MIN, f64::max);
    assert_eq!(e[100], max);
    assert!((max - std::f64::consts::E / 4.0).abs() < 1e-15);
    assert_eq!(p.exact(0.0).unwrap(), p.initial_state());
    assert_eq!(p.dx(), 1.0 / 201.0);
}

#[test]
fn linear_decay_examples() {
    let p = LinearDecay::new(30).unwrap();
    let m = 31.0_f64;
    let lambda = 4.0 * m * m * (std::f64::consts::PI / (2.0 * m)).sin().powi(2);
    assert!((p.lambda1() - lambda).abs() < 1e-12);
    // The initial state is an eigenvector.
    let u = p.initial_state();
    let au = p.apply_linear(&u.view());
    assert!((&au + &(&u * p.lambda1())).iter().all(|r| r.abs() < 1e-9));
    let mut prev = f64::INFINITY;
    for k in 0..10 {
        let n = discrete_l2(&p.exact(k as f64 * 0.01).unwrap().view(), p.dx());
        assert!(n < prev);
        prev = n;
    }
}

#[test]
fn error_at_examples() {
    let p = Heat1d::new(50).unwrap();
    let e = p.exact(0.7).unwrap();
    assert_eq!(error_at(&p, &e.view(), 0.7).unwrap(), 0.0);
    let eps = 1e-3;
    let mut v = e.clone();
    v[0] += eps;
    let err = error_at(&p, &v.view(), 0.7).unwrap();
    assert!((err - p.dx().sqrt() * eps).abs() < 1e-15);
    let auto = Autonomized::new(&p);
    let s = auto.initial_state();
    assert!(matches!(error_at(&auto, &s.view(), 0.0), Err(Error::MissingExact)));
    assert!(error_at(&p, &Vector::zeros(3).view(), 0.0).is_err());
}

#[test]
fn by_name_and_preconditions() {
    assert_eq!(by_name("heat1d", 20).unwrap().dim(), 20);
    assert_eq!(by_name("linear-decay", 20).unwrap().name(), "linear-decay");
    assert!(matches!(by_name("burgers", 20), Err(Error::UnknownProblem(_))));
    assert!(Heat1d::new(7).is_err());
    assert!(Heat1d::new(8).is_ok());
}

#[test]
fn laplacian_is_second_order_accurate() {
    let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
    let f2 = |x: f64| -4.0 * std::f64::consts::PI.powi(2) * f(x);
    let errs: Vec<f64> = [31usize, 63, 127]
        .iter()
        .map(|&n| {
            let dx = 1.0 / (n + 1) as f64;
            let u = Vector::from_shape_fn(n, |k| f((k + 1) as f64 * dx));
            let au = dirichlet_laplacian(n).dot(&u);
            (0..n).map(|k| (au[k] - f2((k + 1) as f64 * dx)).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }
}

#[test]
fn manufactured_residual_is_small() {
    // u is quadratic in x, so the central difference is exact up to rounding.
    for n in [20usize, 40, 80] {
        let p = Heat1d::new(n).unwrap();
        let dx = p.dx();
        for t in [0.0, 0.4, 1.0] {
            let u = p.exact(t).unwrap();
            // ∂_t u = u for this solution.
            let r = &u - &p.full_rhs(t, &u.view());
            assert!(r.iter().all(|x| x.abs() <= dx * dx), "n = {n} t = {t}");
        }
    }
}

#[test]
fn source_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let u = |x: f64, t: f64| Heat1d::exact_at(x, t);
    let d = 1e-4;
    for _ in 0..20 {
        let x = rng.random_range(0.0..1.0);
        let t = rng.random_range(0.0..1.0);
        let ut = (u(x, t + d) - u(x, t - d)) / (2.0 * d);
        let uxx = (u(x + d, t) - 2.0 * u(x, t) + u(x - d, t)) / (d * d);
        let phi = ut - uxx - 1.0 / (1.0 + u(x, t).powi(2));
        assert!((phi - Heat1d::source(x, t)).abs() <= 1e-6, "x = {x} t = {t}");
    }
}

#[test]
fn lipschitz_bound_along_trajectory() {
    let p = Heat1d::new(40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let s = exprk6s16();
    for steps in [1usize, 2, 4] {
        let t_end = 0.25 * steps as f64;
        let run = integrate(&s, &p, 0.0, t_end, 0.25, ExecMode::Sequential, PhiBackend::Dense(PhiMethod::Auto)).unwrap();
        let u = run.state;
        for _ in 0..10 {
            let v = &u + &Vector::from_shape_fn(40, |_| rng.random_range(-0.5..0.5));
            let dg = p.nonlinearity(t_end, &u.view()) - p.nonlinearity(t_end, &v.view());
            let du = &u - &v;
            let lhs = dg.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let rhs = du.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!(lhs <= HEAT1D_LIPSCHITZ * rhs * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #[test]
    fn norm_is_homogeneous(v in prop::collection::vec(-10.0f64..10.0, 1..40), a in -5.0f64..5.0, dx in 1e-3f64..1.0) {
        let v = Vector::from(v);
        let lhs = discrete_l2(&(&v * a).view(), dx);
        let rhs = a.abs() * discrete_l2(&v.view(), dx);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        prop_assert_eq!(discrete_l2(&Vector::zeros(v.len()).view(), dx), 0.0);
    }
}
