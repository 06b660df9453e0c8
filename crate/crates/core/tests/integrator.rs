use ndarray::ArrayView1;

use exprk::integrator::{
    integrate, integrate_with, precompute, precompute_spectral, single_step, spectral_for, step,
    step_count, ExecMode, PhiBackend,
};
use exprk::linalg::{Matrix, Vector};
use exprk::phi::{KrylovOptions, PhiMethod};
use exprk::problems::{discrete_l2, error_at, Autonomized, Heat1d, LinearDecay, SemilinearProblem};
use exprk::tableaus::{exponential_euler, exprk6s15, exprk6s16, Scheme, SCHEME_NAMES};
use exprk::Error;
use proptest::prelude::*;

const DENSE: PhiBackend = PhiBackend::Dense(PhiMethod::Auto);

/// `u' = λu` in one dimension.
struct Scalar {
    a: Matrix,
}

impl Scalar {
    fn new(lambda: f64) -> Self {
        Scalar {
            a: Matrix::from_elem((1, 1), lambda),
        }
    }
}

impl SemilinearProblem for Scalar {
    fn name(&self) -> &str {
        "scalar"
    }
    fn dim(&self) -> usize {
        1
    }
    fn dense_operator(&self) -> &Matrix {
        &self.a
    }
    fn nonlinearity(&self, _t: f64, _u: &ArrayView1<f64>) -> Vector {
        Vector::zeros(1)
    }
    fn initial_state(&self) -> Vector {
        Vector::from(vec![1.0])
    }
    fn dx(&self) -> f64 {
        1.0
    }
}

/// Heat equation whose nonlinearity turns non-finite from `t_bad` on.
struct Poisoned {
    inner: Heat1d,
    t_bad: f64,
}

impl SemilinearProblem for Poisoned {
    fn name(&self) -> &str {
        "poisoned"
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn dense_operator(&self) -> &Matrix {
        self.inner.dense_operator()
    }
    fn nonlinearity(&self, t: f64, u: &ArrayView1<f64>) -> Vector {
        let mut g = self.inner.nonlinearity(t, u);
        if t >= self.t_bad {
            g[0] = f64::NAN;
        }
        g
    }
    fn initial_state(&self) -> Vector {
        self.inner.initial_state()
    }
    fn dx(&self) -> f64 {
        self.inner.dx()
    }
}

fn all_schemes() -> Vec<Scheme> {
    SCHEME_NAMES.iter().map(|n| Scheme::by_name(n).unwrap()).collect()
}

#[test]
fn linear_problems_are_integrated_exactly() {
    let p = LinearDecay::new(128).unwrap();
    for s in all_schemes() {
        for h in [0.5, 0.125] {
            let u = single_step(&s, &p, h, DENSE).unwrap();
            let exact = p.exact(h).unwrap();
            let err = error_at(&p, &u.view(), h).unwrap();
            let rel = err / discrete_l2(&exact.view(), p.dx());
            assert!(err <= 1e-10 && rel <= 1e-11, "{} h = {h}: {err:e} ({rel:e})", s.name);
        }
    }
}

#[test]
fn exponential_euler_on_scalar_decay() {
    let u = single_step(&exponential_euler(), &Scalar::new(-1.0), 0.1, DENSE).unwrap();
    assert!((u[0] - 0.904837418).abs() < 1e-9);
    assert!((u[0] - (-0.1f64).exp()).abs() < 1e-16);
}

#[test]
fn autonomized_system_matches() {
    let p = Heat1d::new(40).unwrap();
    let auto = Autonomized::new(&p);
    for s in [exprk6s15(), exprk6s16()] {
        for h in [0.5, 0.125] {
            let direct = integrate(&s, &p, 0.0, 1.0, h, ExecMode::Sequential, DENSE).unwrap();
            let lifted = integrate(&s, &auto, 0.0, 1.0, h, ExecMode::Sequential, DENSE).unwrap();
            let n = p.dim();
            let diff = &direct.state - &lifted.state.slice(ndarray::s![..n]);
            let d = diff.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!(d <= 1e-10, "{} h = {h}: {d:e}", s.name);
            assert!((lifted.state[n] - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn concurrent_and_sequential_are_bitwise_identical() {
    let heat = Heat1d::new(60).unwrap();
    let decay = LinearDecay::new(60).unwrap();
    let problems: [&dyn SemilinearProblem; 2] = [&heat, &decay];
    for s in all_schemes() {
        for p in problems {
            let a = integrate(&s, p, 0.0, 1.0, 0.0625, ExecMode::Sequential, DENSE).unwrap();
            let b = integrate(&s, p, 0.0, 1.0, 0.0625, ExecMode::Concurrent, DENSE).unwrap();
            assert!(
                a.state.iter().zip(b.state.iter()).all(|(x, y)| x.to_bits() == y.to_bits()),
                "{} on {}",
                s.name,
                p.name()
            );
            assert_eq!(b.mode, ExecMode::Concurrent);
        }
    }
}

#[test]
fn barriers_and_cache_nodes() {
    let a = Heat1d::new(10).unwrap();
    let s15 = exprk6s15();
    let s16 = exprk6s16();
    let c15 = precompute(&s15, a.dense_operator(), 0.1, DENSE).unwrap();
    let c16 = precompute(&s16, a.dense_operator(), 0.1, DENSE).unwrap();
    assert!(c15.barriers() <= 6 && c16.barriers() <= 6);
    assert_eq!(c15.cache().unwrap().len(), 9);
    assert_eq!(c16.cache().unwrap().len(), 5);
    let k = precompute(&s16, a.dense_operator(), 0.1, PhiBackend::Krylov(KrylovOptions::default())).unwrap();
    assert!(k.cache().is_none());
}

#[test]
fn invalid_steps_are_rejected() {
    let p = Heat1d::new(10).unwrap();
    let s = exprk6s16();
    assert!(precompute(&s, p.dense_operator(), 0.0, DENSE).is_err());
    assert!(integrate(&s, &p, 0.0, 0.0, 0.1, ExecMode::Sequential, DENSE).is_err());
    assert!(integrate(&s, &p, 0.0, 1.0, 0.3, ExecMode::Sequential, DENSE).is_err());
    assert_eq!(step_count(0.0, 1.0, 1.0 / 32.0).unwrap(), 32);
    assert!(step_count(0.0, 1.0, -0.5).is_err());
}

#[test]
fn divergence_reports_stage_and_step() {
    let p = Poisoned {
        inner: Heat1d::new(12).unwrap(),
        t_bad: 0.3,
    };
    let s = exprk6s16();
    // Step 2 starts at t = 0.25; stage 2 (c = 1/2) is the first to evaluate g past 0.3.
    let err = integrate(&s, &p, 0.0, 1.0, 0.25, ExecMode::Sequential, DENSE).unwrap_err();
    assert!(matches!(err, Error::Divergence { stage: 2, step: Some(2) }), "{err:?}");
    let mut u = p.initial_state();
    u[3] = f64::INFINITY;
    let ctx = precompute(&s, p.dense_operator(), 0.25, DENSE).unwrap();
    assert!(matches!(
        step(&ctx, &p, 0.0, &u, ExecMode::Sequential),
        Err(Error::Divergence { stage: 1, step: None })
    ));
}

#[test]
fn one_step_matches_fine_reference() {
    let p = Heat1d::new(200).unwrap();
    let s = exprk6s15();
    let (sp, id) = spectral_for(&p).unwrap().unwrap();
    let h = 1.0 / 32.0;
    let coarse = precompute_spectral(&s, &sp, id, h).unwrap();
    let fine = precompute_spectral(&s, &sp, id, h / 256.0).unwrap();
    let one = integrate_with(&coarse, &p, 0.0, 1, ExecMode::Sequential).unwrap();
    let reference = integrate_with(&fine, &p, 0.0, 256, ExecMode::Sequential).unwrap();
    let d = discrete_l2(&(&one.state - &reference.state).view(), p.dx());
    assert!(d <= 1e-10, "{d:e}");
}

#[test]
fn krylov_backend_matches_dense() {
    let p = Heat1d::new(64).unwrap();
    let s = exprk6s16();
    let opts = KrylovOptions {
        tol: 1e-11,
        ..KrylovOptions::default()
    };
    let dense = integrate(&s, &p, 0.0, 0.5, 0.125, ExecMode::Sequential, DENSE).unwrap();
    let kr = integrate(&s, &p, 0.0, 0.5, 0.125, ExecMode::Sequential, PhiBackend::Krylov(opts)).unwrap();
    let d = discrete_l2(&(&dense.state - &kr.state).view(), p.dx());
    assert!(d <= 1e-9, "{d:e}");
}

#[test]
fn trajectory_metadata() {
    let p = Heat1d::new(16).unwrap();
    let r = integrate(&exprk6s16(), &p, 0.0, 1.0, 0.25, ExecMode::Sequential, DENSE).unwrap();
    assert_eq!(r.steps, 4);
    assert_eq!(r.step_times.len(), 4);
    assert_eq!(r.t_end, 1.0);
    assert!(r.total_time() >= r.setup_time);
    assert_eq!("par".parse::<ExecMode>().unwrap(), ExecMode::Concurrent);
    assert!("gpu".parse::<ExecMode>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn determinism_for_random_states(seed in any::<u64>(), k in 0usize..4) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = Heat1d::new(24).unwrap();
        let s = [exprk6s15(), exprk6s16()][k % 2].clone();
        let h = [0.5, 0.25, 0.125, 0.0625][k];
        let ctx = precompute(&s, p.dense_operator(), h, DENSE).unwrap();
        let u = Vector::from_shape_fn(24, |_| rng.random_range(-1.0..1.0));
        let t = rng.random_range(0.0..1.0);
        let a = step(&ctx, &p, t, &u, ExecMode::Sequential).unwrap();
        let b = step(&ctx, &p, t, &u, ExecMode::Concurrent).unwrap();
        prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
