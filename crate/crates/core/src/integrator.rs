//! Fixed-step integration with stage groups evaluated concurrently.

use std::collections::BTreeMap;
use std::time::Instant;

use num::{BigRational, One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, is_symmetric, Matrix, Vector};
use crate::phi::{
    build_phi_cache, operator_id, phi_combo_apply_krylov, spectral_phi_cache, KrylovOptions,
    PhiCache, PhiMethod, SpectralOperator,
};
use crate::problems::SemilinearProblem;
use crate::tableaus::{PhiPoly, Scheme};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    #[default]
    Sequential,
    Concurrent,
}

impl ExecMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecMode::Sequential => "seq",
            ExecMode::Concurrent => "par",
        }
    }
}

impl std::str::FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seq" | "sequential" => Ok(ExecMode::Sequential),
            "par" | "concurrent" => Ok(ExecMode::Concurrent),
            _ => Err(Error::invalid(format!("unknown execution mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PhiBackend {
    /// Precomputed `φ_j(c h A)` matrices.
    Dense(PhiMethod),
    /// Matrix-free products recomputed at every stage.
    Krylov(KrylovOptions),
}

impl Default for PhiBackend {
    fn default() -> Self {
        PhiBackend::Dense(PhiMethod::Auto)
    }
}

/// `Σ_k φ_k(c h A) y_k` with `y_k = [k == 1] c_F F + Σ_j w_kj D_j`.
#[derive(Clone, Debug)]
struct Combination {
    node: BigRational,
    node_f64: f64,
    /// Multiplier of `F` in `y_1`.
    f_weight: f64,
    terms: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl Combination {
    fn new<'a>(
        node: BigRational,
        f_weight: f64,
        coeffs: impl Iterator<Item = (usize, &'a PhiPoly)>,
    ) -> Self {
        let mut terms: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        terms.insert(1, Vec::new());
        for (j, p) in coeffs {
            for (&k, w) in &p.terms {
                terms
                    .entry(k)
                    .or_default()
                    .push((j, w.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Combination {
            node_f64: node.to_f64().unwrap_or(f64::NAN),
            node,
            f_weight,
            terms,
        }
    }
}

enum Phis {
    Cache(PhiCache),
    Krylov { a: Matrix, opts: KrylovOptions },
}

/// Everything one step needs besides the state; read-only while stepping.
pub struct StepContext<'a> {
    pub scheme: &'a Scheme,
    pub h: f64,
    stages: Vec<Combination>,
    last: Combination,
    phis: Phis,
}

impl<'a> StepContext<'a> {
    pub fn cache(&self) -> Option<&PhiCache> {
        match &self.phis {
            Phis::Cache(c) => Some(c),
            Phis::Krylov { .. } => None,
        }
    }

    /// Number of sequential barriers per step: the first stage plus one per
    /// group.
    pub fn barriers(&self) -> usize {
        self.scheme.groups.len() + 1
    }

    fn plan(scheme: &'a Scheme, h: f64, phis: Phis) -> Self {
        let stages = (2..=scheme.s)
            .map(|i| Combination::new(scheme.node(i).clone(), scheme.node_f64(i), scheme.row(i)))
            .collect();
        let last = Combination::new(
            BigRational::one(),
            1.0,
            scheme.b.iter().map(|(&i, p)| (i, p)),
        );
        StepContext {
            scheme,
            h,
            stages,
            last,
            phis,
        }
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("step size must be positive, got {h}")));
    }
    Ok(())
}

/// Builds the φ-matrix cache once for `(A, h)`.
pub fn precompute<'a>(
    scheme: &'a Scheme,
    a: &Matrix,
    h: f64,
    backend: PhiBackend,
) -> Result<StepContext<'a>> {
    check_step(h)?;
    let phis = match backend {
        PhiBackend::Dense(method) => Phis::Cache(build_phi_cache(
            &a.view(),
            h,
            &scheme.cache_nodes(),
            scheme.kmax(),
            method,
        )?),
        PhiBackend::Krylov(opts) => Phis::Krylov {
            a: a.clone(),
            opts,
        },
    };
    Ok(StepContext::plan(scheme, h, phis))
}

/// Like [`precompute`] but reusing an eigendecomposition of `A`.
pub fn precompute_spectral<'a>(
    scheme: &'a Scheme,
    spectral: &SpectralOperator,
    op_id: u64,
    h: f64,
) -> Result<StepContext<'a>> {
    check_step(h)?;
    let cache = spectral_phi_cache(spectral, op_id, h, &scheme.cache_nodes(), scheme.kmax())?;
    Ok(StepContext::plan(scheme, h, Phis::Cache(cache)))
}

fn apply_combination(
    ctx: &StepContext<'_>,
    comb: &Combination,
    u: &Vector,
    f: &Vector,
    d: &[Option<Vector>],
) -> Result<Vector> {
    let n = u.len();
    let mut ys: BTreeMap<usize, Vector> = BTreeMap::new();
    for (&k, contribs) in &comb.terms {
        let mut y = if k == 1 {
            f * comb.f_weight
        } else {
            Vector::zeros(n)
        };
        for &(j, w) in contribs {
            let dj = d[j].as_ref().expect("stage from an earlier group");
            y.scaled_add(w, dj);
        }
        ys.insert(k, y);
    }
    let h = ctx.h;
    match &ctx.phis {
        Phis::Cache(cache) => {
            let mut out = u.clone();
            for (k, y) in &ys {
                out.scaled_add(h, &cache.get(&comb.node, *k)?.dot(y));
            }
            Ok(out)
        }
        Phis::Krylov { a, opts } => {
            // h φ_k(τA) y_k = τ^k φ_k(τA) (h y_k / τ^k) with τ = c h.
            let tau = comb.node_f64 * h;
            let kmax = *ys.keys().max().unwrap_or(&1);
            let mut v = vec![Vector::zeros(n); kmax + 1];
            for (&k, y) in &ys {
                v[k] = y * (h / tau.powi(k as i32));
            }
            let r = phi_combo_apply_krylov(a, tau, &v, *opts)?;
            Ok(u + &r.value)
        }
    }
}

/// One step `u_n -> u_{n+1}` from time `t`.
pub fn step(
    ctx: &StepContext<'_>,
    problem: &dyn SemilinearProblem,
    t: f64,
    u: &Vector,
    mode: ExecMode,
) -> Result<Vector> {
    if !all_finite(u.iter()) {
        return Err(Error::Divergence {
            stage: 1,
            step: None,
        });
    }
    let s = ctx.scheme.s;
    let h = ctx.h;
    let g0 = problem.nonlinearity(t, &u.view());
    let f = problem.apply_linear(&u.view()) + &g0;
    if !all_finite(f.iter()) {
        return Err(Error::Divergence {
            stage: 1,
            step: None,
        });
    }
    let mut d: Vec<Option<Vector>> = vec![None; s + 1];
    let stage = |i: usize, d: &[Option<Vector>]| -> Result<(usize, Vector)> {
        let comb = &ctx.stages[i - 2];
        let ui = apply_combination(ctx, comb, u, &f, d)?;
        let di = problem.nonlinearity(t + comb.node_f64 * h, &ui.view()) - &g0;
        if !all_finite(ui.iter()) || !all_finite(di.iter()) {
            return Err(Error::Divergence {
                stage: i,
                step: None,
            });
        }
        Ok((i, di))
    };
    for group in &ctx.scheme.groups {
        let results: Vec<Result<(usize, Vector)>> = match mode {
            ExecMode::Sequential => group.iter().map(|&i| stage(i, &d)).collect(),
            ExecMode::Concurrent => group.par_iter().map(|&i| stage(i, &d)).collect(),
        };
        for r in results {
            let (i, di) = r?;
            d[i] = Some(di);
        }
    }
    let next = apply_combination(ctx, &ctx.last, u, &f, &d)?;
    if !all_finite(next.iter()) {
        return Err(Error::Divergence {
            stage: s + 1,
            step: None,
        });
    }
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub state: Vector,
    pub t_end: f64,
    pub steps: usize,
    /// Wall time of each step in seconds.
    pub step_times: Vec<f64>,
    /// Wall time spent building the φ cache in seconds.
    pub setup_time: f64,
    pub mode: ExecMode,
}

impl TrajectoryResult {
    pub fn total_time(&self) -> f64 {
        self.setup_time + self.step_times.iter().sum::<f64>()
    }
}

/// `(t_end - t0) / h` if it is a positive integer.
pub fn step_count(t0: f64, t_end: f64, h: f64) -> Result<usize> {
    check_step(h)?;
    let ratio = (t_end - t0) / h;
    let steps = ratio.round();
    if !(steps >= 1.0) || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::invalid(format!(
            "h = {h} does not divide [{t0}, {t_end}] into a positive whole number of steps"
        )));
    }
    Ok(steps as usize)
}

/// Runs `steps` steps from `t0` with a prepared context; times are
/// `t0 + k h`.
pub fn integrate_with(
    ctx: &StepContext<'_>,
    problem: &dyn SemilinearProblem,
    t0: f64,
    steps: usize,
    mode: ExecMode,
) -> Result<TrajectoryResult> {
    let mut u = problem.initial_state();
    let mut step_times = Vec::with_capacity(steps);
    for k in 0..steps {
        let start = Instant::now();
        u = step(ctx, problem, t0 + k as f64 * ctx.h, &u, mode).map_err(|e| match e {
            Error::Divergence { stage, .. } => Error::Divergence {
                stage,
                step: Some(k + 1),
            },
            other => other,
        })?;
        step_times.push(start.elapsed().as_secs_f64());
    }
    Ok(TrajectoryResult {
        state: u,
        t_end: t0 + steps as f64 * ctx.h,
        steps,
        step_times,
        setup_time: 0.0,
        mode,
    })
}

pub fn integrate(
    scheme: &Scheme,
    problem: &dyn SemilinearProblem,
    t0: f64,
    t_end: f64,
    h: f64,
    mode: ExecMode,
    backend: PhiBackend,
) -> Result<TrajectoryResult> {
    let steps = step_count(t0, t_end, h)?;
    let start = Instant::now();
    let ctx = precompute(scheme, problem.dense_operator(), h, backend)?;
    let setup_time = start.elapsed().as_secs_f64();
    let mut r = integrate_with(&ctx, problem, t0, steps, mode)?;
    r.setup_time = setup_time;
    Ok(r)
}

/// Shared eigendecomposition for runs of one problem at several step sizes;
/// `None` when the operator is not symmetric.
pub fn spectral_for(problem: &dyn SemilinearProblem) -> Result<Option<(SpectralOperator, u64)>> {
    let a = problem.dense_operator();
    if !is_symmetric(&a.view()) {
        return Ok(None);
    }
    Ok(Some((SpectralOperator::new(&a.view())?, operator_id(&a.view()))))
}

/// State after one step of size `h` from the problem's initial data.
pub fn single_step(
    scheme: &Scheme,
    problem: &dyn SemilinearProblem,
    h: f64,
    backend: PhiBackend,
) -> Result<Vector> {
    let ctx = precompute(scheme, problem.dense_operator(), h, backend)?;
    step(
        &ctx,
        problem,
        problem.t0(),
        &problem.initial_state(),
        ExecMode::Sequential,
    )
}
