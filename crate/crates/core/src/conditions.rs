//! Numerical verification of the stiff order conditions.
//!
//! Each tree of `T1 ∪ T2` is compiled into a residual:
//!
//! * `τ ∈ T1` of order `q`: `Σ_i b_i(Z) c_i^{q-1}/(q-1)! - φ_q(Z)`;
//! * `τ = [τ_1, …, τ_m] ∈ T2`: `Σ_i b_i(Z) G(S_i(τ_1), …, S_i(τ_m))`,
//!
//! where `G` is a random multilinear map attached to the root and the
//! elementary differentials `S_i` recurse through `ψ_{q,i}` and `a_ij(Z)`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use ndarray::Array1;
use num::{BigRational, One, ToPrimitive};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::btrees::{enumerate, Tree};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, norm2, Matrix, Vector};
use crate::phi::{build_phi_cache, factorial, PhiCache, PhiMethod};
use crate::tableaus::Scheme;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MODEL_DIM: usize = 4;
pub const DEFAULT_SEED: u64 = 20240601;
/// Number of the `T1` tree of order 6, the only condition `weak17` relaxes.
pub const WEAK_CONDITION: usize = 17;
pub const MAX_CHECK_ORDER: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    BType,
    Nested,
}

impl ConditionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKind::BType => "b-type",
            ConditionKind::Nested => "nested",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub number: usize,
    pub tree: Tree,
    pub order: usize,
    pub kind: ConditionKind,
}

/// Conditions for every tree up to `max_order`, in table order.
pub fn conditions(max_order: usize) -> Result<Vec<Condition>> {
    let table = enumerate(max_order)?;
    Ok(table
        .trees()
        .iter()
        .enumerate()
        .map(|(k, t)| Condition {
            number: k + 1,
            tree: t.clone(),
            order: t.order(),
            kind: if t.is_t1() {
                ConditionKind::BType
            } else {
                ConditionKind::Nested
            },
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CheckMode {
    #[default]
    Strong,
    /// Condition 17 is evaluated at `Z = 0`, everything else at random `Z`.
    Weak17,
}

impl CheckMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckMode::Strong => "strong",
            CheckMode::Weak17 => "weak17",
        }
    }
}

impl std::str::FromStr for CheckMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" => Ok(CheckMode::Strong),
            "weak17" => Ok(CheckMode::Weak17),
            _ => Err(Error::invalid(format!("unknown mode `{s}`"))),
        }
    }
}

/// Multilinear map `R^n x … x R^n -> R^n` stored as a dense tensor with the
/// output index first.
#[derive(Clone, Debug)]
pub struct MultilinearMap {
    pub arity: usize,
    pub n: usize,
    data: Vec<f64>,
}

impl MultilinearMap {
    pub fn random(arity: usize, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let len = n.pow(arity as u32 + 1);
        MultilinearMap {
            arity,
            n,
            data: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    pub fn apply(&self, args: &[&Vector]) -> Vector {
        assert_eq!(args.len(), self.arity, "multilinear map arity");
        // Contract the trailing index first, shrinking the tensor each time.
        let mut cur = self.data.clone();
        for arg in args.iter().rev() {
            let rows = cur.len() / self.n;
            cur = (0..rows)
                .map(|r| {
                    cur[r * self.n..(r + 1) * self.n]
                        .iter()
                        .zip(arg.iter())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
        }
        Array1::from(cur)
    }
}

/// Random stand-ins for `hA`, `u'` and the derivatives of `g`.
#[derive(Clone, Debug)]
pub struct RandomModel {
    pub n: usize,
    pub seed: u64,
    /// Dense, Frobenius norm one.
    pub z: Matrix,
    pub w: Vector,
}

impl RandomModel {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Matrix::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        let nz = frobenius(&z.view());
        z /= nz;
        let w = Vector::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        RandomModel { n, seed, z, w }
    }

    /// Same model with `w` replaced.
    pub fn with_w(&self, w: Vector) -> Self {
        RandomModel { w, ..self.clone() }
    }

    /// One independent map per interior node of `tree`, in preorder. `salt`
    /// selects an independent stream, normally the condition number.
    pub fn maps_for(&self, tree: &Tree, salt: u64) -> Vec<MultilinearMap> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(salt + 1);
        let mut out = Vec::new();
        fn walk(t: &Tree, n: usize, rng: &mut ChaCha8Rng, out: &mut Vec<MultilinearMap>) {
            if let Tree::Node(children) = t {
                out.push(MultilinearMap::random(children.len(), n, rng));
                for c in children {
                    walk(c, n, rng, out);
                }
            }
        }
        walk(tree, self.n, &mut rng, &mut out);
        out
    }
}

/// Coefficient matrices of a scheme evaluated at a fixed `Z`.
pub struct Evaluator<'a> {
    scheme: &'a Scheme,
    z_dim: usize,
    cache: PhiCache,
    a: BTreeMap<(usize, usize), Matrix>,
    b: BTreeMap<usize, Matrix>,
    /// `psi[(q, i)]` for `q = 2..=kmax`.
    psi: BTreeMap<(usize, usize), Matrix>,
    pub sigma_prefactor: bool,
}

impl<'a> Evaluator<'a> {
    /// `kmax` bounds the `q` for which `ψ_q` and `φ_q(Z)` are available.
    pub fn new(scheme: &'a Scheme, z: &Matrix, kmax: usize) -> Result<Self> {
        let kmax = kmax.max(scheme.kmax());
        let cache = build_phi_cache(
            &z.view(),
            1.0,
            &scheme.cache_nodes(),
            kmax,
            PhiMethod::Augmented,
        )?;
        let a = scheme
            .a
            .iter()
            .map(|(&k, p)| p.eval_coeff(&cache).map(|m| (k, m)))
            .collect::<Result<_>>()?;
        let b = scheme
            .b
            .iter()
            .map(|(&k, p)| p.eval_coeff(&cache).map(|m| (k, m)))
            .collect::<Result<_>>()?;
        let mut ev = Evaluator {
            scheme,
            z_dim: z.nrows(),
            cache,
            a,
            b,
            psi: BTreeMap::new(),
            sigma_prefactor: true,
        };
        for q in 2..=kmax {
            for i in 2..=scheme.s {
                let m = ev.compute_psi(q, i)?;
                ev.psi.insert((q, i), m);
            }
        }
        Ok(ev)
    }

    fn compute_psi(&self, q: usize, i: usize) -> Result<Matrix> {
        let s = self.scheme;
        let mut out = self.cache.get(s.node(i), q)? * -(s.node_f64(i).powi(q as i32));
        for (k, _) in s.row(i) {
            let w = s.node_f64(k).powi(q as i32 - 1) / factorial(q - 1);
            out.scaled_add(w, &self.a[&(i, k)]);
        }
        Ok(out)
    }

    /// `ψ_{q,i}(Z) = Σ_k a_ik(Z) c_k^{q-1}/(q-1)! - c_i^q φ_q(c_i Z)`.
    pub fn psi(&self, q: usize, i: usize) -> Result<&Matrix> {
        self.psi
            .get(&(q, i))
            .ok_or_else(|| Error::invalid(format!("ψ_{q},{i} is outside the evaluated range")))
    }

    /// `Σ_i b_i(Z) c_i^{q-1}/(q-1)! - φ_q(Z)`.
    pub fn psi_b(&self, q: usize) -> Result<Matrix> {
        let s = self.scheme;
        let mut out = -self.cache.get(&BigRational::one(), q)?;
        for (&i, bi) in &self.b {
            out.scaled_add(s.node_f64(i).powi(q as i32 - 1) / factorial(q - 1), bi);
        }
        Ok(out)
    }

    /// `S_i(τ)` for every stage `i = 2..=s` (index `i - 2`), drawing maps
    /// from `maps` in preorder.
    fn stage_vectors(
        &self,
        tree: &Tree,
        w: &Vector,
        maps: &mut std::slice::Iter<'_, MultilinearMap>,
    ) -> Result<Vec<Vector>> {
        let s = self.scheme;
        let stages = 2..=s.s;
        match tree {
            Tree::Leaf => Ok(stages.map(|i| w * s.node_f64(i)).collect()),
            Tree::Derivative(_) => Err(Error::invalid(
                "derivative leaves do not occur in the order conditions",
            )),
            t if t.is_t1() => {
                let map = maps.next().expect("map per interior node");
                let args = vec![w; map.arity];
                let gw = map.apply(&args);
                stages
                    .map(|i| Ok(self.psi(map.arity + 1, i)?.dot(&gw)))
                    .collect()
            }
            Tree::Node(children) => {
                let map = maps.next().expect("map per interior node");
                let child_vectors = children
                    .iter()
                    .map(|c| self.stage_vectors(c, w, maps))
                    .collect::<Result<Vec<_>>>()?;
                let prefactor = if self.sigma_prefactor {
                    children.iter().map(|c| c.symmetry() as f64).product::<f64>()
                        / tree.symmetry() as f64
                } else {
                    1.0
                };
                let g: Vec<Vector> = (0..s.s - 1)
                    .map(|k| {
                        let args: Vec<&Vector> = child_vectors.iter().map(|v| &v[k]).collect();
                        map.apply(&args)
                    })
                    .collect();
                Ok(stages
                    .map(|i| {
                        let mut acc = Vector::zeros(self.z_dim);
                        for (j, _) in s.row(i) {
                            acc += &self.a[&(i, j)].dot(&g[j - 2]);
                        }
                        acc * prefactor
                    })
                    .collect())
            }
        }
    }

    /// `S_i(τ)` for a single stage with maps drawn from `model`.
    pub fn elementary_differential(
        &self,
        tree: &Tree,
        i: usize,
        model: &RandomModel,
        salt: u64,
    ) -> Result<Vector> {
        if !(2..=self.scheme.s).contains(&i) {
            return Err(Error::invalid(format!("stage {i} out of range")));
        }
        let maps = model.maps_for(tree, salt);
        let v = self.stage_vectors(tree, &model.w, &mut maps.iter())?;
        Ok(v[i - 2].clone())
    }

    /// Residual norm of one condition: Frobenius for b-type, Euclidean for
    /// nested conditions.
    pub fn residual(&self, cond: &Condition, model: &RandomModel) -> Result<f64> {
        match cond.kind {
            ConditionKind::BType => Ok(frobenius(&self.psi_b(cond.order)?.view())),
            ConditionKind::Nested => {
                let maps = model.maps_for(&cond.tree, cond.number as u64);
                let mut it = maps.iter();
                let root = it.next().expect("root map");
                let child_vectors = cond
                    .tree
                    .children()
                    .iter()
                    .map(|c| self.stage_vectors(c, &model.w, &mut it))
                    .collect::<Result<Vec<_>>>()?;
                let mut acc = Vector::zeros(self.z_dim);
                for (&i, bi) in &self.b {
                    let args: Vec<&Vector> = child_vectors.iter().map(|v| &v[i - 2]).collect();
                    acc += &bi.dot(&root.apply(&args));
                }
                Ok(norm2(&acc.view()))
            }
        }
    }
}

pub fn psi(q: usize, i: usize, scheme: &Scheme, z: &Matrix) -> Result<Matrix> {
    if !(2..=scheme.s).contains(&i) {
        return Err(Error::invalid(format!("stage {i} out of range")));
    }
    Evaluator::new(scheme, z, q)?.psi(q, i).cloned()
}

pub fn psi_b(q: usize, scheme: &Scheme, z: &Matrix) -> Result<Matrix> {
    Evaluator::new(scheme, z, q)?.psi_b(q)
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub order: usize,
    pub mode: CheckMode,
    pub seeds: Vec<u64>,
    pub dim: usize,
    pub tolerance: f64,
    pub sigma_prefactor: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            order: 6,
            mode: CheckMode::Strong,
            seeds: (0..3).map(|k| DEFAULT_SEED + k).collect(),
            dim: DEFAULT_MODEL_DIM,
            tolerance: DEFAULT_TOLERANCE,
            sigma_prefactor: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub number: usize,
    pub order: usize,
    pub kind: ConditionKind,
    pub tree: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub scheme: String,
    pub mode: CheckMode,
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    pub rows: Vec<ConditionRow>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failing(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| !r.pass).map(|r| r.number).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConditionRow>> {
        let mut r = csv::Reader::from_reader(input);
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

/// Maximum residual per condition over all seeds.
pub fn check_scheme(scheme: &Scheme, opts: &CheckOptions) -> Result<ConditionReport> {
    if opts.seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if opts.order > MAX_CHECK_ORDER {
        return Err(Error::invalid(format!(
            "conditions are checked up to order {MAX_CHECK_ORDER}, got {}",
            opts.order
        )));
    }
    let conds = conditions(opts.order)?;
    let mut worst = vec![0.0_f64; conds.len()];
    let zero = Matrix::zeros((opts.dim, opts.dim));
    let mut weak = Evaluator::new(scheme, &zero, opts.order)?;
    weak.sigma_prefactor = opts.sigma_prefactor;
    for &seed in &opts.seeds {
        let model = RandomModel::new(opts.dim, seed);
        let mut ev = Evaluator::new(scheme, &model.z, opts.order)?;
        ev.sigma_prefactor = opts.sigma_prefactor;
        let residuals = conds
            .par_iter()
            .map(|c| {
                if opts.mode == CheckMode::Weak17 && c.number == WEAK_CONDITION {
                    weak.residual(c, &model)
                } else {
                    ev.residual(c, &model)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        for (w, r) in worst.iter_mut().zip(residuals) {
            // NaN must not hide behind max().
            *w = if r.is_nan() { f64::NAN } else { w.max(r) };
        }
    }
    let rows = conds
        .iter()
        .zip(worst)
        .map(|(c, r)| ConditionRow {
            number: c.number,
            order: c.order,
            kind: c.kind,
            tree: c.tree.to_string(),
            residual: r,
            pass: r <= opts.tolerance,
        })
        .collect();
    Ok(ConditionReport {
        scheme: scheme.name.clone(),
        mode: opts.mode,
        seeds: opts.seeds.clone(),
        tolerance: opts.tolerance,
        rows,
    })
}

/// Float cross-check of `Σ_i b_i(0) c_i^q`.
pub fn node_moment_f64(scheme: &Scheme, q: i32) -> f64 {
    scheme
        .b
        .iter()
        .map(|(&i, p)| p.eval_scalar(0.0) * scheme.node(i).to_f64().unwrap_or(f64::NAN).powi(q))
        .sum()
}
