//! Scheme tableaus with φ-polynomial coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::phi::{phi_scalar, PhiCache};

pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn rational_factorial(k: usize) -> BigRational {
    BigRational::from_integer((1..=k).map(BigInt::from).product())
}

/// `z ↦ Σ_j w_j φ_j(c z)` with exact rational node and weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiPoly {
    pub node: BigRational,
    pub terms: BTreeMap<usize, BigRational>,
}

impl PhiPoly {
    pub fn new(node: BigRational, terms: BTreeMap<usize, BigRational>) -> Self {
        PhiPoly { node, terms }
    }

    pub fn max_index(&self) -> usize {
        self.terms.keys().copied().max().unwrap_or(0)
    }

    /// Exact value at `z = 0`, `Σ_j w_j / j!`.
    pub fn value_at_zero(&self) -> BigRational {
        self.terms
            .iter()
            .map(|(&j, w)| w / rational_factorial(j))
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    pub fn eval_scalar(&self, z: f64) -> f64 {
        let c = self.node.to_f64().unwrap_or(f64::NAN);
        self.terms
            .iter()
            .map(|(&j, w)| w.to_f64().unwrap_or(f64::NAN) * phi_scalar(j, c * z))
            .sum()
    }

    /// `Σ_j w_j φ_j(c h A)` assembled from cached matrices.
    pub fn eval_coeff(&self, cache: &PhiCache) -> Result<Matrix> {
        let mut out = Matrix::zeros((cache.dim, cache.dim));
        for (&j, w) in &self.terms {
            out.scaled_add(w.to_f64().unwrap_or(f64::NAN), cache.get(&self.node, j)?);
        }
        Ok(out)
    }
}

/// An explicit exponential Runge–Kutta scheme
///
/// ```text
/// U_i     = u + c_i h φ_1(c_i hA) F(t, u) + h Σ_{j<i} a_ij(hA) D_j
/// u_{n+1} = u + h φ_1(hA) F(t, u) + h Σ_i b_i(hA) D_i
/// ```
///
/// with `D_j = g(t + c_j h, U_j) - g(t, u)`. Stage indices are 1-based and
/// `c_1 = 0`.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub name: String,
    pub s: usize,
    /// `nodes[i - 1] = c_i`.
    pub nodes: Vec<BigRational>,
    /// Nonzero `a_ij`, keyed by `(i, j)`.
    pub a: BTreeMap<(usize, usize), PhiPoly>,
    /// Nonzero `b_i`.
    pub b: BTreeMap<usize, PhiPoly>,
    /// Ordered partition of stages `2..=s` into independent groups.
    pub groups: Vec<Vec<usize>>,
}

pub const SCHEME_NAMES: [&str; 4] = ["exprk6s15", "exprk6s16", "expeuler", "expk2"];

impl Scheme {
    pub fn by_name(name: &str) -> Result<Scheme> {
        match name {
            "exprk6s15" => Ok(exprk6s15()),
            "exprk6s16" => Ok(exprk6s16()),
            "expeuler" => Ok(exponential_euler()),
            "expk2" => expk2(rational(1, 1)),
            _ => Err(Error::UnknownScheme(name.to_string())),
        }
    }

    pub fn node(&self, i: usize) -> &BigRational {
        &self.nodes[i - 1]
    }

    pub fn node_f64(&self, i: usize) -> f64 {
        self.node(i).to_f64().unwrap_or(f64::NAN)
    }

    /// Row `i` of `a` as `(j, a_ij)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &PhiPoly)> {
        self.a.range((i, 0)..(i + 1, 0)).map(|(&(_, j), p)| (j, p))
    }

    /// Distinct nodes of stages `2..=s` together with `1`.
    pub fn cache_nodes(&self) -> Vec<BigRational> {
        let mut set: BTreeSet<BigRational> = self.nodes.iter().skip(1).cloned().collect();
        set.insert(BigRational::one());
        set.into_iter().collect()
    }

    /// Largest φ index any coefficient references (at least 1).
    pub fn kmax(&self) -> usize {
        self.a
            .values()
            .chain(self.b.values())
            .map(PhiPoly::max_index)
            .max()
            .unwrap_or(0)
            .max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.s || !self.nodes[0].is_zero() {
            return Err(Error::invalid(format!("{}: bad node list", self.name)));
        }
        let mut group_of = vec![usize::MAX; self.s + 1];
        for (g, members) in self.groups.iter().enumerate() {
            for &i in members {
                if i < 2 || i > self.s || group_of[i] != usize::MAX {
                    return Err(Error::invalid(format!("{}: bad group member {i}", self.name)));
                }
                group_of[i] = g;
            }
        }
        if (2..=self.s).any(|i| group_of[i] == usize::MAX) {
            return Err(Error::invalid(format!("{}: groups do not cover all stages", self.name)));
        }
        for (&(i, j), p) in &self.a {
            if !(2..i).contains(&j) || i > self.s {
                return Err(Error::invalid(format!("{}: a_{i},{j} out of range", self.name)));
            }
            if group_of[j] >= group_of[i] {
                return Err(Error::invalid(format!(
                    "{}: a_{i},{j} couples stages within or across later groups",
                    self.name
                )));
            }
            if p.node != *self.node(i) {
                return Err(Error::invalid(format!("{}: a_{i},{j} has wrong node", self.name)));
            }
        }
        for (&i, p) in &self.b {
            if !(2..=self.s).contains(&i) || !p.node.is_one() {
                return Err(Error::invalid(format!("{}: bad b_{i}", self.name)));
            }
        }
        Ok(())
    }

    /// Human-readable listing of nodes, groups and exact weights.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scheme {} (s = {})", self.name, self.s);
        for i in 2..=self.s {
            let _ = writeln!(out, "c_{i} = {}", self.node(i));
        }
        let groups: Vec<String> = self
            .groups
            .iter()
            .map(|g| {
                let items: Vec<String> = g.iter().map(|i| i.to_string()).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        let _ = writeln!(out, "groups: {}", groups.join(" "));
        let fmt_poly = |p: &PhiPoly| {
            let terms: Vec<String> = p
                .terms
                .iter()
                .map(|(j, w)| format!("({w}) phi_{j}({} z)", p.node))
                .collect();
            terms.join(" + ")
        };
        for ((i, j), p) in &self.a {
            let _ = writeln!(out, "a_{i},{j} = {}", fmt_poly(p));
        }
        for (i, p) in &self.b {
            let _ = writeln!(out, "b_{i} = {}", fmt_poly(p));
        }
        out
    }
}

fn elementary_symmetric(values: &[BigRational], k: usize) -> BigRational {
    // e_k via the standard one-pass recurrence.
    let mut e = vec![BigRational::zero(); k + 1];
    e[0] = BigRational::one();
    for v in values {
        for r in (1..=k.min(values.len())).rev() {
            let add = &e[r - 1] * v;
            e[r] += add;
        }
    }
    e[k].clone()
}

/// Coefficients coupling a target stage (node `target`) to a group of
/// earlier stages with pairwise distinct nodes, chosen so that
/// `Σ_{i∈G} coeff_i · c_i^{q-1}/(q-1)! = target^q φ_q(target ·)` for
/// `q = 2..=|G|+1`. For member `i` with the other members `O` (`m = |O|`),
/// the weight on `φ_j` is
/// `target^j (-1)^{m-j+2} (j-1)! e_{m-j+2}(O) / (c_i Π_{o∈O}(c_i - c_o))`.
pub fn group_coefficients(
    members: &[usize],
    nodes: &[BigRational],
    target: &BigRational,
) -> Result<BTreeMap<usize, PhiPoly>> {
    let c = |i: usize| &nodes[i - 1];
    let mut out = BTreeMap::new();
    for &i in members {
        let others: Vec<BigRational> = members
            .iter()
            .filter(|&&o| o != i)
            .map(|&o| c(o).clone())
            .collect();
        let m = others.len();
        let den = others
            .iter()
            .fold(c(i).clone(), |acc, o| acc * (c(i) - o));
        if den.is_zero() {
            return Err(Error::invalid(format!(
                "zero denominator for stage {i}: nodes in the group must be distinct and positive"
            )));
        }
        let mut terms = BTreeMap::new();
        for j in 2..=m + 2 {
            let e = m + 2 - j;
            let sign = if e % 2 == 0 { 1 } else { -1 };
            let mut w = rational_factorial(j - 1) * elementary_symmetric(&others, e) / &den;
            if sign < 0 {
                w = -w;
            }
            w *= num::pow(target.clone(), j);
            if !w.is_zero() {
                terms.insert(j, w);
            }
        }
        out.insert(i, PhiPoly::new(target.clone(), terms));
    }
    Ok(out)
}

fn couple(
    a: &mut BTreeMap<(usize, usize), PhiPoly>,
    rows: impl IntoIterator<Item = usize>,
    group: &[usize],
    nodes: &[BigRational],
) -> Result<()> {
    for i in rows {
        for (j, p) in group_coefficients(group, nodes, &nodes[i - 1])? {
            a.insert((i, j), p);
        }
    }
    Ok(())
}

/// Shared layout of both sixth-order schemes: groups `{2}, {3,4}, {5,6,7},
/// {8..11}, {12..s}`, each group coupled only to its predecessor, and the
/// final weights spread over the last group.
fn parallel_six(name: &str, nodes: Vec<BigRational>) -> Result<Scheme> {
    let s = nodes.len();
    let groups: Vec<Vec<usize>> = vec![
        vec![2],
        vec![3, 4],
        vec![5, 6, 7],
        vec![8, 9, 10, 11],
        (12..=s).collect(),
    ];
    let mut a = BTreeMap::new();
    for w in groups.windows(2) {
        couple(&mut a, w[1].iter().copied(), &w[0], &nodes)?;
    }
    let b = group_coefficients(groups.last().unwrap(), &nodes, &BigRational::one())?;
    let scheme = Scheme {
        name: name.to_string(),
        s,
        nodes,
        a,
        b,
        groups,
    };
    scheme.validate()?;
    Ok(scheme)
}

fn node_list(c: &[(i64, i64)]) -> Vec<BigRational> {
    std::iter::once(BigRational::zero())
        .chain(c.iter().map(|&(p, q)| rational(p, q)))
        .collect()
}

/// Fifteen stages; condition 17 holds only at `hA = 0`.
pub fn exprk6s15() -> Scheme {
    let nodes = node_list(&[
        (1, 2),
        (1, 2),
        (1, 3),
        (1, 2),
        (1, 5),
        (1, 4),
        (18, 25),
        (1, 3),
        (3, 10),
        (1, 6),
        (90, 103),
        (1, 3),
        (3, 10),
        (1, 5),
    ]);
    parallel_six("exprk6s15", nodes).expect("ExpRK6s15 nodes are distinct within groups")
}

/// Sixteen stages; all 36 conditions hold for arbitrary `hA`.
pub fn exprk6s16() -> Scheme {
    let nodes = node_list(&[
        (1, 2),
        (1, 2),
        (1, 3),
        (1, 2),
        (1, 5),
        (1, 4),
        (1, 2),
        (1, 5),
        (1, 4),
        (1, 3),
        (1, 2),
        (1, 5),
        (1, 4),
        (1, 3),
        (1, 1),
    ]);
    parallel_six("exprk6s16", nodes).expect("ExpRK6s16 nodes are distinct within groups")
}

/// `u_{n+1} = u_n + h φ_1(hA) F(t_n, u_n)`.
pub fn exponential_euler() -> Scheme {
    Scheme {
        name: "expeuler".to_string(),
        s: 1,
        nodes: vec![BigRational::zero()],
        a: BTreeMap::new(),
        b: BTreeMap::new(),
        groups: Vec::new(),
    }
}

/// Two stages with `b_2 = φ_2 / c_2`.
pub fn expk2(c2: BigRational) -> Result<Scheme> {
    if !c2.is_positive() || c2 > BigRational::one() {
        return Err(Error::invalid(format!("expk2 needs 0 < c2 <= 1, got {c2}")));
    }
    let nodes = vec![BigRational::zero(), c2];
    let b = group_coefficients(&[2], &nodes, &BigRational::one())?;
    let scheme = Scheme {
        name: "expk2".to_string(),
        s: 2,
        nodes,
        a: BTreeMap::new(),
        b,
        groups: vec![vec![2]],
    };
    scheme.validate()?;
    Ok(scheme)
}

/// `Σ_i b_i(0) c_i^q` in exact arithmetic.
pub fn weighted_node_moment(scheme: &Scheme, q: u32) -> BigRational {
    scheme
        .b
        .iter()
        .map(|(&i, p)| p.value_at_zero() * num::pow(scheme.node(i).clone(), q as usize))
        .fold(BigRational::zero(), |acc, x| acc + x)
}
