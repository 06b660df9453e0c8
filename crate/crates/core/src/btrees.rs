//! Rooted trees indexing the stiff order conditions.
//!
//! A tree is a white leaf (`u'`), a derivative leaf (`u^(k)`, `k >= 2`), or a
//! black interior node `[τ_1, …, τ_m]` standing for `g^(m)` applied to the
//! children. Children are stored as a multiset sorted in descending order, so
//! structural equality coincides with isomorphism.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tree {
    Leaf,
    Derivative(u32),
    Node(Vec<Tree>),
}

impl Tree {
    /// Interior node with canonically sorted children.
    pub fn node(mut children: Vec<Tree>) -> Tree {
        children.sort_by(|a, b| b.cmp(a));
        Tree::Node(children)
    }

    /// `[•, …, •]` with `m` white leaves.
    pub fn bushy(m: usize) -> Tree {
        Tree::Node(vec![Tree::Leaf; m])
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Node(c) => c,
            _ => &[],
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Tree::Leaf => 1,
            Tree::Derivative(k) => *k as usize,
            Tree::Node(c) => 1 + c.iter().map(Tree::order).sum::<usize>(),
        }
    }

    pub fn symmetry(&self) -> u64 {
        match self {
            Tree::Leaf => 1,
            Tree::Derivative(k) => (1..=*k as u64).product(),
            Tree::Node(c) => {
                let mut sigma = 1;
                let mut i = 0;
                while i < c.len() {
                    let run = c[i..].iter().take_while(|t| **t == c[i]).count();
                    let s = c[i].symmetry();
                    sigma *= (1..=run as u64).product::<u64>() * s.pow(run as u32);
                    i += run;
                }
                sigma
            }
        }
    }

    pub fn is_t1(&self) -> bool {
        matches!(self, Tree::Node(c) if c.iter().all(|t| *t == Tree::Leaf))
    }

    pub fn is_t2(&self) -> bool {
        match self {
            Tree::Node(c) => {
                !self.is_t1() && c.iter().all(|t| *t == Tree::Leaf || t.is_t1() || t.is_t2())
            }
            _ => false,
        }
    }

    /// Re-sorts every child list; a no-op for trees built through [`Tree::node`].
    pub fn canonical(&self) -> Tree {
        match self {
            Tree::Node(c) => Tree::node(c.iter().map(Tree::canonical).collect()),
            t => t.clone(),
        }
    }

    /// Number of nodes, counting the root and every leaf.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Tree::size).sum::<usize>()
    }

    fn rank(&self) -> u32 {
        match self {
            Tree::Leaf => 0,
            Tree::Derivative(_) => 1,
            Tree::Node(_) => 2,
        }
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(self.rank().cmp(&other.rank()))
            .then_with(|| match (self, other) {
                (Tree::Derivative(a), Tree::Derivative(b)) => a.cmp(b),
                (Tree::Node(a), Tree::Node(b)) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf => write!(f, "•"),
            Tree::Derivative(k) => write!(f, "({k})"),
            Tree::Node(c) => {
                write!(f, "[")?;
                for (i, t) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl FromStr for Tree {
    type Err = Error;

    /// Parses the bracket notation; `o` and `*` are accepted for `•`.
    fn from_str(s: &str) -> Result<Tree> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let t = parse(&chars, &mut pos).ok_or_else(|| Error::TreeSyntax(s.to_string()))?;
        if pos != chars.len() {
            return Err(Error::TreeSyntax(s.to_string()));
        }
        Ok(t)
    }
}

fn parse(c: &[char], pos: &mut usize) -> Option<Tree> {
    match *c.get(*pos)? {
        '•' | 'o' | '*' => {
            *pos += 1;
            Some(Tree::Leaf)
        }
        '(' => {
            let end = *pos + c[*pos..].iter().position(|&x| x == ')')?;
            let k: u32 = c[*pos + 1..end].iter().collect::<String>().parse().ok()?;
            *pos = end + 1;
            (k >= 2).then_some(Tree::Derivative(k))
        }
        '[' => {
            *pos += 1;
            let mut children = vec![parse(c, pos)?];
            loop {
                match *c.get(*pos)? {
                    ',' => {
                        *pos += 1;
                        children.push(parse(c, pos)?);
                    }
                    ']' => {
                        *pos += 1;
                        return Some(Tree::node(children));
                    }
                    _ => return None,
                }
            }
        }
        _ => None,
    }
}

/// Every tree of `T1 ∪ T2` up to order `max_order`, numbered by order with the
/// `T1` tree first, then `T2` trees in ascending canonical order.
#[derive(Clone, Debug)]
pub struct TreeTable {
    pub max_order: usize,
    trees: Vec<Tree>,
}

impl TreeTable {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Tree for a 1-based condition number.
    pub fn get(&self, number: usize) -> Option<&Tree> {
        number.checked_sub(1).and_then(|i| self.trees.get(i))
    }

    pub fn number_of(&self, tree: &Tree) -> Option<usize> {
        let t = tree.canonical();
        self.trees.iter().position(|x| *x == t).map(|i| i + 1)
    }

    pub fn counts_by_order(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for t in &self.trees {
            *m.entry(t.order()).or_insert(0) += 1;
        }
        m
    }
}

pub const MAX_ENUMERATION_ORDER: usize = 8;

pub fn enumerate(max_order: usize) -> Result<TreeTable> {
    if !(2..=MAX_ENUMERATION_ORDER).contains(&max_order) {
        return Err(Error::invalid(format!(
            "tree order must lie in 2..={MAX_ENUMERATION_ORDER}, got {max_order}"
        )));
    }
    // pool[q]: admissible children of order q.
    let mut pool: Vec<Vec<Tree>> = vec![Vec::new(), vec![Tree::Leaf]];
    let mut trees = Vec::new();
    for q in 2..=max_order {
        let candidates: Vec<Tree> = pool.iter().flatten().cloned().collect();
        let mut level = Vec::new();
        multisets(&candidates, 0, q - 1, &mut Vec::new(), &mut level);
        level.sort_by(|a, b| b.is_t1().cmp(&a.is_t1()).then(a.cmp(b)));
        trees.extend(level.iter().cloned());
        pool.push(level);
    }
    Ok(TreeTable { max_order, trees })
}

fn multisets(
    candidates: &[Tree],
    start: usize,
    remaining: usize,
    current: &mut Vec<Tree>,
    out: &mut Vec<Tree>,
) {
    if remaining == 0 {
        out.push(Tree::node(current.clone()));
        return;
    }
    for i in start..candidates.len() {
        let o = candidates[i].order();
        if o <= remaining {
            current.push(candidates[i].clone());
            multisets(candidates, i, remaining - o, current, out);
            current.pop();
        }
    }
}
