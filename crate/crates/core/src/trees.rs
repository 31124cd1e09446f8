//! Rooted trees and the tree functionals behind order conditions.
//!
//! A tree is stored in canonical form: its children are themselves canonical
//! and sorted in non-increasing order, so structural equality coincides with
//! rooted-tree isomorphism. The elementary weight of a tree on a tableau with
//! coefficient matrix `A` is
//!
//! ```text
//! Φ(•) = 1,    Φ([t1, ..., tm]) = (A Φ(t1)) ∘ ... ∘ (A Φ(tm))
//! ```
//!
//! where `∘` is the element-wise product. The weighted residual of a weight
//! vector `x` at the scaled time `θ` is
//! `τ(t, x, θ) = (x·Φ(t) − θ^p / γ(t)) / σ(t)`, and `T_p` is the root sum of
//! squares of `τ` over all trees with `p` vertices.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RkError};
use crate::tableau::ButcherTableau;

/// Largest order accepted by [`enumerate_trees`].
pub const MAX_TREE_ORDER: usize = 10;

/// A rooted tree in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootedTree {
    order: usize,
    children: Vec<RootedTree>,
}

impl RootedTree {
    /// The single-vertex tree.
    pub fn leaf() -> Self {
        RootedTree {
            order: 1,
            children: Vec::new(),
        }
    }

    /// Graft the given subtrees onto a new root. Children may be given in any order.
    pub fn from_children(mut children: Vec<RootedTree>) -> Self {
        children.sort_unstable_by(|a, b| b.cmp(a));
        let order = 1 + children.iter().map(|c| c.order).sum::<usize>();
        RootedTree { order, children }
    }

    /// The path graph on `n` vertices rooted at one end.
    pub fn chain(n: usize) -> Self {
        assert!(n >= 1, "a tree has at least one vertex");
        let mut t = RootedTree::leaf();
        for _ in 1..n {
            t = RootedTree::from_children(vec![t]);
        }
        t
    }

    /// A root with `n - 1` leaves attached.
    pub fn bushy(n: usize) -> Self {
        assert!(n >= 1, "a tree has at least one vertex");
        RootedTree::from_children(vec![RootedTree::leaf(); n - 1])
    }

    /// Build a tree from a parent array: `parents[i]` is the parent of vertex `i + 1`,
    /// vertex 0 is the root, and every parent index must be smaller than its child.
    pub fn from_parents(parents: &[usize]) -> Self {
        let n = parents.len() + 1;
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &p) in parents.iter().enumerate() {
            assert!(p <= i, "parent index must precede child");
            kids[p].push(i + 1);
        }
        fn build(v: usize, kids: &[Vec<usize>]) -> RootedTree {
            RootedTree::from_children(kids[v].iter().map(|&k| build(k, kids)).collect())
        }
        build(0, &kids)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn children(&self) -> &[RootedTree] {
        &self.children
    }

    /// Density γ(t): the order times the product of the children's densities.
    pub fn gamma(&self) -> u64 {
        self.children
            .iter()
            .fold(self.order as u64, |acc, c| acc * c.gamma())
    }

    /// Order of the symmetry group of the tree.
    pub fn sigma(&self) -> u64 {
        let mut result = 1u64;
        let mut i = 0;
        while i < self.children.len() {
            let mut m = 1;
            while i + m < self.children.len() && self.children[i + m] == self.children[i] {
                m += 1;
            }
            let s = self.children[i].sigma();
            for k in 1..=m as u64 {
                result *= s * k;
            }
            i += m;
        }
        result
    }

    /// Depth of every vertex in depth-first pre-order, children visited in canonical order.
    pub fn level_sequence(&self) -> Vec<usize> {
        fn walk(t: &RootedTree, depth: usize, out: &mut Vec<usize>) {
            out.push(depth);
            for c in &t.children {
                walk(c, depth + 1, out);
            }
        }
        let mut out = Vec::with_capacity(self.order);
        walk(self, 0, &mut out);
        out
    }
}

impl std::fmt::Display for RootedTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.children.is_empty() {
            return write!(f, "•");
        }
        write!(f, "[")?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// All trees up to [`MAX_TREE_ORDER`] with child indices, built once.
struct Catalog {
    trees: Vec<RootedTree>,
    by_order: Vec<Range<usize>>,
    child_index: Vec<Vec<usize>>,
}

fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let mut trees: Vec<RootedTree> = Vec::new();
        let mut by_order: Vec<Range<usize>> = Vec::new();
        for n in 1..=MAX_TREE_ORDER {
            let mut level = generate_order(n, &trees);
            level.sort();
            let start = trees.len();
            trees.extend(level);
            by_order.push(start..trees.len());
        }
        let lookup: HashMap<&RootedTree, usize> =
            trees.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let child_index = trees
            .iter()
            .map(|t| t.children.iter().map(|c| lookup[c]).collect())
            .collect();
        Catalog {
            trees,
            by_order,
            child_index,
        }
    })
}

/// Trees of order `n` from the (sorted) list of all trees of smaller order.
fn generate_order(n: usize, smaller: &[RootedTree]) -> Vec<RootedTree> {
    if n == 1 {
        return vec![RootedTree::leaf()];
    }
    // Descending pool so that picking with non-decreasing index yields canonical child lists.
    let pool: Vec<&RootedTree> = smaller.iter().rev().collect();
    let mut out = Vec::new();
    let mut stack: Vec<RootedTree> = Vec::new();

    fn choose(
        rem: usize,
        start: usize,
        pool: &[&RootedTree],
        stack: &mut Vec<RootedTree>,
        out: &mut Vec<RootedTree>,
        n: usize,
    ) {
        if rem == 0 {
            out.push(RootedTree {
                order: n,
                children: stack.clone(),
            });
            return;
        }
        for j in start..pool.len() {
            if pool[j].order <= rem {
                stack.push(pool[j].clone());
                choose(rem - pool[j].order, j, pool, stack, out, n);
                stack.pop();
            }
        }
    }

    choose(n - 1, 0, &pool, &mut stack, &mut out, n);
    out
}

/// All rooted trees of order `1..=max_order`, grouped by order (index `p - 1`).
pub fn enumerate_trees(max_order: usize) -> Result<Vec<Vec<RootedTree>>> {
    if max_order == 0 || max_order > MAX_TREE_ORDER {
        return Err(RkError::InvalidArgument(format!(
            "max_order must lie in 1..={MAX_TREE_ORDER}, got {max_order}"
        )));
    }
    Ok((1..=max_order)
        .map(|p| trees_of_order(p).to_vec())
        .collect())
}

/// The cached trees with exactly `p` vertices.
pub fn trees_of_order(p: usize) -> &'static [RootedTree] {
    assert!(
        (1..=MAX_TREE_ORDER).contains(&p),
        "tree order {p} out of range"
    );
    let cat = catalog();
    &cat.trees[cat.by_order[p - 1].clone()]
}

pub fn gamma(t: &RootedTree) -> u64 {
    t.gamma()
}

pub fn sigma(t: &RootedTree) -> u64 {
    t.sigma()
}

fn phi_with(a: &DMatrix<f64>, t: &RootedTree) -> DVector<f64> {
    let mut phi = DVector::from_element(a.nrows(), 1.0);
    for c in &t.children {
        phi.component_mul_assign(&(a * phi_with(a, c)));
    }
    phi
}

/// Elementary weight vector Φ(t) of the tableau.
pub fn elementary_weight(tableau: &ButcherTableau, t: &RootedTree) -> DVector<f64> {
    phi_with(tableau.a(), t)
}

/// Weighted residual τ(t, x, θ).
pub fn tau(t: &RootedTree, x: &[f64], theta: f64, tableau: &ButcherTableau) -> Result<f64> {
    let s = tableau.stages();
    if x.len() != s {
        return Err(RkError::DimensionMismatch {
            expected: s,
            got: x.len(),
        });
    }
    let phi = elementary_weight(tableau, t);
    Ok(residual(x, phi.as_slice(), theta, t))
}

fn residual(x: &[f64], phi: &[f64], theta: f64, t: &RootedTree) -> f64 {
    let dot: f64 = x.iter().zip(phi).map(|(a, b)| a * b).sum();
    (dot - theta.powi(t.order() as i32) / t.gamma() as f64) / t.sigma() as f64
}

/// `T_p(x, θ)`: root sum of squares of τ over the trees of order `p`.
pub fn error_norm(x: &[f64], theta: f64, p: usize, tableau: &ButcherTableau) -> Result<f64> {
    ElementaryWeights::new(tableau.a(), p).error_norm(x, theta, p)
}

/// Elementary weights of every tree up to a given order, computed bottom-up once
/// for a fixed coefficient matrix.
#[derive(Clone, Debug)]
pub struct ElementaryWeights {
    max_order: usize,
    stages: usize,
    phi: Vec<DVector<f64>>,
}

impl ElementaryWeights {
    pub fn new(a: &DMatrix<f64>, max_order: usize) -> Self {
        assert!(
            (1..=MAX_TREE_ORDER).contains(&max_order),
            "tree order {max_order} out of range"
        );
        let cat = catalog();
        let count = cat.by_order[max_order - 1].end;
        let s = a.nrows();
        let mut phi: Vec<DVector<f64>> = Vec::with_capacity(count);
        let mut a_phi: Vec<DVector<f64>> = Vec::with_capacity(count);
        for idx in 0..count {
            let mut v = DVector::from_element(s, 1.0);
            for &ci in &cat.child_index[idx] {
                v.component_mul_assign(&a_phi[ci]);
            }
            a_phi.push(a * &v);
            phi.push(v);
        }
        ElementaryWeights {
            max_order,
            stages: s,
            phi,
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Trees of order `p` paired with their elementary weights.
    pub fn of_order(&self, p: usize) -> impl Iterator<Item = (&'static RootedTree, &DVector<f64>)> {
        assert!(p >= 1 && p <= self.max_order, "order {p} not tabulated");
        let range = catalog().by_order[p - 1].clone();
        trees_of_order(p).iter().zip(&self.phi[range])
    }

    pub fn error_norm(&self, x: &[f64], theta: f64, p: usize) -> Result<f64> {
        if x.len() != self.stages {
            return Err(RkError::DimensionMismatch {
                expected: self.stages,
                got: x.len(),
            });
        }
        if p == 0 || p > self.max_order {
            return Err(RkError::InvalidArgument(format!(
                "order {p} exceeds tabulated order {}",
                self.max_order
            )));
        }
        let sum: f64 = self
            .of_order(p)
            .map(|(t, phi)| residual(x, phi.as_slice(), theta, t).powi(2))
            .sum();
        Ok(sum.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Every parent array on `n` vertices, canonicalized and deduplicated.
    fn brute_force(n: usize) -> HashSet<RootedTree> {
        let mut out = HashSet::new();
        let mut parents = vec![0usize; n - 1];
        loop {
            out.insert(RootedTree::from_parents(&parents));
            // odometer over parents[i] in 0..=i
            let mut i = 0;
            loop {
                if i == parents.len() {
                    return out;
                }
                if parents[i] < i {
                    parents[i] += 1;
                    break;
                }
                parents[i] = 0;
                i += 1;
            }
        }
    }

    /// Rooted-tree counts from the Euler-transform recurrence, independent of any tree type.
    fn recursive_counts(n: usize) -> Vec<u64> {
        let mut a = vec![0u64; n + 1];
        a[1] = 1;
        for m in 1..n {
            let mut sum = 0u64;
            for k in 1..=m {
                let dk: u64 = (1..=k).filter(|d| k % d == 0).map(|d| d as u64 * a[d]).sum();
                sum += dk * a[m - k + 1];
            }
            a[m + 1] = sum / m as u64;
        }
        a
    }

    #[test]
    fn counts_match_brute_force_and_recurrence() {
        let rec = recursive_counts(7);
        for n in 1..=7 {
            let enumerated = trees_of_order(n);
            assert_eq!(enumerated.len() as u64, rec[n], "order {n}");
            let brute = brute_force(n);
            assert_eq!(brute.len(), enumerated.len(), "order {n}");
            for t in enumerated {
                assert!(brute.contains(t));
            }
        }
        let lens: Vec<usize> = (1..=7).map(|n| trees_of_order(n).len()).collect();
        assert_eq!(lens, vec![1, 1, 2, 4, 9, 20, 48]);
    }

    #[test]
    fn enumerate_rejects_out_of_range() {
        assert!(enumerate_trees(0).is_err());
        assert!(enumerate_trees(11).is_err());
        assert_eq!(enumerate_trees(1).unwrap(), vec![vec![RootedTree::leaf()]]);
    }

    #[test]
    fn gamma_and_sigma_from_table() {
        assert_eq!(RootedTree::chain(5).gamma(), 120);
        assert_eq!(RootedTree::bushy(5).gamma(), 5);
        assert_eq!(RootedTree::leaf().gamma(), 1);
        assert_eq!(RootedTree::bushy(5).sigma(), 24);
        assert_eq!(RootedTree::bushy(4).sigma(), 6);
        for n in 1..=7 {
            assert_eq!(RootedTree::chain(n).sigma(), 1);
            assert_eq!(
                RootedTree::chain(n).gamma(),
                (1..=n as u64).product::<u64>()
            );
        }
        // [[•,•],[•,•]]: γ = 7·3·3, σ = (2·2)·2!
        let cherry = RootedTree::bushy(3);
        let t = RootedTree::from_children(vec![cherry.clone(), cherry]);
        assert_eq!(t.gamma(), 63);
        assert_eq!(t.sigma(), 8);
    }

    #[test]
    fn labelled_count_identity() {
        // p!/(σγ) counts monotone labellings, so the sum over order p is (p-1)!.
        for p in 1..=7usize {
            let fact: u64 = (1..=p as u64).product();
            let mut total = 0u64;
            for t in trees_of_order(p) {
                let denom = t.sigma() * t.gamma();
                assert_eq!(fact % denom, 0);
                total += fact / denom;
            }
            assert_eq!(total, (1..p as u64).product::<u64>());
        }
    }

    #[test]
    fn canonical_form_is_order_independent() {
        let a = RootedTree::from_children(vec![RootedTree::chain(2), RootedTree::leaf()]);
        let b = RootedTree::from_children(vec![RootedTree::leaf(), RootedTree::chain(2)]);
        assert_eq!(a, b);
        assert_eq!(a.level_sequence(), vec![0, 1, 2, 1]);
        assert_eq!(format!("{a}"), "[[•],•]");
    }
}
