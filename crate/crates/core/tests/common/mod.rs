//! Independent oracles shared by the integration tests.
//!
//! Trees are enumerated as monotone labellings (parent arrays with `parent[k] < k`),
//! so nothing here goes through the library's tree catalogue.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

/// All parent arrays of monotonically labelled rooted trees with `p` vertices.
pub fn labelled_trees(p: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![usize::MAX]];
    for k in 1..p {
        let mut next = Vec::new();
        for t in &out {
            for parent in 0..k {
                let mut t2 = t.clone();
                t2.push(parent);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

fn children(parents: &[usize]) -> Vec<Vec<usize>> {
    let mut ch = vec![Vec::new(); parents.len()];
    for (k, &p) in parents.iter().enumerate().skip(1) {
        ch[p].push(k);
    }
    ch
}

/// Elementary weight by direct recursion over the labelled tree.
pub fn phi(a: &DMatrix<f64>, parents: &[usize]) -> DVector<f64> {
    let ch = children(parents);
    let s = a.nrows();
    let mut v: Vec<DVector<f64>> = vec![DVector::from_element(s, 1.0); parents.len()];
    for k in (0..parents.len()).rev() {
        let mut w = DVector::from_element(s, 1.0);
        for &c in &ch[k] {
            w.component_mul_assign(&(a * &v[c]));
        }
        v[k] = w;
    }
    v.swap_remove(0)
}

/// Product of subtree sizes.
pub fn gamma(parents: &[usize]) -> f64 {
    let n = parents.len();
    let mut size = vec![1usize; n];
    for k in (1..n).rev() {
        size[parents[k]] += size[k];
    }
    size.iter().map(|&v| v as f64).product()
}

fn canon(ch: &[Vec<usize>], k: usize) -> String {
    let mut parts: Vec<String> = ch[k].iter().map(|&c| canon(ch, c)).collect();
    parts.sort();
    format!("({})", parts.concat())
}

/// One representative per unlabelled tree with its number of monotone labellings.
pub fn unlabelled_trees(p: usize) -> Vec<(Vec<usize>, usize)> {
    let mut groups: BTreeMap<String, (Vec<usize>, usize)> = BTreeMap::new();
    for t in labelled_trees(p) {
        let key = canon(&children(&t), 0);
        groups.entry(key).or_insert((t, 0)).1 += 1;
    }
    groups.into_values().collect()
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

/// Largest `|x·Φ(t) − θ^p/γ(t)|` over trees of order `p`.
pub fn max_residual(a: &DMatrix<f64>, x: &DVector<f64>, theta: f64, p: usize) -> f64 {
    unlabelled_trees(p)
        .iter()
        .map(|(t, _)| (x.dot(&phi(a, t)) - theta.powi(p as i32) / gamma(t)).abs())
        .fold(0.0, f64::max)
}

/// `T_p(x, θ)`, with σ recovered from the labelling count `p!/(σγ)`.
pub fn t_norm(a: &DMatrix<f64>, x: &DVector<f64>, theta: f64, p: usize) -> f64 {
    unlabelled_trees(p)
        .iter()
        .map(|(t, count)| {
            let g = gamma(t);
            let sigma = factorial(p) / (g * *count as f64);
            ((x.dot(&phi(a, t)) - theta.powi(p as i32) / g) / sigma).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// `β(θ)` from ascending coefficient rows (`rows[m]` multiplies `θ^{m+1}`).
pub fn beta(rows: &DMatrix<f64>, theta: f64) -> DVector<f64> {
    let mut out = DVector::zeros(rows.ncols());
    for m in 0..rows.nrows() {
        out += rows.row(m).transpose() * theta.powi(m as i32 + 1);
    }
    out
}

pub fn beta_prime(rows: &DMatrix<f64>, theta: f64) -> DVector<f64> {
    let mut out = DVector::zeros(rows.ncols());
    for m in 0..rows.nrows() {
        out += rows.row(m).transpose() * ((m + 1) as f64 * theta.powi(m as i32));
    }
    out
}

/// Classical RK4 with `n` steps on `x' = f(t, x)`.
pub fn rk4(f: impl Fn(f64, &[f64]) -> Vec<f64>, t0: f64, x0: &[f64], t1: f64, n: usize) -> Vec<f64> {
    let h = (t1 - t0) / n as f64;
    let mut x = x0.to_vec();
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &x);
        let k2 = f(t + h / 2.0, &axpy(&x, &k1, h / 2.0));
        let k3 = f(t + h / 2.0, &axpy(&x, &k2, h / 2.0));
        let k4 = f(t + h, &axpy(&x, &k3, h));
        for j in 0..x.len() {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    x
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Parameters drawn uniformly from the optimizer's sampling box, nodes sorted.
pub fn random_params(rng: &mut impl rand::Rng) -> rkforge::FamilyParams {
    let mut v = [0.0; 11];
    v[0] = rng.gen_range(0.02..0.2);
    for k in 1..6 {
        v[k] = rng.gen_range(0.1..1.0);
    }
    v[1..6].sort_by(f64::total_cmp);
    for k in 6..11 {
        v[k] = rng.gen_range(-3.0..3.0);
    }
    rkforge::FamilyParams::from_array(v)
}
