//! Quality measures of a pair: local-error norms at the end of the step and
//! along the interpolant, interpolant variation, stage errors and stability.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Result, RkError};
use crate::poly;
use crate::tableau::{ButcherTableau, ContinuousPair, Interpolant};
use crate::trees::ElementaryWeights;

/// Grid used to bracket the maximum of `T_p(β(θ), θ)`.
pub const THETA_GRID: usize = 1001;
/// θ-tolerance of the golden-section refinement.
pub const THETA_TOL: f64 = 1e-8;

/// `T_p(x, 1)`.
pub fn endpoint_error(pair: &ContinuousPair, x: &[f64], p: usize) -> Result<f64> {
    if p == 0 || p > 7 {
        return Err(RkError::InvalidArgument(format!("order {p} outside 1..=7")));
    }
    ElementaryWeights::new(pair.tableau.a(), p).error_norm(x, 1.0, p)
}

/// `τ(t, β(θ), θ)` for all trees of one order, as polynomials in θ.
#[derive(Clone, Debug)]
pub struct ContinuousError {
    residuals: Vec<Vec<f64>>,
}

impl ContinuousError {
    pub fn new(pair: &ContinuousPair, p: usize) -> Result<Self> {
        let interp = pair.interpolant.as_ref().ok_or(RkError::NoInterpolant)?;
        Self::from_parts(&pair.tableau, interp, p)
    }

    pub fn from_parts(tableau: &ButcherTableau, interp: &Interpolant, p: usize) -> Result<Self> {
        if p == 0 || p > 7 {
            return Err(RkError::InvalidArgument(format!("order {p} outside 1..=7")));
        }
        let weights = ElementaryWeights::new(tableau.a(), p);
        let b = interp.coeffs();
        let len = interp.degree().max(p) + 1;
        let residuals = weights
            .of_order(p)
            .map(|(t, phi)| {
                let sigma = t.sigma() as f64;
                let mut coeffs = vec![0.0; len];
                for m in 0..interp.degree() {
                    coeffs[m + 1] = b.row(m).transpose().dot(phi) / sigma;
                }
                coeffs[p] -= 1.0 / (t.gamma() as f64 * sigma);
                coeffs
            })
            .collect();
        Ok(ContinuousError { residuals })
    }

    /// `T_p(β(θ), θ)`.
    pub fn at(&self, theta: f64) -> f64 {
        self.residuals
            .iter()
            .map(|c| poly::eval(c, theta).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Grid scan followed by golden-section refinement; returns `(θ*, max)`.
    pub fn max(&self) -> (f64, f64) {
        let n = THETA_GRID - 1;
        let (best, _) = (0..=n)
            .map(|k| (k, self.at(k as f64 / n as f64)))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        let lo = best.saturating_sub(1) as f64 / n as f64;
        let hi = (best + 1).min(n) as f64 / n as f64;
        let grid_best = (best as f64 / n as f64, self.at(best as f64 / n as f64));
        let refined = poly::golden_max(|t| self.at(t), lo, hi, THETA_TOL);
        if refined.1 >= grid_best.1 {
            refined
        } else {
            grid_best
        }
    }
}

/// `max_{0≤θ≤1} T_p(β(θ), θ)` and where it is attained.
pub fn continuous_error_max(pair: &ContinuousPair, p: usize) -> Result<(f64, f64)> {
    Ok(ContinuousError::new(pair, p)?.max())
}

/// Total variation `V` and negativity `N` of the interpolant weights over `[0, 1]`.
///
/// Each `β_j` is split at the real roots of `β_j'` so that it is monotone on every
/// piece; `V` sums `|Δβ_j|` and `N` the decreasing pieces.
pub fn variation(interp: &Interpolant) -> (f64, f64) {
    let mut total = 0.0;
    let mut negative = 0.0;
    for j in 0..interp.stages() {
        let p = interp.column_poly(j);
        let mut knots = vec![0.0];
        knots.extend(poly::roots_in(&poly::derivative(&p), 0.0, 1.0));
        knots.push(1.0);
        for w in knots.windows(2) {
            let delta = poly::eval(&p, w[1]) - poly::eval(&p, w[0]);
            total += delta.abs();
            if delta < 0.0 {
                negative -= delta;
            }
        }
    }
    (total, negative)
}

pub fn total_variation(interp: &Interpolant) -> f64 {
    variation(interp).0
}

pub fn negativity(interp: &Interpolant) -> f64 {
    variation(interp).1
}

/// `T_p(a_{i*}, c_i)` for the one-based stage `i`: how well stage `i` approximates
/// the solution at `t + c_i h`.
pub fn stage_error(tableau: &ButcherTableau, i: usize, p: usize) -> Result<f64> {
    let s = tableau.stages();
    if i == 0 || i > s {
        return Err(RkError::InvalidArgument(format!("stage {i} outside 1..={s}")));
    }
    let row: Vec<f64> = tableau.a().row(i - 1).iter().copied().collect();
    ElementaryWeights::new(tableau.a(), p).error_norm(&row, tableau.c()[i - 1], p)
}

/// Stability function `R(z) = Σ r_k z^k` of an explicit method.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityPolynomial {
    pub coeffs: Vec<f64>,
}

impl StabilityPolynomial {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        poly::eval(&self.coeffs, x)
    }

    /// Index of the last nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }
}

/// `r_0 = 1`, `r_k = x A^{k-1} 1`.
pub fn stability_polynomial(tableau: &ButcherTableau, x: &[f64]) -> Result<StabilityPolynomial> {
    let s = tableau.stages();
    if x.len() != s {
        return Err(RkError::DimensionMismatch {
            expected: s,
            got: x.len(),
        });
    }
    let mut coeffs = vec![1.0];
    let mut v = nalgebra::DVector::from_element(s, 1.0);
    for _ in 0..s {
        coeffs.push(x.iter().zip(v.iter()).map(|(a, b)| a * b).sum());
        v = tableau.a() * v;
    }
    Ok(StabilityPolynomial { coeffs })
}

/// Rectangular window of the complex plane sampled on an `nx × ny` grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl Window {
    pub fn new(re: (f64, f64), im: (f64, f64), nx: usize, ny: usize) -> Self {
        Window { re, im, nx, ny }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.re.0 < self.re.1
            && self.im.0 < self.im.1
            && self.nx >= 2
            && self.ny >= 2
            && [self.re.0, self.re.1, self.im.0, self.im.1]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(RkError::EmptyWindow)
        }
    }

    pub fn cell(&self) -> (f64, f64) {
        (
            (self.re.1 - self.re.0) / (self.nx - 1) as f64,
            (self.im.1 - self.im.0) / (self.ny - 1) as f64,
        )
    }
}

/// Grid edge: horizontal edges join `(i, j)`–`(i+1, j)`, vertical ones `(i, j)`–`(i, j+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Boundary `|R(scale · z)| = 1` traced by marching squares over `window`,
/// returned as polylines of `(re, im)` points.
pub fn stability_region(
    poly: &StabilityPolynomial,
    scale: f64,
    window: &Window,
) -> Result<Vec<Vec<(f64, f64)>>> {
    window.validate()?;
    if !(scale > 0.0) {
        return Err(RkError::InvalidArgument("scale must be positive".into()));
    }
    let (dx, dy) = window.cell();
    let point = |i: usize, j: usize| (window.re.0 + i as f64 * dx, window.im.0 + j as f64 * dy);
    // log|R| keeps the level-set interpolation well scaled far from the region
    let field: Vec<Vec<f64>> = (0..window.nx)
        .map(|i| {
            (0..window.ny)
                .map(|j| {
                    let (x, y) = point(i, j);
                    let r = poly.eval(Complex64::new(x, y) * scale).norm();
                    r.ln().max(-700.0)
                })
                .collect()
        })
        .collect();
    let inside = |i: usize, j: usize| field[i][j] < 0.0;

    let crossing = |e: Edge| -> (f64, f64) {
        let ((i0, j0), (i1, j1)) = match e {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (f0, f1) = (field[i0][j0], field[i1][j1]);
        let t = if f0 == f1 { 0.5 } else { f0 / (f0 - f1) };
        let (x0, y0) = point(i0, j0);
        let (x1, y1) = point(i1, j1);
        (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..window.nx - 1 {
        for j in 0..window.ny - 1 {
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let code = (inside(i, j) as u8)
                | (inside(i + 1, j) as u8) << 1
                | (inside(i + 1, j + 1) as u8) << 2
                | (inside(i, j + 1) as u8) << 3;
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            let center_inside = {
                let avg = (field[i][j] + field[i + 1][j] + field[i + 1][j + 1] + field[i][j + 1]) / 4.0;
                avg < 0.0
            };
            match code {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if center_inside {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if center_inside {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // Stitch segments sharing an edge into polylines.
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            edges.push(next);
            at = next;
            match by_edge[&at].iter().find(|&&k| !used[k]) {
                Some(&k) => seg = k,
                None => break,
            }
        }
        edges.into_iter().map(crossing).collect::<Vec<_>>()
    };
    // open chains first (they start on an edge touched by a single segment)
    let mut starts: Vec<(Edge, usize)> = by_edge
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(e, v)| (*e, v[0]))
        .collect();
    starts.sort_by_key(|(_, k)| *k);
    for (edge, k) in starts {
        if !used[k] {
            lines.push(walk(k, edge, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let start = segments[k].0;
            lines.push(walk(k, start, &mut used));
        }
    }
    Ok(lines)
}

/// Largest `x < 0` on the real axis where `|R(x)| = 1`, scanning leftwards from 0.
pub fn real_axis_boundary(poly: &StabilityPolynomial, limit: f64) -> Option<f64> {
    let f = |x: f64| poly.eval_real(x).abs() - 1.0;
    let step = 1e-3;
    let mut x = -step;
    while x > -limit {
        let next = x - step;
        if f(x) <= 0.0 && f(next) > 0.0 {
            let (mut a, mut b) = (next, x);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if f(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        x = next;
    }
    None
}

/// The quality figures reported for a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    /// `T_5`, `T_6`, `T_7` of `b` at θ = 1.
    pub t5: f64,
    pub t6: f64,
    pub t7: f64,
    /// `(θ*, max_θ T_6(β(θ), θ))`, absent without an interpolant.
    pub max_t6: Option<(f64, f64)>,
    pub variation: Option<f64>,
    pub negativity: Option<f64>,
    pub max_abs_a: f64,
    /// `T_5(b + d, 1)` for every difference vector.
    pub d_t5: Vec<f64>,
}

pub fn report(pair: &ContinuousPair) -> Result<MetricReport> {
    let weights = ElementaryWeights::new(pair.tableau.a(), 7);
    let b = pair.tableau.b();
    let t = |p| weights.error_norm(b.as_slice(), 1.0, p);
    let d_t5 = pair
        .d_basis
        .iter()
        .map(|d| weights.error_norm((b + d).as_slice(), 1.0, 5))
        .collect::<Result<Vec<_>>>()?;
    let (max_t6, variation, negativity) = match &pair.interpolant {
        Some(interp) => {
            let (v, n) = self::variation(interp);
            let max = ContinuousError::from_parts(&pair.tableau, interp, 6)?.max();
            (Some(max), Some(v), Some(n))
        }
        None => (None, None, None),
    };
    Ok(MetricReport {
        t5: t(5)?,
        t6: t(6)?,
        t7: t(7)?,
        max_t6,
        variation,
        negativity,
        max_abs_a: pair.tableau.a().amax(),
        d_t5,
    })
}
