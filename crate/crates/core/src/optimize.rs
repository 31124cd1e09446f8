//! Multi-start simplex search over the family parameters and rational snapping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RkError};
use crate::metrics::{self, ContinuousError, MetricReport};
use crate::tableau::{construct_family, construct_without_estimator, ContinuousPair, FamilyParams, Ratio};
use crate::trees::ElementaryWeights;

const DIM: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// Continuous error, interpolant variation and coefficient size.
    A,
    /// Endpoint `T_6` subject to `T_7 ≤ ρ T_6`.
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub w_v: f64,
    pub w_a: f64,
    pub rho: f64,
    pub penalty: f64,
}

impl ObjectiveSpec {
    pub fn a() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::A,
            w_v: 1e-4,
            w_a: 1e-7,
            rho: 10.0,
            penalty: 1e6,
        }
    }

    pub fn b() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::B,
            ..Self::a()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.w_v >= 0.0 && self.w_a >= 0.0 && self.rho > 0.0 && self.penalty >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(RkError::InvalidArgument(
                "objective weights must be nonnegative and ρ positive".into(),
            ))
        }
    }

    /// Objective value and whether the point satisfies the problem's constraints.
    /// Parameters that do not yield a pair evaluate to `(+∞, false)`.
    pub fn evaluate(&self, p: &FamilyParams) -> (f64, bool) {
        let pair = match construct_without_estimator(p) {
            Ok(pair) => pair,
            Err(_) => return (f64::INFINITY, false),
        };
        let value = match self.kind {
            ObjectiveKind::A => self.value_a(&pair).map(|v| (v, true)),
            ObjectiveKind::B => self.value_b(&pair),
        };
        match value {
            Ok((v, feasible)) if v.is_finite() => (v, feasible),
            _ => (f64::INFINITY, false),
        }
    }

    fn value_a(&self, pair: &ContinuousPair) -> Result<f64> {
        let interp = pair.interpolant.as_ref().ok_or(RkError::NoInterpolant)?;
        let (_, max_t6) = ContinuousError::from_parts(&pair.tableau, interp, 6)?.max();
        let v = metrics::total_variation(interp);
        let size: f64 = pair
            .tableau
            .a()
            .iter()
            .map(|a| {
                let a2 = a * a;
                4.0 * a2 + a2 * a2
            })
            .sum();
        Ok(max_t6 + self.w_v * v + self.w_a * size)
    }

    fn value_b(&self, pair: &ContinuousPair) -> Result<(f64, bool)> {
        let weights = ElementaryWeights::new(pair.tableau.a(), 7);
        let b = pair.tableau.b().as_slice();
        let t6 = weights.error_norm(b, 1.0, 6)?;
        let t7 = weights.error_norm(b, 1.0, 7)?;
        let excess = (t7 - self.rho * t6).max(0.0);
        Ok((t6 + self.penalty * excess * excess, excess == 0.0))
    }
}

pub fn objective_a(p: &FamilyParams) -> f64 {
    ObjectiveSpec::a().evaluate(p).0
}

pub fn objective_b(p: &FamilyParams) -> f64 {
    ObjectiveSpec::b().evaluate(p).0
}

/// Sampling box of the starting points: `c2`, then `c4..c8`, then the five free `a` entries.
pub const C2_BOX: (f64, f64) = (0.02, 0.2);
pub const NODE_BOX: (f64, f64) = (0.1, 1.0);
pub const A_BOX: (f64, f64) = (-3.0, 3.0);
/// Simplex scale of each restart round relative to the first.
pub const RESTART_SCALES: [f64; 3] = [1.0, 0.25, 0.0625];
/// Initial simplex edge as a fraction of each coordinate's box width.
pub const SIMPLEX_FRACTION: f64 = 0.3;

fn box_of(k: usize) -> (f64, f64) {
    match k {
        0 => C2_BOX,
        1..=5 => NODE_BOX,
        _ => A_BOX,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub starts: usize,
    /// Objective evaluations per start.
    pub budget: usize,
    pub seed: u64,
    /// Replaces the first sampled start.
    pub initial: Option<FamilyParams>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub start: usize,
    pub eval: usize,
    pub value: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub params: FamilyParams,
    pub value: f64,
    pub pair: ContinuousPair,
    pub report: MetricReport,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

/// Latin-hypercube starts with the node coordinates sorted ascending.
fn latin_hypercube(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; DIM]> {
    let mut points = vec![[0.0; DIM]; n];
    for k in 0..DIM {
        let mut strata: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            strata.swap(i, rng.gen_range(0..=i));
        }
        let (lo, hi) = box_of(k);
        for (p, s) in points.iter_mut().zip(strata) {
            let u = (s as f64 + rng.gen::<f64>()) / n as f64;
            p[k] = lo + u * (hi - lo);
        }
    }
    for p in &mut points {
        p[1..6].sort_by(f64::total_cmp);
    }
    points
}

struct Local<'a> {
    spec: &'a ObjectiveSpec,
    start: usize,
    budget: usize,
    /// Evaluation count at which the current restart round ends.
    round_end: usize,
    evals: usize,
    best: Option<([f64; DIM], f64)>,
    trace: Vec<TraceEntry>,
}

impl Local<'_> {
    fn exhausted(&self) -> bool {
        self.evals >= self.round_end.min(self.budget)
    }

    fn eval(&mut self, x: &[f64; DIM]) -> f64 {
        let (value, feasible) = self.spec.evaluate(&FamilyParams::from_array(*x));
        self.evals += 1;
        self.trace.push(TraceEntry {
            start: self.start,
            eval: self.evals,
            value,
            feasible,
        });
        if feasible && self.best.is_none_or(|(_, v)| value < v) {
            self.best = Some((*x, value));
        }
        value
    }

    /// Adaptive-coefficient Nelder–Mead from an axis-aligned simplex around `x0`.
    fn nelder_mead(&mut self, x0: [f64; DIM], scale: f64, f0: Option<f64>) -> ([f64; DIM], f64) {
        let n = DIM as f64;
        let (alpha, gamma, rho, shrink) = (1.0, 1.0 + 2.0 / n, 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n);
        let mut simplex: Vec<([f64; DIM], f64)> = Vec::with_capacity(DIM + 1);
        let f0 = match f0 {
            Some(f) => f,
            None => self.eval(&x0),
        };
        simplex.push((x0, f0));
        for k in 0..DIM {
            if self.exhausted() {
                break;
            }
            let mut x = x0;
            let (lo, hi) = box_of(k);
            x[k] += SIMPLEX_FRACTION * scale * (hi - lo);
            let f = self.eval(&x);
            simplex.push((x, f));
        }
        let order = |s: &mut Vec<([f64; DIM], f64)>| {
            s.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex(&a.0, &b.0)))
        };
        order(&mut simplex);
        if simplex.len() < DIM + 1 {
            return simplex[0];
        }
        while !self.exhausted() {
            let spread = simplex[DIM].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| dist(x, &simplex[0].0))
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= 1e-15 * simplex[0].1.abs().max(1e-300)) || diameter < 1e-12 {
                break;
            }
            let mut centroid = [0.0; DIM];
            for (x, _) in &simplex[..DIM] {
                for k in 0..DIM {
                    centroid[k] += x[k] / n;
                }
            }
            let worst = simplex[DIM];
            let along = |t: f64| {
                let mut y = [0.0; DIM];
                for k in 0..DIM {
                    y[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
                }
                y
            };
            let xr = along(-alpha);
            let fr = self.eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(-gamma);
                let fe = if self.exhausted() { f64::INFINITY } else { self.eval(&xe) };
                simplex[DIM] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[DIM - 1].1 {
                simplex[DIM] = (xr, fr);
            } else {
                let (xc, fc) = if self.exhausted() {
                    (xr, f64::INFINITY)
                } else if fr < worst.1 {
                    let x = along(-rho);
                    (x, self.eval(&x))
                } else {
                    let x = along(rho);
                    (x, self.eval(&x))
                };
                if fc < worst.1.min(fr) {
                    simplex[DIM] = (xc, fc);
                } else {
                    let best = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        if self.exhausted() {
                            break;
                        }
                        for k in 0..DIM {
                            v.0[k] = best[k] + shrink * (v.0[k] - best[k]);
                        }
                        v.1 = self.eval(&v.0);
                    }
                }
            }
            order(&mut simplex);
        }
        simplex[0]
    }

    fn run(&mut self, x0: [f64; DIM]) {
        let mut x = x0;
        let mut f = None;
        let rounds = RESTART_SCALES.len();
        for (r, scale) in RESTART_SCALES.into_iter().enumerate() {
            self.round_end = self.budget * (r + 1) / rounds;
            if self.exhausted() {
                continue;
            }
            let (xb, fb) = self.nelder_mead(x, scale, f);
            // restart from the best feasible point when the penalized value wandered off
            match self.best {
                Some((xf, ff)) if !(fb <= ff) => {
                    x = xf;
                    f = Some(ff);
                }
                _ => {
                    x = xb;
                    f = Some(fb);
                }
            }
        }
    }
}

fn lex(a: &[f64; DIM], b: &[f64; DIM]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn dist(a: &[f64; DIM], b: &[f64; DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

type StartOutcome = (Option<([f64; DIM], f64)>, Vec<TraceEntry>, usize);

fn run_start(spec: &ObjectiveSpec, start: usize, budget: usize, x0: [f64; DIM]) -> StartOutcome {
    let mut local = Local {
        spec,
        start,
        budget,
        round_end: budget,
        evals: 0,
        best: None,
        trace: Vec::new(),
    };
    local.run(x0);
    (local.best, local.trace, local.evals)
}

#[cfg(feature = "parallel")]
fn run_all(spec: &ObjectiveSpec, budget: usize, starts: &[[f64; DIM]]) -> Vec<StartOutcome> {
    use rayon::prelude::*;
    starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| run_start(spec, k, budget, *x0))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(spec: &ObjectiveSpec, budget: usize, starts: &[[f64; DIM]]) -> Vec<StartOutcome> {
    starts
        .iter()
        .enumerate()
        .map(|(k, x0)| run_start(spec, k, budget, *x0))
        .collect()
}

/// Deterministic multi-start search; returns the best feasible point evaluated.
pub fn search(spec: &ObjectiveSpec, cfg: &SearchConfig) -> Result<SearchResult> {
    spec.validate()?;
    if cfg.budget == 0 || cfg.starts == 0 {
        return Err(RkError::InvalidArgument("starts and budget must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = latin_hypercube(cfg.starts, &mut rng);
    if let Some(p) = &cfg.initial {
        starts[0] = p.to_array();
    }
    let outcomes = run_all(spec, cfg.budget, &starts);

    let mut best: Option<([f64; DIM], f64)> = None;
    let mut trace = Vec::new();
    let mut evaluations = 0;
    for (found, mut t, evals) in outcomes {
        for e in &mut t {
            e.eval += evaluations;
        }
        evaluations += evals;
        trace.extend(t);
        if let Some((x, v)) = found {
            let better = match best {
                None => true,
                Some((bx, bv)) => v < bv || (v == bv && lex(&x, &bx).is_lt()),
            };
            if better {
                best = Some((x, v));
            }
        }
    }
    let (x, value) = best.ok_or(RkError::NoFeasiblePoint)?;
    let params = FamilyParams::from_array(x);
    let pair = construct_family(&params)?;
    let report = metrics::report(&pair)?;
    Ok(SearchResult {
        params,
        value,
        pair,
        report,
        evaluations,
        trace,
    })
}

/// Best rational approximation with denominator at most `max_den`.
pub fn best_rational(x: f64, max_den: i64) -> Result<Ratio> {
    if !x.is_finite() || max_den < 1 {
        return Err(RkError::InvalidArgument(format!(
            "cannot rationalize {x} with denominator bound {max_den}"
        )));
    }
    // convergents h/k of the continued fraction, plus the best semiconvergent at the end
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    let max_den = max_den as i128;
    loop {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den {
            let t = (max_den - k0) / k1;
            let (hs, ks) = (t * h1 + h0, t * k1 + k0);
            let err = |h: i128, k: i128| (x - h as f64 / k as f64).abs();
            if t > 0 && err(hs, ks) < err(h1, k1) {
                h1 = hs;
                k1 = ks;
            }
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a as f64;
        if frac.abs() < 1e-15 || (x - h1 as f64 / k1 as f64) == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    if h1.abs() > i64::MAX as i128 {
        return Err(RkError::InvalidArgument(format!("{x} is too large to rationalize")));
    }
    Ok(Ratio::new(h1 as i64, k1 as i64))
}

#[derive(Clone, Debug)]
pub struct Rationalized {
    pub ratios: [Ratio; DIM],
    pub params: FamilyParams,
    pub pair: ContinuousPair,
    pub report: MetricReport,
    pub objective_before: f64,
    pub objective_after: f64,
}

impl Rationalized {
    /// `|after − before| / |before|`.
    pub fn relative_drift(&self) -> f64 {
        (self.objective_after - self.objective_before).abs() / self.objective_before.abs()
    }
}

/// Snap every parameter to a nearby rational and rebuild the pair.
pub fn rationalize(
    spec: &ObjectiveSpec,
    params: &FamilyParams,
    max_den: i64,
) -> Result<Rationalized> {
    params.validate()?;
    let values = params.to_array();
    let mut ratios = [Ratio::int(0); DIM];
    let mut snapped = [0.0; DIM];
    for k in 0..DIM {
        ratios[k] = best_rational(values[k], max_den)?;
        snapped[k] = ratios[k].to_f64();
    }
    let new_params = FamilyParams::from_array(snapped);
    let pair = construct_family(&new_params)?;
    let report = metrics::report(&pair)?;
    Ok(Rationalized {
        ratios,
        params: new_params,
        pair,
        report,
        objective_before: spec.evaluate(params).0,
        objective_after: spec.evaluate(&new_params).0,
    })
}
