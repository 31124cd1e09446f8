//! Explicit Runge–Kutta stepping with embedded error control and dense output.

use std::fmt;

use crate::error::{Result, RkError};
use crate::tableau::{ButcherTableau, ContinuousPair, Interpolant};

/// Right-hand side of `x' = f(t, x)`.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]);
    fn exact(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }
}

/// Wraps a closure as an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64]) + Sync> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnSystem { dim, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64]) + Sync> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (self.f)(t, x, dx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub atol: f64,
    pub h0: f64,
    pub safety: f64,
    pub exponent: f64,
    /// Defaults to `1e-12 (t_end − t0)`.
    pub h_min: Option<f64>,
    /// Defaults to `t_end − t0`.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl SolveOptions {
    pub fn new(atol: f64) -> Self {
        SolveOptions {
            atol,
            h0: 1e-3,
            safety: 0.9,
            exponent: 0.2,
            h_min: None,
            h_max: None,
            max_steps: 1_000_000,
        }
    }
}

/// Growth factor used when every tried estimate is (numerically) zero.
pub const ZERO_ERROR_GROWTH: f64 = 10.0;

/// One accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub t: f64,
    pub h: f64,
    /// Stage derivatives `F_1..F_s`, stage-major.
    pub stages: Vec<f64>,
    /// Error estimates of the difference vectors tried on the accepted attempt.
    pub errors: Vec<f64>,
    /// Right-hand-side evaluations spent on the accepted attempt.
    pub evals: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub dim: usize,
    pub interpolant: Option<Interpolant>,
    /// Step endpoints, `ts.len() == steps.len() + 1`.
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub steps: Vec<Step>,
    pub rhs_evals: usize,
    pub rejections: usize,
}

impl Solution {
    fn start(dim: usize, interpolant: Option<Interpolant>, t0: f64, x0: &[f64]) -> Self {
        Solution {
            dim,
            interpolant,
            ts: vec![t0],
            xs: vec![x0.to_vec()],
            steps: Vec::new(),
            rhs_evals: 0,
            rejections: 0,
        }
    }

    pub fn t_last(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn x_last(&self) -> &[f64] {
        self.xs.last().unwrap()
    }

    /// Index of the step containing `t`; interior step endpoints belong to the earlier step.
    fn locate(&self, t: f64) -> Result<usize> {
        let (t0, t1) = (self.ts[0], self.t_last());
        if self.steps.is_empty() || !(t >= t0 && t <= t1) {
            return Err(RkError::OutsideWindow { t, t0, t1 });
        }
        let k = self.ts[1..].partition_point(|&end| end < t);
        Ok(k.min(self.steps.len() - 1))
    }

    fn combine(&self, k: usize, weights: &[f64], scale: f64, base: Option<&[f64]>) -> Vec<f64> {
        let n = self.dim;
        let mut out = match base {
            Some(x) => x.to_vec(),
            None => vec![0.0; n],
        };
        let stages = &self.steps[k].stages;
        for (j, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                for (o, f) in out.iter_mut().zip(&stages[j * n..(j + 1) * n]) {
                    *o += scale * w * f;
                }
            }
        }
        out
    }

    /// `x(t_k + θ h) = x_k + h Σ β_j(θ) F_j` on the step containing `t`.
    pub fn dense_eval(&self, t: f64) -> Result<Vec<f64>> {
        let interp = self.interpolant.as_ref().ok_or(RkError::NoInterpolant)?;
        let k = self.locate(t)?;
        let step = &self.steps[k];
        let theta = (t - step.t) / step.h;
        let beta = interp.weights_at(theta);
        Ok(self.combine(k, beta.as_slice(), step.h, Some(&self.xs[k])))
    }

    /// Derivative of the dense output, `Σ β_j'(θ) F_j`.
    pub fn dense_derivative(&self, t: f64) -> Result<Vec<f64>> {
        let interp = self.interpolant.as_ref().ok_or(RkError::NoInterpolant)?;
        let k = self.locate(t)?;
        self.step_derivative(interp, k, t)
    }

    /// Like [`Solution::dense_derivative`] but on a chosen step, which may be the
    /// later neighbour of a shared endpoint.
    pub fn dense_derivative_on(&self, k: usize, t: f64) -> Result<Vec<f64>> {
        let interp = self.interpolant.as_ref().ok_or(RkError::NoInterpolant)?;
        if k >= self.steps.len() {
            return Err(RkError::InvalidArgument(format!("no step {k}")));
        }
        self.step_derivative(interp, k, t)
    }

    fn step_derivative(&self, interp: &Interpolant, k: usize, t: f64) -> Result<Vec<f64>> {
        let step = &self.steps[k];
        let theta = (t - step.t) / step.h;
        let d = interp.derivative_at(theta);
        Ok(self.combine(k, d.as_slice(), 1.0, None))
    }
}

/// A solve that stopped early, with everything accepted up to that point.
#[derive(Clone, Debug)]
pub struct SolveFailure {
    pub error: RkError,
    pub partial: Solution,
}

impl fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (stopped at t = {})", self.error, self.partial.t_last())
    }
}

impl std::error::Error for SolveFailure {}

/// Stages of one attempt, evaluated on demand.
struct Attempt<'a, S: OdeSystem + ?Sized> {
    tableau: &'a ButcherTableau,
    system: &'a S,
    t: f64,
    x: &'a [f64],
    h: f64,
    stages: Vec<f64>,
    done: usize,
    evals: usize,
}

impl<'a, S: OdeSystem + ?Sized> Attempt<'a, S> {
    fn new(
        tableau: &'a ButcherTableau,
        system: &'a S,
        t: f64,
        x: &'a [f64],
        h: f64,
        f1: Option<&[f64]>,
    ) -> Result<Self> {
        let n = x.len();
        let mut attempt = Attempt {
            tableau,
            system,
            t,
            x,
            h,
            stages: vec![0.0; tableau.stages() * n],
            done: 0,
            evals: 0,
        };
        match f1 {
            Some(f) => {
                attempt.stages[..n].copy_from_slice(f);
                attempt.done = 1;
            }
            None => attempt.ensure(1)?,
        }
        Ok(attempt)
    }

    /// `x + h Σ_j w_j F_j` over the stages evaluated so far.
    fn advance(&self, w: impl Iterator<Item = f64>) -> Vec<f64> {
        let n = self.x.len();
        let mut out = self.x.to_vec();
        for (j, wj) in w.take(self.done).enumerate() {
            if wj != 0.0 {
                for (o, f) in out.iter_mut().zip(&self.stages[j * n..(j + 1) * n]) {
                    *o += self.h * wj * f;
                }
            }
        }
        out
    }

    fn ensure(&mut self, k: usize) -> Result<()> {
        let n = self.x.len();
        while self.done < k {
            let i = self.done;
            let xi = self.advance(self.tableau.a().row(i).iter().copied());
            let ti = self.t + self.tableau.c()[i] * self.h;
            let (_, rest) = self.stages.split_at_mut(i * n);
            let fi = &mut rest[..n];
            self.system.rhs(ti, &xi, fi);
            self.evals += 1;
            if fi.iter().any(|v| !v.is_finite()) {
                return Err(RkError::NonFiniteRhs { t: ti, stage: i + 1 });
            }
            self.done += 1;
        }
        Ok(())
    }

    fn estimate(&mut self, d: &nalgebra::DVector<f64>) -> Result<f64> {
        self.ensure(ContinuousPair::support_len(d))?;
        let n = self.x.len();
        let mut e = vec![0.0; n];
        for (j, dj) in d.iter().enumerate().take(self.done) {
            for (o, f) in e.iter_mut().zip(&self.stages[j * n..(j + 1) * n]) {
                *o += self.h * dj * f;
            }
        }
        Ok(e.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        self.ensure(self.tableau.stages())?;
        Ok(self.advance(self.tableau.b().iter().copied()))
    }
}

/// Result of [`step`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub x_next: Vec<f64>,
    pub stages: Vec<f64>,
    /// `‖h Σ d_j F_j‖₂` for every difference vector of the pair.
    pub errors: Vec<f64>,
    pub evals: usize,
}

/// One full step with all stages and all error estimates.
pub fn step<S: OdeSystem + ?Sized>(
    pair: &ContinuousPair,
    system: &S,
    t: f64,
    x: &[f64],
    h: f64,
    f1: Option<&[f64]>,
) -> Result<StepResult> {
    check_dims(system, x)?;
    if !(h > 0.0) {
        return Err(RkError::InvalidArgument("step size must be positive".into()));
    }
    let mut attempt = Attempt::new(&pair.tableau, system, t, x, h, f1)?;
    let x_next = attempt.finish()?;
    let errors = pair
        .d_basis
        .iter()
        .map(|d| attempt.estimate(d))
        .collect::<Result<Vec<_>>>()?;
    Ok(StepResult {
        x_next,
        stages: attempt.stages,
        errors,
        evals: attempt.evals,
    })
}

fn check_dims<S: OdeSystem + ?Sized>(system: &S, x: &[f64]) -> Result<()> {
    if system.dim() == 0 {
        return Err(RkError::InvalidArgument("system dimension must be positive".into()));
    }
    if x.len() != system.dim() {
        return Err(RkError::DimensionMismatch {
            expected: system.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Stage index whose derivative equals the next step's `F_1`, zero-based.
fn fsal_index(tableau: &ButcherTableau) -> Option<usize> {
    tableau.fsal_stage().map(|u| u - 1)
}

/// Adaptive integration from `t0` to `t_end`.
///
/// Difference vectors are tried in order of increasing support and the attempt is
/// rejected on the first estimate above `atol`; the next step size uses the largest
/// estimate actually computed.
pub fn solve<S: OdeSystem + ?Sized>(
    pair: &ContinuousPair,
    system: &S,
    t0: f64,
    x0: &[f64],
    t_end: f64,
    opts: &SolveOptions,
) -> std::result::Result<Solution, SolveFailure> {
    let mut sol = Solution::start(system.dim(), pair.interpolant.clone(), t0, x0);
    let fail = |error: RkError, partial: Solution| Err(SolveFailure { error, partial });
    if let Err(e) = check_dims(system, x0) {
        return fail(e, sol);
    }
    if !(t_end > t0) || !(opts.atol > 0.0) || !(opts.h0 > 0.0) {
        return fail(
            RkError::InvalidArgument("need t_end > t0, atol > 0 and h0 > 0".into()),
            sol,
        );
    }
    if pair.d_basis.is_empty() {
        return fail(RkError::NoErrorEstimator, sol);
    }
    let span = t_end - t0;
    let h_max = opts.h_max.unwrap_or(span);
    let h_min = opts.h_min.unwrap_or(1e-12 * span);
    if !(h_min > 0.0 && h_min <= opts.h0 && opts.h0 <= h_max) {
        return fail(
            RkError::InvalidArgument("need 0 < h_min <= h0 <= h_max".into()),
            sol,
        );
    }

    let mut order: Vec<&nalgebra::DVector<f64>> = pair.d_basis.iter().collect();
    order.sort_by_key(|d| ContinuousPair::support_len(d));
    let fsal = fsal_index(&pair.tableau);
    let n = x0.len();

    let mut t = t0;
    let mut x = x0.to_vec();
    let mut f1: Option<Vec<f64>> = None;
    let mut h = opts.h0;
    let new_h = |h: f64, e: f64| {
        if e.is_nan() {
            h / ZERO_ERROR_GROWTH
        } else if e < 1e-300 {
            h * ZERO_ERROR_GROWTH
        } else {
            opts.safety * h * (opts.atol / e).powf(opts.exponent)
        }
    };

    loop {
        if sol.steps.len() >= opts.max_steps {
            return fail(RkError::StepLimit(opts.max_steps), sol);
        }
        if h < h_min {
            return fail(RkError::StepTooSmall { t, h }, sol);
        }
        let last = t + h >= t_end || (t_end - (t + h)) <= 1e-14 * span;
        let h_try = if last { t_end - t } else { h };

        let mut attempt = match Attempt::new(&pair.tableau, system, t, &x, h_try, f1.as_deref()) {
            Ok(a) => a,
            Err(e) => {
                sol.rhs_evals += usize::from(f1.is_none());
                return fail(e, sol);
            }
        };
        let mut errors = Vec::with_capacity(order.len());
        let mut rejected = false;
        let mut failure = None;
        for d in &order {
            match attempt.estimate(d) {
                Ok(e) => {
                    errors.push(e);
                    if !(e <= opts.atol) {
                        rejected = true;
                        break;
                    }
                }
                Err(err) => {
                    failure = Some(err);
                    break;
                }
            }
        }
        let x_next = match failure {
            None if !rejected => attempt.finish(),
            None => Ok(Vec::new()),
            Some(err) => Err(err),
        };
        sol.rhs_evals += attempt.evals;
        let x_next = match x_next {
            Ok(v) => v,
            Err(e) => return fail(e, sol),
        };
        if f1.is_none() && attempt.done >= 1 {
            f1 = Some(attempt.stages[..n].to_vec());
        }
        let e_max = errors.iter().cloned().fold(0.0, f64::max);
        let e_max = if errors.iter().any(|e| e.is_nan()) { f64::NAN } else { e_max };

        if rejected {
            sol.rejections += 1;
            h = new_h(h_try, e_max).min(h_max);
            continue;
        }

        let t_next = if last { t_end } else { t + h_try };
        let stages = attempt.stages;
        f1 = fsal.map(|u| stages[u * n..(u + 1) * n].to_vec());
        sol.steps.push(Step {
            t,
            h: h_try,
            stages,
            errors,
            evals: attempt.evals,
        });
        sol.ts.push(t_next);
        sol.xs.push(x_next.clone());
        t = t_next;
        x = x_next;
        if last {
            return Ok(sol);
        }
        h = new_h(h_try, e_max).min(h_max);
    }
}

/// `n` equal steps from `t0` to `t_end` without error control.
pub fn solve_fixed<S: OdeSystem + ?Sized>(
    pair: &ContinuousPair,
    system: &S,
    t0: f64,
    x0: &[f64],
    t_end: f64,
    n: usize,
) -> Result<Solution> {
    check_dims(system, x0)?;
    if n == 0 || !(t_end > t0) {
        return Err(RkError::InvalidArgument("need n >= 1 and t_end > t0".into()));
    }
    let dim = x0.len();
    let fsal = fsal_index(&pair.tableau);
    let mut sol = Solution::start(dim, pair.interpolant.clone(), t0, x0);
    let mut f1: Option<Vec<f64>> = None;
    let h = (t_end - t0) / n as f64;
    for k in 0..n {
        let t = sol.t_last();
        let x = sol.x_last().to_vec();
        let r = step(pair, system, t, &x, h, f1.as_deref())?;
        sol.rhs_evals += r.evals;
        f1 = fsal.map(|u| r.stages[u * dim..(u + 1) * dim].to_vec());
        sol.steps.push(Step {
            t,
            h,
            stages: r.stages,
            errors: r.errors,
            evals: r.evals,
        });
        sol.ts.push(if k + 1 == n { t_end } else { t0 + (k + 1) as f64 * h });
        sol.xs.push(r.x_next);
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::builtin;

    fn zero() -> FnSystem<impl Fn(f64, &[f64], &mut [f64]) + Sync> {
        FnSystem::new(2, |_, _, dx: &mut [f64]| dx.fill(0.0))
    }

    #[test]
    fn zero_rhs_step_is_identity() {
        let pair = builtin("table46").unwrap();
        let r = step(&pair, &zero(), 0.0, &[1.0, -2.0], 0.3, None).unwrap();
        assert_eq!(r.x_next, vec![1.0, -2.0]);
        assert!(r.errors.iter().all(|e| *e == 0.0));
        assert_eq!(r.evals, 9);
    }

    #[test]
    fn zero_rhs_grows_to_h_max() {
        let pair = builtin("dormand_prince").unwrap();
        let sol = solve(&pair, &zero(), 0.0, &[1.0, 1.0], 10.0, &SolveOptions::new(1e-6)).unwrap();
        assert_eq!(sol.rejections, 0);
        assert_eq!(sol.t_last(), 10.0);
        let hs: Vec<f64> = sol.steps.iter().map(|s| s.h).collect();
        assert!(hs.windows(2).take(hs.len() - 2).all(|w| w[1] > w[0]));
        assert!(sol.steps.len() < 10);
    }

    #[test]
    fn dense_eval_outside_window() {
        let pair = builtin("dormand_prince").unwrap();
        let sol = solve_fixed(&pair, &zero(), 0.0, &[0.0, 0.0], 1.0, 4).unwrap();
        assert!(matches!(sol.dense_eval(1.5), Err(RkError::OutsideWindow { .. })));
        assert!(matches!(sol.dense_eval(-0.1), Err(RkError::OutsideWindow { .. })));
        assert_eq!(sol.locate(0.25).unwrap(), 0);
        assert_eq!(sol.locate(0.2500001).unwrap(), 1);
        assert_eq!(sol.locate(1.0).unwrap(), 3);
    }

    #[test]
    fn nonfinite_rhs_reports_location() {
        let pair = builtin("dormand_prince").unwrap();
        let sys = FnSystem::new(1, |t: f64, _: &[f64], dx: &mut [f64]| {
            dx[0] = if t > 0.5 { f64::NAN } else { 1.0 }
        });
        let err = solve(&pair, &sys, 0.0, &[0.0], 1.0, &SolveOptions::new(1e-6)).unwrap_err();
        assert!(matches!(err.error, RkError::NonFiniteRhs { .. }));
        assert!(err.partial.t_last() <= 0.5);
    }

    #[test]
    fn bad_options_rejected() {
        let pair = builtin("dormand_prince").unwrap();
        let mut opts = SolveOptions::new(1e-6);
        opts.h_max = Some(1e-4);
        assert!(solve(&pair, &zero(), 0.0, &[0.0, 0.0], 1.0, &opts).is_err());
        assert!(solve(&pair, &zero(), 1.0, &[0.0, 0.0], 1.0, &SolveOptions::new(1e-6)).is_err());
        assert!(solve(&pair, &zero(), 0.0, &[0.0], 1.0, &SolveOptions::new(1e-6)).is_err());
    }
}
