//! Test problems with reference solutions, the work-precision harness and the
//! one-step rotation test.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Result, RkError};
use crate::integrate::{solve, step, OdeSystem, Solution, SolveOptions};
use crate::tableau::{builtin, ContinuousPair};

/// Eccentricity of the two-body orbit.
pub const KEPLER_ECCENTRICITY: f64 = 0.9;
/// Tolerance of the self-integrated van der Pol reference.
pub const E2_REFERENCE_ATOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// `x' = x cos t`.
    A3,
    /// Two-body orbit of eccentricity 0.9.
    D5,
    /// Van der Pol oscillator, μ = 1.
    E2,
    /// `x' = −y, y' = x`.
    Rotation,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::A3 => "A3",
            ProblemKind::D5 => "D5",
            ProblemKind::E2 => "E2",
            ProblemKind::Rotation => "rotation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestProblem {
    pub kind: ProblemKind,
    pub t0: f64,
    pub t_end: f64,
    pub x0: Vec<f64>,
}

/// Look up a problem by name (case-insensitive).
pub fn problem(name: &str) -> Result<TestProblem> {
    let upper = name.to_ascii_uppercase();
    let kind = match upper.as_str() {
        "A3" => ProblemKind::A3,
        "D5" => ProblemKind::D5,
        "E2" => ProblemKind::E2,
        "ROTATION" => ProblemKind::Rotation,
        u if u.len() == 2 && u.starts_with('U') && u.as_bytes()[1].is_ascii_digit() => {
            return Err(RkError::UnavailableProblem(name.to_string()))
        }
        _ => return Err(RkError::UnknownProblem(name.to_string())),
    };
    Ok(TestProblem::new(kind))
}

impl TestProblem {
    pub fn new(kind: ProblemKind) -> Self {
        let x0 = match kind {
            ProblemKind::A3 => vec![1.0],
            ProblemKind::D5 => {
                let e = KEPLER_ECCENTRICITY;
                vec![1.0 - e, 0.0, 0.0, ((1.0 + e) / (1.0 - e)).sqrt()]
            }
            ProblemKind::E2 => vec![2.0, 0.0],
            ProblemKind::Rotation => vec![1.0, 0.0],
        };
        TestProblem {
            kind,
            t0: 0.0,
            t_end: 20.0,
            x0,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Reference solution at `t` inside the window.
    pub fn reference(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= self.t0 && t <= self.t_end) {
            return Err(RkError::OutsideWindow {
                t,
                t0: self.t0,
                t1: self.t_end,
            });
        }
        match self.kind {
            ProblemKind::E2 => e2_reference().dense_eval(t),
            _ => Ok(self.exact(t).expect("closed form")),
        }
    }
}

impl OdeSystem for TestProblem {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        match self.kind {
            ProblemKind::A3 => dx[0] = x[0] * t.cos(),
            ProblemKind::D5 => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let r3 = r2 * r2.sqrt();
                dx[0] = x[2];
                dx[1] = x[3];
                dx[2] = -x[0] / r3;
                dx[3] = -x[1] / r3;
            }
            ProblemKind::E2 => {
                dx[0] = x[1];
                dx[1] = (1.0 - x[0] * x[0]) * x[1] - x[0];
            }
            ProblemKind::Rotation => {
                dx[0] = -x[1];
                dx[1] = x[0];
            }
        }
    }

    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        match self.kind {
            ProblemKind::A3 => Some(vec![t.sin().exp()]),
            ProblemKind::D5 => Some(kepler_state(KEPLER_ECCENTRICITY, t)),
            ProblemKind::E2 => None,
            ProblemKind::Rotation => Some(vec![t.cos(), t.sin()]),
        }
    }
}

/// Eccentric anomaly solving `E − ε sin E = M` by Newton's method.
pub fn eccentric_anomaly(eps: f64, mean: f64) -> f64 {
    let turns = (mean / (2.0 * PI)).round();
    let m = mean - turns * 2.0 * PI;
    let mut e = if eps > 0.8 { PI.copysign(m) } else { m };
    if m == 0.0 {
        e = 0.0;
    }
    for _ in 0..100 {
        let f = e - eps * e.sin() - m;
        let step = f / (1.0 - eps * e.cos());
        e -= step;
        if step.abs() <= 1e-15 * e.abs().max(1.0) {
            break;
        }
    }
    e + turns * 2.0 * PI
}

/// Position and velocity on the unit-semi-major-axis orbit starting at pericentre.
pub fn kepler_state(eps: f64, t: f64) -> Vec<f64> {
    let e = eccentric_anomaly(eps, t);
    let (s, c) = e.sin_cos();
    let w = (1.0 - eps * eps).sqrt();
    let denom = 1.0 - eps * c;
    vec![c - eps, w * s, -s / denom, w * c / denom]
}

fn e2_reference() -> &'static Solution {
    static REF: OnceLock<Solution> = OnceLock::new();
    REF.get_or_init(|| {
        let pair = builtin("table46").expect("builtin pair");
        let p = TestProblem::new(ProblemKind::E2);
        solve(&pair, &p, p.t0, &p.x0, p.t_end, &SolveOptions::new(E2_REFERENCE_ATOL))
            .expect("reference integration")
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkPrecisionPoint {
    pub atol: f64,
    pub rhs_evals: usize,
    /// Largest `‖x_k − x_ref(t_k)‖₂` over accepted step endpoints.
    pub max_error: f64,
    pub rejections: usize,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct WorkPrecision {
    pub points: Vec<WorkPrecisionPoint>,
    /// Tolerances whose solve failed.
    pub missing: Vec<(f64, RkError)>,
}

/// Largest endpoint error of a solution against the problem's reference.
pub fn max_endpoint_error(problem: &TestProblem, sol: &Solution) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (t, x) in sol.ts.iter().zip(&sol.xs) {
        let r = problem.reference(*t)?;
        let e = x
            .iter()
            .zip(&r)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(e);
    }
    Ok(worst)
}

/// One adaptive solve per tolerance.
pub fn work_precision(
    pair: &ContinuousPair,
    problem: &TestProblem,
    atols: &[f64],
) -> WorkPrecision {
    let mut out = WorkPrecision {
        points: Vec::new(),
        missing: Vec::new(),
    };
    for &atol in atols {
        let run = solve(
            pair,
            problem,
            problem.t0,
            &problem.x0,
            problem.t_end,
            &SolveOptions::new(atol),
        );
        let point = run
            .map_err(|f| f.error)
            .and_then(|sol| {
                Ok(WorkPrecisionPoint {
                    atol,
                    rhs_evals: sol.rhs_evals,
                    max_error: max_endpoint_error(problem, &sol)?,
                    rejections: sol.rejections,
                    steps: sol.steps.len(),
                })
            });
        match point {
            Ok(p) => out.points.push(p),
            Err(e) => out.missing.push((atol, e)),
        }
    }
    out
}

/// Tolerances from `hi` down to `lo` with `per_decade` points per decade.
pub fn atol_grid(hi: f64, lo: f64, per_decade: f64) -> Result<Vec<f64>> {
    if !(hi > 0.0 && lo > 0.0 && lo <= hi && per_decade > 0.0) {
        return Err(RkError::InvalidArgument("bad tolerance grid".into()));
    }
    let n = ((hi / lo).log10() * per_decade + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| hi * 10f64.powf(-(k as f64) / per_decade))
        .collect())
}

/// Ticks of the interpolant error curve.
pub const CIRCLE_TICKS: usize = 11;

#[derive(Clone, Debug, PartialEq)]
pub struct CirclePoint {
    pub theta: f64,
    pub x: [f64; 2],
    /// Interpolant minus exact solution.
    pub error: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleReport {
    pub h: f64,
    pub endpoint: [f64; 2],
    pub endpoint_error: f64,
    /// θ = k/12 for k = 1..=11.
    pub curve: Vec<CirclePoint>,
    /// Stage positions `X_i` with their node `c_i`.
    pub stages: Vec<(f64, [f64; 2])>,
}

impl CircleReport {
    /// Distance of stage `i` (one-based) from the exact point `(cos c_i h, sin c_i h)`.
    pub fn stage_deviation(&self, i: usize) -> f64 {
        let (c, x) = self.stages[i - 1];
        let a = c * self.h;
        ((x[0] - a.cos()).powi(2) + (x[1] - a.sin()).powi(2)).sqrt()
    }
}

/// One uncontrolled step of size `h` on the rotation system from `(1, 0)`.
pub fn circle_test(pair: &ContinuousPair, h: f64) -> Result<CircleReport> {
    let interp = pair.interpolant.as_ref().ok_or(RkError::NoInterpolant)?;
    let p = TestProblem::new(ProblemKind::Rotation);
    let x0 = [1.0, 0.0];
    let r = step(pair, &p, 0.0, &x0, h, None)?;
    let at = |w: &[f64]| {
        let mut x = x0;
        for (j, wj) in w.iter().enumerate() {
            x[0] += h * wj * r.stages[2 * j];
            x[1] += h * wj * r.stages[2 * j + 1];
        }
        x
    };
    let curve = (1..=CIRCLE_TICKS)
        .map(|k| {
            let theta = k as f64 / (CIRCLE_TICKS + 1) as f64;
            let x = at(interp.weights_at(theta).as_slice());
            let (s, c) = (theta * h).sin_cos();
            CirclePoint {
                theta,
                x,
                error: [x[0] - c, x[1] - s],
            }
        })
        .collect();
    let a = pair.tableau.a();
    let stages = (0..pair.stages())
        .map(|i| {
            let row: Vec<f64> = a.row(i).iter().copied().collect();
            (pair.tableau.c()[i], at(&row))
        })
        .collect();
    let endpoint = [r.x_next[0], r.x_next[1]];
    let (s, c) = h.sin_cos();
    Ok(CircleReport {
        h,
        endpoint,
        endpoint_error: ((endpoint[0] - c).powi(2) + (endpoint[1] - s).powi(2)).sqrt(),
        curve,
        stages,
    })
}
