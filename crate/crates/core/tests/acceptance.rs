//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkforge::integrate::{solve, solve_fixed, step, FnSystem, SolveOptions};
use rkforge::metrics::{self, stability_polynomial};
use rkforge::optimize::{search, ObjectiveSpec, SearchConfig};
use rkforge::problems::{circle_test, max_endpoint_error, problem, TestProblem};
use rkforge::tableau::{a85_residual, construct_family, q_vector, ContinuousPair};
use rkforge::{builtin, builtin_names};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn same_4_sig(value: f64, expected: f64) -> bool {
    format!("{value:.3e}") == format!("{expected:.3e}")
}

fn criterion_1() -> Outcome {
    let dp = builtin("dormand_prince").map_err(|e| e.to_string())?;
    let a = dp.tableau.a().clone();
    let b = dp.tableau.b().clone();
    let b4 = &b + &dp.d_basis[0];
    let mix = &b / 3.0 + &b4 * (2.0 / 3.0);
    let rows: [(&str, &DVector<f64>, usize, f64); 6] = [
        ("T6(b)", &b, 6, 3.9908e-4),
        ("T7(b)", &b, 7, 3.9557e-3),
        ("T5(b4)", &b4, 5, 1.1829e-3),
        ("T6(b4)", &b4, 6, 1.8237e-3),
        ("T7(b4)", &b4, 7, 4.1405e-3),
        ("T5(b/3+2b4/3)", &mix, 5, 7.8863e-4),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, x, p, want) in rows {
        let got = metrics::endpoint_error(&dp, x.as_slice(), p).map_err(|e| e.to_string())?;
        let oracle = common::t_norm(&a, x, 1.0, p);
        let good = same_4_sig(got, want) && (got - oracle).abs() <= 1e-12 * oracle;
        ok &= good;
        notes.push(format!("{name}={got:.5e}"));
    }
    check(ok, notes.join(" "))
}

fn criterion_2() -> Outcome {
    let dp = builtin("dormand_prince").map_err(|e| e.to_string())?;
    let want = [(3, 9.0 / 2000.0), (4, 28.0 / 375.0), (5, 2536.0 / 10935.0), (6, 71.0 / 330.0)];
    let mut worst: f64 = 0.0;
    for (i, w) in want {
        let got = metrics::stage_error(&dp.tableau, i, 3).map_err(|e| e.to_string())?;
        worst = worst.max((got - w).abs());
    }
    check(worst < 1e-12, format!("max deviation {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let pair = builtin("table46").map_err(|e| e.to_string())?;
    let a = pair.tableau.a().clone();
    let b = pair.tableau.b().clone();
    let endpoint = (1..=6)
        .map(|p| common::max_residual(&a, &b, 1.0, p))
        .fold(0.0, f64::max);
    let rows = pair.interpolant.as_ref().ok_or("no interpolant")?.coeffs().clone();
    let mut continuous: f64 = 0.0;
    for k in 0..=10 {
        let theta = k as f64 / 10.0;
        let beta = common::beta(&rows, theta);
        for p in 1..=5 {
            continuous = continuous.max(common::max_residual(&a, &beta, theta, p));
        }
    }
    let b9_zero = b[8] == 0.0;
    check(
        endpoint < 1e-13 && continuous < 1e-10 && b9_zero,
        format!("order<=6 residual {endpoint:.2e}, continuous order-5 residual {continuous:.2e}, b9 = {}", b[8]),
    )
}

/// Every invariant the family construction promises, checked from the raw coefficients.
fn family_violations(pair: &ContinuousPair, params: &rkforge::FamilyParams) -> Vec<String> {
    let mut bad = Vec::new();
    let tab = &pair.tableau;
    let (a, c, b) = (tab.a().clone(), tab.c().clone(), tab.b().clone());
    let scale = tab.max_abs_coefficient().max(1.0);
    // rows 1..8 are assembled directly; row 9 is b, whose sum is the order-1 condition
    for i in 0..9 {
        let tol = if i == 8 { 1e-9 } else { 1e-12 * scale };
        if (a.row(i).sum() - c[i]).abs() > tol {
            bad.push(format!("row sum {}", i + 1));
        }
    }
    let q1 = q_vector(tab, 1);
    let aq1 = &a * &q1;
    let q2 = q_vector(tab, 2);
    let tol = 1e-10 * scale * scale;
    for i in 0..9 {
        if i != 1 && q1[i].abs() > tol {
            bad.push(format!("q1[{}]", i + 1));
        }
        if i != 2 && aq1[i].abs() > tol {
            bad.push(format!("(A q1)[{}]", i + 1));
        }
        if i != 1 && i != 2 && q2[i].abs() > tol {
            bad.push(format!("q2[{}]", i + 1));
        }
    }
    for p in 1..=5 {
        if common::max_residual(&a, &b, 1.0, p) >= 1e-9 {
            bad.push(format!("endpoint order {p}"));
        }
    }
    let rows = pair.interpolant.as_ref().unwrap().coeffs().clone();
    for k in 0..=10 {
        let theta = k as f64 / 10.0;
        let beta = common::beta(&rows, theta);
        for p in 1..=5 {
            if common::max_residual(&a, &beta, theta, p) >= 1e-9 {
                bad.push(format!("continuous order {p} at θ = {theta}"));
            }
        }
    }
    let d0 = common::beta_prime(&rows, 0.0);
    let d1 = common::beta_prime(&rows, 1.0);
    for j in 0..9 {
        let e0 = if j == 0 { 1.0 } else { 0.0 };
        let e1 = if j == 8 { 1.0 } else { 0.0 };
        if (d0[j] - e0).abs() > 1e-9 * scale || (d1[j] - e1).abs() > 1e-9 * scale {
            bad.push(format!("C1 end condition, stage {}", j + 1));
        }
    }
    let (v, n) = metrics::variation(pair.interpolant.as_ref().unwrap());
    if (v - (1.0 + 2.0 * n)).abs() >= 1e-10 * v.max(1.0) {
        bad.push(format!("V = {v}, N = {n}"));
    }
    // the a85 equation is affine: zero second difference, root at the constructed value
    let a85 = a[(7, 4)];
    let r = |x: f64| a85_residual(params, x);
    let (r0, r1, r2) = (r(0.0), r(1.0), r(2.0));
    let size = r0.abs().max(r1.abs()).max(r2.abs()).max(1e-300);
    if (r2 - 2.0 * r1 + r0).abs() > 1e-9 * size || r(a85).abs() > 1e-9 * size.max((r1 - r0).abs() * a85.abs()) {
        bad.push("a85 affinity".into());
    }
    bad
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut built = 0;
    let mut refused = 0;
    let mut failures = Vec::new();
    for draw in 0..1000 {
        let params = common::random_params(&mut rng);
        match construct_family(&params) {
            Ok(pair) => {
                built += 1;
                let bad = family_violations(&pair, &params);
                if !bad.is_empty() {
                    failures.push(format!("draw {draw}: {}", bad.join(", ")));
                }
            }
            Err(_) => refused += 1,
        }
    }
    let msg = format!("{built} constructed, {refused} refused, {} violating", failures.len());
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; first: {}", failures[0]))
    }
}

fn criterion_5() -> Outcome {
    let seed = 1;
    let cfg = SearchConfig {
        starts: 64,
        budget: 2000,
        seed,
        initial: None,
    };
    let a = search(&ObjectiveSpec::a(), &cfg).map_err(|e| e.to_string())?;
    let (_, max_t6) = a.report.max_t6.unwrap();
    let v = a.report.variation.unwrap();
    let b = search(&ObjectiveSpec::b(), &cfg).map_err(|e| e.to_string())?;
    let (t6, t7) = (b.report.t6, b.report.t7);
    // independent re-evaluation of the reported figures
    let oracle_t6 = common::t_norm(b.pair.tableau.a(), b.pair.tableau.b(), 1.0, 6);
    let ok_a = max_t6 <= 1.5e-4 && v <= 2.0;
    let ok_b = t6 <= 2e-5 && t7 <= 10.0 * t6 && (oracle_t6 - t6).abs() <= 1e-10 * t6;
    check(
        ok_a && ok_b,
        format!(
            "A: max T6(θ) = {max_t6:.4e}, V = {v:.4}; B: T6 = {t6:.4e}, T7/T6 = {:.3}",
            t7 / t6
        ),
    )
}

fn a3_system() -> TestProblem {
    problem("A3").unwrap()
}

fn fixed_step_errors(pair: &ContinuousPair) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), String> {
    let p = a3_system();
    let mut hs = Vec::new();
    let mut global = Vec::new();
    let mut estimates = Vec::new();
    for k in 4..=9 {
        let n = 1usize << k;
        let sol = solve_fixed(pair, &p, p.t0, &p.x0, p.t_end, n).map_err(|e| e.to_string())?;
        let exact = (p.t_end.sin()).exp();
        hs.push((p.t_end - p.t0) / n as f64);
        global.push((sol.x_last()[0] - exact).abs());
        estimates.push(
            sol.steps
                .iter()
                .flat_map(|s| s.errors.iter().copied())
                .fold(0.0, f64::max),
        );
    }
    Ok((hs, global, estimates))
}

/// Largest interior dense-output error against the exact local solution through each step start.
///
/// A3 is linear, so the solution through `(t_k, x_k)` is `x_k exp(sin t - sin t_k)`.
fn dense_local_errors(pair: &ContinuousPair) -> Result<(Vec<f64>, Vec<f64>), String> {
    let p = a3_system();
    let mut hs = Vec::new();
    let mut worst = Vec::new();
    for k in 4..=9 {
        let n = 1usize << k;
        let sol = solve_fixed(pair, &p, p.t0, &p.x0, p.t_end, n).map_err(|e| e.to_string())?;
        let mut w: f64 = 0.0;
        for s in 0..n {
            let (t0, t1, x0) = (sol.ts[s], sol.ts[s + 1], sol.xs[s][0]);
            for j in 1..12 {
                let t = t0 + (t1 - t0) * j as f64 / 12.0;
                let x = sol.dense_eval(t).map_err(|e| e.to_string())?;
                w = w.max((x[0] - x0 * (t.sin() - t0.sin()).exp()).abs());
            }
        }
        hs.push((p.t_end - p.t0) / n as f64);
        worst.push(w);
    }
    Ok((hs, worst))
}

fn criterion_6() -> Outcome {
    let constructed = builtin("opt_a").map_err(|e| e.to_string())?;
    let table46 = builtin("table46").map_err(|e| e.to_string())?;
    let (hs, g5, est) = fixed_step_errors(&constructed)?;
    let (_, g6, _) = fixed_step_errors(&table46)?;
    let s5 = common::loglog_slope(&hs, &g5);
    let s6 = common::loglog_slope(&hs, &g6);
    let se = common::loglog_slope(&hs, &est);
    let (dense_h, dense) = dense_local_errors(&constructed)?;
    let sd = common::loglog_slope(&dense_h, &dense);
    check(
        (s5 - 5.0).abs() <= 0.2 && (s6 - 6.0).abs() <= 0.2 && (se - 5.0).abs() <= 0.2 && (sd - 6.0).abs() <= 0.3,
        format!("global order-5 slope {s5:.3}, table46 slope {s6:.3}, estimate slope {se:.3}, dense slope {sd:.3}"),
    )
}

fn criterion_7() -> Outcome {
    let mut pairs: Vec<(String, ContinuousPair)> = Vec::new();
    for name in builtin_names() {
        pairs.push((name.to_string(), builtin(name).map_err(|e| e.to_string())?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    while pairs.len() < builtin_names().len() + 10 {
        if let Ok(pair) = construct_family(&common::random_params(&mut rng)) {
            pairs.push((format!("random {}", pairs.len()), pair));
        }
    }
    let mut worst: (f64, String) = (0.0, String::new());
    for (name, pair) in &pairs {
        let r = stability_polynomial(&pair.tableau, pair.tableau.b().as_slice()).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let z: f64 = rng.gen_range(-2.0..2.0);
            let h: f64 = rng.gen_range(0.01..1.0);
            let lambda = z / h;
            let sys = FnSystem::new(1, move |_: f64, x: &[f64], dx: &mut [f64]| dx[0] = lambda * x[0]);
            let out = step(pair, &sys, 0.0, &[1.0], h, None).map_err(|e| e.to_string())?;
            let dev = (out.x_next[0] - r.eval_real(lambda * h)).abs();
            if dev > worst.0 {
                worst = (dev, name.clone());
            }
        }
    }
    check(worst.0 <= 1e-14, format!("{} pairs, max |x1 - R(λh) x0| = {:.2e} ({})", pairs.len(), worst.0, worst.1))
}

fn criterion_8() -> Outcome {
    let atols: Vec<f64> = (0..=12).map(|k| 1e-3 * 10f64.powf(-0.5 * k as f64)).collect();
    let mut worst_ratio: f64 = 0.0;
    let mut problems = Vec::new();
    for name in builtin_names() {
        let pair = builtin(name).map_err(|e| e.to_string())?;
        let s = pair.stages();
        for prob in ["A3", "rotation"] {
            let p = problem(prob).unwrap();
            for &atol in &atols {
                let sol = solve(&pair, &p, p.t0, &p.x0, p.t_end, &SolveOptions::new(atol))
                    .map_err(|f| format!("{name}/{prob}/{atol:e}: {f}"))?;
                let err = max_endpoint_error(&p, &sol).map_err(|e| e.to_string())?;
                worst_ratio = worst_ratio.max(err / atol);
                if err > 100.0 * atol {
                    problems.push(format!("{name}/{prob}/{atol:.1e}: error {err:.2e}"));
                }
                if sol.steps.iter().any(|st| st.errors.iter().any(|e| *e > atol)) {
                    problems.push(format!("{name}/{prob}/{atol:.1e}: accepted estimate above atol"));
                }
                if sol.steps.iter().skip(1).any(|st| st.evals != s - 1) || sol.steps[0].evals != s {
                    problems.push(format!("{name}/{prob}/{atol:.1e}: evaluation count"));
                }
                let attempts: usize = sol.rhs_evals;
                if attempts < sol.steps.len() * (s - 1) + 1 {
                    problems.push(format!("{name}/{prob}/{atol:.1e}: total count too small"));
                }
            }
        }
    }
    let msg = format!("max error/atol = {worst_ratio:.2}");
    if problems.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", problems.join("; ")))
    }
}

/// Dense polynomial of a linear problem applied to `x0`: `x0 + Σ_k (β(θ)·A^{k−1} 1) (hJ)^k x0`.
fn linear_dense(pair: &ContinuousPair, j: &DMatrix<f64>, x0: &DVector<f64>, h: f64, theta: f64) -> DVector<f64> {
    let rows = pair.interpolant.as_ref().unwrap().coeffs().clone();
    let beta = common::beta(&rows, theta);
    let a = pair.tableau.a();
    let mut out = x0.clone();
    let mut v = DVector::from_element(a.nrows(), 1.0);
    let mut power = x0.clone();
    for _ in 0..a.nrows() {
        power = j * power * h;
        out += &power * beta.dot(&v);
        v = a * v;
    }
    out
}

fn criterion_9() -> Outcome {
    let h = PI / 2.0;
    let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let x0 = DVector::from_vec(vec![1.0, 0.0]);
    let rot = |_: f64, x: &[f64]| vec![-x[1], x[0]];
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["table46", "opt_a"] {
        let pair = builtin(name).map_err(|e| e.to_string())?;
        let report = circle_test(&pair, h).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for pt in &report.curve {
            let reference = common::rk4(rot, 0.0, &[1.0, 0.0], pt.theta * h, 20_000);
            let poly = linear_dense(&pair, &j, &x0, h, pt.theta);
            let oracle = [poly[0] - reference[0], poly[1] - reference[1]];
            let size = oracle[0].hypot(oracle[1]);
            let diff = (pt.error[0] - oracle[0]).hypot(pt.error[1] - oracle[1]);
            worst = worst.max(diff / size);
        }
        ok &= report.endpoint_error < 1e-3 && worst <= 0.1;
        notes.push(format!(
            "{name}: endpoint error {:.2e}, curve mismatch {:.1e}",
            report.endpoint_error, worst
        ));
    }
    check(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("metrics oracle (Dormand-Prince T_p)", Duration::from_secs(1), criterion_1),
        ("stage errors T3", Duration::from_secs(1), criterion_2),
        ("golden (4,6) pair", Duration::from_secs(1), criterion_3),
        ("family property suite", Duration::from_secs(60), criterion_4),
        ("optimization reproduction", Duration::from_secs(600), criterion_5),
        ("convergence orders", Duration::from_secs(30), criterion_6),
        ("linear-problem identity", Duration::from_secs(5), criterion_7),
        ("tolerance proportionality", Duration::from_secs(60), criterion_8),
        ("circle test", Duration::from_secs(5), criterion_9),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; too slow (limit {limit:?})")),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{name}]: {} in {:.2}s: {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
