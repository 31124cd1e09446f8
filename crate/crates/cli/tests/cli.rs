use std::process::{Command, Output};

use rkforge::tableau::{construct_family, read_pair, verify_order, FamilyParams};

const TABLE46: [&str; 11] = [
    "1/14",
    "3/14",
    "1/2",
    "9/14",
    "6/7",
    "1",
    "3/7",
    "-3855/5488",
    "45/56",
    "-94325/51192",
    "3773/6399",
];

fn rkforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rkforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fraction(s: &str) -> f64 {
    match s.split_once('/') {
        Some((p, q)) => p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

#[test]
fn verify_sixth_order_builtin() {
    let out = rkforge(&["verify", "--pair", "builtin:table46", "--order", "6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let residuals: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(residuals.len(), 6);
    assert!(residuals.iter().all(|r| *r < 1e-13));
}

#[test]
fn verify_fails_beyond_attained_order() {
    let out = rkforge(&["verify", "--pair", "builtin:dormand_prince", "--order", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("exceeds"));
}

#[test]
fn metrics_of_dormand_prince() {
    let out = rkforge(&["metrics", "--pair", "builtin:dormand_prince"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("T6") && l.ends_with("3.9908e-4")), "{text}");
    assert!(text.contains("11.5958"));
}

#[test]
fn duplicate_nodes_are_a_computation_failure() {
    let out = rkforge(&["derive", "--params", "0.1", "0.3", "0.3", "0.6", "0.8", "0.9", "0.5", "-0.5", "1", "-1", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("degenerate family"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rkforge(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(rkforge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(rkforge(&["stability", "--pair", "builtin:opt_a", "--scale", "huge"]).status.code(), Some(2));
}

#[test]
fn unknown_inputs_fail_cleanly() {
    assert_eq!(rkforge(&["metrics", "--pair", "builtin:nope"]).status.code(), Some(1));
    assert_eq!(rkforge(&["metrics", "--pair", "/does/not/exist.tbl"]).status.code(), Some(1));
    let out = rkforge(&["solve", "--pair", "builtin:opt_a", "--problem", "U3", "--atol", "1e-6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unavailable"));
    let out = rkforge(&["circle", "--pair", "builtin:opt_a", "--out", "/does/not/exist/c.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn derive_write_read_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t46.tbl");
    let mut args = vec!["derive", "--params"];
    args.extend(TABLE46);
    args.extend(["--out", path.to_str().unwrap()]);
    let out = rkforge(&args);
    assert!(out.status.success(), "{}", stderr(&out));

    let params = FamilyParams::from_array(TABLE46.map(fraction));
    let direct = construct_family(&params).unwrap();
    let back = read_pair(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let digits = |r: &rkforge::tableau::OrderReport| -> Vec<String> {
        r.per_order.iter().map(|o| format!("{:.17e}", o.max_abs)).collect()
    };
    let r1 = verify_order(&direct.tableau, direct.tableau.b().as_slice(), 6).unwrap();
    let r2 = verify_order(&back.tableau, back.tableau.b().as_slice(), 6).unwrap();
    assert_eq!(digits(&r1), digits(&r2));

    let verify = rkforge(&["verify", "--pair", path.to_str().unwrap()]);
    assert!(verify.status.success());
    assert_eq!(stdout(&verify), r2.to_string());
}

#[test]
fn derive_reads_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.txt");
    std::fs::write(&params, TABLE46.join("\n")).unwrap();
    let out = rkforge(&["derive", "--params", params.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("(4, 6)"));
}

#[test]
fn solve_writes_step_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("steps.csv");
    let out = rkforge(&["solve", "--pair", "builtin:opt_a", "--problem", "A3", "--atol", "1e-6", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,h,x1,E1,E2,E3");
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 20.0);
    assert!(stderr(&out).contains("rhs_evals"));
}

#[test]
fn plot_data_commands_emit_headers() {
    let cases: [(&[&str], &str); 4] = [
        (&["dense", "--pair", "builtin:opt_b", "--points", "11"], "theta,T6"),
        (&["circle", "--pair", "builtin:table46"], "theta,x,y,err_x,err_y"),
        (&["stability", "--pair", "builtin:opt_b", "--scale", "unit", "--resolution", "61"], "line,re,im"),
        (&["interp", "--pair", "builtin:opt_a", "--points", "3"], "theta,beta1,beta2,beta3,beta4,beta5,beta6,beta7,beta8,beta9"),
    ];
    for (args, header) in cases {
        let out = rkforge(args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        assert_eq!(stdout(&out).lines().next().unwrap(), header);
    }
    let circle = stdout(&rkforge(&["circle", "--pair", "builtin:table46"]));
    assert_eq!(circle.lines().count(), 12);
}

#[test]
fn bench_writes_one_file_per_pair_and_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = rkforge(&[
        "bench",
        "--pairs",
        "builtin:dormand_prince,builtin:opt_a",
        "--problems",
        "A3,E2",
        "--atols",
        "1e-3:1e-6:0.5dec",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["dormand_prince_A3", "dormand_prince_E2", "opt_a_A3", "opt_a_E2"] {
        let text = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert_eq!(text.lines().next().unwrap(), "atol,rhs_evals,max_error,rejections");
        assert_eq!(text.lines().count(), 8, "{name}");
    }
}

#[test]
fn optimize_writes_pair_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("b.tbl");
    let trace = dir.path().join("trace.csv");
    let out = rkforge(&[
        "optimize",
        "--objective",
        "a",
        "--starts",
        "2",
        "--budget",
        "60",
        "--seed",
        "3",
        "--rationalize",
        "1000",
        "--out",
        pair.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("rational "));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next().unwrap(), "start,eval,objective,feasible");
    assert_eq!(text.lines().count(), 121);
    let verify = rkforge(&["verify", "--pair", pair.to_str().unwrap(), "--order", "5"]);
    assert!(verify.status.success());
}
