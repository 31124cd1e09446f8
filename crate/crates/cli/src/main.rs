//! `rkforge` command-line front end.
//!
//! Pairs are given either as a tableau file or as `builtin:<name>`.
//! Plot data goes to CSV with a header row. Exit status is 0 on success,
//! 1 when a computation fails and 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rkforge::integrate::{solve, SolveOptions};
use rkforge::metrics::{self, ContinuousError, Window};
use rkforge::optimize::{rationalize, search, ObjectiveSpec, SearchConfig};
use rkforge::problems::{atol_grid, circle_test, problem, work_precision};
use rkforge::tableau::{construct_family, read_pair, verify_order, write_pair, FamilyParams};
use rkforge::{builtin, ContinuousPair};

/// Residuals above this make `verify` fail.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "rkforge", version, about = "Construct, analyse and run continuous Runge-Kutta pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a pair of the 9-stage family from its 11 free parameters.
    Derive {
        /// Eleven values (decimal or p/q), or a file containing them.
        #[arg(long, num_args = 1..=11, required = true, allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the order-condition residual table.
    Verify {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 6)]
        order: usize,
    },
    /// Tabulate the interpolant weights β_j(θ).
    Interp {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error norms, continuous error, variation and coefficient size.
    Metrics {
        #[arg(long)]
        pair: String,
    },
    /// Multi-start search over the family parameters.
    Optimize {
        #[arg(long, value_enum)]
        objective: Objective,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Snap the result to rationals with at most this denominator.
        #[arg(long)]
        rationalize: Option<i64>,
        /// Per-evaluation trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Adaptive integration of a test problem.
    Solve {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        problem: String,
        #[arg(long)]
        atol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary of the stability region as polylines.
    Stability {
        #[arg(long)]
        pair: String,
        #[arg(long, value_enum, default_value_t = Scale::EqualCost)]
        scale: Scale,
        /// re0,re1,im0,im1
        #[arg(long, default_value = "-5,1,-4,4", allow_hyphen_values = true)]
        window: String,
        #[arg(long, default_value_t = 401)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local error profile T_p(θ) of the interpolant.
    Dense {
        #[arg(long)]
        pair: String,
        #[arg(long, value_enum, default_value_t = Curve::T6)]
        curve: Curve,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Work-precision data, one CSV per pair and problem.
    Bench {
        /// Comma-separated pair sources.
        #[arg(long)]
        pairs: String,
        #[arg(long, default_value = "A3,D5,E2")]
        problems: String,
        /// hi:lo:step, e.g. 1e-3:1e-9:0.5dec
        #[arg(long, default_value = "1e-3:1e-9:0.5dec")]
        atols: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// One step h = π/2 on the rotation system.
    Circle {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    A,
    B,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Scale {
    EqualCost,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Curve {
    T5,
    T6,
    T7,
}

impl Curve {
    fn order(self) -> usize {
        match self {
            Curve::T5 => 5,
            Curve::T6 => 6,
            Curve::T7 => 7,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RKFORGE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("RKFORGE_THREADS={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Derive { params, out } => derive(&params, out.as_deref()),
        Command::Verify { pair, order } => {
            let pair = load_pair(&pair)?;
            let report = verify_order(&pair.tableau, pair.tableau.b().as_slice(), order)?;
            print!("{report}");
            let worst = report.max_residual();
            if worst > VERIFY_TOL {
                bail!("max residual {worst:.3e} exceeds {VERIFY_TOL:e}");
            }
            Ok(())
        }
        Command::Interp { pair, points, out } => {
            let pair = load_pair(&pair)?;
            check_out(out.as_deref())?;
            let interp = pair.interpolant.as_ref().ok_or(rkforge::RkError::NoInterpolant)?;
            let mut header = vec!["theta".to_string()];
            header.extend((1..=interp.stages()).map(|j| format!("beta{j}")));
            let rows = grid(points)?.into_iter().map(|t| {
                let mut row = vec![t];
                row.extend(interp.weights_at(t).iter());
                row
            });
            write_csv(out.as_deref(), &header, rows)
        }
        Command::Metrics { pair } => {
            let pair = load_pair(&pair)?;
            print_metrics(&pair)
        }
        Command::Optimize {
            objective,
            starts,
            budget,
            seed,
            out,
            rationalize: den,
            trace,
        } => {
            check_out(Some(&out))?;
            check_out(trace.as_deref())?;
            let spec = match objective {
                Objective::A => ObjectiveSpec::a(),
                Objective::B => ObjectiveSpec::b(),
            };
            let cfg = SearchConfig {
                starts,
                budget,
                seed,
                initial: None,
            };
            let result = search(&spec, &cfg)?;
            println!("objective {:.6e} after {} evaluations", result.value, result.evaluations);
            println!("params {}", join(&result.params.to_array()));
            let mut pair = result.pair;
            if let Some(den) = den {
                let r = rationalize(&spec, &result.params, den)?;
                let ratios: Vec<String> = r.ratios.iter().map(|q| q.to_string()).collect();
                println!("rational {}", ratios.join(" "));
                println!(
                    "objective {:.6e} -> {:.6e} (drift {:.2e})",
                    r.objective_before,
                    r.objective_after,
                    r.relative_drift()
                );
                pair = r.pair;
            }
            if let Some(path) = trace {
                let rows = result.trace.iter().map(|e| {
                    vec![
                        e.start.to_string(),
                        e.eval.to_string(),
                        format!("{:e}", e.value),
                        e.feasible.to_string(),
                    ]
                });
                write_csv_str(Some(&path), &["start", "eval", "objective", "feasible"], rows)?;
            }
            fs::write(&out, write_pair(&pair)).with_context(|| format!("writing {}", out.display()))?;
            print_metrics(&pair)
        }
        Command::Solve {
            pair,
            problem: name,
            atol,
            out,
        } => {
            let pair = load_pair(&pair)?;
            let prob = problem(&name)?;
            check_out(out.as_deref())?;
            let sol = solve(&pair, &prob, prob.t0, &prob.x0, prob.t_end, &SolveOptions::new(atol))
                .map_err(|f| anyhow!("{}", f.error))?;
            let n_err = sol.steps.iter().map(|s| s.errors.len()).max().unwrap_or(0);
            let mut header = vec!["t".to_string(), "h".to_string()];
            header.extend((1..=sol.dim).map(|j| format!("x{j}")));
            header.extend((1..=n_err).map(|k| format!("E{k}")));
            let rows = sol.steps.iter().enumerate().map(|(k, s)| {
                let mut row = vec![sol.ts[k + 1], s.h];
                row.extend(&sol.xs[k + 1]);
                row.extend(&s.errors);
                row.resize(header.len(), f64::NAN);
                row
            });
            write_csv(out.as_deref(), &header, rows)?;
            let err = rkforge::problems::max_endpoint_error(&prob, &sol)?;
            eprintln!(
                "steps {} rejections {} rhs_evals {} max_error {:.3e}",
                sol.steps.len(),
                sol.rejections,
                sol.rhs_evals,
                err
            );
            Ok(())
        }
        Command::Stability {
            pair,
            scale,
            window,
            resolution,
            out,
        } => {
            let pair = load_pair(&pair)?;
            let w = parse_window(&window, resolution)?;
            check_out(out.as_deref())?;
            let poly = metrics::stability_polynomial(&pair.tableau, pair.tableau.b().as_slice())?;
            let factor = match scale {
                Scale::Unit => 1.0,
                Scale::EqualCost => evaluations_per_step(&pair),
            };
            let lines = metrics::stability_region(&poly, factor, &w)?;
            let rows = lines.iter().enumerate().flat_map(|(k, line)| {
                line.iter()
                    .map(move |&(re, im)| vec![k.to_string(), format!("{re:e}"), format!("{im:e}")])
            });
            write_csv_str(out.as_deref(), &["line", "re", "im"], rows)
        }
        Command::Dense {
            pair,
            curve,
            points,
            out,
        } => {
            let pair = load_pair(&pair)?;
            check_out(out.as_deref())?;
            let profile = ContinuousError::new(&pair, curve.order())?;
            let rows = grid(points)?.into_iter().map(|t| vec![t, profile.at(t)]);
            write_csv(out.as_deref(), &["theta".into(), format!("T{}", curve.order())], rows)
        }
        Command::Bench {
            pairs,
            problems,
            atols,
            out,
        } => bench(&pairs, &problems, &atols, &out),
        Command::Circle { pair, out } => {
            let pair = load_pair(&pair)?;
            check_out(out.as_deref())?;
            let report = circle_test(&pair, std::f64::consts::FRAC_PI_2)?;
            let rows = report
                .curve
                .iter()
                .map(|p| vec![p.theta, p.x[0], p.x[1], p.error[0], p.error[1]]);
            write_csv(
                out.as_deref(),
                &["theta", "x", "y", "err_x", "err_y"].map(String::from),
                rows,
            )?;
            eprintln!("endpoint error {:.6e}", report.endpoint_error);
            for (i, (c, x)) in report.stages.iter().enumerate() {
                eprintln!("X{} c={c:.6} ({:.6}, {:.6})", i + 1, x[0], x[1]);
            }
            Ok(())
        }
    }
}

fn derive(params: &[String], out: Option<&Path>) -> Result<()> {
    let values = if params.len() == 1 {
        let text = fs::read_to_string(&params[0]).with_context(|| format!("reading {}", params[0]))?;
        text.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(parse_number)
            .collect::<Result<Vec<_>>>()?
    } else {
        params.iter().map(|s| parse_number(s)).collect::<Result<Vec<_>>>()?
    };
    let array: [f64; 11] = values
        .try_into()
        .map_err(|v: Vec<f64>| anyhow!("expected 11 parameters, got {}", v.len()))?;
    check_out(out)?;
    let pair = construct_family(&FamilyParams::from_array(array))?;
    let report = verify_order(&pair.tableau, pair.tableau.b().as_slice(), 6)?;
    print!("{report}");
    println!("orders (embedded, main) = {:?}", pair.orders);
    match out {
        Some(path) => fs::write(path, write_pair(&pair)).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", write_pair(&pair)),
    }
    Ok(())
}

fn bench(pairs: &str, problems: &str, atols: &str, out: &Path) -> Result<()> {
    let atols = parse_atols(atols)?;
    let probs = problems
        .split(',')
        .map(|name| problem(name.trim()).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    let pairs = pairs
        .split(',')
        .map(|src| Ok((pair_label(src), load_pair(src)?)))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (label, pair) in &pairs {
        for prob in &probs {
            let wp = work_precision(pair, prob, &atols);
            for (atol, e) in &wp.missing {
                eprintln!("{label}/{}: atol {atol:e} failed: {e}", prob.kind.name());
            }
            let path = out.join(format!("{label}_{}.csv", prob.kind.name()));
            let rows = wp.points.iter().map(|p| {
                vec![
                    format!("{:e}", p.atol),
                    p.rhs_evals.to_string(),
                    format!("{:e}", p.max_error),
                    p.rejections.to_string(),
                ]
            });
            write_csv_str(Some(&path), &["atol", "rhs_evals", "max_error", "rejections"], rows)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn print_metrics(pair: &ContinuousPair) -> Result<()> {
    let r = metrics::report(pair)?;
    println!("T5        {:.4e}", r.t5);
    println!("T6        {:.4e}", r.t6);
    println!("T7        {:.4e}", r.t7);
    if let Some((theta, v)) = r.max_t6 {
        println!("max T6(θ) {v:.4e} at θ = {theta:.4}");
    }
    if let Some(v) = r.variation {
        println!("V         {v:.4}");
    }
    println!("max|a|    {:.4}", r.max_abs_a);
    for (k, t5) in r.d_t5.iter().enumerate() {
        println!("T5(b+d{}) {t5:.4e}", k + 1);
    }
    Ok(())
}

/// Right-hand-side evaluations per accepted step.
fn evaluations_per_step(pair: &ContinuousPair) -> f64 {
    let s = pair.stages();
    if pair.tableau.fsal_stage().is_some() {
        (s - 1) as f64
    } else {
        s as f64
    }
}

fn load_pair(src: &str) -> Result<ContinuousPair> {
    if let Some(name) = src.strip_prefix("builtin:") {
        return Ok(builtin(name)?);
    }
    let text = fs::read_to_string(src).with_context(|| format!("reading {src}"))?;
    read_pair(&text).with_context(|| format!("parsing {src}"))
}

fn pair_label(src: &str) -> String {
    match src.strip_prefix("builtin:") {
        Some(name) => name.to_string(),
        None => Path::new(src)
            .file_stem()
            .map_or_else(|| src.to_string(), |s| s.to_string_lossy().into_owned()),
    }
}

/// Refuse an output path whose directory does not exist, before any work starts.
fn check_out(path: Option<&Path>) -> Result<()> {
    if let Some(dir) = path.and_then(Path::parent) {
        if !dir.as_os_str().is_empty() && !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    Ok(())
}

fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>()? / q.trim().parse::<f64>()?,
        None => s.parse::<f64>()?,
    };
    if !v.is_finite() {
        bail!("`{s}` is not a finite number");
    }
    Ok(v)
}

fn parse_window(s: &str, resolution: usize) -> Result<Window> {
    let v = s.split(',').map(parse_number).collect::<Result<Vec<_>>>()?;
    let [re0, re1, im0, im1] = v[..] else {
        bail!("window needs four values re0,re1,im0,im1");
    };
    let ny = ((resolution as f64) * (im1 - im0) / (re1 - re0)).round().max(2.0) as usize;
    Ok(Window::new((re0, re1), (im0, im1), resolution, ny))
}

/// `hi:lo:step` with the step written as `<x>dec` (decades per point).
fn parse_atols(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [hi, lo, step] = parts[..] else {
        bail!("atols must be hi:lo:step, e.g. 1e-3:1e-9:0.5dec");
    };
    let step = parse_number(step.trim_end_matches("dec"))?;
    Ok(atol_grid(parse_number(hi)?, parse_number(lo)?, 1.0 / step)?)
}

fn grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        bail!("need at least two grid points");
    }
    Ok((0..points).map(|k| k as f64 / (points - 1) as f64).collect())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ")
}

fn write_csv<I>(path: Option<&Path>, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let rows = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| format!("{v:e}")).collect::<Vec<_>>());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv_str(path, &header, rows)
}

fn write_csv_str<I>(path: Option<&Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let sink: Box<dyn std::io::Write> = match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
