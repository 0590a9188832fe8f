use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use nodal_lab::constants::{
    corollary_bound, rho_k, theorem3_tau, theta_k_j, OperatorKind,
};
use nodal_lab::local_model::{corollary4_certify, lemma5_certify};
use nodal_lab::nodal::loops_inside_ball;
use nodal_lab::output::{envelope, loops_svg, to_csv, write_atomic, write_json};
use nodal_lab::report;
use nodal_lab::simulator::{
    build_ensemble, eval_coeffs_1d, eval_section, nodal_extract, sample_section,
};
use nodal_lab::spectral_domain::SymbolBody;
use nodal_lab::transversality::window_loops;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_CERT_FAIL: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "nodal-lab", version, about = "Numerical laboratory for nodal sets of band-limited Gaussian fields")]
struct Cli {
    /// Worker-count cap; accepted for compatibility, execution is
    /// single-threaded and results never depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Laplace,
    Dtn,
}

#[derive(Clone, ValueEnum)]
enum Builtin {
    Lemma5,
    Cor4,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the explicit constants chain (rho, theta, tau, probability
    /// and density lower bounds) for the homogeneous ensembles.
    Constants {
        #[arg(long)]
        n: usize,
        /// Paley-Wiener sup-norm constant c_pg.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Paley-Wiener gradient constant d_pg.
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Volume of the base manifold.
        #[arg(long, default_value_t = 1.0)]
        vol: f64,
        #[arg(long, value_enum, default_value = "laplace")]
        op: OpArg,
        /// Emit JSON (the default and only format; flag kept for scripts).
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the truncated barrier q_{i,c} on the window W_eta and report
    /// its nodal topology.
    Localmodel {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in certification (exit 0 iff the pair certifies).
    Certify {
        #[arg(long, value_enum)]
        builtin: Builtin,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Window scale for cor4 (defaults to c/96).
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo over random band-limited sections on the torus.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rescaled ball radius for the loop-containment count.
        #[arg(long, default_value_t = 10.0)]
        r: f64,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-trial nodal-loop SVGs.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
        /// Also write the per-trial table as CSV next to --out.
        #[arg(long)]
        csv: bool,
    },
    /// Count lattice modes and report the Weyl ratio N_L / L.
    Weyl {
        #[arg(long)]
        n: usize,
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite and print a markdown pass/fail table.
    Report {
        /// Run only these criterion ids (1-12).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(v: &serde_json::Value, out: &Option<PathBuf>) -> Result<(), String> {
    match out {
        Some(p) => write_json(p, v).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
            Ok(())
        }
    }
}

fn run_constants(
    n: usize,
    c: f64,
    d: f64,
    vol: f64,
    op: OpArg,
    out: &Option<PathBuf>,
) -> Result<u8, String> {
    let kind = match op {
        OpArg::Laplace => OperatorKind::Laplace,
        OpArg::Dtn => OperatorKind::Dtn,
    };
    let body = SymbolBody::ball(n, 1.0).map_err(|e| e.to_string())?;
    let rho = rho_k(&body, 1.0).map_err(|e| e.to_string())?;
    let theta = theta_k_j(&body, 1.0, 1).map_err(|e| e.to_string())?;
    let chain = corollary_bound(n, kind, vol).map_err(|e| e.to_string())?;
    let config = json!({"n": n, "c": c, "d": d, "vol": vol, "op": kind});
    let results = json!({
        "rho": rho.value,
        "theta": theta.value,
        "tau_thm3": theorem3_tau(n, c, d),
        "p_lower": chain.p_lower.to_logreal(),
        "c_lower": chain.c_lower.to_logreal(),
        "chain_checks": chain.checks,
    });
    emit(&envelope("constants", &config, &results), out)?;
    Ok(EXIT_OK)
}

fn run_localmodel(
    n: usize,
    i: usize,
    c: f64,
    eta: f64,
    grid: usize,
    svg: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<u8, String> {
    let (cert, topo, field) = match corollary4_certify(n, i, c, eta, grid) {
        Ok(v) => v,
        Err(nodal_lab::local_model::LocalModelError::CertificationFailed(msg)) => {
            eprintln!("certification failed: {msg}");
            return Ok(EXIT_CERT_FAIL);
        }
        Err(e) => return Err(e.to_string()),
    };
    if let Some(p) = svg {
        let summary = window_loops(&field);
        let half = 5f64.sqrt() * 1.02;
        let svg_doc = loops_svg(&summary.loops, &[(0.0, 0.0, 5f64.sqrt())], half);
        write_atomic(p, svg_doc.as_bytes()).map_err(|e| e.to_string())?;
    }
    let config = json!({"n": n, "i": i, "c": c, "eta": eta, "grid": grid});
    let results = json!({"certificate": cert, "topology": topo});
    emit(&envelope("localmodel", &config, &results), out)?;
    Ok(EXIT_OK)
}

fn run_certify(
    builtin: Builtin,
    n: usize,
    i: usize,
    delta: f64,
    c: f64,
    eta: Option<f64>,
    grid: usize,
    out: &Option<PathBuf>,
) -> Result<u8, String> {
    let (name, outcome) = match builtin {
        Builtin::Lemma5 => ("lemma5", lemma5_certify(n, i, delta, grid).map(|(cert, _)| cert)),
        Builtin::Cor4 => {
            let eta = eta.unwrap_or(c / 96.0);
            ("cor4", corollary4_certify(n, i, c, eta, grid).map(|(cert, _, _)| cert))
        }
    };
    let config = json!({"builtin": name, "n": n, "i": i, "delta": delta, "c": c, "grid": grid});
    match outcome {
        Ok(cert) => {
            let results = json!({"certified": true, "certificate": cert});
            emit(&envelope("certify", &config, &results), out)?;
            Ok(EXIT_OK)
        }
        Err(nodal_lab::local_model::LocalModelError::CertificationFailed(msg)) => {
            let results = json!({"certified": false, "reason": msg});
            emit(&envelope("certify", &config, &results), out)?;
            Ok(EXIT_CERT_FAIL)
        }
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Serialize)]
struct TrialRecord {
    trial: u64,
    b0: usize,
    n_loops_in_ball: usize,
    sup_norm: f64,
    grad_sup: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    n: usize,
    l: f64,
    trials: usize,
    grid: usize,
    seed: u64,
    r: f64,
    out: &PathBuf,
    svg_dir: &Option<PathBuf>,
    csv: bool,
) -> Result<u8, String> {
    let e = build_ensemble(n, l).map_err(|e| e.to_string())?;
    e.check_nyquist(grid).map_err(|e| e.to_string())?;
    let radius = r / l.sqrt();
    let mut per_trial = Vec::with_capacity(trials);
    let mut b0_samples = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let s = sample_section(&e, seed, t);
        let summary = nodal_extract(&e, &s, grid).map_err(|e| e.to_string())?;
        let (n_in_ball, sup, grad) = if n == 2 {
            let field = eval_section(&e, &s, grid).map_err(|e| e.to_string())?;
            let sup = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let gsup = (0..field.node_count())
                .fold(0.0f64, |m, i| m.max(field.grad_norm(i)));
            (loops_inside_ball(&summary, [0.0, 0.0], radius, true), sup, gsup)
        } else {
            let (mut sup, mut grad, mut in_ball) = (0.0f64, 0.0f64, 0usize);
            for k in 0..grid {
                let x = -std::f64::consts::PI
                    + 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
                let (v, g) = eval_coeffs_1d(&e, &s.coeffs, x);
                sup = sup.max(v.abs());
                grad = grad.max(g.abs());
            }
            for z in &summary.zeros {
                if z.abs() < radius {
                    in_ball += 1;
                }
            }
            (in_ball, sup, grad)
        };
        if let Some(dir) = svg_dir {
            let doc = loops_svg(
                &summary.loops,
                &[(0.0, 0.0, radius)],
                std::f64::consts::PI,
            );
            write_atomic(&dir.join(format!("trial_{t:04}.svg")), doc.as_bytes())
                .map_err(|e| e.to_string())?;
        }
        b0_samples.push(summary.b0 as f64 / l.powf(n as f64 / 2.0));
        per_trial.push(TrialRecord {
            trial: t,
            b0: summary.b0,
            n_loops_in_ball: n_in_ball,
            sup_norm: sup,
            grad_sup: grad,
        });
    }
    let m = b0_samples.iter().sum::<f64>() / trials as f64;
    let var = b0_samples.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        / (trials as f64 - 1.0).max(1.0);
    let config = json!({
        "n": n, "L": l, "trials": trials, "grid": grid, "seed": seed, "R": r,
    });
    let results = json!({
        "N_L": e.n_l,
        "per_trial": per_trial,
        "aggregates": {"mean": m, "stderr": (var / trials as f64).sqrt()},
    });
    emit(&envelope("simulate", &config, &results), &Some(out.clone()))?;
    if csv {
        let rows: Vec<Vec<String>> = per_trial
            .iter()
            .map(|t| {
                vec![
                    t.trial.to_string(),
                    t.b0.to_string(),
                    t.n_loops_in_ball.to_string(),
                    format!("{:.6e}", t.sup_norm),
                    format!("{:.6e}", t.grad_sup),
                ]
            })
            .collect();
        let doc = to_csv(&["trial", "b0", "n_loops_in_ball", "sup_norm", "grad_sup"], &rows);
        write_atomic(&out.with_extension("csv"), doc.as_bytes()).map_err(|e| e.to_string())?;
    }
    Ok(EXIT_OK)
}

fn run_weyl(n: usize, l: f64, out: &Option<PathBuf>) -> Result<u8, String> {
    let e = build_ensemble(n, l).map_err(|e| e.to_string())?;
    let config = json!({"n": n, "L": l});
    let results = json!({"N_L": e.n_l, "ratio": e.n_l as f64 / l});
    emit(&envelope("weyl", &config, &results), out)?;
    Ok(EXIT_OK)
}

fn run_report(only: &Option<Vec<usize>>, out: &Option<PathBuf>) -> Result<u8, String> {
    let ids: Vec<usize> = match only {
        Some(v) => {
            if v.iter().any(|&i| !(1..=12).contains(&i)) {
                return Err("criterion ids must be in 1..=12".into());
            }
            v.clone()
        }
        None => (1..=12).collect(),
    };
    let results: Vec<_> = ids.iter().map(|&i| report::run_criterion(i)).collect();
    print!("{}", report::markdown_table(&results));
    if let Some(p) = out {
        let config = json!({"only": ids});
        emit(&envelope("report", &config, &results), &Some(p.clone()))?;
    }
    Ok(if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_CERT_FAIL })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // accepted for compatibility; see the concurrency note in the README
    let _ = cli.threads;
    let _ = std::env::var("NODAL_LAB_THREADS");
    let outcome = match &cli.cmd {
        Cmd::Constants { n, c, d, vol, op, json: _, out } => {
            run_constants(*n, *c, *d, *vol, *op, out)
        }
        Cmd::Localmodel { n, i, c, eta, grid, svg, json: _, out } => {
            run_localmodel(*n, *i, *c, *eta, *grid, svg, out)
        }
        Cmd::Certify { builtin, n, i, delta, c, eta, grid, out } => {
            run_certify(builtin.clone(), *n, *i, *delta, *c, *eta, *grid, out)
        }
        Cmd::Simulate { n, l, trials, grid, seed, r, out, svg_dir, csv } => {
            run_simulate(*n, *l, *trials, *grid, *seed, *r, out, svg_dir, *csv)
        }
        Cmd::Weyl { n, l, out } => run_weyl(*n, *l, out),
        Cmd::Report { only, out } => run_report(only, out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_PRECONDITION)
        }
    }
}
