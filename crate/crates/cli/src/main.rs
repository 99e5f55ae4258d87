//! `matsl`: command-line front end for the matrix Sturm–Liouville library.
//!
//! Exit codes: 0 on success, 1 on invalid input or failed verification,
//! 2 on numerical failure. The error name is printed to stderr.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use matsl_core::asymptotics::{extract_r_A, kappa_report, weight_gap_report};
use matsl_core::basis::{build_Y, frame_bounds, gram, MIN_GRID};
use matsl_core::graphs::{bipartite_normalize, general_reduction, graph_from_json};
use matsl_core::inverse::{algorithm_T12, recover_T1, WeylSeriesConfig};
use matsl_core::io::{
    dataset_from_json, dataset_to_csv, dataset_to_json, matrix_to_json, problem_from_json,
    problem_to_json, read_json_file, to_string,
};
use matsl_core::linalg::{hermitian_eigen, max_abs, numerical_rank, CMat};
use matsl_core::propagator::wronskian_drift;
use matsl_core::spectrum::{
    spectral_data, sym1_residual, val_residual, weyl, weyl_symmetry_defect,
};
use matsl_core::zerocase::zero_spectral_data;
use matsl_core::{BoundaryData, Error, ProblemL, Result};

#[derive(Parser)]
#[command(
    name = "matsl",
    version,
    about = "Matrix Sturm-Liouville spectral tools"
)]
struct Cli {
    /// Emit flat CSV tables instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and weight matrices for n <= nmax.
    Spectrum {
        problem: PathBuf,
        #[arg(long)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form data for zero potential (sigma and H are ignored).
    Zerocase {
        problem: PathBuf,
        #[arg(long)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weyl matrix M(lambda) at lambda = a + bi.
    Weyl {
        problem: PathBuf,
        /// Real and imaginary part, e.g. `--lambda -1,0`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover T1 and T2 from spectral data.
    Recover {
        data: PathBuf,
        /// Shift parameter of the Weyl series.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a metric graph to a matrix problem.
    GraphReduce {
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant checks on a problem.
    Verify {
        problem: PathBuf,
        #[arg(long)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frame bounds of the Y family built from spectral data.
    Basis {
        data: PathBuf,
        /// Largest n included.
        #[arg(long = "N")]
        n: usize,
        /// Number of grid intervals.
        #[arg(long, default_value_t = MIN_GRID)]
        grid: usize,
        /// Take T1 from this problem instead of recovering it from the data.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failed verification checks.
struct ChecksFailed(Vec<String>);

enum Failure {
    Lib(Error),
    Checks(ChecksFailed),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_problem(path: &Path) -> Result<ProblemL> {
    problem_from_json(&read_json_file(path)?)
}

fn parse_lambda(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::InvalidData(format!("bad lambda component \"{t}\"")))
    };
    match parts.as_slice() {
        [a] => Ok(Complex64::new(num(a)?, 0.0)),
        [a, b] => Ok(Complex64::new(num(a)?, num(b)?)),
        _ => Err(Error::InvalidData("lambda must be \"a,b\"".into())),
    }
}

fn matrices_csv(mats: &[(&str, &CMat)]) -> String {
    let mut out = String::from("matrix,i,j,re,im\n");
    for (name, a) in mats {
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let z = a[(i, j)];
                let _ = writeln!(
                    out,
                    "{name},{},{},{:.16e},{:.16e}",
                    i + 1,
                    j + 1,
                    z.re,
                    z.im
                );
            }
        }
    }
    out
}

fn key_value_csv(rows: &[(&str, f64)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v:.16e}");
    }
    out
}

/// One verification check: `value <= threshold` (or `>=` when `lower`).
struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    lower: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Check {
            name,
            value,
            threshold,
            lower: false,
        }
    }

    fn at_least(name: &'static str, value: f64, threshold: f64) -> Self {
        Check {
            name,
            value,
            threshold,
            lower: true,
        }
    }

    fn pass(&self) -> bool {
        if self.lower {
            self.value >= self.threshold
        } else {
            self.value <= self.threshold
        }
    }
}

fn verify(problem: &ProblemL, n_max: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let positions: Vec<f64> = (1..=16)
        .map(|i| i as f64 * std::f64::consts::PI / 16.0)
        .collect();
    let drift = [
        Complex64::new(2.5, 0.0),
        Complex64::new(-3.0, 1.0),
        Complex64::new(40.0, 5.0),
    ]
    .iter()
    .map(|&l| wronskian_drift(problem, l, &positions))
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .fold(0.0, f64::max);
    checks.push(Check::at_most("wronskian_drift", drift, 1e-10));

    let data = spectral_data(problem, n_max)?;
    let val = data
        .entries
        .iter()
        .map(|e| val_residual(problem, e))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::at_most("val_residual", val, 1e-6));
    checks.push(Check::at_most(
        "sym1_residual",
        sym1_residual(problem, &data)?,
        1e-6,
    ));

    let mut psd = 0.0_f64;
    let mut rank_defect = 0.0_f64;
    for e in data.leaders() {
        let (vals, _) = hermitian_eigen(&e.alpha);
        let norm = vals.first().copied().unwrap_or(0.0).max(1e-300);
        psd = psd.max((-vals.last().copied().unwrap_or(0.0) / norm).max(0.0));
        let rank = numerical_rank(&e.alpha, 1e-6, 1e-300);
        rank_defect = rank_defect.max((rank as f64 - e.multiplicity as f64).abs());
    }
    checks.push(Check::at_most("alpha_negative_part", psd, 1e-8));
    checks.push(Check::at_most("alpha_rank_defect", rank_defect, 0.0));
    checks.push(Check::at_most(
        "weyl_symmetry",
        weyl_symmetry_defect(problem, Complex64::new(0.5, 1.0))?,
        1e-8,
    ));

    let t1 = &problem.boundary.t1;
    if n_max >= 8 {
        let ex = extract_r_A(&data, t1)?;
        let kappa = kappa_report(&data, &ex.r);
        let gap = weight_gap_report(&data, &ex.clusters, t1);
        let snap = ex
            .clusters
            .iter()
            .map(|c| c.snap_distance)
            .fold(0.0, f64::max);
        checks.push(Check::at_most("r_A_snap_distance", snap, 5e-2));
        checks.push(Check::at_most(
            "kappa_tail_excess",
            (kappa.tail.recent - kappa.tail.previous).max(0.0),
            1e-12 * kappa.tail.previous + 1e-28,
        ));
        checks.push(Check::at_most(
            "weight_gap_tail_excess",
            (gap.tail.recent - gap.tail.previous).max(0.0),
            1e-12 * gap.tail.previous + 1e-28,
        ));
    }

    let family = build_Y(&data, t1, MIN_GRID)?;
    let (lo, _) = frame_bounds(&family, n_max);
    checks.push(Check::at_least("frame_lower_bound", lo, 1e-6));
    Ok(checks)
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Spectrum { problem, nmax, out } => {
            let data = spectral_data(&load_problem(&problem)?, nmax)?;
            let text = if cli.csv {
                dataset_to_csv(&data)
            } else {
                to_string(&dataset_to_json(&data))
            };
            emit(&text, &out)?;
        }
        Command::Zerocase { problem, nmax, out } => {
            let p = load_problem(&problem)?;
            if !p.is_zero_case() {
                eprintln!("warning: sigma and H are ignored by zerocase");
            }
            let b = BoundaryData::from_projectors(p.boundary.t1.clone(), p.boundary.t2.clone())?;
            let data = zero_spectral_data(&b, nmax)?;
            let text = if cli.csv {
                dataset_to_csv(&data)
            } else {
                to_string(&dataset_to_json(&data))
            };
            emit(&text, &out)?;
        }
        Command::Weyl {
            problem,
            lambda,
            out,
        } => {
            let l = parse_lambda(&lambda)?;
            let s = weyl(&load_problem(&problem)?, l)?;
            let text = if cli.csv {
                matrices_csv(&[("M", &s.m)])
            } else {
                to_string(&json!({ "lambda": [l.re, l.im], "M": matrix_to_json(&s.m) }))
            };
            emit(&text, &out)?;
        }
        Command::Recover { data, omega, out } => {
            let d = dataset_from_json(&read_json_file(&data)?)?;
            let cfg = WeylSeriesConfig {
                omega,
                ..WeylSeriesConfig::default()
            };
            let r = algorithm_T12(&d, &cfg)?;
            let text = if cli.csv {
                matrices_csv(&[("T1", &r.t1.t1), ("T2", &r.t2.t2)])
            } else {
                to_string(&json!({
                    "T1": matrix_to_json(&r.t1.t1),
                    "T2": matrix_to_json(&r.t2.t2),
                    "snap_distance": r.snap_distance(),
                    "snap_distance_T1": r.t1.snap_distance,
                    "snap_distance_T2": r.t2.snap_distance,
                    "rho_star": r.t2.rho_star,
                    "r": r.extraction.r,
                }))
            };
            emit(&text, &out)?;
        }
        Command::GraphReduce { graph, out } => {
            let g = graph_from_json(&read_json_file(&graph)?)?;
            let n = bipartite_normalize(&g)?;
            let p = general_reduction(&n)?;
            let text = if cli.csv {
                let b = &p.boundary;
                matrices_csv(&[("T1", &b.t1), ("T2", &b.t2), ("H1", &b.h1), ("H2", &b.h2)])
            } else {
                let mut v = problem_to_json(&p);
                let obj = v.as_object_mut().expect("problem JSON is an object");
                obj.insert("rescale".into(), json!(n.scale));
                obj.insert("edge_length".into(), json!([n.length.0, n.length.1]));
                obj.insert(
                    "edges".into(),
                    Value::Array(n.graph.edges.iter().map(|e| json!([e.v0, e.v1])).collect()),
                );
                to_string(&v)
            };
            emit(&text, &out)?;
        }
        Command::Verify { problem, nmax, out } => {
            let checks = verify(&load_problem(&problem)?, nmax)?;
            let failed: Vec<String> = checks
                .iter()
                .filter(|c| !c.pass())
                .map(|c| c.name.to_string())
                .collect();
            let text = if cli.csv {
                let mut s = String::from("check,value,threshold,pass\n");
                for c in &checks {
                    let _ = writeln!(
                        s,
                        "{},{:.16e},{:.16e},{}",
                        c.name,
                        c.value,
                        c.threshold,
                        c.pass()
                    );
                }
                s
            } else {
                to_string(&json!({
                    "checks": checks.iter().map(|c| json!({
                        "name": c.name,
                        "value": c.value,
                        "threshold": c.threshold,
                        "bound": if c.lower { "min" } else { "max" },
                        "pass": c.pass(),
                    })).collect::<Vec<_>>(),
                    "pass": failed.is_empty(),
                }))
            };
            emit(&text, &out)?;
            if !failed.is_empty() {
                return Err(Failure::Checks(ChecksFailed(failed)));
            }
        }
        Command::Basis {
            data,
            n,
            grid,
            problem,
            out,
        } => {
            let d = dataset_from_json(&read_json_file(&data)?)?;
            let t1 = match problem {
                Some(p) => load_problem(&p)?.boundary.t1,
                None => recover_T1(&d)?.t1,
            };
            let family = build_Y(&d, &t1, grid)?.truncated(n);
            let (lo, hi) = frame_bounds(&family, n);
            let g = gram(&family);
            let diag: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)].re).collect();
            let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
            let dmax = diag.iter().copied().fold(0.0, f64::max);
            let off = max_abs(&(g.clone() - CMat::from_diagonal(&g.diagonal())));
            let rows = [
                ("lower", lo),
                ("upper", hi),
                ("gram_diag_min", dmin),
                ("gram_diag_max", dmax),
                ("gram_offdiag_max", off),
            ];
            let text = if cli.csv {
                key_value_csv(&rows)
            } else {
                let mut v = json!({ "N": n, "grid": grid, "size": family.entries.len() });
                let obj = v.as_object_mut().expect("object");
                for (k, x) in rows {
                    obj.insert(k.into(), json!(x));
                }
                to_string(&v)
            };
            emit(&text, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("warning: thread pool already configured: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("{}", e.name());
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
        Err(Failure::Checks(ChecksFailed(names))) => {
            eprintln!("VerificationFailed");
            eprintln!("failed checks: {}", names.join(", "));
            ExitCode::from(1)
        }
    }
}
