//! Command-line front end: JSON problem files in, JSON/CSV artifacts out.
//!
//! Exit codes: 0 success, 1 parse/validation failure, 2 method/instance
//! mismatch, 3 solver non-convergence.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::builders::{build_conic, build_transport, ConicProblem, TransportProblem};
use crate::combinatorics::{self, ConicShape};
use crate::model::{EntropicSolution, StandardFormLP};
use crate::{dual_ascent, gis, oracle, path, sinkhorn};
use crate::{Error, Result};

/// On-disk problem description. The "lp" flavor is the canonical wire
/// format; `build --emit-matrix` lowers the other two onto it with
/// columns in lexicographic order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemFile {
    Lp {
        a: Vec<Vec<i64>>,
        b: Vec<f64>,
        c: Vec<f64>,
    },
    Transport {
        mu: Vec<f64>,
        nu: Vec<f64>,
        cost: Vec<Vec<f64>>,
    },
    Conic {
        d1: usize,
        e1: usize,
        d2: usize,
        e2: usize,
        mu: Vec<i64>,
        nu: Vec<i64>,
        /// Nested `[κ][i][λ][j]` cost tensor.
        cost: Vec<Vec<Vec<Vec<f64>>>>,
        #[serde(default)]
        normalized: bool,
    },
}

/// A parsed problem, still carrying its flavor for method dispatch.
pub enum Instance {
    Lp(StandardFormLP),
    Transport(TransportProblem),
    Conic(ConicProblem),
}

impl ProblemFile {
    pub fn into_instance(self) -> Result<Instance> {
        match self {
            ProblemFile::Lp { a, b, c } => Ok(Instance::Lp(StandardFormLP::new(a, b, c)?)),
            ProblemFile::Transport { mu, nu, cost } => {
                Ok(Instance::Transport(TransportProblem::new(mu, nu, cost)?))
            }
            ProblemFile::Conic { d1, e1, d2, e2, mu, nu, cost, normalized } => {
                let mut flat = Vec::with_capacity(d1 * e1 * d2 * e2);
                for block_k in &cost {
                    for block_i in block_k {
                        for block_l in block_i {
                            flat.extend_from_slice(block_l);
                        }
                    }
                }
                Ok(Instance::Conic(ConicProblem::new(
                    d1, e1, d2, e2, mu, nu, flat, normalized,
                )?))
            }
        }
    }
}

impl Instance {
    pub fn lp(&self) -> Result<StandardFormLP> {
        match self {
            Instance::Lp(lp) => Ok(lp.clone()),
            Instance::Transport(tp) => build_transport(tp),
            Instance::Conic(cp) => build_conic(cp),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sinkhorn,
    Gis,
    Ascent,
    Mirror,
}

#[derive(Parser)]
#[command(
    name = "entropic-lp",
    version,
    about = "Entropic regularization of linear programs: solvers, degree \
             calculators, and exact-optimum path tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the ε-regularized problem with a chosen scaling method.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iter: usize,
        /// Write the solution JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track the regularization path from ε₀ down to the LP optimum.
    Path {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon0: f64,
        #[arg(long, default_value_t = path::DEFAULT_THETA)]
        theta: f64,
        /// Defaults to 1e-4 · ε₀.
        #[arg(long)]
        mu_min: Option<f64>,
        /// Write the trace as CSV (columns mu,t_1..t_d,x_1..x_n,cost).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exact algebraic degree of a conic coupling format.
    Degree {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        e1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long)]
        e2: usize,
        /// Cross-check against the exact triangulation oracle.
        #[arg(long)]
        verify: bool,
    },
    /// Feasibility-cone membership of a margin vector.
    Cone {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        e1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long)]
        e2: usize,
        /// Comma-separated "y1,...,yd".
        #[arg(long)]
        point: String,
    },
    /// Exact LP optimum by brute-force vertex enumeration.
    Oracle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Lower a problem file onto the canonical standard-form schema.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        emit_matrix: bool,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NoConvergence { .. } => 3,
        Error::OnesNotInRowSpace() | Error::TooLarge(_) => 2,
        _ => 1,
    }
}

fn load_instance(input: &PathBuf) -> Result<Instance> {
    let text = fs::read_to_string(input)?;
    let file: ProblemFile = serde_json::from_str(&text)?;
    file.into_instance()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn solve(instance: &Instance, method: Method, epsilon: f64, tol: f64, max_iter: usize) -> Result<EntropicSolution> {
    match method {
        Method::Sinkhorn => match instance {
            Instance::Transport(tp) => sinkhorn::sinkhorn_solve(tp, epsilon, tol, max_iter),
            _ => Err(Error::TooLarge(
                "sinkhorn applies only to balanced transport instances; \
                 use --method gis, ascent, or mirror"
                    .into(),
            )),
        },
        Method::Gis => {
            let aug = gis::gis_augment(&instance.lp()?, epsilon)?;
            gis::gis_solve(&aug, epsilon, tol, max_iter)
        }
        Method::Ascent => dual_ascent::ascent_solve(&instance.lp()?, epsilon, tol, max_iter),
        Method::Mirror => oracle::mirror_solve(&instance.lp()?, epsilon, tol, max_iter),
    }
}

#[derive(Serialize)]
struct PathSummary {
    status: path::PathStatus,
    final_support: Vec<usize>,
    final_vertex: Option<Vec<f64>>,
    final_cost: f64,
    samples: usize,
    mu_final: f64,
}

fn write_trace_csv(csv: &PathBuf, trace: &path::PathTrace, d: usize, n: usize) -> Result<()> {
    let mut file = fs::File::create(csv)?;
    let mut header = String::from("mu");
    for i in 1..=d {
        header.push_str(&format!(",t_{i}"));
    }
    for j in 1..=n {
        header.push_str(&format!(",x_{j}"));
    }
    header.push_str(",cost");
    writeln!(file, "{header}")?;
    for sample in &trace.samples {
        let mut row = format!("{}", sample.mu);
        for t in &sample.t {
            row.push_str(&format!(",{t}"));
        }
        for x in &sample.x {
            row.push_str(&format!(",{x}"));
        }
        row.push_str(&format!(",{}", sample.cost));
        writeln!(file, "{row}")?;
    }
    Ok(())
}

fn run_command(command: Command) -> Result<()> {
    match command {
        Command::Solve { input, method, epsilon, tol, max_iter, out } => {
            let instance = load_instance(&input)?;
            let solution = solve(&instance, method, epsilon, tol, max_iter)?;
            emit(&out, &serde_json::to_string_pretty(&solution)?)?;
            if !solution.converged {
                return Err(Error::NoConvergence {
                    max_iter,
                    residual: solution.residuals.primal_inf,
                });
            }
        }
        Command::Path { input, epsilon0, theta, mu_min, csv } => {
            let instance = load_instance(&input)?;
            let lp = instance.lp()?;
            // any convergent solver seeds the tracker; use the structure-
            // aware one when available
            let seed = match &instance {
                Instance::Transport(tp) => {
                    sinkhorn::sinkhorn_solve(tp, epsilon0, 1e-12, 500_000)?
                }
                _ => oracle::mirror_solve(&lp, epsilon0, 1e-12, 2_000_000)?,
            };
            let mu_min = mu_min.unwrap_or(1e-4 * epsilon0);
            let trace = path::track(&lp, &seed.x, epsilon0, theta, mu_min)?;
            if let Some(csv_path) = &csv {
                write_trace_csv(csv_path, &trace, lp.num_rows(), lp.num_cols())?;
            }
            let last = trace.samples.last().expect("trace is never empty");
            let summary = PathSummary {
                status: trace.status,
                final_support: trace.final_support.clone(),
                final_vertex: trace.final_vertex.clone(),
                final_cost: last.cost,
                samples: trace.samples.len(),
                mu_final: last.mu,
            };
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Degree { d1, e1, d2, e2, verify } => {
            let shape = ConicShape::new(d1, e1, d2, e2)?;
            let degree = combinatorics::conic_degree(&shape);
            println!("{degree}");
            if verify {
                let points = combinatorics::column_points_with_origin(&shape);
                let volume = combinatorics::volume_oracle(&points)?;
                if num_bigint::BigInt::from(volume) == degree {
                    println!("oracle volume {volume}: agreement");
                } else {
                    return Err(Error::InvalidProblem(format!(
                        "oracle volume {volume} disagrees with formula {degree}"
                    )));
                }
            }
        }
        Command::Cone { d1, e1, d2, e2, point } => {
            let shape = ConicShape::new(d1, e1, d2, e2)?;
            let y: Vec<f64> = point
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidProblem(format!("bad point entry {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            let report = combinatorics::cone_membership(&shape, &y)?;
            println!(
                "{}",
                serde_json::json!({ "inside": report.inside, "slacks": report.slacks })
            );
        }
        Command::Oracle { input } => {
            let instance = load_instance(&input)?;
            let optimum = oracle::lp_optimum(&instance.lp()?)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "x": optimum.x,
                    "cost": optimum.cost,
                    "unique": optimum.unique,
                    "support": optimum.support,
                }))?
            );
        }
        Command::Build { input, emit_matrix } => {
            let instance = load_instance(&input)?;
            let lp = instance.lp()?;
            if emit_matrix {
                let file = ProblemFile::Lp { a: lp.a, b: lp.b, c: lp.c };
                println!("{}", serde_json::to_string_pretty(&file)?);
            } else {
                let report = crate::model::validate(&lp);
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
        }
    }
    Ok(())
}

/// Parse and execute; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conic_tensor_flattening_is_lexicographic() {
        let cost = vec![
            vec![
                vec![vec![0.0, 1.0], vec![2.0, 3.0]],
                vec![vec![4.0, 5.0], vec![6.0, 7.0]],
            ],
            vec![
                vec![vec![8.0, 9.0], vec![10.0, 11.0]],
                vec![vec![12.0, 13.0], vec![14.0, 15.0]],
            ],
        ];
        let file = ProblemFile::Conic {
            d1: 2,
            e1: 2,
            d2: 2,
            e2: 2,
            mu: vec![1, 1],
            nu: vec![1, 1],
            cost,
            normalized: false,
        };
        let Instance::Conic(cp) = file.into_instance().unwrap() else {
            panic!("expected a conic instance");
        };
        assert_eq!(cp.cost, (0..16).map(|v| v as f64).collect::<Vec<_>>());
    }

    #[test]
    fn lp_round_trip_is_canonical() {
        let file = ProblemFile::Lp {
            a: vec![vec![1, 1]],
            b: vec![2.0],
            c: vec![0.0, 1.0],
        };
        let text = serde_json::to_string_pretty(&file).unwrap();
        let reparsed: ProblemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string_pretty(&reparsed).unwrap(), text);
    }

    #[test]
    fn bad_method_pairing_is_a_mismatch() {
        let lp = Instance::Lp(
            StandardFormLP::new(vec![vec![1, 1]], vec![2.0], vec![0.0, 1.0]).unwrap(),
        );
        let err = solve(&lp, Method::Sinkhorn, 1.0, 1e-8, 100).unwrap_err();
        assert_eq!(exit_code_for(&err), 2);
    }
}
