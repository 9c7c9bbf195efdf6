#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpar_cli::runner::{run_scenario, RunOptions, Status};
use qpar_cli::sweep;
use qpar_core::io::{format_f64, write_table, Provenance};
use qpar_core::{giant, BarenblattSpec, EquationParams};

#[derive(Parser)]
#[command(name = "qpar", version, about = "Radial q-parabolic solver and scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
}

impl ParamArgs {
    fn build(self) -> Result<EquationParams, Failure> {
        EquationParams::new(self.n, self.p, self.q).map_err(|e| Failure::config(e.to_string()))
    }

    fn provenance(self) -> Provenance {
        vec![
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("params".into(), format!("n = {}, p = {}, q = {}", self.n, self.p, self.q)),
        ]
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived exponents and the range condition.
    Params {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Sample a Barenblatt solution to CSV (columns r,u).
    Barenblatt {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        t_delay: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 4.0)]
        outer: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the separable profile in the unit ball and export V (columns r,V).
    Giant {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every scenario file in a directory.
    Sweep {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output root; each scenario writes to <out>/<name>.
    #[arg(long, env = "QPAR_OUT", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            out_root: Some(self.out.clone()),
            seed: self.seed,
            strict: self.strict,
        }
    }
}

struct Failure {
    status: Status,
    reason: String,
}

impl Failure {
    fn config(reason: String) -> Self {
        Self {
            status: Status::ConfigError,
            reason,
        }
    }

    fn other(status: Status, e: impl std::fmt::Display) -> Self {
        Self {
            status,
            reason: e.to_string(),
        }
    }
}

fn emit_table(
    out: Option<&PathBuf>,
    prov: &Provenance,
    headers: &[&str],
    rows: Vec<Vec<f64>>,
) -> Result<(), Failure> {
    match out {
        Some(path) => write_table(path, prov, headers, rows).map_err(|e| Failure::other(Status::AssertionFailed, e)),
        None => {
            let mut s = std::io::stdout().lock();
            let mut text = format!("{}\n", headers.join(","));
            for row in rows {
                let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            s.write_all(text.as_bytes())
                .map_err(|e| Failure::other(Status::AssertionFailed, e))
        }
    }
}

fn run(cli: Cli) -> Result<Status, Failure> {
    match cli.command {
        Command::Params { params } => {
            let eq = params.build()?;
            let e = eq.derive();
            println!("{:<16} {}", "n", eq.n());
            println!("{:<16} {}", "p", eq.p());
            println!("{:<16} {}", "q", eq.q());
            println!("{:<16} {}", "d", e.d);
            println!("{:<16} {}", "lambda", e.lambda);
            println!("{:<16} {}", "alpha", e.alpha);
            println!("{:<16} {}", "spread", e.spread);
            println!("{:<16} {}", "sigma", e.sigma);
            println!("{:<16} {}", "mu", e.mu);
            println!("{:<16} {:?}", "regime", eq.regime());
            println!("{:<16} {}", "range", eq.range_condition());
            Ok(Status::Pass)
        }
        Command::Barenblatt {
            params,
            c,
            t_delay,
            t,
            outer,
            points,
            out,
        } => {
            let eq = params.build()?;
            if points < 2 || !(outer > 0.0) {
                return Err(Failure::config("need points ≥ 2 and outer > 0".into()));
            }
            let spec = BarenblattSpec::new(eq, c, t_delay).map_err(|e| Failure::config(e.to_string()))?;
            let f = spec.profile_at(t).map_err(|e| Failure::config(e.to_string()))?;
            let rows = (0..points)
                .map(|i| {
                    let r = outer * i as f64 / (points - 1) as f64;
                    vec![r, f(r)]
                })
                .collect();
            let mut prov = params.provenance();
            prov.push(("barenblatt".into(), format!("c = {c}, t_delay = {t_delay}, t = {t}")));
            emit_table(out.as_ref(), &prov, &["r", "u"], rows)?;
            Ok(Status::Pass)
        }
        Command::Giant {
            params,
            nodes,
            tol,
            max_iter,
            out,
        } => {
            let eq = params.build()?;
            let v = giant::fixed_point(&eq, nodes, tol, max_iter).map_err(|e| match e {
                qpar_core::Error::NonConvergence(_) => Failure::other(Status::SolverFailure, e),
                other => Failure::config(other.to_string()),
            })?;
            let rep = v.report();
            let ode = giant::ode_residual(&v);
            let mut prov = params.provenance();
            prov.push(("giant".into(), format!("nodes = {nodes}, tol = {tol}, max_iter = {max_iter}")));
            prov.push((
                "residuals".into(),
                format!(
                    "iterations = {}, integral = {:e}, ode = {ode:e}",
                    rep.iterations, rep.integral_residual
                ),
            ));
            let rows = v.radii().iter().zip(v.values()).map(|(&r, &u)| vec![r, u]).collect();
            emit_table(out.as_ref(), &prov, &["r", "V"], rows)?;
            eprintln!(
                "giant iterations={} integral_residual={:e} ode_residual={ode:e} v0={}",
                rep.iterations,
                rep.integral_residual,
                v.values()[0]
            );
            Ok(Status::Pass)
        }
        Command::Simulate { config, run } => {
            let outcome = run_scenario(&config, &run.options());
            for c in &outcome.checks {
                println!("check {} {} {}", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
            }
            for w in &outcome.warnings {
                println!("warning {w}");
            }
            if let Some(dir) = &outcome.out_dir {
                println!("artifacts {}", dir.display());
            }
            match outcome.status {
                Status::Pass => Ok(Status::Pass),
                s => Err(Failure::other(s, outcome.reason.unwrap_or_default())),
            }
        }
        Command::Sweep { dir, jobs, run } => {
            let files = sweep::scenario_files(&dir).map_err(|e| Failure::config(format!("{e:#}")))?;
            if files.is_empty() {
                return Err(Failure::config(format!("no scenario files in {}", dir.display())));
            }
            let outcomes = sweep::run_sweep(&files, &run.options(), jobs)
                .map_err(|e| Failure::config(format!("{e:#}")))?;
            print!("{}", sweep::table(&outcomes));
            match sweep::aggregate(&outcomes) {
                Status::Pass => Ok(Status::Pass),
                s => {
                    let bad = outcomes.iter().filter(|o| o.status != Status::Pass).count();
                    Err(Failure::other(s, format!("{bad} of {} scenarios failed", outcomes.len())))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("status={} reason=\"{}\"", f.status.label(), f.reason.replace('"', "'"));
            ExitCode::from(f.status.exit_code() as u8)
        }
    }
}
