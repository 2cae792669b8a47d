//! Command-line front end: experiment sweeps, bound calculators and
//! polytope inspection.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or argument
//! values), 2 on runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cocorl::cmdp::read_cmdp;
use cocorl::cocorl::{
    bounds_estimated, build_safe_set, mcmullen_vertex_bound, sample_bound_boltzmann, sample_bound_exact, traj_bound_eps_safety,
    DemoModel, DEFAULT_D_STOP, DEFAULT_MAX_POINTS,
};
use cocorl::experiment::{emit_results, run_experiment, summarize, ExperimentConfig};
use cocorl::geometry::{read_polytope, write_polytope, Polytope};
use cocorl::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "cocorl", version, about = "Infer shared safety constraints from demonstrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep described by a TOML config file.
    Run {
        config: PathBuf,
        /// Results CSV path; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample-complexity calculators.
    Bound {
        #[command(subcommand)]
        kind: BoundKind,
    },
    /// Summarize a polytope file, or the safe set built from the
    /// demonstrations in a CMDP document.
    InspectPolytope {
        path: PathBuf,
        /// Write the polytope in text form to this file.
        #[arg(long)]
        write: Option<PathBuf>,
        /// Comma-separated point to test for membership.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        contains: Option<Vec<f64>>,
        /// Seed for the safe-set construction from a CMDP document.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BoundKind {
    /// Demonstrations needed with exactly optimal demonstrations.
    Exact(Common),
    /// Demonstrations needed with Boltzmann-rational demonstrations.
    Boltzmann {
        #[command(flatten)]
        common: Common,
        /// Boltzmann rationality coefficient.
        #[arg(long)]
        beta: f64,
        /// Discount factor in [0, 1).
        #[arg(long)]
        gamma: f64,
    },
    /// Trajectories per demonstration for epsilon-safety.
    Traj {
        #[command(flatten)]
        common: Common,
        /// Number of demonstrations.
        #[arg(long)]
        k: usize,
        /// Allowed constraint violation.
        #[arg(long)]
        eps: f64,
        /// Discount factor in [0, 1).
        #[arg(long)]
        gamma: f64,
    },
    /// Demonstrations and trajectories for convergence with estimated
    /// feature expectations.
    Estimated {
        #[command(flatten)]
        common: Common,
        /// Allowed constraint violation.
        #[arg(long)]
        eps: f64,
        /// Discount factor in [0, 1).
        #[arg(long)]
        gamma: f64,
        /// Boltzmann rationality; exact demonstrations when absent.
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Failure probability in (0, 1).
    #[arg(long)]
    delta: f64,
    /// Feature dimension.
    #[arg(long)]
    d: usize,
    /// Number of true constraints.
    #[arg(long)]
    n: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Degenerate(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, output } => run(config, output),
        Command::Bound { kind } => bound(kind),
        Command::InspectPolytope { path, write, contains, seed } => inspect(path, write, contains, seed),
    }
}

fn run(path: PathBuf, output: Option<PathBuf>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    if let Some(o) = output {
        config.output = o;
    }
    let rows = run_experiment(&config)?;
    let summary_path = emit_results(&rows, &config.output)?;
    println!("method,k,n,mean_normalized_return,stderr,mean_constraint_violation,stderr,fallback_rate");
    for s in summarize(&rows) {
        println!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.3}",
            s.method,
            s.k,
            s.n,
            s.mean_normalized_return,
            s.stderr_normalized_return,
            s.mean_constraint_violation,
            s.stderr_constraint_violation,
            s.fallback_rate
        );
    }
    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} rows failed", rows.len());
        for r in rows.iter().filter(|r| r.error.is_some()).take(5) {
            eprintln!("  seed {} k {} {}: {}", r.seed, r.k, r.method, r.error.as_deref().unwrap_or(""));
        }
    }
    eprintln!("wrote {} and {}", config.output.display(), summary_path.display());
    Ok(())
}

fn bound(kind: BoundKind) -> Result<(), Failure> {
    match kind {
        BoundKind::Exact(c) => {
            let k = sample_bound_exact(c.delta, c.d, c.n)?;
            println!("delta={} d={} n={} f_v={}", c.delta, c.d, c.n, mcmullen_vertex_bound(c.d, c.n)?);
            println!("k={k}");
        }
        BoundKind::Boltzmann { common: c, beta, gamma } => {
            let k = sample_bound_boltzmann(c.delta, c.d, c.n, beta, gamma)?;
            println!("delta={} d={} n={} beta={beta} gamma={gamma}", c.delta, c.d, c.n);
            println!("k={k}");
        }
        BoundKind::Traj { common: c, k, eps, gamma } => {
            let n_traj = traj_bound_eps_safety(c.d, c.n, k, c.delta, eps, gamma)?;
            println!("delta={} d={} n={} k={k} eps={eps} gamma={gamma}", c.delta, c.d, c.n);
            println!("n_traj={n_traj}");
        }
        BoundKind::Estimated { common: c, eps, gamma, beta } => {
            let model = beta.map_or(DemoModel::ExactDemos, |beta| DemoModel::Boltzmann { beta });
            let b = bounds_estimated(c.delta, c.d, c.n, eps, gamma, model)?;
            let beta = beta.map_or("none".to_string(), |v| v.to_string());
            println!("delta={} d={} n={} eps={eps} gamma={gamma} beta={beta}", c.delta, c.d, c.n);
            println!("k={}", b.k);
            println!("n_traj={}", b.n_traj);
        }
    }
    Ok(())
}

fn inspect(path: PathBuf, write: Option<PathBuf>, contains: Option<Vec<f64>>, seed: u64) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let first = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).find(|l| !l.is_empty()).unwrap_or("");
    let polytope: Polytope = if first == "cmdp" {
        let doc = read_cmdp(&text).map_err(|e| Failure::Runtime(e.to_string()))?;
        if doc.demos.is_empty() {
            return Err(Failure::Usage("the CMDP document has no demonstrations".into()));
        }
        let safe = build_safe_set(&doc.demos, DEFAULT_MAX_POINTS, DEFAULT_D_STOP, &mut ChaCha8Rng::seed_from_u64(seed))?;
        println!("selected demonstrations: {:?}", safe.selected_indices);
        safe.polytope
    } else {
        read_polytope(&text).map_err(|e| Failure::Runtime(e.to_string()))?
    };
    println!("dimension: {}", polytope.dim());
    println!("effective dimension: {}", polytope.effective_dim());
    println!("halfspaces: {}", polytope.n_halfspaces());
    println!("empty: {}", polytope.is_empty());
    match polytope.vertices() {
        Some(v) => println!("vertices: {}", v.len()),
        None => println!("vertices: unknown"),
    }
    if let Some(x) = contains {
        if x.len() != polytope.dim() {
            return Err(Failure::Usage(format!("point has {} coordinates, polytope has dimension {}", x.len(), polytope.dim())));
        }
        println!("contains: {} (max violation {:e})", polytope.contains(&x, 1e-9), polytope.max_violation(&x));
    }
    if let Some(out) = write {
        std::fs::write(&out, write_polytope(&polytope)).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}
