use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use barylab::cli::{self, exit, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "barylab", version, about = "Experiments with contractive barycentric maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact p-Wasserstein distance and optimal plan
    Wasserstein(RunArgs),
    /// Evaluate a barycentric map on a measure
    Barycenter(RunArgs),
    /// Conditional β-expectation on a partition
    Condexp(RunArgs),
    /// Regular martingale along a filtration
    Martingale(RunArgs),
    /// Ergodic averages under a permutation
    Ergodic(RunArgs),
    /// Semiflow fixed points and the small-t limit
    Semiflow(RunArgs),
    /// Lower bound on the distance between two maps
    Mapdist(RunArgs),
    /// Exact large-deviation tables, Monte Carlo and SLLN runs
    Ldp(RunArgs),
    /// Randomized contractivity or monotonicity audit
    Audit(RunArgs),
    /// Recheck the invariants recorded in a report
    Verify {
        report: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized experiments (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, env = "BARYLAB_THREADS")]
    threads: Option<usize>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> i32 {
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return exit::INVALID;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return exit::INVALID;
        }
    }
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return exit::INVALID;
        }
    };
    let mut config = match ExperimentConfig::parse(&text, Some(kind)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return cli::exit_code(&e);
        }
    };
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    let outcome = match cli::run_config(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return cli::exit_code(&e);
        }
    };
    match cli::write_outputs(&outcome, &args.out) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing reports: {e}");
            return exit::IO;
        }
    }
    for c in outcome.report.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {:e} > {:e}", c.name, c.value, c.bound);
    }
    if outcome.report.pass {
        exit::SUCCESS
    } else {
        exit::CHECK_FAILED
    }
}

fn verify(path: PathBuf) -> i32 {
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return exit::INVALID;
        }
    };
    let v = cli::verify_report(&text);
    if v.ok {
        println!("ok");
        exit::SUCCESS
    } else {
        for f in &v.failures {
            eprintln!("failed: {f}");
        }
        exit::CHECK_FAILED
    }
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Wasserstein(a) => run(ExperimentKind::Wasserstein, a),
        Command::Barycenter(a) => run(ExperimentKind::Barycenter, a),
        Command::Condexp(a) => run(ExperimentKind::Condexp, a),
        Command::Martingale(a) => run(ExperimentKind::Martingale, a),
        Command::Ergodic(a) => run(ExperimentKind::Ergodic, a),
        Command::Semiflow(a) => run(ExperimentKind::Semiflow, a),
        Command::Mapdist(a) => run(ExperimentKind::Mapdist, a),
        Command::Ldp(a) => run(ExperimentKind::Ldp, a),
        Command::Audit(a) => run(ExperimentKind::Audit, a),
        Command::Verify { report } => verify(report),
    };
    ExitCode::from(code as u8)
}
