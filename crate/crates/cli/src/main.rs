use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adsignal::rv::{Regime, DEFAULT_GRID_CAP, DEFAULT_SAMPLE_CAP};
use adsignal_cli::bench::{run_suite, write_csv, Suite};
use adsignal_cli::gen::{generate, GenKind, GenSizes};
use adsignal_cli::solve::{self, SolveOptions, SolverKind, DEFAULT_EPS};
use adsignal_cli::{CliError, CliResult, InstanceFile, Report};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adsignal", version, about = "Revenue-maximizing signaling for VCG ad auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a JSON report.
    Solve {
        /// fixed-m, fixed-d, single-minded or rv.
        solver: SolverKind,
        instance: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Target error of the approximate solvers.
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Parameter schedule of the rv solver: fixed-d, fixed-m or bounded-away.
        #[arg(long, default_value = "fixed-d")]
        regime: Regime,
        /// Valuation lower bound for the bounded-away regime.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, env = "ADSIGNAL_SEED", default_value_t = 0)]
        seed: u64,
        /// Largest q-uniform grid the rv solver may enumerate.
        #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
        q_cap: usize,
        /// Largest sample count the rv solver may draw.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_CAP)]
        sample_cap: usize,
    },
    /// Write a random instance.
    Gen {
        /// general, single-minded or finite-dist.
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        /// Support size of a finite distribution.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, env = "ADSIGNAL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark suite and write a CSV table.
    Bench {
        suite: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Seed for entries that do not set one.
        #[arg(long, env = "ADSIGNAL_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Check an instance file.
    Validate { instance: PathBuf },
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("stdout", e)),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve {
            solver,
            instance,
            output,
            eps,
            regime,
            delta,
            seed,
            q_cap,
            sample_cap,
        } => {
            let file = InstanceFile::load(&instance)?;
            let mut opts = SolveOptions {
                eps,
                regime,
                delta,
                ..SolveOptions::default()
            };
            opts.rv.seed = seed;
            opts.rv.q_cap = q_cap;
            opts.rv.sample_cap = sample_cap;
            let result = solve::run(&file, solver, &opts)?;
            let report = Report::from_solve(&result, &file.prior)?;
            emit(output.as_deref(), &report.to_json())
        }
        Command::Gen {
            kind,
            n,
            m,
            d,
            k,
            seed,
            output,
        } => {
            let file = generate(kind, GenSizes { n, m, d, k }, seed)?;
            emit(output.as_deref(), &file.to_json())
        }
        Command::Bench {
            suite,
            output,
            seed,
        } => {
            let parsed = Suite::load(&suite)?;
            let base = suite.parent().unwrap_or(Path::new("."));
            let rows = run_suite(&parsed, base, seed);
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(output.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))
        }
        Command::Validate { instance } => {
            let file = InstanceFile::load(&instance)?;
            let kind = if file.has_distribution() {
                "distribution"
            } else if file.single_minded.is_some() {
                "single-minded"
            } else {
                "valuations"
            };
            println!("{}: valid ({kind}, m = {}, d = {})", instance.display(), file.m, file.prior.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
