use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use walker_breaker::boxgames::{cbox_rows, even_cmaker, greedy_cmaker, rows_to_csv, simulate_minbox, MinBoxBreaker};
use walker_breaker::experiment::{
    aggregate, read_manifest, simulate, solve_descriptor, write_artifacts, ExperimentConfig, ExperimentFlags,
    GameDescriptor,
};
use walker_breaker::suites::Suite;
use walker_breaker::{Error, Seed};

#[derive(Parser)]
#[command(name = "walkerlab", version, about = "Walker-Breaker game experiments and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite; exits 1 if any check fails.
    Verify {
        /// Suite name, or `all`.
        suite: String,
        /// Output format: text or json.
        #[arg(long, default_value = "text")]
        format: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded full-strategy games with per-run monitor reports.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        block_divisor: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// random, frontier, star, structure or pass.
        #[arg(long)]
        breaker: Option<String>,
        /// strict or fallback.
        #[arg(long)]
        policy: Option<String>,
        /// Output directory.
        #[arg(long, default_value = "walkerlab-out")]
        out: PathBuf,
        /// Run table and aggregate format: csv or json.
        #[arg(long)]
        format: Option<String>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Re-run the configuration recorded in a manifest.
        #[arg(long, conflicts_with_all = ["n", "p", "eps", "k", "block_divisor", "runs", "seed", "breaker", "policy", "format"])]
        manifest: Option<PathBuf>,
    },
    /// Exact solve of a small game; prints a JSON result.
    Solve {
        /// Graph in edge-list format (`n m`, then `u v` per line).
        #[arg(long)]
        graph: PathBuf,
        /// Game descriptor: inline JSON or a path to a JSON file.
        #[arg(long)]
        game: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Box-game simulation; prints the per-round trace as CSV.
    Boxgame {
        /// minbox or cbox.
        #[arg(long, default_value = "minbox")]
        kind: String,
        /// Number of boxes.
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Box size (MinBox) or box weight (CBox).
        #[arg(long, default_value_t = 200.0)]
        size: f64,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        /// Breaker bias.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// MinBox Breaker: random, max-danger, last-served or focused.
        /// CBox Maker: greedy or even.
        #[arg(long)]
        breaker: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Parse(_) | Error::TooLarge(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(suite: &str, format: &str, out: &Option<PathBuf>) -> Result<bool, Failure> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(suite).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            Failure::Usage(format!("unknown suite {suite:?}; expected one of: {}, all", names.join(", ")))
        })?]
    };
    if format != "text" && format != "json" {
        return Err(Failure::Usage(format!("unknown format {format:?}")));
    }
    let mut reports = Vec::new();
    for s in suites {
        let r = s.run()?;
        if format == "text" && out.is_none() {
            print!("{}", r.render());
        }
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed());
    let text = if format == "json" {
        serde_json::to_string_pretty(&reports).map_err(|e| Failure::Run(e.to_string()))? + "\n"
    } else {
        reports.iter().map(|r| r.render()).collect()
    };
    if format == "json" || out.is_some() {
        emit(out, &text)?;
    }
    Ok(passed)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify { suite, format, out } => verify(&suite, &format, &out),
        Command::Simulate { n, p, eps, k, block_divisor, runs, seed, breaker, policy, out, format, workers, manifest } => {
            let cfg = match manifest {
                Some(path) => read_manifest(&path)?.config,
                None => ExperimentConfig::resolve(&ExperimentFlags {
                    n,
                    p,
                    eps,
                    k,
                    block_divisor,
                    runs,
                    seed,
                    breaker,
                    policy,
                    format,
                })?,
            };
            let reports = simulate(&cfg, workers)?;
            let written = write_artifacts(&cfg, &reports, &out)?;
            let agg = aggregate(&reports);
            println!(
                "{} runs: spanning rate {:.3}{}, max fallbacks {}, runs with exact violations {}",
                agg.runs,
                agg.spanning_rate,
                agg.hamiltonian_rate.map(|h| format!(", hamiltonian rate {h:.3}")).unwrap_or_default(),
                agg.max_fallbacks,
                agg.runs_with_exact_violations
            );
            println!("wrote {} files to {}", written.len(), out.display());
            Ok(true)
        }
        Command::Solve { graph, game, out } => {
            let graph_text =
                fs::read_to_string(&graph).map_err(|e| Failure::Usage(format!("{}: {e}", graph.display())))?;
            let desc_text = if game.trim_start().starts_with('{') {
                game
            } else {
                fs::read_to_string(&game).map_err(|e| Failure::Usage(format!("{game}: {e}")))?
            };
            let result = solve_descriptor(&graph_text, &GameDescriptor::parse(&desc_text)?)?;
            let json = serde_json::to_string_pretty(&result).map_err(|e| Failure::Run(e.to_string()))?;
            emit(&out, &(json + "\n"))?;
            Ok(true)
        }
        Command::Boxgame { kind, n, size, alpha, b, breaker, seed, rounds, out } => {
            let rows = match kind.as_str() {
                "minbox" => {
                    let name = breaker.unwrap_or_else(|| "max-danger".into());
                    let who = MinBoxBreaker::parse(&name)
                        .ok_or_else(|| Failure::Usage(format!("unknown MinBox breaker {name:?}")))?;
                    if size.fract() != 0.0 || size < 1.0 || b.fract() != 0.0 || b < 1.0 {
                        return Err(Failure::Usage("MinBox needs integer --size and --b of at least 1".into()));
                    }
                    let mut rng = Seed(seed).rng();
                    simulate_minbox(n, size as usize, alpha, b as usize, who, rounds, &mut rng, true)?.rows
                }
                "cbox" => {
                    let name = breaker.unwrap_or_else(|| "greedy".into());
                    let weights = vec![size; n];
                    match name.as_str() {
                        "greedy" => cbox_rows(&weights, b, &mut |s| greedy_cmaker(s))?,
                        "even" => cbox_rows(&weights, b, &mut |s| even_cmaker(s))?,
                        other => return Err(Failure::Usage(format!("unknown CBox maker {other:?}"))),
                    }
                }
                other => return Err(Failure::Usage(format!("unknown box game {other:?}"))),
            };
            emit(&out, &rows_to_csv(&rows)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
