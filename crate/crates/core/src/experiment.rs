//! Monte Carlo experiments with the full strategy, game descriptors for
//! the exact solver, and the artifacts both emit.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{BoardState, GameDef, Player, Variant, WinCondition};
use crate::graph::{has_hamilton_cycle, Graph, Seed, Vertex, DEFAULT_HAMILTON_LIMIT};
use crate::solver::{solve, SolveResult};
use crate::strategies::{baseline_breaker, run_full_strategy, BreakerKind, Monitor, Policy, StrategyConfig, Thresholds};
use crate::suites::strategy_instance;
use crate::techlemma::{eps_to_k, k_to_eps, partition_blocks, threshold_p};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

/// Desk-scale block divisor used when none is given: `3^{k+2}`.
pub fn default_block_divisor(k: usize) -> usize {
    3usize.pow(k as u32 + 2)
}

/// A fully resolved simulation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub eps: f64,
    pub k: usize,
    pub block_divisor: usize,
    pub runs: usize,
    pub seed: u64,
    pub breaker: BreakerKind,
    pub policy: Policy,
    pub format: Format,
}

/// Raw simulation flags before resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentFlags {
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    pub k: Option<usize>,
    pub block_divisor: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub breaker: Option<String>,
    pub policy: Option<String>,
    pub format: Option<String>,
}

impl ExperimentConfig {
    /// Fills in derived values (`eps` from `k` or back, `p = n^{-2/3+eps}`)
    /// and validates everything.
    pub fn resolve(flags: &ExperimentFlags) -> Result<Self> {
        let n = flags.n.ok_or_else(|| Error::InvalidParameter("--n is required".into()))?;
        let (eps, k) = match (flags.eps, flags.k) {
            (Some(eps), Some(k)) => {
                if eps_to_k(eps)? != k {
                    return Err(Error::InvalidParameter(format!("--eps {eps} gives k = {}, not {k}", eps_to_k(eps)?)));
                }
                (eps, k)
            }
            (Some(eps), None) => (eps, eps_to_k(eps)?),
            (None, Some(k)) => (k_to_eps(k), k),
            (None, None) => (k_to_eps(1), 1),
        };
        let p = flags.p.unwrap_or_else(|| threshold_p(n, eps));
        let parse_or = |v: &Option<String>, what: &str, default: &str| -> Result<String> {
            let s = v.clone().unwrap_or_else(|| default.to_string());
            if s.is_empty() {
                return Err(Error::InvalidParameter(format!("empty --{what}")));
            }
            Ok(s)
        };
        let breaker_name = parse_or(&flags.breaker, "breaker", "random")?;
        let breaker = BreakerKind::parse(&breaker_name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown breaker {breaker_name:?}")))?;
        let policy_name = parse_or(&flags.policy, "policy", "fallback")?;
        let policy =
            Policy::parse(&policy_name).ok_or_else(|| Error::InvalidParameter(format!("unknown policy {policy_name:?}")))?;
        let format_name = parse_or(&flags.format, "format", "csv")?;
        let format =
            Format::parse(&format_name).ok_or_else(|| Error::InvalidParameter(format!("unknown format {format_name:?}")))?;
        let cfg = ExperimentConfig {
            n,
            p,
            eps,
            k,
            block_divisor: flags.block_divisor.unwrap_or_else(|| default_block_divisor(k)),
            runs: flags.runs.unwrap_or(10),
            seed: flags.seed.unwrap_or(0),
            breaker,
            policy,
            format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {} outside (0, 1]", self.p)));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("--runs must be at least 1".into()));
        }
        if eps_to_k(self.eps)? != self.k {
            return Err(Error::InvalidParameter(format!("eps {} does not match k {}", self.eps, self.k)));
        }
        Thresholds::new(self.n, self.k, self.eps, self.p)?;
        partition_blocks(self.n, self.k, self.block_divisor, Seed(0))?;
        Ok(())
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        Thresholds::new(self.n, self.k, self.eps, self.p)
    }

    pub fn run_seed(&self, run: usize) -> Seed {
        Seed(self.seed).split(run as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub breaker: String,
    pub spanning: bool,
    /// Exact check of Walker's final graph, only for small `n`.
    pub hamiltonian: Option<bool>,
    pub rounds: usize,
    pub end: String,
    pub sequences_one: usize,
    pub sequences_two: usize,
    pub sequences_three: usize,
    pub fallbacks: usize,
    pub max_type_one: usize,
    pub max_type_two: usize,
    pub coins_tossed: usize,
    pub h_edges: usize,
    pub exact_violations: usize,
    pub aborted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub record: RunRecord,
    pub monitors: Vec<Monitor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub spanning_rate: f64,
    pub hamiltonian_rate: Option<f64>,
    pub max_type_one: usize,
    pub max_type_two: usize,
    pub max_fallbacks: usize,
    pub runs_with_exact_violations: usize,
    pub aborted_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub thresholds: Thresholds,
    pub seed_rule: String,
    pub run_seeds: Vec<u64>,
    pub files: Vec<String>,
}

/// Plays run `run` of the experiment.
pub fn simulate_run(cfg: &ExperimentConfig, run: usize) -> Result<RunReport> {
    let seed = cfg.run_seed(run);
    let (g, bf) = strategy_instance(cfg.n, cfg.block_divisor, cfg.eps, cfg.p, seed)?;
    let mut scfg = StrategyConfig::new(cfg.eps, cfg.p);
    scfg.policy = cfg.policy;
    let mut breaker = baseline_breaker(cfg.breaker, &g, &bf, cfg.eps)?;
    let out = run_full_strategy(g, bf, scfg, seed, breaker.as_mut(), Default::default())?;
    let fin = &out.transcript.final_state;
    let hamiltonian = if cfg.n <= DEFAULT_HAMILTON_LIMIT { Some(has_hamilton_cycle(&fin.maker_graph())?) } else { None };
    let r = out.report;
    Ok(RunReport {
        record: RunRecord {
            run,
            seed: seed.0,
            breaker: cfg.breaker.name().into(),
            spanning: out.transcript.winner == Player::Maker,
            hamiltonian,
            rounds: fin.rounds_played,
            end: format!("{:?}", out.transcript.end),
            sequences_one: r.sequences[0],
            sequences_two: r.sequences[1],
            sequences_three: r.sequences[2],
            fallbacks: r.fallbacks,
            max_type_one: r.max_type_one,
            max_type_two: r.max_type_two,
            coins_tossed: r.coins_tossed,
            h_edges: r.h_edges.len(),
            exact_violations: r.exact_violations().len(),
            aborted: r.aborted.clone().unwrap_or_default(),
        },
        monitors: r.monitors,
    })
}

/// All runs on `workers` threads (0 = one per core), in run order.
pub fn simulate(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RunReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    pool.install(|| (0..cfg.runs).into_par_iter().map(|i| simulate_run(cfg, i)).collect())
}

pub fn aggregate(reports: &[RunReport]) -> Aggregate {
    let runs = reports.len();
    let rate = |k: usize| if runs == 0 { 0.0 } else { k as f64 / runs as f64 };
    let recs = reports.iter().map(|r| &r.record);
    let hams: Vec<bool> = recs.clone().filter_map(|r| r.hamiltonian).collect();
    Aggregate {
        runs,
        spanning_rate: rate(recs.clone().filter(|r| r.spanning).count()),
        hamiltonian_rate: (!hams.is_empty()).then(|| hams.iter().filter(|&&h| h).count() as f64 / hams.len() as f64),
        max_type_one: recs.clone().map(|r| r.max_type_one).max().unwrap_or(0),
        max_type_two: recs.clone().map(|r| r.max_type_two).max().unwrap_or(0),
        max_fallbacks: recs.clone().map(|r| r.fallbacks).max().unwrap_or(0),
        runs_with_exact_violations: recs.clone().filter(|r| r.exact_violations > 0).count(),
        aborted_runs: recs.filter(|r| !r.aborted.is_empty()).count(),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes `manifest.json`, `runs/run_<i>.json` and the run table and
/// aggregate in the configured format. Returns the written paths.
pub fn write_artifacts(cfg: &ExperimentConfig, reports: &[RunReport], out: &Path) -> Result<Vec<PathBuf>> {
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| io_err(&runs_dir, e))?;
    let mut written = Vec::new();
    for r in reports {
        let path = runs_dir.join(format!("run_{}.json", r.record.run));
        write_file(&path, &to_json(r)?)?;
        written.push(path);
    }
    let records: Vec<RunRecord> = reports.iter().map(|r| r.record.clone()).collect();
    let agg = aggregate(reports);
    let (table, summary) = match cfg.format {
        Format::Csv => {
            let rows: Vec<CsvRecord> = records.iter().map(CsvRecord::from).collect();
            let agg_row = CsvAggregate::from(&agg);
            (("runs.csv", to_csv(&rows)?), ("aggregate.csv", to_csv(&[agg_row])?))
        }
        Format::Json => (("runs.json", to_json(&records)?), ("aggregate.json", to_json(&agg)?)),
    };
    for (name, text) in [table, summary] {
        let path = out.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    let manifest = Manifest {
        tool: "walkerlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        thresholds: cfg.thresholds()?,
        seed_rule: "run i uses split(seed, i) = splitmix64(seed ^ splitmix64(i + 1)); the graph is drawn from \
                    split(run, 100), the blocks from split(run, 101), Walker's coins from split(run, 7)"
            .into(),
        run_seeds: (0..cfg.runs).map(|i| cfg.run_seed(i).0).collect(),
        files: written.iter().filter_map(|p| p.strip_prefix(out).ok()).map(|p| p.display().to_string()).collect(),
    };
    let path = out.join("manifest.json");
    write_file(&path, &to_json(&manifest)?)?;
    written.push(path);
    Ok(written)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    m.config.validate()?;
    Ok(m)
}

// flat rows for csv, which has no nested or optional-bool support worth relying on
#[derive(Serialize)]
struct CsvRecord {
    run: usize,
    seed: u64,
    breaker: String,
    spanning: bool,
    hamiltonian: String,
    rounds: usize,
    end: String,
    sequences_one: usize,
    sequences_two: usize,
    sequences_three: usize,
    fallbacks: usize,
    max_type_one: usize,
    max_type_two: usize,
    coins_tossed: usize,
    h_edges: usize,
    exact_violations: usize,
    aborted: String,
}

impl From<&RunRecord> for CsvRecord {
    fn from(r: &RunRecord) -> Self {
        CsvRecord {
            run: r.run,
            seed: r.seed,
            breaker: r.breaker.clone(),
            spanning: r.spanning,
            hamiltonian: r.hamiltonian.map(|h| h.to_string()).unwrap_or_default(),
            rounds: r.rounds,
            end: r.end.clone(),
            sequences_one: r.sequences_one,
            sequences_two: r.sequences_two,
            sequences_three: r.sequences_three,
            fallbacks: r.fallbacks,
            max_type_one: r.max_type_one,
            max_type_two: r.max_type_two,
            coins_tossed: r.coins_tossed,
            h_edges: r.h_edges,
            exact_violations: r.exact_violations,
            aborted: r.aborted.clone(),
        }
    }
}

#[derive(Serialize)]
struct CsvAggregate {
    runs: usize,
    spanning_rate: f64,
    hamiltonian_rate: String,
    max_type_one: usize,
    max_type_two: usize,
    max_fallbacks: usize,
    runs_with_exact_violations: usize,
    aborted_runs: usize,
}

impl From<&Aggregate> for CsvAggregate {
    fn from(a: &Aggregate) -> Self {
        CsvAggregate {
            runs: a.runs,
            spanning_rate: a.spanning_rate,
            hamiltonian_rate: a.hamiltonian_rate.map(|h| h.to_string()).unwrap_or_default(),
            max_type_one: a.max_type_one,
            max_type_two: a.max_type_two,
            max_fallbacks: a.max_fallbacks,
            runs_with_exact_violations: a.runs_with_exact_violations,
            aborted_runs: a.aborted_runs,
        }
    }
}

fn default_bias() -> usize {
    1
}

fn default_first() -> Player {
    Player::Maker
}

/// JSON description of a game for the exact solver, e.g.
/// `{"variant": "ConnectorBreaker", "breaker_bias": 2, "win": "Connectivity"}`
/// or `{"variant": "WalkerBreaker", "win": {"ReachVertex": 3}, "start": 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDescriptor {
    pub variant: Variant,
    #[serde(default = "default_bias")]
    pub maker_bias: usize,
    #[serde(default = "default_bias")]
    pub breaker_bias: usize,
    #[serde(default = "default_first")]
    pub first_player: Player,
    pub win: WinCondition,
    #[serde(default)]
    pub start: Option<Vertex>,
    #[serde(default)]
    pub horizon: Option<usize>,
}

impl GameDescriptor {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("game descriptor: {e}")))
    }

    pub fn game_def(&self) -> GameDef {
        let def = GameDef::new(self.variant, self.maker_bias, self.breaker_bias, self.first_player, self.win.clone());
        match self.horizon {
            Some(h) => def.with_horizon(h),
            None => def,
        }
    }
}

/// Solves the game described by `descriptor` on the graph in edge-list
/// format.
pub fn solve_descriptor(graph_text: &str, descriptor: &GameDescriptor) -> Result<SolveResult> {
    let g = Graph::from_edge_list(graph_text)?;
    let def = descriptor.game_def();
    let state = BoardState::new(std::sync::Arc::new(g), &def, descriptor.start)?;
    solve(&def, &state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(n: usize) -> ExperimentFlags {
        ExperimentFlags { n: Some(n), runs: Some(2), seed: Some(4), ..Default::default() }
    }

    #[test]
    fn resolution_fills_derived_values() {
        let cfg = ExperimentConfig::resolve(&flags(300)).unwrap();
        assert_eq!(cfg.k, 1);
        assert!((cfg.p - threshold_p(300, 2.0 / 15.0)).abs() < 1e-15);
        assert_eq!(cfg.block_divisor, 27);
        let cfg = ExperimentConfig::resolve(&ExperimentFlags { k: Some(2), n: Some(2000), ..Default::default() }).unwrap();
        assert_eq!(cfg.block_divisor, 81);
        assert!((cfg.eps - k_to_eps(2)).abs() < 1e-15);
    }

    #[test]
    fn bad_flags_rejected() {
        let bad = [
            ExperimentFlags { n: None, ..flags(300) },
            ExperimentFlags { p: Some(1.5), ..flags(300) },
            ExperimentFlags { eps: Some(0.9), ..flags(300) },
            ExperimentFlags { eps: Some(2.0 / 15.0), k: Some(2), ..flags(300) },
            ExperimentFlags { breaker: Some("nobody".into()), ..flags(300) },
            ExperimentFlags { policy: Some("maybe".into()), ..flags(300) },
            ExperimentFlags { format: Some("xml".into()), ..flags(300) },
            ExperimentFlags { runs: Some(0), ..flags(300) },
            flags(20),
        ];
        for f in bad {
            assert!(ExperimentConfig::resolve(&f).is_err(), "{f:?}");
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = ExperimentConfig::resolve(&ExperimentFlags { n: Some(60), block_divisor: Some(9), ..flags(60) }).unwrap();
        let a = simulate(&cfg, 2).unwrap();
        let b = simulate(&cfg, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].record.seed, Seed(4).split(1).0);
    }

    #[test]
    fn descriptor_parsing() {
        let d = GameDescriptor::parse(r#"{"variant": "ConnectorBreaker", "win": "Connectivity"}"#).unwrap();
        assert_eq!(d.maker_bias, 1);
        let r = solve_descriptor("4 4\n0 1\n1 2\n2 3\n3 0\n", &d).unwrap();
        assert_eq!(r.winner, Player::Breaker);
        let w = GameDescriptor::parse(r#"{"variant": "WalkerBreaker", "maker_bias": 2, "win": {"ReachVertex": 2}, "start": 0}"#)
            .unwrap();
        assert_eq!(solve_descriptor("4 3\n0 1\n1 2\n2 3\n", &w).unwrap().winner, Player::Maker);
        assert!(GameDescriptor::parse(r#"{"variant": "Chess", "win": "Connectivity"}"#).is_err());
        assert!(GameDescriptor::parse(r#"{"variant": "ConnectorBreaker", "win": "Connectivity", "x": 1}"#).is_err());
    }
}
