//! A small seeded batch of full-strategy runs against the structure-aware
//! Breaker, aggregated like the `simulate` subcommand.

use walker_breaker::experiment::{aggregate, simulate, ExperimentConfig, ExperimentFlags};
use walker_breaker::Result;

fn main() -> Result<()> {
    let cfg = ExperimentConfig::resolve(&ExperimentFlags {
        n: Some(200),
        block_divisor: Some(27),
        runs: Some(8),
        seed: Some(99),
        breaker: Some("structure".into()),
        ..Default::default()
    })?;
    println!("n = {}, p = {:.4}, eps = {:.4}, {} runs", cfg.n, cfg.p, cfg.eps, cfg.runs);
    let reports = simulate(&cfg, 0)?;
    for r in &reports {
        let rec = &r.record;
        println!("run {}: spanning {:<5} rounds {:>4} fallbacks {:>3} end {}", rec.run, rec.spanning, rec.rounds, rec.fallbacks, rec.end);
    }
    println!("{}", serde_json::to_string_pretty(&aggregate(&reports)).unwrap());
    Ok(())
}
