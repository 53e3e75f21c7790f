//! One game of Walker's full strategy on G(n, p) against a random Breaker,
//! with the monitor summary.

use walker_breaker::engine::PlayOptions;
use walker_breaker::strategies::{run_full_strategy, RandomBreaker, StrategyConfig};
use walker_breaker::suites::strategy_instance;
use walker_breaker::techlemma::{k_to_eps, threshold_p};
use walker_breaker::{Result, Seed};

fn main() -> Result<()> {
    let n = 300;
    let eps = k_to_eps(1);
    let p = threshold_p(n, eps);
    let seed = Seed(11);
    let (g, bf) = strategy_instance(n, 27, eps, p, seed)?;
    println!("G({n}, {p:.4}) with {} edges", g.edge_count());
    let run = run_full_strategy(g, bf, StrategyConfig::new(eps, p), seed, &mut RandomBreaker, PlayOptions::default())?;
    let st = &run.transcript.final_state;
    let r = &run.report;
    println!("ended by {:?} after {} records; Walker visited {} of {n} vertices", run.transcript.end, run.transcript.records.len(), st.maker_vertex_count());
    println!("sequences {:?}, skipped {:?}, fallbacks {}, coins {}", r.sequences, r.skipped, r.fallbacks, r.coins_tossed);
    for m in &r.monitors {
        println!("  {:<28} worst {:>10.3}  bound {:>10.3}  {}", m.claim_id, m.worst_observed, m.bound, if m.violated { "VIOLATED" } else { "ok" });
    }
    Ok(())
}
