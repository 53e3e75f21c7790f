//! Acceptance gate: every criterion at its stated size and time limit, one
//! pass/fail line each. Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use walker_breaker::suites::{
    beck_oracle, boxgame_bounds, concentration, connector_bias, hn_characterization, sk_traversal,
    strategy_monitors, structure_sizes, techlemma_oracles, unopposed, BoxgameParams, ConcentrationParams,
    MonitorParams, SuiteReport, UnopposedParams,
};
use walker_breaker::{Result, Seed};

struct Criterion {
    number: u32,
    title: &'static str,
    limit: Duration,
    run: fn() -> Result<SuiteReport>,
}

fn criteria() -> Vec<Criterion> {
    let min = |m: u64| Duration::from_secs(60 * m);
    vec![
        Criterion { number: 1, title: "structure sizes, k = 1..6", limit: Duration::from_secs(1), run: || structure_sizes(6) },
        Criterion { number: 2, title: "S_k traversal, k = 1, 2", limit: min(10), run: || sk_traversal(&[1, 2]) },
        Criterion { number: 3, title: "H_n characterization, n = 4", limit: min(5), run: || hn_characterization(4) },
        Criterion { number: 4, title: "(1:2) Connector-Breaker, n <= 5", limit: min(30), run: || connector_bias(2, 5) },
        Criterion {
            number: 5,
            title: "box-game bounds",
            limit: min(5),
            run: || boxgame_bounds(&BoxgameParams::default()),
        },
        Criterion { number: 6, title: "Beck criterion vs solver", limit: min(10), run: || beck_oracle(100, 12, Seed(0xbec)) },
        Criterion { number: 7, title: "candidate-set oracles", limit: min(2), run: || techlemma_oracles(50, Seed(0x7ec)) },
        Criterion {
            number: 8,
            title: "strategy runtime invariants",
            limit: min(30),
            run: || strategy_monitors(&MonitorParams::default()),
        },
        Criterion { number: 9, title: "unopposed sanity", limit: min(10), run: || unopposed(&UnopposedParams::default()) },
        Criterion {
            number: 10,
            title: "concentration at n = 10^4",
            limit: min(5),
            run: || concentration(&ConcentrationParams::default()),
        },
    ]
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut lines = Vec::new();
    for c in criteria() {
        if !wanted.is_empty() && !wanted.contains(&c.number) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let line = match outcome {
            Ok(rep) => {
                let in_time = took <= c.limit;
                let pass = rep.passed() && in_time;
                eprint!("{}", rep.render());
                let why = rep.failures().iter().map(|f| format!("{}: {}", f.name, f.detail)).collect::<Vec<_>>();
                let mut note = why.join("; ");
                if !in_time {
                    note = format!("over the {}s limit. {note}", c.limit.as_secs());
                }
                failed += !pass as usize;
                format!(
                    "criterion {:>2} {}: {} ({:.1}s){}",
                    c.number,
                    c.title,
                    if pass { "PASS" } else { "FAIL" },
                    took.as_secs_f64(),
                    if note.is_empty() { String::new() } else { format!(" {note}") }
                )
            }
            Err(e) => {
                failed += 1;
                format!("criterion {:>2} {}: FAIL error: {e}", c.number, c.title)
            }
        };
        println!("{line}");
        lines.push(line);
    }
    println!("---- acceptance summary ----");
    for l in &lines {
        println!("{l}");
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
