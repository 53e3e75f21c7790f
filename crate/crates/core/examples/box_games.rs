//! MinBox against each Breaker heuristic and CBox against two Makers, with
//! the observed extremes next to their bounds.

use walker_breaker::boxgames::{box_bound, even_cmaker, greedy_cmaker, simulate_cbox, simulate_minbox, MinBoxBreaker};
use walker_breaker::{Result, Seed};

fn main() -> Result<()> {
    let (boxes, size, alpha, b) = (50, 200, 0.3, 2);
    for breaker in MinBoxBreaker::ALL {
        let mut rng = Seed(7).rng();
        let t = simulate_minbox(boxes, size, alpha, b, breaker, None, &mut rng, false)?;
        println!(
            "MinBox vs {:<11} rounds {:>5}  max danger {:>6.2}  bound {:.2}",
            breaker.name(),
            t.rounds,
            t.max_active_danger,
            t.bound
        );
    }

    let bias = 2.0;
    let weight = box_bound(bias, 8) + bias + 1.0;
    for (name, cmaker) in [("greedy", greedy_cmaker as fn(&_) -> Vec<f64>), ("even", even_cmaker)] {
        let t = simulate_cbox(vec![weight; 8], bias, &mut |s| cmaker(s), None)?;
        println!(
            "CBox vs {name:<6} boxes of {weight:.2}: CMaker won {}, max surviving claim {:.2}, bound {:.2}",
            t.cmaker_won,
            t.max_observed(),
            t.bound
        );
    }
    Ok(())
}
