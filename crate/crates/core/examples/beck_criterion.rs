//! The Beck potential on random hypergraphs: when the sum is small the
//! potential Breaker wins, and the exact solver agrees.

use std::sync::Arc;

use walker_breaker::engine::{BoardState, GameDef, Player, Variant, WinCondition};
use walker_breaker::solver::solve;
use walker_breaker::strategies::beck_sum;
use walker_breaker::suites::random_beck_instance;
use walker_breaker::{Graph, Result, Seed};

fn main() -> Result<()> {
    let mut rng = Seed(2024).rng();
    let (mut criterion_holds, mut breaker_wins) = (0, 0);
    for i in 0..12 {
        let (m, sets, a, b) = random_beck_instance(&mut rng, 10);
        let (sum, holds) = beck_sum(&sets, a, b);
        let def = GameDef::new(Variant::MakerBreaker, a, b, Player::Maker, WinCondition::WinningSets(sets.clone()));
        let winner = solve(&def, &BoardState::new(Arc::new(Graph::matching(m)), &def, None)?)?.winner;
        println!(
            "instance {i:>2}: {m:>2} elements, {} sets, ({a}:{b}), sum {sum:.3} < {:.3}: {holds:<5}  solver: {winner:?}",
            sets.len(),
            1.0 / (b as f64 + 1.0)
        );
        criterion_holds += holds as usize;
        breaker_wins += (holds && winner == Player::Breaker) as usize;
    }
    println!("criterion held on {criterion_holds} instances; Breaker won {breaker_wins} of them");
    Ok(())
}
