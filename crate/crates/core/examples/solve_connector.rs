//! Exact solutions of small Connector-Breaker and Walker-Breaker games.

use std::sync::Arc;

use walker_breaker::engine::{BoardState, GameDef, Player, Variant, WinCondition};
use walker_breaker::graph::build_hn;
use walker_breaker::solver::solve;
use walker_breaker::{Graph, Result};

fn main() -> Result<()> {
    let boards = [
        ("C_4 plus a chord", Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)])?),
        ("C_5", Graph::cycle(5)),
        ("H_5", build_hn(5)?),
        ("K_5", Graph::complete(5)),
    ];
    for (name, g) in &boards {
        let g = Arc::new(g.clone());
        for b in 1..=2 {
            let def = GameDef::new(Variant::ConnectorBreaker, 1, b, Player::Maker, WinCondition::Connectivity);
            let r = solve(&def, &BoardState::new(g.clone(), &def, None)?)?;
            println!("(1:{b}) Connector on {name}: {:?} wins, first move {:?}", r.winner, r.optimal_move);
        }
    }

    let g = Arc::new(Graph::complete(5));
    let def = GameDef::new(Variant::WalkerBreaker, 2, 1, Player::Maker, WinCondition::ReachVertex(4));
    let r = solve(&def, &BoardState::new(g, &def, Some(0))?)?;
    println!("(2:1) Walker on K_5 reaching vertex 4: {:?}, rounds needed {:?}", r.winner, r.rounds_to_win);
    Ok(())
}
