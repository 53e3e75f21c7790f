//! Walker follows the layered structure S_2 from its root against a random
//! (2:2) Breaker, then the same walk is checked against every Breaker.

use walker_breaker::engine::{play_game, Action, BoardState, FnStrategy, GameDef, Player, Variant, WinCondition};
use walker_breaker::solver::verify_strategy_against_all_breakers;
use walker_breaker::strategies::RandomBreaker;
use walker_breaker::structure::{structure_walk, StructureEmbedding, StructureSk};
use walker_breaker::{Result, Seed};

fn main() -> Result<()> {
    let s = StructureSk::build(2)?;
    println!(
        "S_2: {} vertices, {} edges, {} leaves",
        s.vertex_count(),
        s.graph().edge_count(),
        s.leaf_count()
    );
    let def = GameDef::new(Variant::WalkerBreaker, 2, 2, Player::Breaker, WinCondition::ReachVertex(s.sink()));
    let initial = BoardState::new(s.graph_arc(), &def, Some(s.root()))?;
    let emb = StructureEmbedding::identity(&s);

    let mut walker = FnStrategy(|st: &BoardState, _: &GameDef, _: &mut _| match structure_walk(st, &s, &emb) {
        Ok(Some(m)) => Action::Play(m),
        _ => Action::Stop,
    });
    for seed in 0..3 {
        let t = play_game(&def, initial.clone(), &mut walker, &mut RandomBreaker, Seed(seed))?;
        println!("seed {seed}: winner {:?} after {} moves, walker at {:?}", t.winner, t.records.len(), t.final_state.walker_position());
    }

    let mut walk = |st: &BoardState, _: &GameDef| -> Result<Action> {
        Ok(match structure_walk(st, &s, &emb)? {
            Some(m) => Action::Play(m),
            None => Action::Stop,
        })
    };
    let r = verify_strategy_against_all_breakers(&def, &initial, &mut walk, 2)?;
    println!("walk reaches the sink against every Breaker: {} ({} lines)", r.holds, r.lines_explored);
    Ok(())
}
