use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use walker_breaker::engine::{BoardState, GameDef, Player, Variant, WinCondition};
use walker_breaker::graph::{is_connected, sample_gnp, Graph, Seed};
use walker_breaker::solver::{solve, solve_with, SolverConfig};

fn random_board(seed: Seed, max_edges: usize) -> Graph {
    let mut rng = seed.rng();
    loop {
        let n = rng.gen_range(3..=7);
        let g = sample_gnp(n, rng.gen_range(0.3..0.9), seed.split(rng.gen())).unwrap();
        if g.edge_count() >= 2 && g.edge_count() <= max_edges {
            return g;
        }
    }
}

// Plain Maker-Breaker minimax over claimed-edge bitmasks. Both sides claim
// their full bias each turn (claiming never hurts in a Maker-Breaker game).
struct Oracle<'a> {
    m: usize,
    maker_bias: usize,
    breaker_bias: usize,
    wins: &'a dyn Fn(u32) -> bool,
    memo: HashMap<(u32, u32, bool), bool>,
}

impl Oracle<'_> {
    fn maker_wins(&mut self, maker: u32, breaker: u32, maker_turn: bool) -> bool {
        if (self.wins)(maker) {
            return true;
        }
        let all = (1u32 << self.m) - 1;
        if !(self.wins)(all & !breaker) {
            return false;
        }
        let free = all & !maker & !breaker;
        if free == 0 {
            return false;
        }
        if let Some(&v) = self.memo.get(&(maker, breaker, maker_turn)) {
            return v;
        }
        let bias = if maker_turn { self.maker_bias } else { self.breaker_bias };
        let take = bias.min(free.count_ones() as usize);
        let elems: Vec<u32> = (0..self.m as u32).filter(|&e| free >> e & 1 == 1).collect();
        let mut result = !maker_turn;
        let mut pick = Vec::new();
        self.subsets(&elems, 0, take, &mut pick, maker, breaker, maker_turn, &mut result);
        self.memo.insert((maker, breaker, maker_turn), result);
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn subsets(
        &mut self,
        elems: &[u32],
        from: usize,
        left: usize,
        pick: &mut Vec<u32>,
        maker: u32,
        breaker: u32,
        maker_turn: bool,
        result: &mut bool,
    ) {
        if *result == maker_turn {
            return;
        }
        if left == 0 {
            let mask = pick.iter().fold(0u32, |a, &e| a | 1 << e);
            let v = if maker_turn {
                self.maker_wins(maker | mask, breaker, false)
            } else {
                self.maker_wins(maker, breaker | mask, true)
            };
            if v == maker_turn {
                *result = maker_turn;
            }
            return;
        }
        for i in from..elems.len() {
            pick.push(elems[i]);
            self.subsets(elems, i + 1, left - 1, pick, maker, breaker, maker_turn, result);
            pick.pop();
        }
    }
}

fn spans(g: &Graph, mask: u32) -> bool {
    let edges = g.edges().iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e);
    is_connected(&Graph::from_edges(g.vertex_count(), edges).unwrap(), None)
}

#[test]
fn maker_breaker_connectivity_matches_minimax() {
    let mut maker_wins = 0;
    for i in 0..120 {
        let seed = Seed(31).split(i);
        let g = random_board(seed, 12);
        let (a, b) = [(1, 1), (1, 2), (2, 1), (2, 2)][i as usize % 4];
        let first = if i % 3 == 0 { Player::Breaker } else { Player::Maker };
        let def = GameDef::new(Variant::MakerBreaker, a, b, first, WinCondition::Connectivity);
        let st = BoardState::new(Arc::new(g.clone()), &def, None).unwrap();
        let got = solve(&def, &st).unwrap().winner == Player::Maker;
        let wins = |m: u32| spans(&g, m);
        let mut oracle = Oracle { m: g.edge_count(), maker_bias: a, breaker_bias: b, wins: &wins, memo: HashMap::new() };
        let want = oracle.maker_wins(0, 0, first == Player::Maker);
        assert_eq!(got, want, "board {i}: {:?} ({a}:{b}) {first:?} first", g.edges());
        maker_wins += want as usize;
    }
    assert!(maker_wins > 5 && maker_wins < 115, "{maker_wins}");
}

#[test]
fn winning_set_games_match_minimax() {
    for i in 0..120 {
        let mut rng = Seed(77).split(i).rng();
        let m = rng.gen_range(2..=12);
        let mut pool: Vec<usize> = (0..m).collect();
        let sets: Vec<Vec<usize>> = (0..rng.gen_range(1..=5))
            .map(|_| {
                pool.shuffle(&mut rng);
                pool[..rng.gen_range(1..=m.min(5))].to_vec()
            })
            .collect();
        let (a, b) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let first = if rng.gen() { Player::Maker } else { Player::Breaker };
        let def = GameDef::new(Variant::MakerBreaker, a, b, first, WinCondition::WinningSets(sets.clone()));
        let st = BoardState::new(Arc::new(Graph::matching(m)), &def, None).unwrap();
        let masks: Vec<u32> = sets.iter().map(|s| s.iter().fold(0, |acc, &e| acc | 1 << e)).collect();
        let wins = |mk: u32| masks.iter().any(|&s| s & !mk == 0);
        let mut oracle = Oracle { m, maker_bias: a, breaker_bias: b, wins: &wins, memo: HashMap::new() };
        let want = oracle.maker_wins(0, 0, first == Player::Maker);
        assert_eq!(solve(&def, &st).unwrap().winner == Player::Maker, want, "{sets:?} ({a}:{b}) {first:?}");
    }
}

fn game_for(i: u64, g: &Graph) -> (GameDef, Option<usize>) {
    let n = g.vertex_count();
    match i % 4 {
        0 => (GameDef::new(Variant::ConnectorBreaker, 1, 1, Player::Maker, WinCondition::Connectivity), None),
        1 => (GameDef::new(Variant::MakerBreaker, 1, 1, Player::Breaker, WinCondition::Connectivity), None),
        2 => (GameDef::new(Variant::WalkerBreaker, 2, 1, Player::Maker, WinCondition::ReachVertex(n - 1)), Some(0)),
        _ => (GameDef::new(Variant::WalkerBreaker, 2, 2, Player::Breaker, WinCondition::SpanningW), Some(0)),
    }
}

#[test]
fn memo_is_sound() {
    let mut outcomes = [0usize; 2];
    for i in 0..200 {
        let g = random_board(Seed(3).split(i), 12);
        let (def, start) = game_for(i, &g);
        let st = BoardState::new(Arc::new(g), &def, start).unwrap();
        let with = solve_with(&def, &st, &SolverConfig { memo: true, ..Default::default() }).unwrap();
        let without = solve_with(&def, &st, &SolverConfig { memo: false, ..Default::default() }).unwrap();
        assert_eq!(with.winner, without.winner, "board {i}");
        outcomes[(with.winner == Player::Maker) as usize] += 1;
    }
    assert!(outcomes[0] > 0 && outcomes[1] > 0, "{outcomes:?}");
}

#[test]
fn extra_maker_edge_never_hurts() {
    let mut checked = 0;
    for i in 0..50 {
        let g = Arc::new(random_board(Seed(11).split(i), 12));
        let def = if i % 2 == 0 {
            GameDef::new(Variant::MakerBreaker, 1, 1, Player::Maker, WinCondition::Connectivity)
        } else {
            GameDef::new(Variant::MakerBreaker, 1, 2, Player::Breaker, WinCondition::Connectivity)
        };
        let st = BoardState::new(g.clone(), &def, None).unwrap();
        let before = solve(&def, &st).unwrap().winner;
        for e in 0..g.edge_count() {
            let mut more = st.clone();
            more.preclaim(e, Player::Maker).unwrap();
            let after = solve(&def, &more).unwrap().winner;
            assert!(!(before == Player::Maker && after == Player::Breaker), "board {i}, edge {e}");
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

#[test]
fn extra_breaker_bias_never_helps_maker() {
    for i in 0..40 {
        let g = Arc::new(random_board(Seed(19).split(i), 10));
        let mut prev = Player::Maker;
        for b in 1..=3 {
            let def = GameDef::new(Variant::ConnectorBreaker, 1, b, Player::Maker, WinCondition::Connectivity);
            let w = solve(&def, &BoardState::new(g.clone(), &def, None).unwrap()).unwrap().winner;
            assert!(!(prev == Player::Breaker && w == Player::Maker), "board {i}, b = {b}");
            prev = w;
        }
    }
}
