//! Exact minimax for small boards.
//!
//! Positions are packed into bitmasks (one bit per edge for each player) and
//! memoized. Breaker always claims a free edge when one exists, since an
//! extra Breaker edge never helps Maker; Walker may end her turn early
//! because her moves change her position.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::engine::{Action, BoardState, GameDef, Move, Owner, Player, Variant, WinCondition};
use crate::error::{Error, Result};
use crate::graph::{self, EdgeId, Graph};

pub const DEFAULT_EDGE_LIMIT: usize = 26;
const NO_POS: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub edge_limit: usize,
    pub memo: bool,
    /// Also compute the least Maker horizon that still wins
    /// (`ReachVertex` only).
    pub rounds_to_win: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            edge_limit: DEFAULT_EDGE_LIMIT,
            memo: true,
            rounds_to_win: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMove {
    Claim { edge: EdgeId, u: usize, v: usize },
    Traverse { edge: EdgeId, u: usize, v: usize },
    Pass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub winner: Player,
    pub optimal_move: Option<SolverMove>,
    pub nodes_expanded: u64,
    pub rounds_to_win: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    maker: u64,
    breaker: u64,
    pos: u8,
    maker_to_move: bool,
    moves_left: u16,
    maker_turns: u16,
}

struct Solver<'a> {
    def: &'a GameDef,
    g: &'a Graph,
    all: u64,
    sets: Vec<u64>,
    // per-vertex incident edge mask
    incident: Vec<u64>,
    horizon: Option<usize>,
    memo: Option<HashMap<Key, bool>>,
    nodes: u64,
}

impl<'a> Solver<'a> {
    fn new(def: &'a GameDef, g: &'a Graph, cfg: &SolverConfig) -> Result<Self> {
        let m = g.edge_count();
        if m > cfg.edge_limit || m > 64 {
            return Err(Error::TooLarge(format!("solver limited to {} edges, board has {m}", cfg.edge_limit.min(64))));
        }
        if g.vertex_count() > 64 {
            return Err(Error::TooLarge("solver limited to 64 vertices".into()));
        }
        let all = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let sets = match &def.win {
            WinCondition::WinningSets(s) => s.iter().map(|set| set.iter().fold(0u64, |a, &e| a | (1 << e))).collect(),
            _ => Vec::new(),
        };
        let incident = (0..g.vertex_count())
            .map(|v| g.neighbours(v).iter().fold(0u64, |a, &(_, e)| a | (1 << e)))
            .collect();
        Ok(Solver {
            def,
            g,
            all,
            sets,
            incident,
            horizon: def.horizon,
            memo: if cfg.memo { Some(HashMap::new()) } else { None },
            nodes: 0,
        })
    }

    fn vertex_mask(&self, edges: u64) -> u64 {
        let mut vm = 0u64;
        let mut rest = edges;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let (u, v) = self.g.edge(e);
            vm |= (1 << u) | (1 << v);
        }
        vm
    }

    fn condition(&self, edges: u64, pos: u8) -> bool {
        let n = self.g.vertex_count();
        let mut vm = self.vertex_mask(edges);
        if pos != NO_POS {
            vm |= 1 << pos;
        }
        let full_v = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        match &self.def.win {
            WinCondition::ReachVertex(t) => vm & (1 << t) != 0,
            WinCondition::SpanningW => vm == full_v,
            WinCondition::WinningSets(_) => self.sets.iter().any(|&s| s & !edges == 0),
            WinCondition::Connectivity => {
                if n == 1 {
                    return true;
                }
                vm == full_v && self.component_vertices(edges, 1) == full_v
            }
            WinCondition::Hamiltonicity => {
                if vm != full_v || (edges.count_ones() as usize) < n {
                    return false;
                }
                let list: Vec<_> = (0..self.g.edge_count())
                    .filter(|&e| edges & (1 << e) != 0)
                    .map(|e| self.g.edge(e))
                    .collect();
                let h = Graph::from_edges(n, list).expect("subgraph");
                graph::has_hamilton_cycle(&h).unwrap_or(false)
            }
        }
    }

    // vertices reachable from the seed vertex set through `edges`
    fn component_vertices(&self, edges: u64, seed: u64) -> u64 {
        let mut reached = seed;
        loop {
            let mut grown = reached;
            let mut rest = edges;
            while rest != 0 {
                let e = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let (u, v) = self.g.edge(e);
                if reached & ((1 << u) | (1 << v)) != 0 {
                    grown |= (1 << u) | (1 << v);
                }
            }
            if grown == reached {
                return reached;
            }
            reached = grown;
        }
    }

    // Upper bound: Maker only ever gains edges inside the available
    // component she is attached to.
    fn can_still_win(&self, k: &Key) -> bool {
        let avail = self.all & !k.breaker;
        let reach = match self.def.variant {
            Variant::MakerBreaker => avail,
            Variant::ConnectorBreaker if k.maker == 0 => avail,
            Variant::ConnectorBreaker | Variant::WalkerBreaker => {
                let seed = if k.pos != NO_POS { 1u64 << k.pos } else { self.vertex_mask(k.maker) };
                let comp = self.component_vertices(avail, seed);
                let mut mask = 0;
                let mut rest = avail;
                while rest != 0 {
                    let e = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let (u, _) = self.g.edge(e);
                    if comp & (1 << u) != 0 {
                        mask |= 1 << e;
                    }
                }
                mask
            }
        };
        self.condition(reach | k.maker, k.pos)
    }

    fn end_turn(&self, mut k: Key) -> Key {
        if k.maker_to_move {
            k.maker_turns += 1;
        }
        k.maker_to_move = !k.maker_to_move;
        let who = if k.maker_to_move { Player::Maker } else { Player::Breaker };
        k.moves_left = self.def.bias(who) as u16;
        k
    }

    fn children(&self, k: &Key) -> Vec<(SolverMove, Key)> {
        let free = self.all & !k.maker & !k.breaker;
        let mut out = Vec::new();
        let step = |mut c: Key| {
            c.moves_left -= 1;
            if c.moves_left == 0 {
                self.end_turn(c)
            } else {
                c
            }
        };
        let mv = |kind: fn(EdgeId, usize, usize) -> SolverMove, e: EdgeId| {
            let (u, v) = self.g.edge(e);
            kind(e, u, v)
        };
        let claim = |e, u, v| SolverMove::Claim { edge: e, u, v };
        let traverse = |e, u, v| SolverMove::Traverse { edge: e, u, v };
        if !k.maker_to_move {
            for e in bits(free) {
                let mut c = *k;
                c.breaker |= 1 << e;
                out.push((mv(claim, e), step(c)));
            }
        } else {
            match self.def.variant {
                Variant::MakerBreaker => {
                    for e in bits(free) {
                        let mut c = *k;
                        c.maker |= 1 << e;
                        out.push((mv(claim, e), step(c)));
                    }
                }
                Variant::ConnectorBreaker => {
                    let touch = if k.maker == 0 {
                        free
                    } else {
                        let vm = self.vertex_mask(k.maker);
                        bits(vm).fold(0u64, |a, v| a | self.incident[v]) & free
                    };
                    for e in bits(touch) {
                        let mut c = *k;
                        c.maker |= 1 << e;
                        out.push((mv(claim, e), step(c)));
                    }
                }
                Variant::WalkerBreaker => {
                    let pos = k.pos as usize;
                    let inc = self.incident[pos];
                    for e in bits(inc & free) {
                        let mut c = *k;
                        c.maker |= 1 << e;
                        c.pos = self.g.other_end(e, pos) as u8;
                        out.push((mv(claim, e), step(c)));
                    }
                    for e in bits(inc & k.maker) {
                        let mut c = *k;
                        c.pos = self.g.other_end(e, pos) as u8;
                        out.push((mv(traverse, e), step(c)));
                    }
                    out.push((SolverMove::Pass, self.end_turn(*k)));
                }
            }
            if out.is_empty() {
                out.push((SolverMove::Pass, self.end_turn(*k)));
            }
        }
        out
    }

    fn maker_wins(&mut self, k: Key) -> bool {
        self.nodes += 1;
        if self.condition(k.maker, k.pos) {
            return true;
        }
        if let Some(h) = self.horizon {
            if k.maker_turns as usize >= h {
                return false;
            }
        }
        if self.all & !k.maker & !k.breaker == 0 {
            return false;
        }
        if let Some(&v) = self.memo.as_ref().and_then(|m| m.get(&k)) {
            return v;
        }
        if !self.can_still_win(&k) {
            if let Some(m) = self.memo.as_mut() {
                m.insert(k, false);
            }
            return false;
        }
        let children = self.children(&k);
        let value = if k.maker_to_move {
            children.into_iter().any(|(_, c)| self.maker_wins(c))
        } else {
            children.into_iter().all(|(_, c)| self.maker_wins(c))
        };
        if let Some(m) = self.memo.as_mut() {
            m.insert(k, value);
        }
        value
    }
}

fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

fn key_of(state: &BoardState, def: &GameDef) -> Key {
    let mut maker = 0u64;
    let mut breaker = 0u64;
    for (e, o) in state.ownership().iter().enumerate() {
        match o {
            Owner::Maker => maker |= 1 << e,
            Owner::Breaker => breaker |= 1 << e,
            Owner::Free => {}
        }
    }
    let _ = def;
    Key {
        maker,
        breaker,
        pos: state.walker_position().map(|p| p as u8).unwrap_or(NO_POS),
        maker_to_move: state.whose_turn == Player::Maker,
        moves_left: state.moves_left_in_turn as u16,
        maker_turns: state.maker_turns as u16,
    }
}

pub fn solve(def: &GameDef, initial: &BoardState) -> Result<SolveResult> {
    solve_with(def, initial, &SolverConfig::default())
}

pub fn solve_with(def: &GameDef, initial: &BoardState, cfg: &SolverConfig) -> Result<SolveResult> {
    def.validate(initial.graph())?;
    let g = initial.graph();
    let mut solver = Solver::new(def, g, cfg)?;
    let root = key_of(initial, def);
    let maker_wins = solver.maker_wins(root);
    let winner = if maker_wins { Player::Maker } else { Player::Breaker };

    let terminal = solver.condition(root.maker, root.pos)
        || solver.all & !root.maker & !root.breaker == 0
        || solver.horizon.is_some_and(|h| root.maker_turns as usize >= h);
    let optimal_move = if terminal {
        None
    } else {
        let children = solver.children(&root);
        let mover_is_maker = root.maker_to_move;
        let mut best = None;
        for (mv, c) in &children {
            if solver.maker_wins(*c) == mover_is_maker {
                best = Some(*mv);
                break;
            }
        }
        best.or_else(|| children.first().map(|(m, _)| *m))
    };

    let mut rounds_to_win = None;
    if maker_wins && cfg.rounds_to_win && matches!(def.win, WinCondition::ReachVertex(_)) {
        let cap = def.horizon.unwrap_or(usize::MAX).min(root.maker_turns as usize + g.edge_count() + 1);
        for h in root.maker_turns as usize..=cap {
            let mut bounded = def.clone();
            bounded.horizon = Some(h);
            let mut s = Solver::new(&bounded, g, cfg)?;
            let win = s.maker_wins(root);
            solver.nodes += s.nodes;
            if win {
                rounds_to_win = Some(h - root.maker_turns as usize);
                break;
            }
        }
    }

    Ok(SolveResult {
        winner,
        optimal_move,
        nodes_expanded: solver.nodes,
        rounds_to_win,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub holds: bool,
    pub lines_explored: u64,
    /// Breaker's claims turn by turn on a refuting line.
    pub witness: Option<Vec<Vec<(usize, usize)>>>,
    pub reason: Option<String>,
}

/// Checks a deterministic Maker strategy against every Breaker reply.
///
/// On each Breaker turn every set of at most `b` free edges is tried. Maker
/// must satisfy the game's win condition within `horizon` Maker turns on
/// every line.
pub fn verify_strategy_against_all_breakers(
    def: &GameDef,
    initial: &BoardState,
    strategy: &mut dyn FnMut(&BoardState, &GameDef) -> Result<Action>,
    horizon: usize,
) -> Result<VerifyReport> {
    let mut seen = HashSet::new();
    let mut lines = 0u64;
    let mut witness = Vec::new();
    let outcome = verify_rec(def, initial.clone(), strategy, horizon, &mut seen, &mut lines, &mut witness)?;
    Ok(match outcome {
        None => VerifyReport { holds: true, lines_explored: lines, witness: None, reason: None },
        Some(reason) => VerifyReport {
            holds: false,
            lines_explored: lines,
            witness: Some(witness),
            reason: Some(reason),
        },
    })
}

type Seen = HashSet<(Vec<Owner>, Option<usize>, usize, bool, usize)>;

// Returns the failure reason of some refuting line, with `witness` holding
// Breaker's claims along it.
fn verify_rec(
    def: &GameDef,
    state: BoardState,
    strategy: &mut dyn FnMut(&BoardState, &GameDef) -> Result<Action>,
    horizon: usize,
    seen: &mut Seen,
    lines: &mut u64,
    witness: &mut Vec<Vec<(usize, usize)>>,
) -> Result<Option<String>> {
    if state.maker_condition(def)? {
        *lines += 1;
        return Ok(None);
    }
    if state.maker_turns >= horizon {
        *lines += 1;
        return Ok(Some(format!("goal not reached within {horizon} Maker turns")));
    }
    let key = (
        state.ownership().to_vec(),
        state.walker_position(),
        state.maker_turns,
        state.whose_turn == Player::Maker,
        state.moves_left_in_turn,
    );
    if seen.contains(&key) {
        return Ok(None);
    }
    let result = match state.whose_turn {
        Player::Maker => {
            let mut s = state;
            let turn = s.maker_turns;
            loop {
                if s.maker_turns != turn || s.whose_turn != Player::Maker {
                    break verify_rec(def, s, strategy, horizon, seen, lines, witness)?;
                }
                if s.maker_condition(def)? {
                    *lines += 1;
                    break None;
                }
                if crate::engine::legal_moves(&s, def).is_empty() {
                    s.pass(def);
                    continue;
                }
                match strategy(&s, def) {
                    Ok(Action::Play(mv)) => {
                        if let Err(e) = s.apply(def, mv) {
                            *lines += 1;
                            break Some(format!("strategy played an illegal move: {e}"));
                        }
                    }
                    Ok(Action::Pass) => s.pass(def),
                    Ok(Action::Stop) => {
                        *lines += 1;
                        break Some("strategy stopped".into());
                    }
                    Err(e) => {
                        *lines += 1;
                        break Some(format!("strategy failed: {e}"));
                    }
                }
            }
        }
        Player::Breaker => {
            let free: Vec<EdgeId> = (0..state.graph().edge_count())
                .filter(|&e| state.owner(e) == Owner::Free)
                .collect();
            let b = def.breaker_bias.min(free.len());
            let mut failure = None;
            let mut chosen = Vec::with_capacity(b);
            for size in (0..=b).rev() {
                failure = breaker_subsets(def, &state, &free, size, 0, &mut chosen, strategy, horizon, seen, lines, witness)?;
                if failure.is_some() {
                    break;
                }
            }
            failure
        }
    };
    if result.is_none() {
        seen.insert(key);
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn breaker_subsets(
    def: &GameDef,
    state: &BoardState,
    free: &[EdgeId],
    size: usize,
    from: usize,
    chosen: &mut Vec<EdgeId>,
    strategy: &mut dyn FnMut(&BoardState, &GameDef) -> Result<Action>,
    horizon: usize,
    seen: &mut Seen,
    lines: &mut u64,
    witness: &mut Vec<Vec<(usize, usize)>>,
) -> Result<Option<String>> {
    if chosen.len() == size {
        let mut s = state.clone();
        for &e in chosen.iter() {
            s.apply(def, Move::Claim(e))?;
        }
        if s.whose_turn == Player::Breaker {
            s.pass(def);
        }
        let failure = verify_rec(def, s, strategy, horizon, seen, lines, witness)?;
        if failure.is_some() {
            let g = state.graph();
            witness.insert(0, chosen.iter().map(|&e| g.edge(e)).collect());
        }
        return Ok(failure);
    }
    for i in from..free.len() {
        if free.len() - i < size - chosen.len() {
            break;
        }
        chosen.push(free[i]);
        let r = breaker_subsets(def, state, free, size, i + 1, chosen, strategy, horizon, seen, lines, witness)?;
        chosen.pop();
        if r.is_some() {
            return Ok(r);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_hn, Graph};
    use std::sync::Arc;

    fn connector_def(b: usize) -> GameDef {
        GameDef::new(Variant::ConnectorBreaker, 1, b, Player::Maker, WinCondition::Connectivity)
    }

    #[test]
    fn connector_on_h4_and_c4() {
        let def = connector_def(1);
        let h4 = BoardState::new(Arc::new(build_hn(4).unwrap()), &def, None).unwrap();
        assert_eq!(solve(&def, &h4).unwrap().winner, Player::Maker);
        let c4 = BoardState::new(Arc::new(Graph::cycle(4)), &def, None).unwrap();
        assert_eq!(solve(&def, &c4).unwrap().winner, Player::Breaker);
    }

    #[test]
    fn connector_k4_bias_two_breaker() {
        let def = connector_def(2);
        let s = BoardState::new(Arc::new(Graph::complete(4)), &def, None).unwrap();
        assert_eq!(solve(&def, &s).unwrap().winner, Player::Breaker);
    }

    #[test]
    fn single_three_set_breaker_first() {
        let def = GameDef::new(
            Variant::MakerBreaker,
            1,
            1,
            Player::Breaker,
            WinCondition::WinningSets(vec![vec![0, 1, 2]]),
        );
        let s = BoardState::new(Arc::new(Graph::matching(3)), &def, None).unwrap();
        let r = solve(&def, &s).unwrap();
        assert_eq!(r.winner, Player::Breaker);
        assert!(matches!(r.optimal_move, Some(SolverMove::Claim { edge: 0, .. })));
    }

    #[test]
    fn walker_reach_rounds() {
        // path 0-1-2-3, Walker at 0, (1:1), Maker first, Breaker only has
        // edges ahead of her to block
        let def = GameDef::new(Variant::WalkerBreaker, 2, 1, Player::Maker, WinCondition::ReachVertex(2));
        let s = BoardState::new(Arc::new(Graph::path(4)), &def, Some(0)).unwrap();
        let r = solve(&def, &s).unwrap();
        assert_eq!(r.winner, Player::Maker);
        assert_eq!(r.rounds_to_win, Some(1));
    }

    #[test]
    fn oversized_board_rejected() {
        let def = connector_def(1);
        let s = BoardState::new(Arc::new(Graph::complete(8)), &def, None).unwrap();
        assert!(matches!(solve(&def, &s), Err(Error::TooLarge(_))));
    }

    #[test]
    fn broken_strategy_has_witness() {
        let def = GameDef::new(Variant::WalkerBreaker, 1, 1, Player::Breaker, WinCondition::ReachVertex(3)).with_horizon(4);
        let s = BoardState::new(Arc::new(Graph::cycle(4)), &def, Some(0)).unwrap();
        let mut first_edge = |st: &BoardState, d: &GameDef| -> Result<Action> {
            let m = crate::engine::legal_moves(st, d);
            Ok(m.first().map(|&m| Action::Play(m)).unwrap_or(Action::Pass))
        };
        let r = verify_strategy_against_all_breakers(&def, &s, &mut first_edge, 4).unwrap();
        assert!(!r.holds);
        assert!(r.witness.is_some());
    }
}
