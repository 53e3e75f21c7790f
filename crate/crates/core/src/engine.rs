//! Referee for biased Maker-Breaker style games on the edges of a graph.
//!
//! The Maker side is called Maker, Connector or Walker depending on the
//! variant; in the code it is always [`Player::Maker`].

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, EdgeId, Graph, Seed, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    Maker,
    Breaker,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Maker => Player::Breaker,
            Player::Breaker => Player::Maker,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Player::Maker => "maker",
            Player::Breaker => "breaker",
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Free,
    Maker,
    Breaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    MakerBreaker,
    ConnectorBreaker,
    WalkerBreaker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WinCondition {
    /// Maker's edges form a connected spanning subgraph.
    Connectivity,
    /// Maker's edges contain a Hamilton cycle (exact check, small n only).
    Hamiltonicity,
    /// The vertex is touched by Maker's graph (visited, for Walker).
    ReachVertex(Vertex),
    /// Maker's graph touches every vertex.
    SpanningW,
    /// Maker owns every edge of at least one listed set.
    WinningSets(Vec<Vec<EdgeId>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDef {
    pub variant: Variant,
    pub maker_bias: usize,
    pub breaker_bias: usize,
    pub first_player: Player,
    pub win: WinCondition,
    /// Maximum number of Maker turns; the game is evaluated afterwards.
    pub horizon: Option<usize>,
    /// End the game as soon as the Maker condition holds.
    pub terminate_on_win: bool,
    /// Maximum number of rounds; defaults to `10 * e(G)`.
    pub round_cap: Option<usize>,
}

impl GameDef {
    pub fn new(variant: Variant, maker_bias: usize, breaker_bias: usize, first_player: Player, win: WinCondition) -> Self {
        GameDef {
            variant,
            maker_bias,
            breaker_bias,
            first_player,
            win,
            horizon: None,
            terminate_on_win: true,
            round_cap: None,
        }
    }

    pub fn with_horizon(mut self, maker_turns: usize) -> Self {
        self.horizon = Some(maker_turns);
        self
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.maker_bias == 0 || self.breaker_bias == 0 {
            return Err(Error::InvalidParameter("biases must be at least 1".into()));
        }
        match &self.win {
            WinCondition::ReachVertex(v) if *v >= g.vertex_count() => {
                Err(Error::InvalidParameter(format!("target vertex {v} out of range")))
            }
            WinCondition::WinningSets(sets) => {
                if sets.iter().flatten().any(|&e| e >= g.edge_count()) {
                    return Err(Error::InvalidParameter("winning set element out of range".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn bias(&self, p: Player) -> usize {
        match p {
            Player::Maker => self.maker_bias,
            Player::Breaker => self.breaker_bias,
        }
    }

    fn round_cap_for(&self, g: &Graph) -> usize {
        self.round_cap.unwrap_or(10 * g.edge_count().max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    /// Claim a free edge. For Walker this also moves her across it.
    Claim(EdgeId),
    /// Walk along an edge Walker already owns.
    Traverse(EdgeId),
}

impl Move {
    pub fn edge(self) -> EdgeId {
        match self {
            Move::Claim(e) | Move::Traverse(e) => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Play(Move),
    /// Forfeit the rest of the current turn.
    Pass,
    /// End the whole game now (used by strategies that stop playing).
    Stop,
}

pub trait Strategy {
    fn next_action(&mut self, state: &BoardState, def: &GameDef, rng: &mut ChaCha8Rng) -> Action;
}

/// Adapts a closure into a [`Strategy`].
pub struct FnStrategy<F>(pub F);

impl<F> Strategy for FnStrategy<F>
where
    F: FnMut(&BoardState, &GameDef, &mut ChaCha8Rng) -> Action,
{
    fn next_action(&mut self, state: &BoardState, def: &GameDef, rng: &mut ChaCha8Rng) -> Action {
        (self.0)(state, def, rng)
    }
}

/// Breaker that never claims anything.
pub struct PassStrategy;

impl Strategy for PassStrategy {
    fn next_action(&mut self, _: &BoardState, _: &GameDef, _: &mut ChaCha8Rng) -> Action {
        Action::Pass
    }
}

/// Plays the lowest-index legal move.
pub struct FirstLegal;

impl Strategy for FirstLegal {
    fn next_action(&mut self, state: &BoardState, def: &GameDef, _: &mut ChaCha8Rng) -> Action {
        match legal_moves(state, def).first() {
            Some(&m) => Action::Play(m),
            None => Action::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardState {
    graph: Arc<Graph>,
    ownership: Vec<Owner>,
    walker_position: Option<Vertex>,
    maker_vertex: Vec<bool>,
    maker_vertex_count: usize,
    maker_edges: usize,
    breaker_edges: usize,
    // union-find over Maker's edges, for the connectivity condition
    parent: Vec<usize>,
    components: usize,
    breaker_log: Vec<EdgeId>,
    pub rounds_played: usize,
    pub maker_turns: usize,
    pub breaker_turns: usize,
    pub whose_turn: Player,
    pub moves_left_in_turn: usize,
    last_edge: Option<EdgeId>,
}

impl BoardState {
    /// Fresh board. `start` is Walker's initial position and is required
    /// for the Walker variant.
    pub fn new(graph: Arc<Graph>, def: &GameDef, start: Option<Vertex>) -> Result<Self> {
        def.validate(&graph)?;
        let n = graph.vertex_count();
        if def.variant == Variant::WalkerBreaker && start.is_none() {
            return Err(Error::InvalidParameter("Walker needs a starting vertex".into()));
        }
        if let Some(s) = start {
            if s >= n {
                return Err(Error::InvalidParameter(format!("start vertex {s} out of range")));
            }
        }
        let mut maker_vertex = vec![false; n];
        let mut maker_vertex_count = 0;
        let walker_position = if def.variant == Variant::WalkerBreaker { start } else { None };
        if let Some(s) = walker_position {
            maker_vertex[s] = true;
            maker_vertex_count = 1;
        }
        let m = graph.edge_count();
        Ok(BoardState {
            ownership: vec![Owner::Free; m],
            walker_position,
            maker_vertex,
            maker_vertex_count,
            maker_edges: 0,
            breaker_edges: 0,
            parent: (0..n).collect(),
            components: n,
            breaker_log: Vec::new(),
            rounds_played: 0,
            maker_turns: 0,
            breaker_turns: 0,
            whose_turn: def.first_player,
            moves_left_in_turn: def.bias(def.first_player),
            last_edge: None,
            graph,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn owner(&self, e: EdgeId) -> Owner {
        self.ownership[e]
    }

    pub fn ownership(&self) -> &[Owner] {
        &self.ownership
    }

    pub fn walker_position(&self) -> Option<Vertex> {
        self.walker_position
    }

    /// Whether `v` is a vertex of Maker's graph (for Walker: visited).
    pub fn maker_has_vertex(&self, v: Vertex) -> bool {
        self.maker_vertex[v]
    }

    pub fn maker_vertex_count(&self) -> usize {
        self.maker_vertex_count
    }

    pub fn maker_edge_count(&self) -> usize {
        self.maker_edges
    }

    pub fn breaker_edge_count(&self) -> usize {
        self.breaker_edges
    }

    pub fn free_edge_count(&self) -> usize {
        self.ownership.len() - self.maker_edges - self.breaker_edges
    }

    /// Breaker's claims in order.
    pub fn breaker_log(&self) -> &[EdgeId] {
        &self.breaker_log
    }

    pub fn maker_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.ownership
            .iter()
            .enumerate()
            .filter(|(_, &o)| o == Owner::Maker)
            .map(|(e, _)| e)
    }

    /// Free or Maker-owned.
    pub fn available(&self, e: EdgeId) -> bool {
        self.ownership[e] != Owner::Breaker
    }

    /// Pre-claims an edge outside of the turn structure (used to set up
    /// positions for the solver and tests).
    pub fn preclaim(&mut self, e: EdgeId, who: Player) -> Result<()> {
        if self.ownership[e] != Owner::Free {
            return Err(Error::IllegalMove(format!("edge {e} is not free")));
        }
        self.set_owner(e, who);
        Ok(())
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn set_owner(&mut self, e: EdgeId, who: Player) {
        match who {
            Player::Breaker => {
                self.ownership[e] = Owner::Breaker;
                self.breaker_edges += 1;
                self.breaker_log.push(e);
            }
            Player::Maker => {
                self.ownership[e] = Owner::Maker;
                self.maker_edges += 1;
                let (u, v) = self.graph.edge(e);
                for w in [u, v] {
                    if !self.maker_vertex[w] {
                        self.maker_vertex[w] = true;
                        self.maker_vertex_count += 1;
                    }
                }
                let (ru, rv) = (self.find(u), self.find(v));
                if ru != rv {
                    self.parent[ru] = rv;
                    self.components -= 1;
                }
            }
        }
    }

    fn end_turn(&mut self, def: &GameDef) {
        match self.whose_turn {
            Player::Maker => self.maker_turns += 1,
            Player::Breaker => self.breaker_turns += 1,
        }
        if self.whose_turn != def.first_player {
            self.rounds_played += 1;
        }
        self.whose_turn = self.whose_turn.other();
        self.moves_left_in_turn = def.bias(self.whose_turn);
    }

    /// Forfeits the remainder of the current turn.
    pub fn pass(&mut self, def: &GameDef) {
        self.end_turn(def);
    }

    /// Applies `mv` for the player to move, rejecting illegal moves with the
    /// violated rule.
    pub fn apply(&mut self, def: &GameDef, mv: Move) -> Result<()> {
        self.check_legal(def, mv)?;
        let who = self.whose_turn;
        match mv {
            Move::Claim(e) => {
                self.set_owner(e, who);
                if who == Player::Maker && def.variant == Variant::WalkerBreaker {
                    let pos = self.walker_position.expect("walker has a position");
                    self.walker_position = Some(self.graph.other_end(e, pos));
                }
            }
            Move::Traverse(e) => {
                let pos = self.walker_position.expect("walker has a position");
                self.walker_position = Some(self.graph.other_end(e, pos));
            }
        }
        if who == Player::Maker {
            self.last_edge = Some(mv.edge());
        }
        self.moves_left_in_turn -= 1;
        if self.moves_left_in_turn == 0 {
            self.end_turn(def);
        }
        Ok(())
    }

    /// Returns a copy with `mv` applied.
    pub fn applied(&self, def: &GameDef, mv: Move) -> Result<BoardState> {
        let mut next = self.clone();
        next.apply(def, mv)?;
        Ok(next)
    }

    fn check_legal(&self, def: &GameDef, mv: Move) -> Result<()> {
        let e = mv.edge();
        if e >= self.ownership.len() {
            return Err(Error::IllegalMove(format!("edge {e} does not exist")));
        }
        let owner = self.ownership[e];
        let (u, v) = self.graph.edge(e);
        match (self.whose_turn, mv) {
            (Player::Breaker, Move::Traverse(_)) => {
                Err(Error::IllegalMove("Breaker cannot traverse edges".into()))
            }
            (_, Move::Claim(_)) if owner != Owner::Free => {
                Err(Error::IllegalMove(format!("edge {e} ({u},{v}) is already claimed")))
            }
            (Player::Breaker, Move::Claim(_)) => Ok(()),
            (Player::Maker, Move::Claim(_)) => match def.variant {
                Variant::MakerBreaker => Ok(()),
                Variant::ConnectorBreaker => {
                    if self.maker_edges == 0 || self.maker_vertex[u] || self.maker_vertex[v] {
                        Ok(())
                    } else {
                        Err(Error::IllegalMove(format!(
                            "Connector's graph must stay connected: ({u},{v}) misses V(W)"
                        )))
                    }
                }
                Variant::WalkerBreaker => {
                    let pos = self.walker_position.expect("walker has a position");
                    if u == pos || v == pos {
                        Ok(())
                    } else {
                        Err(Error::IllegalMove(format!(
                            "Walker at {pos} can only claim incident edges, not ({u},{v})"
                        )))
                    }
                }
            },
            (Player::Maker, Move::Traverse(_)) => {
                if def.variant != Variant::WalkerBreaker {
                    return Err(Error::IllegalMove("only Walker traverses edges".into()));
                }
                let pos = self.walker_position.expect("walker has a position");
                if owner != Owner::Maker {
                    return Err(Error::IllegalMove(format!(
                        "Walker can only traverse her own edges, ({u},{v}) is {owner:?}"
                    )));
                }
                if u != pos && v != pos {
                    return Err(Error::IllegalMove(format!(
                        "Walker at {pos} cannot traverse ({u},{v})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Whether Maker's win condition currently holds.
    pub fn maker_condition(&self, def: &GameDef) -> Result<bool> {
        let n = self.graph.vertex_count();
        Ok(match &def.win {
            WinCondition::Connectivity => {
                self.components == 1 && (n == 1 || self.maker_vertex_count == n)
            }
            WinCondition::SpanningW => self.maker_vertex_count == n,
            WinCondition::ReachVertex(t) => self.maker_vertex[*t],
            WinCondition::WinningSets(sets) => sets
                .iter()
                .any(|s| s.iter().all(|&e| self.ownership[e] == Owner::Maker)),
            WinCondition::Hamiltonicity => {
                if self.maker_edges < n || self.maker_vertex_count < n {
                    false
                } else {
                    graph::has_hamilton_cycle(&self.maker_graph())?
                }
            }
        })
    }

    /// Maker's edges as a graph on the full vertex set.
    pub fn maker_graph(&self) -> Graph {
        let edges: Vec<_> = self.maker_edges().map(|e| self.graph.edge(e)).collect();
        Graph::from_edges(self.graph.vertex_count(), edges).expect("subgraph of a simple graph")
    }

    /// Full audit of the state invariants.
    pub fn check_invariants(&self, def: &GameDef) -> Result<()> {
        let (mut w, mut b, mut f) = (0, 0, 0);
        for o in &self.ownership {
            match o {
                Owner::Maker => w += 1,
                Owner::Breaker => b += 1,
                Owner::Free => f += 1,
            }
        }
        if w != self.maker_edges || b != self.breaker_edges || w + b + f != self.graph.edge_count() {
            return Err(Error::Invariant(format!("ownership counts W={w} B={b} F={f} inconsistent")));
        }
        if def.variant != Variant::MakerBreaker && self.maker_edges > 0 {
            let mut verts: Vec<Vertex> = (0..self.graph.vertex_count()).filter(|&v| self.maker_vertex[v]).collect();
            if let Some(p) = self.walker_position {
                if !self.maker_vertex[p] {
                    return Err(Error::Invariant(format!("walker position {p} outside V(W)")));
                }
            }
            verts.sort_unstable();
            if !graph::is_connected(&self.maker_graph(), Some(&verts)) {
                return Err(Error::Invariant("Maker's graph is disconnected".into()));
            }
        }
        if let (Some(p), Some(e)) = (self.walker_position, self.last_edge) {
            let (u, v) = self.graph.edge(e);
            if u != p && v != p {
                return Err(Error::Invariant(format!("walker at {p} is not on her last edge ({u},{v})")));
            }
        }
        Ok(())
    }

    pub fn is_exhausted(&self) -> bool {
        self.free_edge_count() == 0
    }
}

/// All legal moves of the player to move, ordered by edge index (claims
/// before traversals).
pub fn legal_moves(state: &BoardState, def: &GameDef) -> Vec<Move> {
    let g = state.graph();
    match (state.whose_turn, def.variant) {
        (Player::Breaker, _) | (Player::Maker, Variant::MakerBreaker) => (0..g.edge_count())
            .filter(|&e| state.owner(e) == Owner::Free)
            .map(Move::Claim)
            .collect(),
        (Player::Maker, Variant::ConnectorBreaker) => (0..g.edge_count())
            .filter(|&e| {
                let (u, v) = g.edge(e);
                state.owner(e) == Owner::Free
                    && (state.maker_edge_count() == 0 || state.maker_has_vertex(u) || state.maker_has_vertex(v))
            })
            .map(Move::Claim)
            .collect(),
        (Player::Maker, Variant::WalkerBreaker) => {
            let pos = state.walker_position().expect("walker has a position");
            let mut claims = Vec::new();
            let mut walks = Vec::new();
            for &(_, e) in g.neighbours(pos) {
                match state.owner(e) {
                    Owner::Free => claims.push(Move::Claim(e)),
                    Owner::Maker => walks.push(Move::Traverse(e)),
                    Owner::Breaker => {}
                }
            }
            claims.sort_by_key(|m| m.edge());
            walks.sort_by_key(|m| m.edge());
            claims.extend(walks);
            claims
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordKind {
    Claim,
    Traverse,
    Pass,
    Stop,
}

/// One line of a transcript. For Walker moves `(from, to)`, otherwise the
/// canonical edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub round: usize,
    pub player: Player,
    pub kind: RecordKind,
    pub ends: Option<(Vertex, Vertex)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndReason {
    MakerWon,
    Exhausted,
    Horizon,
    RoundCap,
    Stopped,
}

#[derive(Debug, Clone)]
pub struct Transcript {
    pub records: Vec<Record>,
    pub initial: BoardState,
    pub final_state: BoardState,
    pub winner: Player,
    pub end: EndReason,
    pub notes: Vec<String>,
}

impl Transcript {
    /// Line format `round player kind u v`, with `-` for absent vertices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let kind = match r.kind {
                RecordKind::Claim => "claim",
                RecordKind::Traverse => "traverse",
                RecordKind::Pass => "pass",
                RecordKind::Stop => "stop",
            };
            match r.ends {
                Some((u, v)) => {
                    let _ = writeln!(out, "{} {} {} {} {}", r.round, r.player, kind, u, v);
                }
                None => {
                    let _ = writeln!(out, "{} {} {} - -", r.round, r.player, kind);
                }
            }
        }
        out
    }
}

/// Replays a transcript text from `initial`, returning the final state.
pub fn replay(def: &GameDef, initial: &BoardState, text: &str) -> Result<BoardState> {
    let mut state = initial.clone();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse(format!("line {}: expected 5 fields", lineno + 1)));
        }
        let player = match toks[1] {
            "maker" => Player::Maker,
            "breaker" => Player::Breaker,
            other => return Err(Error::Parse(format!("line {}: bad player {other}", lineno + 1))),
        };
        if player != state.whose_turn {
            return Err(Error::Parse(format!("line {}: out of turn", lineno + 1)));
        }
        let edge = |state: &BoardState| -> Result<EdgeId> {
            let u: Vertex = toks[3].parse().map_err(|_| Error::Parse(format!("line {}: bad vertex", lineno + 1)))?;
            let v: Vertex = toks[4].parse().map_err(|_| Error::Parse(format!("line {}: bad vertex", lineno + 1)))?;
            state
                .graph()
                .edge_id(u, v)
                .ok_or_else(|| Error::Parse(format!("line {}: ({u},{v}) is not an edge", lineno + 1)))
        };
        match toks[2] {
            "claim" => {
                let e = edge(&state)?;
                state.apply(def, Move::Claim(e))?;
            }
            "traverse" => {
                let e = edge(&state)?;
                state.apply(def, Move::Traverse(e))?;
            }
            "pass" => state.pass(def),
            "stop" => break,
            other => return Err(Error::Parse(format!("line {}: bad move kind {other}", lineno + 1))),
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlayOptions {
    /// Run the full invariant audit after every move instead of only the
    /// constant-time local checks.
    pub audit_every_move: bool,
}

/// Plays a game to completion. Maker and Breaker get independent random
/// streams derived from `seed`.
pub fn play_game(
    def: &GameDef,
    initial: BoardState,
    maker: &mut dyn Strategy,
    breaker: &mut dyn Strategy,
    seed: Seed,
) -> Result<Transcript> {
    play_game_with(def, initial, maker, breaker, seed, PlayOptions::default())
}

pub fn play_game_with(
    def: &GameDef,
    initial: BoardState,
    maker: &mut dyn Strategy,
    breaker: &mut dyn Strategy,
    seed: Seed,
    opts: PlayOptions,
) -> Result<Transcript> {
    let mut maker_rng = seed.split(0).rng();
    let mut breaker_rng = seed.split(1).rng();
    let mut state = initial.clone();
    let mut records = Vec::new();
    let cap = def.round_cap_for(state.graph());
    let mut breaker_since_maker = 0usize;
    let end = loop {
        if def.terminate_on_win && state.maker_condition(def)? {
            break EndReason::MakerWon;
        }
        if state.is_exhausted() {
            break EndReason::Exhausted;
        }
        if let Some(h) = def.horizon {
            if state.maker_turns >= h {
                break EndReason::Horizon;
            }
        }
        if state.rounds_played >= cap {
            break EndReason::RoundCap;
        }
        let who = state.whose_turn;
        let round = state.rounds_played + 1;
        let legal = legal_moves(&state, def);
        let action = if legal.is_empty() {
            Action::Pass
        } else {
            match who {
                Player::Maker => maker.next_action(&state, def, &mut maker_rng),
                Player::Breaker => breaker.next_action(&state, def, &mut breaker_rng),
            }
        };
        if who == Player::Maker {
            breaker_since_maker = 0;
        }
        match action {
            Action::Stop => {
                records.push(Record { round, player: who, kind: RecordKind::Stop, ends: None });
                break EndReason::Stopped;
            }
            Action::Pass => {
                records.push(Record { round, player: who, kind: RecordKind::Pass, ends: None });
                state.pass(def);
            }
            Action::Play(mv) => {
                let from = state.walker_position();
                let edge_ends = state.graph().edges().get(mv.edge()).copied();
                state.apply(def, mv).map_err(|e| match e {
                    Error::IllegalMove(msg) => {
                        Error::IllegalMove(format!("{who} strategy returned {mv:?} in round {round}: {msg}"))
                    }
                    other => other,
                })?;
                let (u, v) = edge_ends.expect("validated by apply");
                let ends = match (who, def.variant, from) {
                    (Player::Maker, Variant::WalkerBreaker, Some(p)) => (p, if u == p { v } else { u }),
                    _ => (u, v),
                };
                let kind = match mv {
                    Move::Claim(_) => RecordKind::Claim,
                    Move::Traverse(_) => RecordKind::Traverse,
                };
                records.push(Record { round, player: who, kind, ends: Some(ends) });
                if who == Player::Breaker {
                    breaker_since_maker += 1;
                    if breaker_since_maker > def.breaker_bias {
                        return Err(Error::Invariant("Breaker exceeded its bias".into()));
                    }
                } else {
                    local_walker_check(&state, def, mv)?;
                }
                if opts.audit_every_move {
                    state.check_invariants(def)?;
                }
            }
        }
    };
    state.check_invariants(def)?;
    let winner = if state.maker_condition(def)? { Player::Maker } else { Player::Breaker };
    Ok(Transcript {
        records,
        initial,
        final_state: state,
        winner,
        end,
        notes: Vec::new(),
    })
}

// The claim was incident to a vertex of W, so W stays connected; only the
// position needs checking.
fn local_walker_check(state: &BoardState, def: &GameDef, mv: Move) -> Result<()> {
    if def.variant != Variant::WalkerBreaker {
        return Ok(());
    }
    let p = state.walker_position().expect("walker has a position");
    let (u, v) = state.graph().edge(mv.edge());
    if (u != p && v != p) || !state.maker_has_vertex(p) {
        return Err(Error::Invariant(format!("walker position {p} inconsistent after {mv:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walker_def(target: Vertex) -> GameDef {
        GameDef::new(Variant::WalkerBreaker, 1, 1, Player::Maker, WinCondition::ReachVertex(target))
    }

    #[test]
    fn single_edge_maker_wins_round_one() {
        let g = Arc::new(Graph::path(2));
        let def = GameDef::new(Variant::MakerBreaker, 1, 1, Player::Maker, WinCondition::WinningSets(vec![vec![0]]));
        let init = BoardState::new(g, &def, None).unwrap();
        let t = play_game(&def, init, &mut FirstLegal, &mut FirstLegal, Seed(0)).unwrap();
        assert_eq!(t.winner, Player::Maker);
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].round, 1);
    }

    #[test]
    fn walker_legal_moves() {
        let g = Arc::new(Graph::star(3));
        let def = walker_def(1);
        let mut s = BoardState::new(g, &def, Some(0)).unwrap();
        assert_eq!(legal_moves(&s, &def).len(), 3);
        s.apply(&def, Move::Claim(0)).unwrap();
        assert_eq!(s.walker_position(), Some(1));
        // Breaker's turn: blocks the others
        s.apply(&def, Move::Claim(1)).unwrap();
        assert_eq!(legal_moves(&s, &def), vec![Move::Traverse(0)]);
        s.apply(&def, Move::Traverse(0)).unwrap();
        assert_eq!(s.walker_position(), Some(0));
        s.apply(&def, Move::Claim(2)).unwrap();
        // at 0 with one own edge and two Breaker edges
        assert_eq!(legal_moves(&s, &def), vec![Move::Traverse(0)]);
    }

    #[test]
    fn walker_stuck_has_no_moves() {
        let g = Arc::new(Graph::star(2));
        let def = GameDef::new(Variant::WalkerBreaker, 1, 1, Player::Breaker, WinCondition::SpanningW);
        let mut s = BoardState::new(g, &def, Some(0)).unwrap();
        s.apply(&def, Move::Claim(0)).unwrap();
        s.pass(&def);
        s.apply(&def, Move::Claim(1)).unwrap();
        assert!(legal_moves(&s, &def).is_empty());
    }

    #[test]
    fn illegal_moves_are_named() {
        let g = Arc::new(Graph::path(4));
        let def = walker_def(3);
        let mut s = BoardState::new(g.clone(), &def, Some(0)).unwrap();
        let err = s.apply(&def, Move::Claim(2)).unwrap_err();
        assert!(err.to_string().contains("incident"));
        let err = s.apply(&def, Move::Traverse(0)).unwrap_err();
        assert!(err.to_string().contains("own edges"));
        let cdef = GameDef::new(Variant::ConnectorBreaker, 1, 1, Player::Maker, WinCondition::Connectivity);
        let mut c = BoardState::new(g, &cdef, None).unwrap();
        c.apply(&cdef, Move::Claim(0)).unwrap();
        c.apply(&cdef, Move::Claim(1)).unwrap();
        let err = c.apply(&cdef, Move::Claim(2)).unwrap_err();
        assert!(err.to_string().contains("connected"));
    }

    #[test]
    fn turns_and_rounds() {
        let g = Arc::new(Graph::complete(5));
        let def = GameDef::new(Variant::MakerBreaker, 2, 3, Player::Breaker, WinCondition::Connectivity);
        let mut s = BoardState::new(g, &def, None).unwrap();
        assert_eq!(s.moves_left_in_turn, 3);
        for e in 0..3 {
            s.apply(&def, Move::Claim(e)).unwrap();
        }
        assert_eq!(s.whose_turn, Player::Maker);
        assert_eq!(s.rounds_played, 0);
        s.apply(&def, Move::Claim(3)).unwrap();
        s.pass(&def);
        assert_eq!(s.rounds_played, 1);
        assert_eq!(s.whose_turn, Player::Breaker);
        s.check_invariants(&def).unwrap();
    }

    #[test]
    fn transcript_replays_exactly() {
        let g = Arc::new(crate::graph::sample_gnp(12, 0.5, Seed(5)).unwrap());
        let def = GameDef::new(Variant::WalkerBreaker, 2, 2, Player::Breaker, WinCondition::SpanningW);
        let init = BoardState::new(g, &def, Some(0)).unwrap();
        let mut random = FnStrategy(|s: &BoardState, d: &GameDef, r: &mut ChaCha8Rng| {
            use rand::seq::SliceRandom;
            match legal_moves(s, d).choose(r) {
                Some(&m) => Action::Play(m),
                None => Action::Pass,
            }
        });
        let mut random_b = FnStrategy(|s: &BoardState, d: &GameDef, r: &mut ChaCha8Rng| {
            use rand::seq::SliceRandom;
            match legal_moves(s, d).choose(r) {
                Some(&m) => Action::Play(m),
                None => Action::Pass,
            }
        });
        let opts = PlayOptions { audit_every_move: true };
        let t = play_game_with(&def, init.clone(), &mut random, &mut random_b, Seed(9), opts).unwrap();
        let replayed = replay(&def, &t.initial, &t.to_text()).unwrap();
        assert_eq!(replayed, t.final_state);
    }

    #[test]
    fn strategy_error_names_move() {
        let g = Arc::new(Graph::path(3));
        let def = walker_def(2);
        let init = BoardState::new(g, &def, Some(0)).unwrap();
        let mut bad = FnStrategy(|_: &BoardState, _: &GameDef, _: &mut ChaCha8Rng| Action::Play(Move::Claim(1)));
        let err = play_game(&def, init, &mut bad, &mut PassStrategy, Seed(0)).unwrap_err();
        assert!(err.to_string().contains("Claim(1)"));
    }
}
