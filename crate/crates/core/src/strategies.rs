//! Walker's full strategy for the (2:2) game on a random graph, its
//! bookkeeping and runtime monitors, Beck's criterion with the matching
//! potential strategy, and a few baseline Breakers.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boxgames::{box_bound, minbox_maker_move, MinBoxState};
use crate::engine::{
    play_game_with, Action, BoardState, GameDef, Move, Owner, PlayOptions, Player, Strategy, Transcript, Variant,
    WinCondition,
};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, Seed, Vertex};
use crate::structure::{structure_walk, StructureEmbedding};
use crate::techlemma::{
    appears_between_levels, compute_candidates, edge_sees, extract_structure_avoiding,
    relevant_roots, round_count, BlockFamily, CandidateCache,
};

/// `b = 8k + 14`, Breaker's claims between two sequences of one type.
pub fn sequence_bias(k: usize) -> usize {
    8 * k + 14
}

/// `ln^-2(n)` below level `k-1`, `n^(-1/3-0.1eps)` between levels `k-1`
/// and `k`, 0 otherwise.
pub fn edge_weight(g: &Graph, bf: &BlockFamily, t: usize, e: EdgeId, eps: f64) -> f64 {
    let nf = bf.n as f64;
    match appears_between_levels(g, bf, t, e) {
        Some(l) if l < bf.k => nf.ln().powi(-2),
        Some(_) => nf.powf(-1.0 / 3.0 - 0.1 * eps),
        None => 0.0,
    }
}

/// `sum_F (1+b)^(-|F|/a)` and whether it is below `1/(b+1)`.
pub fn beck_sum(winning_sets: &[Vec<usize>], a: usize, b: usize) -> (f64, bool) {
    let base = 1.0 + b as f64;
    let sum: f64 = winning_sets.iter().map(|f| base.powf(-(f.len() as f64) / a as f64)).sum();
    (sum, sum < 1.0 / base)
}

/// Breaker's move in an `(a:b)` game by the potential
/// `sum over live F of (1+b)^(-free(F)/a)`, where a set is live while
/// Breaker owns none of its elements and `free(F)` counts its unclaimed
/// elements. Claiming `e` removes every live set through `e`, so the best
/// move is the free element with the largest total term over live sets
/// containing it (lowest index on ties). Falls back to the lowest free
/// element when no live set has one.
pub fn potential_breaker_move(owners: &[Owner], winning_sets: &[Vec<usize>], a: usize, b: usize) -> Option<usize> {
    let base = 1.0 + b as f64;
    let mut gain = vec![0.0f64; owners.len()];
    let mut touched = vec![false; owners.len()];
    for f in winning_sets {
        if f.iter().any(|&e| owners[e] == Owner::Breaker) {
            continue;
        }
        let free = f.iter().filter(|&&e| owners[e] == Owner::Free).count();
        let term = base.powf(-(free as f64) / a as f64);
        for &e in f {
            if owners[e] == Owner::Free {
                gain[e] += term;
                touched[e] = true;
            }
        }
    }
    let mut best: Option<usize> = None;
    for e in 0..owners.len() {
        if touched[e] && best.is_none_or(|b| gain[e] > gain[b]) {
            best = Some(e);
        }
    }
    best.or_else(|| owners.iter().position(|&o| o == Owner::Free))
}

/// One two-move sequence of the path substrategy: the star leaf to pass
/// through and the edge to claim. Target sets are given as vertex sets;
/// the winning sets of the auxiliary game are the edges between the star
/// leaves and each target set.
pub fn s_paths_choice(
    board: &BoardState,
    star: &[Vertex],
    target_sets: &[Vec<Vertex>],
    bias: usize,
) -> Option<(Vertex, EdgeId)> {
    let g = board.graph();
    let sets: Vec<Vec<EdgeId>> = target_sets.iter().map(|c| star_edges(g, star, c)).collect();
    let mut owners = vec![Owner::Maker; g.edge_count()];
    for f in &sets {
        for &e in f {
            // Walker plays Breaker's role in the auxiliary game
            owners[e] = match board.owner(e) {
                Owner::Free => Owner::Free,
                Owner::Maker => Owner::Breaker,
                Owner::Breaker => Owner::Maker,
            };
        }
    }
    let live_free = sets
        .iter()
        .any(|f| !f.iter().any(|&e| owners[e] == Owner::Breaker) && f.iter().any(|&e| owners[e] == Owner::Free));
    if !live_free {
        return None;
    }
    let e = potential_breaker_move(&owners, &sets, 2 * bias, 1)?;
    let (u, v) = g.edge(e);
    let leaf = if star.contains(&u) { u } else { v };
    Some((leaf, e))
}

fn star_edges(g: &Graph, star: &[Vertex], targets: &[Vertex]) -> Vec<EdgeId> {
    let mut out = Vec::new();
    for &y in star {
        for &v in targets {
            if let Some(e) = g.edge_id(y, v) {
                out.push(e);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Per-edge coin with success probability `q`, drawn from its own stream.
pub fn coin_success(coin_seed: Seed, e: EdgeId, q: f64) -> bool {
    coin_seed.split(e as u64).rng().gen::<f64>() < q
}

/// The edges whose coin succeeds; what `H` becomes once every edge has
/// been tossed.
pub fn sample_coin_graph(g: &Graph, coin_seed: Seed, q: f64) -> Vec<EdgeId> {
    (0..g.edge_count()).filter(|&e| coin_success(coin_seed, e, q)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Stop the game when a guaranteed step cannot be carried out.
    Strict,
    /// Log the failure and fall back to a greedy reach.
    Fallback,
}

impl Policy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "strict" => Some(Policy::Strict),
            "fallback" => Some(Policy::Fallback),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub eps: f64,
    pub p: f64,
    pub policy: Policy,
    /// Recompute every weight from scratch after each Breaker turn.
    pub audit_weights: bool,
    pub first_player: Player,
}

impl StrategyConfig {
    pub fn new(eps: f64, p: f64) -> Self {
        StrategyConfig { eps, p, policy: Policy::Fallback, audit_weights: false, first_player: Player::Maker }
    }
}

/// Every rounded constant the strategy uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    pub sequence_bias: usize,
    pub star_size: usize,
    pub z1_size: usize,
    pub z2_size: usize,
    pub paths_supply: f64,
    pub low_weight: f64,
    pub top_weight: f64,
    pub cbox_bias: usize,
    pub cbox_bound: f64,
    pub weight_bound: f64,
    pub box_size: usize,
    pub alpha: f64,
    pub minbox_bias: usize,
    pub minbox_bound: f64,
    pub coin_probability: f64,
    pub type_one_credit: usize,
    pub breaker_box_bound: f64,
    pub maker_box_bound: f64,
    pub inactive_degree_bound: f64,
    pub type_two_bound: f64,
}

impl Thresholds {
    pub fn new(n: usize, k: usize, eps: f64, p: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter("the strategy needs n >= 3".into()));
        }
        let nf = n as f64;
        let ln = nf.ln();
        let pn = p * nf;
        let b = sequence_bias(k);
        let box_size = round_count(4.0 * pn);
        let alpha = 0.5 / ln;
        Ok(Thresholds {
            n,
            k,
            eps,
            p,
            sequence_bias: b,
            star_size: round_count(nf.powf(1.0 / 3.0)),
            z1_size: round_count(ln.powi(4)),
            z2_size: round_count(nf.powf(1.0 / 3.0 + eps / 2.0)),
            paths_supply: nf.powf(1.0 / 3.0 + 1.1 * eps),
            low_weight: ln.powi(-2),
            top_weight: nf.powf(-1.0 / 3.0 - 0.1 * eps),
            cbox_bias: 2 * b,
            cbox_bound: box_bound((2 * b) as f64, n),
            weight_bound: ln * ln,
            box_size,
            alpha,
            minbox_bias: 2 * b,
            minbox_bound: box_bound((2 * b) as f64, n),
            coin_probability: 1.0 / ln,
            type_one_credit: (alpha * box_size as f64).ceil() as usize,
            breaker_box_bound: 2.0 * pn,
            maker_box_bound: 2.0 * pn * (1.0 + 1.0 / ln),
            inactive_degree_bound: eps * pn / 5.0,
            type_two_bound: 0.5 * eps * pn / ln,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub claim_id: String,
    pub bound: f64,
    pub worst_observed: f64,
    pub violated: bool,
    pub round_of_violation: Option<usize>,
    /// Whether the bound holds exactly (as opposed to only for large `n`).
    pub exact: bool,
    pub strict: bool,
    pub checks: usize,
}

impl Monitor {
    fn new(claim_id: &str, bound: f64, exact: bool, strict: bool) -> Self {
        Monitor {
            claim_id: claim_id.into(),
            bound,
            worst_observed: 0.0,
            violated: false,
            round_of_violation: None,
            exact,
            strict,
            checks: 0,
        }
    }

    fn observe(&mut self, value: f64, round: usize) {
        self.checks += 1;
        self.worst_observed = self.worst_observed.max(value);
        let bad = if self.strict { value >= self.bound } else { value > self.bound + 1e-9 };
        if bad && !self.violated {
            self.violated = true;
            self.round_of_violation = Some(round);
        }
    }

    // counting monitors keep their running total in `worst_observed`
    fn bump(&mut self, round: usize) {
        let total = self.worst_observed + 1.0;
        self.observe(total, round);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
enum Mon {
    BetweenSequences,
    CboxBias,
    CboxBound,
    Weight,
    Z1,
    Z2,
    WeightRecompute,
    StarEdge,
    PathsSupply,
    PathsExhausted,
    QualifyingTwo,
    QualifyingThree,
    ReachAvailable,
    Alignment,
    PlanBroken,
    BreakerBox,
    MakerBox,
    InactiveBefore,
    MinboxDanger,
    TypeTwo,
    SingleToss,
}

const MONITOR_COUNT: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    One,
    Two,
    Three,
}

/// A unit of planned play.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Step(Move),
    /// Follow the structure walk until Walker stands on `target`.
    Walk { embedding: StructureEmbedding, target: Vertex },
    /// Run the coin process at the exposure vertex.
    Expose(Vertex),
    /// Walk back to `a` over the edges used since the sequence began.
    Retrace,
    Pass,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub thresholds: Thresholds,
    pub monitors: Vec<Monitor>,
    pub sequences: [usize; 3],
    pub skipped: [usize; 3],
    pub fallbacks: usize,
    pub max_type_one: usize,
    pub max_type_two: usize,
    pub h_edges: Vec<EdgeId>,
    pub coins_tossed: usize,
    pub bulk_toss: bool,
    pub aborted: Option<String>,
    pub degree_gate: bool,
    pub log: Vec<String>,
}

impl StrategyReport {
    pub fn monitor(&self, id: &str) -> Option<&Monitor> {
        self.monitors.iter().find(|m| m.claim_id == id)
    }

    /// Exact monitors that were violated.
    pub fn exact_violations(&self) -> Vec<&Monitor> {
        self.monitors.iter().filter(|m| m.exact && m.violated).collect()
    }
}

const LOG_LIMIT: usize = 200;

/// Walker's strategy: Sequences I, II and III in turn, each starting and
/// ending at `a`.
pub struct WalkerStrategy {
    g: Arc<Graph>,
    bf: Arc<BlockFamily>,
    cfg: StrategyConfig,
    thr: Thresholds,
    cache: CandidateCache,
    sees: Vec<Vec<Vertex>>,
    side_weight: Vec<[f64; 2]>,
    side_level: Vec<[Option<usize>; 2]>,
    star: Vec<Vertex>,
    weight: Vec<f64>,
    z1: Vec<usize>,
    z2: Vec<usize>,
    alive: Vec<Vec<Vertex>>,
    cbox_destroyed: Vec<bool>,
    cbox_added: f64,
    breaker_degree: Vec<usize>,
    breaker_seen: usize,
    // audit only: targets each Breaker edge sees, found via relevant roots
    audit_targets: HashMap<EdgeId, Vec<Vertex>>,
    minbox_seen: usize,
    exposed: Vec<bool>,
    exposed_count: usize,
    type_one: Vec<usize>,
    type_two: Vec<usize>,
    minbox: MinBoxState,
    h_edges: Vec<EdgeId>,
    coin_seed: Seed,
    next_sequence: SequenceKind,
    plan: VecDeque<Task>,
    trail: Vec<EdgeId>,
    reach_edges: HashSet<EdgeId>,
    last_start: [Option<usize>; 3],
    monitors: Vec<Monitor>,
    sequences: [usize; 3],
    skipped: [usize; 3],
    fallbacks: usize,
    bulk_toss: bool,
    aborted: Option<String>,
    degree_gate: bool,
    log: Vec<String>,
}

impl WalkerStrategy {
    pub fn new(g: Arc<Graph>, bf: Arc<BlockFamily>, cfg: StrategyConfig, coin_seed: Seed) -> Result<Self> {
        let n = g.vertex_count();
        if bf.n != n {
            return Err(Error::InvalidParameter("block family and graph disagree on n".into()));
        }
        if !(cfg.p > 0.0 && cfg.p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {} outside (0,1]", cfg.p)));
        }
        let thr = Thresholds::new(n, bf.k, cfg.eps, cfg.p)?;
        let cache = CandidateCache::build(&g, &bf)?;
        let m = g.edge_count();
        let mut sees = vec![Vec::new(); m];
        let mut side_level = vec![[None, None]; m];
        let mut side_weight = vec![[0.0, 0.0]; m];
        for e in 0..m {
            for t in 1..=2 {
                side_level[e][t - 1] = appears_between_levels(&g, &bf, t, e);
                side_weight[e][t - 1] = edge_weight(&g, &bf, t, e, cfg.eps);
            }
        }
        let mut alive = vec![Vec::new(); n];
        for x in 0..n {
            if let Some(cf) = cache.get(x) {
                alive[x] = cf.root_candidates(&bf);
                for e in 0..m {
                    if side_level[e][cf.t - 1].is_some() && edge_sees(&g, &bf, cf, e) {
                        sees[e].push(x);
                    }
                }
            }
        }
        let minbox = MinBoxState::new(n, thr.box_size, thr.alpha, thr.minbox_bias)?;
        let max_degree = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
        let degree_gate = (max_degree as f64) < 2.0 * cfg.p * n as f64;
        let monitors = Self::fresh_monitors(&thr, degree_gate);
        Ok(WalkerStrategy {
            sees,
            side_weight,
            side_level,
            star: Vec::new(),
            weight: vec![0.0; n],
            z1: vec![0; n],
            z2: vec![0; n],
            alive,
            cbox_destroyed: (0..n).map(|v| v == bf.a).collect(),
            cbox_added: 0.0,
            breaker_degree: vec![0; n],
            breaker_seen: 0,
            audit_targets: HashMap::new(),
            minbox_seen: 0,
            exposed: vec![false; m],
            exposed_count: 0,
            type_one: vec![0; n],
            type_two: vec![0; n],
            minbox,
            h_edges: Vec::new(),
            coin_seed,
            next_sequence: SequenceKind::One,
            plan: VecDeque::new(),
            trail: Vec::new(),
            reach_edges: HashSet::new(),
            last_start: [None; 3],
            monitors,
            sequences: [0; 3],
            skipped: [0; 3],
            fallbacks: 0,
            bulk_toss: false,
            aborted: None,
            degree_gate,
            log: Vec::new(),
            g,
            bf,
            cfg,
            thr,
            cache,
        })
    }

    fn fresh_monitors(thr: &Thresholds, gate: bool) -> Vec<Monitor> {
        let mut v = Vec::with_capacity(MONITOR_COUNT);
        let mut add = |id: &str, bound: f64, exact: bool, strict: bool| v.push(Monitor::new(id, bound, exact, strict));
        add("maintain1.breaker_between_sequences", thr.sequence_bias as f64, true, false);
        add("maintain2.cbox_bias", thr.cbox_bias as f64, false, false);
        add("maintain2.cbox_bound", thr.cbox_bound, false, false);
        add("maintain2.weight", thr.weight_bound, false, true);
        add("maintain2.z1", thr.z1_size as f64, false, false);
        add("maintain2.z2", thr.z2_size as f64, false, false);
        add("weight.recompute_mismatch", 0.0, true, false);
        add("seq1.star_free_edge_missing", 0.0, false, false);
        add("seq1.paths_supply_shortfall", 0.0, false, false);
        add("seq1.paths_exhausted", 0.0, false, false);
        add("seq2.no_qualifying_vertex", 0.0, false, false);
        add("seq3.no_qualifying_vertex", 0.0, false, false);
        add("reach.unavailable_edge", 0.0, true, false);
        add("sequence.misaligned_start", 0.0, true, false);
        add("plan.broken_step", 0.0, false, false);
        add("random1.breaker_box", thr.breaker_box_bound, gate, true);
        add("random1.maker_box", thr.maker_box_bound, gate, true);
        add("random2.inactive_before_degree", thr.inactive_degree_bound, false, true);
        add("minbox.danger", thr.minbox_bound, false, false);
        add("random4.type_two", thr.type_two_bound, false, false);
        add("coins.single_toss", 0.0, true, false);
        v
    }

    fn mon(&mut self, m: Mon) -> &mut Monitor {
        &mut self.monitors[m as usize]
    }

    fn note(&mut self, msg: String) {
        if self.log.len() < LOG_LIMIT {
            self.log.push(msg);
        }
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thr
    }

    pub fn weight(&self, x: Vertex) -> f64 {
        self.weight[x]
    }

    pub fn star(&self) -> &[Vertex] {
        &self.star
    }

    pub fn h_edges(&self) -> &[EdgeId] {
        &self.h_edges
    }

    pub fn type_counters(&self) -> (&[usize], &[usize]) {
        (&self.type_one, &self.type_two)
    }

    /// Targets seen by edge `e` (precomputed at setup).
    pub fn seen_targets(&self, e: EdgeId) -> &[Vertex] {
        &self.sees[e]
    }

    pub fn report(&self) -> StrategyReport {
        StrategyReport {
            thresholds: self.thr.clone(),
            monitors: self.monitors.clone(),
            sequences: self.sequences,
            skipped: self.skipped,
            fallbacks: self.fallbacks,
            max_type_one: self.type_one.iter().copied().max().unwrap_or(0),
            max_type_two: self.type_two.iter().copied().max().unwrap_or(0),
            h_edges: self.h_edges.clone(),
            coins_tossed: self.exposed_count,
            bulk_toss: self.bulk_toss,
            aborted: self.aborted.clone(),
            degree_gate: self.degree_gate,
            log: self.log.clone(),
        }
    }

    /// Folds Breaker's new edges into weights, seeing-edge counts and the
    /// Continuous Box mirror.
    fn sync(&mut self, board: &BoardState) {
        let log = board.breaker_log();
        let round = board.rounds_played;
        let fresh = self.breaker_seen < log.len();
        for i in self.breaker_seen..log.len() {
            let e = log[i];
            let (u, v) = self.g.edge(e);
            self.breaker_degree[u] += 1;
            self.breaker_degree[v] += 1;
            let targets = std::mem::take(&mut self.sees[e]);
            for &x in &targets {
                let t = self.bf.side_for_target(x).expect("targets lie on a side");
                let w = self.side_weight[e][t - 1];
                self.weight[x] += w;
                if self.side_level[e][t - 1].is_some_and(|l| l < self.bf.k) {
                    self.z1[x] += 1;
                } else {
                    self.z2[x] += 1;
                }
                if !self.cbox_destroyed[x] {
                    self.cbox_added += w;
                }
                let cf = self.cache.get(x).expect("target family");
                let roots = relevant_roots(&self.g, &self.bf, cf, e);
                if !roots.is_empty() {
                    self.alive[x].retain(|r| !roots.contains(r));
                }
            }
            self.sees[e] = targets;
        }
        self.breaker_seen = log.len();
        if fresh && self.cfg.audit_weights {
            self.recompute_weights(board);
        }
        // mid-game weights of unreached vertices
        let mut worst: f64 = 0.0;
        for x in 0..self.thr.n {
            if !board.maker_has_vertex(x) {
                worst = worst.max(self.weight[x]);
            }
        }
        self.mon(Mon::Weight).observe(worst, round);
    }

    fn recompute_weights(&mut self, board: &BoardState) {
        for &e in board.breaker_log() {
            if !self.audit_targets.contains_key(&e) {
                let seen: Vec<Vertex> = (0..self.thr.n)
                    .filter(|&x| self.cache.get(x).is_some_and(|cf| !relevant_roots(&self.g, &self.bf, cf, e).is_empty()))
                    .collect();
                self.audit_targets.insert(e, seen);
            }
        }
        let mut fresh = vec![0.0f64; self.thr.n];
        for &e in board.breaker_log() {
            for &x in &self.audit_targets[&e] {
                let t = self.bf.side_for_target(x).expect("targets lie on a side");
                fresh[x] += edge_weight(&self.g, &self.bf, t, e, self.cfg.eps);
            }
        }
        let mismatch = (0..self.thr.n)
            .filter(|&x| !board.maker_has_vertex(x))
            .filter(|&x| (fresh[x] - self.weight[x]).abs() > 1e-9 * (1.0 + fresh[x].abs()))
            .count();
        let round = board.rounds_played;
        self.mon(Mon::WeightRecompute).observe(mismatch as f64, round);
    }

    fn start_sequence(&mut self, board: &BoardState, def: &GameDef, kind: SequenceKind) {
        let round = board.rounds_played;
        let idx = kind as usize;
        let now = board.breaker_log().len();
        if let Some(prev) = self.last_start[idx] {
            self.mon(Mon::BetweenSequences).observe((now - prev) as f64, round);
        }
        self.last_start[idx] = Some(now);
        let aligned = board.moves_left_in_turn == def.maker_bias && board.walker_position() == Some(self.bf.a);
        self.mon(Mon::Alignment).observe(if aligned { 0.0 } else { 1.0 }, round);
        self.trail.clear();
        self.reach_edges.clear();
        self.sequences[idx] += 1;
    }

    fn plan_next(&mut self, board: &BoardState, def: &GameDef) {
        let kind = self.next_sequence;
        self.next_sequence = match kind {
            SequenceKind::One => SequenceKind::Two,
            SequenceKind::Two => SequenceKind::Three,
            SequenceKind::Three => SequenceKind::One,
        };
        self.start_sequence(board, def, kind);
        let tasks = match kind {
            SequenceKind::One => self.sequence_one(board),
            SequenceKind::Two => self.sequence_two(board),
            SequenceKind::Three => self.sequence_three(board),
        };
        if tasks.is_empty() {
            self.skipped[kind as usize] += 1;
        }
        self.plan.extend(tasks);
    }

    /// Sequence I: grow the star at `a`, then play the path substrategy.
    pub fn sequence_one(&mut self, board: &BoardState) -> Vec<Task> {
        let a = self.bf.a;
        let round = board.rounds_played;
        let g = self.g.clone();
        if self.star.len() < self.thr.star_size {
            let pick = g
                .neighbours(a)
                .iter()
                .copied()
                .find(|&(w, e)| self.bf.in_residual(w) && board.owner(e) == Owner::Free && !self.star.contains(&w));
            return match pick {
                Some((w, e)) => {
                    self.star.push(w);
                    vec![Task::Step(Move::Claim(e)), Task::Step(Move::Traverse(e))]
                }
                None => {
                    self.mon(Mon::StarEdge).bump(round);
                    self.note(format!("round {round}: no free star edge into R"));
                    Vec::new()
                }
            };
        }
        let targets: Vec<Vec<Vertex>> = (0..self.thr.n)
            .filter(|&x| self.cache.get(x).is_some())
            .map(|x| self.alive[x].clone())
            .collect();
        let mut all_hit = true;
        let mut short = 0usize;
        let mut dead = 0usize;
        for c in &targets {
            let f = star_edges(&g, &self.star, c);
            let hit = f.iter().any(|&e| board.owner(e) == Owner::Maker);
            let avail = f.iter().filter(|&&e| board.available(e)).count();
            if (avail as f64) < self.thr.paths_supply {
                short += 1;
            }
            if !hit {
                all_hit = false;
                if !f.iter().any(|&e| board.owner(e) == Owner::Free) {
                    dead += 1;
                }
            }
        }
        self.mon(Mon::PathsSupply).observe(short as f64, round);
        if all_hit {
            return Vec::new();
        }
        self.mon(Mon::PathsExhausted).observe(dead as f64, round);
        match s_paths_choice(board, &self.star, &targets, self.thr.sequence_bias) {
            Some((leaf, e)) => {
                let star_edge = g.edge_id(a, leaf).expect("star edge");
                vec![
                    Task::Step(Move::Traverse(star_edge)),
                    Task::Step(Move::Claim(e)),
                    Task::Step(Move::Traverse(e)),
                    Task::Step(Move::Traverse(star_edge)),
                ]
            }
            None => Vec::new(),
        }
    }

    /// Sequence II: bring the heaviest unreached vertex into Walker's graph.
    pub fn sequence_two(&mut self, board: &BoardState) -> Vec<Task> {
        let n = self.thr.n;
        let round = board.rounds_played;
        if board.maker_vertex_count() == n {
            return Vec::new();
        }
        // boxes of reached vertices no longer matter
        for x in 0..n {
            if board.maker_has_vertex(x) {
                self.cbox_destroyed[x] = true;
            }
        }
        let mut target = None;
        for x in 0..n {
            if !board.maker_has_vertex(x) && target.is_none_or(|b: Vertex| self.weight[x] > self.weight[b]) {
                target = Some(x);
            }
        }
        let x = target.expect("some vertex is unreached");
        let surviving_max = (0..n)
            .filter(|&v| !self.cbox_destroyed[v])
            .map(|v| self.weight[v])
            .fold(0.0, f64::max);
        let added = self.cbox_added;
        self.mon(Mon::CboxBias).observe(added, round);
        self.mon(Mon::CboxBound).observe(surviving_max, round);
        self.cbox_destroyed[x] = true;
        self.cbox_added = 0.0;
        let (mut z1, mut z2) = (0usize, 0usize);
        for v in 0..n {
            if !board.maker_has_vertex(v) {
                z1 = z1.max(self.z1[v]);
                z2 = z2.max(self.z2[v]);
            }
        }
        self.mon(Mon::Z1).observe(z1 as f64, round);
        self.mon(Mon::Z2).observe(z2 as f64, round);
        let mut tasks = self.reach(board, x, Mon::QualifyingTwo, true);
        if !tasks.is_empty() {
            tasks.push(Task::Retrace);
        }
        tasks
    }

    /// Sequence III: expose edges at the most dangerous box's vertex.
    pub fn sequence_three(&mut self, board: &BoardState) -> Vec<Task> {
        let round = board.rounds_played;
        if self.exposed_count == self.g.edge_count() {
            return vec![Task::Stop];
        }
        let log = board.breaker_log();
        for &e in &log[self.minbox_seen..] {
            let (u, v) = self.g.edge(e);
            self.minbox.credit_breaker(u, 1);
            self.minbox.credit_breaker(v, 1);
        }
        self.minbox_seen = log.len();
        let (mut wb, mut wm, mut inactive_deg, mut danger) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
        for v in 0..self.thr.n {
            wb = wb.max(self.minbox.w_b[v] as f64);
            wm = wm.max(self.minbox.w_m[v] as f64);
            if self.minbox.is_active(v) {
                inactive_deg = inactive_deg.max(self.breaker_degree[v] as f64);
                danger = danger.max(self.minbox.dang(v));
            }
        }
        self.mon(Mon::BreakerBox).observe(wb, round);
        self.mon(Mon::MakerBox).observe(wm, round);
        self.mon(Mon::InactiveBefore).observe(inactive_deg, round);
        if danger.is_finite() {
            self.mon(Mon::MinboxDanger).observe(danger, round);
        }
        match minbox_maker_move(&self.minbox) {
            Ok(x) => {
                self.minbox.maker_claim(x).expect("chosen box is free");
                let mut tasks = if x == self.bf.a {
                    Vec::new()
                } else {
                    let t = self.reach(board, x, Mon::QualifyingThree, false);
                    if t.is_empty() {
                        self.note(format!("round {round}: exposure vertex {x} unreachable"));
                        return t;
                    }
                    t
                };
                tasks.push(Task::Expose(x));
                tasks.push(Task::Retrace);
                tasks
            }
            Err(_) => {
                self.bulk_toss();
                vec![Task::Stop]
            }
        }
    }

    fn bulk_toss(&mut self) {
        self.bulk_toss = true;
        let q = self.thr.coin_probability;
        for e in 0..self.g.edge_count() {
            if self.exposed[e] {
                continue;
            }
            self.mark_exposed(e);
            if coin_success(self.coin_seed, e, q) {
                let (u, v) = self.g.edge(e);
                self.type_two[u] += 1;
                self.type_two[v] += 1;
                self.h_edges.push(e);
            }
        }
        self.observe_type_two();
    }

    fn observe_type_two(&mut self) {
        let worst = self.type_two.iter().copied().max().unwrap_or(0) as f64;
        self.mon(Mon::TypeTwo).observe(worst, 0);
    }

    fn mark_exposed(&mut self, e: EdgeId) {
        if self.exposed[e] {
            self.mon(Mon::SingleToss).observe(1.0, 0);
            return;
        }
        self.exposed[e] = true;
        self.exposed_count += 1;
    }

    /// Plans the walk from `a` to `x`: a length-2 path to a root candidate
    /// that no Breaker edge seeing `x` is relevant for, then the structure.
    fn reach(&mut self, board: &BoardState, x: Vertex, failure: Mon, unreached_fallback: bool) -> Vec<Task> {
        let round = board.rounds_played;
        if let Some(tasks) = self.reach_through(board, x, self.alive[x].clone()) {
            return tasks;
        }
        self.mon(failure).bump(round);
        self.note(format!("round {round}: no qualifying root candidate for {x}"));
        if self.cfg.policy == Policy::Strict {
            self.aborted = Some(format!("round {round}: no qualifying root candidate for {x}"));
            return vec![Task::Stop];
        }
        self.fallbacks += 1;
        // candidates of the graph of available edges
        if let Some(t) = self.bf.side_for_target(x) {
            let avail = available_graph(board);
            if let Ok(cf) = compute_candidates(&avail, &self.bf, x, t) {
                let roots = cf.root_candidates(&self.bf);
                if let Some(tasks) = self.reach_through(board, x, roots) {
                    return tasks;
                }
            }
        }
        // plain short walk
        let limit = 2 * self.bf.k + 2;
        let dist = bfs_available(board, self.bf.a, limit);
        let goal = if dist[x].is_some() {
            Some(x)
        } else if unreached_fallback {
            (0..self.thr.n)
                .filter(|&v| dist[v].is_some() && !board.maker_has_vertex(v))
                .min_by_key(|&v| (dist[v].map(|d| d.0), v))
        } else {
            None
        };
        match goal {
            Some(v) => {
                let path = path_to(board, &dist, v);
                for &e in &path {
                    self.reach_edges.insert(e);
                }
                path.into_iter().map(|e| Task::Step(step_for(board, e))).collect()
            }
            None => Vec::new(),
        }
    }

    fn reach_through(&mut self, board: &BoardState, x: Vertex, roots: Vec<Vertex>) -> Option<Vec<Task>> {
        let g = self.g.clone();
        let a = self.bf.a;
        let cf = self.cache.get(x)?;
        for v in roots {
            let path = g.neighbours(a).iter().find_map(|&(y, e1)| {
                if y == v || !board.available(e1) {
                    return None;
                }
                let e2 = g.edge_id(y, v)?;
                board.available(e2).then_some((e1, e2))
            });
            let Some((e1, e2)) = path else { continue };
            let usable = |e: EdgeId| board.available(e);
            let Ok(embedding) = extract_structure_avoiding(&g, &self.bf, cf, v, &usable) else {
                continue;
            };
            let s = self.bf.structure();
            let mut edges = vec![e1, e2];
            for &(p, q) in s.graph().edges() {
                edges.push(g.edge_id(embedding.host(p), embedding.host(q)).expect("embedded edge"));
            }
            let round = board.rounds_played;
            let bad = edges.iter().filter(|&&e| !board.available(e)).count();
            self.mon(Mon::ReachAvailable).observe(bad as f64, round);
            self.reach_edges.extend(edges);
            return Some(vec![
                Task::Step(step_for(board, e1)),
                Task::Step(step_for(board, e2)),
                Task::Walk { embedding, target: x },
            ]);
        }
        None
    }

    /// Coin process at `x`; returns the moves that follow it.
    fn expose(&mut self, board: &BoardState, x: Vertex, rng: &mut ChaCha8Rng) -> Vec<Task> {
        let g = self.g.clone();
        let mut order: Vec<(Vertex, EdgeId)> =
            g.neighbours(x).iter().copied().filter(|&(_, e)| !self.exposed[e]).collect();
        order.shuffle(rng);
        let q = self.thr.coin_probability;
        for &(w, e) in &order {
            self.mark_exposed(e);
            if !coin_success(self.coin_seed, e, q) {
                continue;
            }
            self.h_edges.push(e);
            self.minbox.credit_maker(w, 1);
            return match board.owner(e) {
                Owner::Free => vec![Task::Step(Move::Claim(e)), Task::Step(Move::Traverse(e))],
                Owner::Maker => vec![Task::Step(Move::Traverse(e)), Task::Step(Move::Traverse(e))],
                Owner::Breaker => {
                    self.type_two[x] += 1;
                    self.type_two[w] += 1;
                    self.observe_type_two();
                    self.idle_at(board, x)
                }
            };
        }
        // failure of type I
        self.type_one[x] += 1;
        for &(_, e) in g.neighbours(x) {
            if !self.exposed[e] {
                self.mark_exposed(e);
            }
        }
        let credit = self.thr.type_one_credit;
        self.minbox.credit_maker(x, credit);
        self.idle_at(board, x)
    }

    /// A there-and-back move ending at `x`.
    fn idle_at(&self, board: &BoardState, x: Vertex) -> Vec<Task> {
        let own = self
            .trail
            .last()
            .copied()
            .or_else(|| self.g.neighbours(x).iter().find(|&&(_, e)| board.owner(e) == Owner::Maker).map(|&(_, e)| e));
        if let Some(e) = own {
            return vec![Task::Step(Move::Traverse(e)), Task::Step(Move::Traverse(e))];
        }
        match self.g.neighbours(x).iter().find(|&&(_, e)| board.owner(e) == Owner::Free) {
            Some(&(_, e)) => vec![Task::Step(Move::Claim(e)), Task::Step(Move::Traverse(e))],
            None => vec![Task::Pass],
        }
    }

    fn emit(&mut self, mv: Move) -> Action {
        let e = mv.edge();
        if self.trail.last() == Some(&e) {
            self.trail.pop();
        } else {
            self.trail.push(e);
        }
        Action::Play(mv)
    }

    fn break_plan(&mut self, board: &BoardState, why: String) {
        let round = board.rounds_played;
        self.mon(Mon::PlanBroken).bump(round);
        self.note(format!("round {round}: {why}"));
        self.plan.clear();
        self.plan.push_back(Task::Retrace);
    }
}

fn step_for(board: &BoardState, e: EdgeId) -> Move {
    if board.owner(e) == Owner::Maker {
        Move::Traverse(e)
    } else {
        Move::Claim(e)
    }
}

fn step_is_legal(board: &BoardState, mv: Move) -> bool {
    let Some(pos) = board.walker_position() else { return false };
    let (u, v) = board.graph().edge(mv.edge());
    if u != pos && v != pos {
        return false;
    }
    match mv {
        Move::Claim(e) => board.owner(e) == Owner::Free,
        Move::Traverse(e) => board.owner(e) == Owner::Maker,
    }
}

fn available_graph(board: &BoardState) -> Graph {
    let g = board.graph();
    let edges = (0..g.edge_count()).filter(|&e| board.available(e)).map(|e| g.edge(e));
    Graph::from_edges(g.vertex_count(), edges).expect("subgraph of a valid graph")
}

// distance and parent edge over available edges, up to `limit` steps
fn bfs_available(board: &BoardState, from: Vertex, limit: usize) -> Vec<Option<(usize, Option<EdgeId>)>> {
    let g = board.graph();
    let mut dist = vec![None; g.vertex_count()];
    dist[from] = Some((0, None));
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].expect("queued").0;
        if d == limit {
            continue;
        }
        for &(w, e) in g.neighbours(u) {
            if dist[w].is_none() && board.available(e) {
                dist[w] = Some((d + 1, Some(e)));
                queue.push_back(w);
            }
        }
    }
    dist
}

fn path_to(board: &BoardState, dist: &[Option<(usize, Option<EdgeId>)>], v: Vertex) -> Vec<EdgeId> {
    let g = board.graph();
    let mut path = Vec::new();
    let mut cur = v;
    while let Some((_, Some(e))) = dist[cur] {
        path.push(e);
        cur = g.other_end(e, cur);
    }
    path.reverse();
    path
}

impl Strategy for WalkerStrategy {
    fn next_action(&mut self, board: &BoardState, def: &GameDef, rng: &mut ChaCha8Rng) -> Action {
        self.sync(board);
        // each planning call either schedules moves or makes progress in
        // the box games, so this loop is finite; the bound is a safeguard
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > 16 * (self.thr.n + self.g.edge_count()) + 64 {
                self.aborted = Some("strategy made no progress".into());
                return Action::Stop;
            }
            let Some(task) = self.plan.pop_front() else {
                if self.aborted.is_some() {
                    return Action::Stop;
                }
                self.plan_next(board, def);
                continue;
            };
            match task {
                Task::Stop => {
                    self.plan.push_front(Task::Stop);
                    return Action::Stop;
                }
                Task::Pass => return Action::Pass,
                Task::Step(mv) => {
                    if step_is_legal(board, mv) {
                        return self.emit(mv);
                    }
                    self.break_plan(board, format!("planned {mv:?} is no longer legal"));
                }
                Task::Walk { embedding, target } => {
                    if board.walker_position() == Some(target) {
                        continue;
                    }
                    match structure_walk(board, self.bf.structure(), &embedding) {
                        Ok(Some(mv)) => {
                            if !self.reach_edges.contains(&mv.edge()) {
                                let r = board.rounds_played;
                                self.mon(Mon::ReachAvailable).observe(1.0, r);
                            }
                            self.plan.push_front(Task::Walk { embedding, target });
                            return self.emit(mv);
                        }
                        Ok(None) => continue,
                        Err(err) => self.break_plan(board, format!("structure walk failed: {err}")),
                    }
                }
                Task::Expose(x) => {
                    if board.walker_position() != Some(x) {
                        self.break_plan(board, format!("not at exposure vertex {x}"));
                        continue;
                    }
                    let follow = self.expose(board, x, rng);
                    for t in follow.into_iter().rev() {
                        self.plan.push_front(t);
                    }
                }
                Task::Retrace => {
                    if let Some(&e) = self.trail.last() {
                        self.plan.push_front(Task::Retrace);
                        return self.emit(Move::Traverse(e));
                    }
                }
            }
        }
    }
}

/// The game the full strategy is played in: (2:2) Walker-Breaker, win by
/// a spanning Walker graph, no early termination.
pub fn full_game_def(first_player: Player) -> GameDef {
    let mut def = GameDef::new(Variant::WalkerBreaker, 2, 2, first_player, WinCondition::SpanningW);
    def.terminate_on_win = false;
    def
}

pub struct FullRun {
    pub def: GameDef,
    pub transcript: Transcript,
    pub report: StrategyReport,
}

/// Plays Walker's full strategy against `breaker`. Walker's coin stream is
/// `seed.split(7)`; the engine derives the players' generators from `seed`.
pub fn run_full_strategy(
    g: Arc<Graph>,
    bf: Arc<BlockFamily>,
    cfg: StrategyConfig,
    seed: Seed,
    breaker: &mut dyn Strategy,
    opts: PlayOptions,
) -> Result<FullRun> {
    let def = full_game_def(cfg.first_player);
    let initial = BoardState::new(g.clone(), &def, Some(bf.a))?;
    let mut walker = WalkerStrategy::new(g, bf, cfg, seed.split(7))?;
    let transcript = play_game_with(&def, initial, &mut walker, breaker, seed, opts)?;
    Ok(FullRun { def, transcript, report: walker.report() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakerKind {
    Random,
    Frontier,
    Star,
    Structure,
    Pass,
}

impl BreakerKind {
    pub const ALL: [BreakerKind; 5] =
        [BreakerKind::Random, BreakerKind::Frontier, BreakerKind::Star, BreakerKind::Structure, BreakerKind::Pass];

    pub fn name(self) -> &'static str {
        match self {
            BreakerKind::Random => "random",
            BreakerKind::Frontier => "frontier",
            BreakerKind::Star => "star",
            BreakerKind::Structure => "structure",
            BreakerKind::Pass => "pass",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// The baseline Breakers. `Structure` ranks edges by the total weight they
/// would add over the targets they see.
pub fn baseline_breaker(kind: BreakerKind, g: &Graph, bf: &BlockFamily, eps: f64) -> Result<Box<dyn Strategy>> {
    Ok(match kind {
        BreakerKind::Random => Box::new(RandomBreaker),
        BreakerKind::Frontier => Box::new(FrontierBreaker),
        BreakerKind::Star => Box::new(StarBreaker { a: bf.a }),
        BreakerKind::Pass => Box::new(crate::engine::PassStrategy),
        BreakerKind::Structure => {
            let cache = CandidateCache::build(g, bf)?;
            let mut score = vec![0.0f64; g.edge_count()];
            for x in 0..bf.n {
                let Some(cf) = cache.get(x) else { continue };
                for (e, s) in score.iter_mut().enumerate() {
                    if edge_sees(g, bf, cf, e) {
                        *s += edge_weight(g, bf, cf.t, e, eps);
                    }
                }
            }
            let mut ranking: Vec<EdgeId> = (0..g.edge_count()).filter(|&e| score[e] > 0.0).collect();
            ranking.sort_by(|&x, &y| score[y].total_cmp(&score[x]).then(x.cmp(&y)));
            Box::new(StructureBreaker { ranking })
        }
    })
}

fn random_free(board: &BoardState, rng: &mut ChaCha8Rng) -> Action {
    let free: Vec<EdgeId> = (0..board.graph().edge_count()).filter(|&e| board.owner(e) == Owner::Free).collect();
    match free.choose(rng) {
        Some(&e) => Action::Play(Move::Claim(e)),
        None => Action::Pass,
    }
}

/// Claims uniformly random free edges.
pub struct RandomBreaker;

impl Strategy for RandomBreaker {
    fn next_action(&mut self, board: &BoardState, _: &GameDef, rng: &mut ChaCha8Rng) -> Action {
        random_free(board, rng)
    }
}

/// Cuts at Walker's position: the free edge there whose far end has the
/// largest degree, else the same around any vertex of Walker's graph.
pub struct FrontierBreaker;

impl Strategy for FrontierBreaker {
    fn next_action(&mut self, board: &BoardState, _: &GameDef, rng: &mut ChaCha8Rng) -> Action {
        let g = board.graph();
        let best_at = |v: Vertex| {
            g.neighbours(v)
                .iter()
                .filter(|&&(_, e)| board.owner(e) == Owner::Free)
                .max_by(|&&(w1, e1), &&(w2, e2)| g.degree(w1).cmp(&g.degree(w2)).then(e2.cmp(&e1)))
                .map(|&(_, e)| e)
        };
        if let Some(e) = board.walker_position().and_then(best_at) {
            return Action::Play(Move::Claim(e));
        }
        for v in 0..g.vertex_count() {
            if board.maker_has_vertex(v) {
                if let Some(e) = best_at(v) {
                    return Action::Play(Move::Claim(e));
                }
            }
        }
        random_free(board, rng)
    }
}

/// Takes free edges at the start vertex first.
pub struct StarBreaker {
    pub a: Vertex,
}

impl Strategy for StarBreaker {
    fn next_action(&mut self, board: &BoardState, _: &GameDef, rng: &mut ChaCha8Rng) -> Action {
        match board.graph().neighbours(self.a).iter().find(|&&(_, e)| board.owner(e) == Owner::Free) {
            Some(&(_, e)) => Action::Play(Move::Claim(e)),
            None => random_free(board, rng),
        }
    }
}

/// Takes the free edge of highest structural weight.
pub struct StructureBreaker {
    ranking: Vec<EdgeId>,
}

impl Strategy for StructureBreaker {
    fn next_action(&mut self, board: &BoardState, _: &GameDef, rng: &mut ChaCha8Rng) -> Action {
        match self.ranking.iter().find(|&&e| board.owner(e) == Owner::Free) {
            Some(&e) => Action::Play(Move::Claim(e)),
            None => random_free(board, rng),
        }
    }
}
