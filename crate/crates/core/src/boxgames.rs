//! Continuous Box game and MinBox game.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack for floating-point budget checks.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// `b (ln n + 1)`.
pub fn box_bound(b: f64, n: usize) -> f64 {
    b * ((n.max(1) as f64).ln() + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CBoxState {
    pub weights: Vec<f64>,
    pub claimed: Vec<f64>,
    pub destroyed: Vec<bool>,
    pub bias: f64,
    pub rounds: usize,
}

impl CBoxState {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidParameter("box weights must be positive".into()));
        }
        if !(bias > 0.0) {
            return Err(Error::InvalidParameter("CMaker bias must be positive".into()));
        }
        let n = weights.len();
        Ok(CBoxState {
            weights,
            claimed: vec![0.0; n],
            destroyed: vec![false; n],
            bias,
            rounds: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn surviving(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.destroyed[i])
    }

    pub fn is_won(&self, i: usize) -> bool {
        !self.destroyed[i] && self.claimed[i] >= self.weights[i] - BUDGET_TOLERANCE
    }

    /// One CMaker move: `amounts[i]` is added to box `i`.
    pub fn claim(&mut self, amounts: &[f64]) -> Result<()> {
        if amounts.len() != self.len() {
            return Err(Error::Budget("one amount per box expected".into()));
        }
        let total: f64 = amounts.iter().sum();
        if amounts.iter().any(|&x| x < 0.0 || x.is_nan()) {
            return Err(Error::Budget("negative claim".into()));
        }
        if total > self.bias + BUDGET_TOLERANCE {
            return Err(Error::Budget(format!("claimed {total} with budget {}", self.bias)));
        }
        for (i, &x) in amounts.iter().enumerate() {
            if x > 0.0 && self.destroyed[i] {
                return Err(Error::Budget(format!("box {i} is destroyed")));
            }
            self.claimed[i] = (self.claimed[i] + x).min(self.weights[i]);
        }
        Ok(())
    }

    pub fn destroy(&mut self, i: usize) {
        self.destroyed[i] = true;
    }

    pub fn max_surviving_claim(&self) -> f64 {
        self.surviving().map(|i| self.claimed[i]).fold(0.0, f64::max)
    }
}

/// CBreaker destroys the surviving box with the largest claimed weight,
/// lowest index on ties.
pub fn cbreaker_strategy_s(state: &CBoxState) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in state.surviving() {
        match best {
            Some(j) if state.claimed[i] <= state.claimed[j] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Puts the whole budget into the surviving box with the most weight
/// claimed so far.
pub fn greedy_cmaker(state: &CBoxState) -> Vec<f64> {
    let mut out = vec![0.0; state.len()];
    if let Some(i) = cbreaker_strategy_s(state) {
        out[i] = state.bias.min(state.weights[i] - state.claimed[i]);
    }
    out
}

/// Spreads the budget evenly over the surviving boxes.
pub fn even_cmaker(state: &CBoxState) -> Vec<f64> {
    let alive: Vec<usize> = state.surviving().collect();
    let mut out = vec![0.0; state.len()];
    for &i in &alive {
        out[i] = state.bias / alive.len() as f64;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CBoxRound {
    pub round: usize,
    pub max_surviving_claimed: f64,
    pub destroyed_box: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CBoxTrace {
    pub bound: f64,
    pub rounds: Vec<CBoxRound>,
    pub cmaker_won: bool,
    pub final_state: CBoxState,
}

impl CBoxTrace {
    pub fn max_observed(&self) -> f64 {
        self.rounds.iter().map(|r| r.max_surviving_claimed).fold(0.0, f64::max)
    }
}

/// CMaker against strategy S until every box is destroyed, CMaker fills a
/// box, or `rounds` rounds pass. The surviving-box bound is checked after
/// each CMaker move and after each destruction; a violation is an error.
pub fn simulate_cbox(
    weights: Vec<f64>,
    b: f64,
    cmaker: &mut dyn FnMut(&CBoxState) -> Vec<f64>,
    rounds: Option<usize>,
) -> Result<CBoxTrace> {
    let mut state = CBoxState::new(weights, b)?;
    let bound = box_bound(b, state.len());
    let mut log = Vec::new();
    let mut cmaker_won = false;
    while state.surviving().next().is_some() && rounds.is_none_or(|r| state.rounds < r) {
        let amounts = cmaker(&state);
        state.claim(&amounts)?;
        state.rounds += 1;
        let peak = state.max_surviving_claim();
        if state.surviving().any(|i| state.is_won(i)) {
            cmaker_won = true;
        }
        if peak > bound + BUDGET_TOLERANCE {
            return Err(Error::BoundViolation(format!(
                "round {}: surviving box holds {peak} > {bound}",
                state.rounds
            )));
        }
        if cmaker_won {
            log.push(CBoxRound { round: state.rounds, max_surviving_claimed: peak, destroyed_box: None });
            break;
        }
        let d = cbreaker_strategy_s(&state);
        if let Some(i) = d {
            state.destroy(i);
        }
        log.push(CBoxRound { round: state.rounds, max_surviving_claimed: peak, destroyed_box: d });
    }
    Ok(CBoxTrace { bound, rounds: log, cmaker_won, final_state: state })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinBoxState {
    pub sizes: Vec<usize>,
    pub w_m: Vec<usize>,
    pub w_b: Vec<usize>,
    pub alpha: f64,
    pub bias: usize,
    pub min_size: usize,
}

impl MinBoxState {
    pub fn new(n: usize, d: usize, alpha: f64, b: usize) -> Result<Self> {
        Self::with_sizes(vec![d; n], d, alpha, b)
    }

    pub fn with_sizes(sizes: Vec<usize>, d: usize, alpha: f64, b: usize) -> Result<Self> {
        if sizes.is_empty() || d == 0 || b == 0 {
            return Err(Error::InvalidParameter("MinBox needs n, D, b >= 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0,1)")));
        }
        if sizes.iter().any(|&s| s < d) {
            return Err(Error::InvalidParameter("every box needs at least D elements".into()));
        }
        let n = sizes.len();
        Ok(MinBoxState { sizes, w_m: vec![0; n], w_b: vec![0; n], alpha, bias: b, min_size: d })
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn remaining(&self, i: usize) -> usize {
        self.sizes[i] - self.w_m[i] - self.w_b[i]
    }

    /// A box is free while it still has an unclaimed element.
    pub fn is_free(&self, i: usize) -> bool {
        self.remaining(i) > 0
    }

    pub fn is_active(&self, i: usize) -> bool {
        (self.w_m[i] as f64) < self.alpha * self.sizes[i] as f64
    }

    pub fn dang(&self, i: usize) -> f64 {
        self.w_b[i] as f64 - self.bias as f64 * self.w_m[i] as f64
    }

    pub fn danger_bound(&self) -> f64 {
        box_bound(self.bias as f64, self.len())
    }

    /// Largest danger over active boxes, if any box is active.
    pub fn max_active_danger(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.len() {
            if self.is_active(i) {
                let d = self.dang(i);
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((i, d));
                }
            }
        }
        best
    }

    pub fn breaker_claim(&mut self, i: usize) -> Result<()> {
        if !self.is_free(i) {
            return Err(Error::IllegalMove(format!("box {i} is full")));
        }
        self.w_b[i] += 1;
        Ok(())
    }

    pub fn maker_claim(&mut self, i: usize) -> Result<()> {
        if !self.is_free(i) {
            return Err(Error::IllegalMove(format!("box {i} is full")));
        }
        self.w_m[i] += 1;
        Ok(())
    }

    /// Credits Maker with up to `amount` elements of box `i`; returns how
    /// many were credited.
    pub fn credit_maker(&mut self, i: usize, amount: usize) -> usize {
        let got = amount.min(self.remaining(i));
        self.w_m[i] += got;
        got
    }

    /// Credits Breaker with up to `amount` elements of box `i`.
    pub fn credit_breaker(&mut self, i: usize, amount: usize) -> usize {
        let got = amount.min(self.remaining(i));
        self.w_b[i] += got;
        got
    }

    /// Whether some box is still both active and not full, i.e. the danger
    /// of an active box can still change.
    pub fn has_live_box(&self) -> bool {
        (0..self.len()).any(|i| self.is_active(i) && self.is_free(i))
    }
}

/// Maker picks a free active box of largest danger, lowest index on ties.
pub fn minbox_maker_move(state: &MinBoxState) -> Result<usize> {
    let mut best: Option<usize> = None;
    for i in 0..state.len() {
        if state.is_free(i) && state.is_active(i) {
            match best {
                Some(j) if state.dang(i) <= state.dang(j) => {}
                _ => best = Some(i),
            }
        }
    }
    best.ok_or(Error::NoFreeActiveBox)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinBoxBreaker {
    /// Uniform over unclaimed elements.
    Random,
    /// Always the free active box of largest danger.
    MaxDanger,
    /// The box Maker served last, else the lowest free box.
    LastServed,
    /// Finishes one box before moving to the next.
    Focused,
}

impl MinBoxBreaker {
    pub const ALL: [MinBoxBreaker; 4] =
        [MinBoxBreaker::Random, MinBoxBreaker::MaxDanger, MinBoxBreaker::LastServed, MinBoxBreaker::Focused];

    pub fn name(self) -> &'static str {
        match self {
            MinBoxBreaker::Random => "random",
            MinBoxBreaker::MaxDanger => "max-danger",
            MinBoxBreaker::LastServed => "last-served",
            MinBoxBreaker::Focused => "focused",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }

    fn pick(self, state: &MinBoxState, last_served: Option<usize>, rng: &mut ChaCha8Rng) -> Option<usize> {
        let free: Vec<usize> = (0..state.len()).filter(|&i| state.is_free(i)).collect();
        if free.is_empty() {
            return None;
        }
        match self {
            MinBoxBreaker::Random => {
                let total: usize = free.iter().map(|&i| state.remaining(i)).sum();
                let mut r = rng.gen_range(0..total);
                for &i in &free {
                    if r < state.remaining(i) {
                        return Some(i);
                    }
                    r -= state.remaining(i);
                }
                unreachable!()
            }
            MinBoxBreaker::MaxDanger => {
                let active: Vec<usize> = free.iter().copied().filter(|&i| state.is_active(i)).collect();
                let pool = if active.is_empty() { &free } else { &active };
                pool.iter()
                    .copied()
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(j) if state.dang(i) <= state.dang(j) => Some(j),
                        _ => Some(i),
                    })
            }
            MinBoxBreaker::LastServed => match last_served {
                Some(i) if state.is_free(i) => Some(i),
                _ => free.choose(rng).copied(),
            },
            MinBoxBreaker::Focused => free
                .iter()
                .copied()
                .find(|&i| state.is_active(i))
                .or_else(|| free.first().copied()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub round: usize,
    pub index: usize,
    pub w_m: f64,
    pub w_b: f64,
    pub dang: Option<f64>,
    pub active: bool,
    pub free: bool,
    pub destroyed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinBoxTrace {
    pub bound: f64,
    pub rounds: usize,
    pub max_active_danger: f64,
    /// First `(round, box, danger)` above the bound.
    pub violation: Option<(usize, usize, f64)>,
    pub rows: Vec<BoxRow>,
    pub final_state: MinBoxState,
}

/// Rounds of `b` Breaker claims followed by one Maker claim, until no
/// active box can change or `rounds` pass. The danger bound is checked on
/// every active box at the end of each round.
pub fn simulate_minbox(
    n: usize,
    d: usize,
    alpha: f64,
    b: usize,
    breaker: MinBoxBreaker,
    rounds: Option<usize>,
    rng: &mut ChaCha8Rng,
    record_rows: bool,
) -> Result<MinBoxTrace> {
    let mut state = MinBoxState::new(n, d, alpha, b)?;
    let bound = state.danger_bound();
    let mut last_served = None;
    let mut round = 0;
    let mut max_active_danger = f64::NEG_INFINITY;
    let mut violation = None;
    let mut rows = Vec::new();
    while state.has_live_box() && rounds.is_none_or(|r| round < r) {
        round += 1;
        let before: usize = state.w_b.iter().sum();
        let mut claimed = 0;
        for _ in 0..b {
            match breaker.pick(&state, last_served, rng) {
                Some(i) => {
                    state.breaker_claim(i)?;
                    claimed += 1;
                }
                None => break,
            }
        }
        let after: usize = state.w_b.iter().sum();
        if after - before != claimed {
            return Err(Error::Invariant("Breaker tally out of step".into()));
        }
        match minbox_maker_move(&state) {
            Ok(i) => {
                state.maker_claim(i)?;
                last_served = Some(i);
            }
            Err(Error::NoFreeActiveBox) => {}
            Err(e) => return Err(e),
        }
        if let Some((i, dng)) = state.max_active_danger() {
            max_active_danger = max_active_danger.max(dng);
            if dng > bound + BUDGET_TOLERANCE && violation.is_none() {
                violation = Some((round, i, dng));
            }
        }
        if record_rows {
            push_minbox_rows(&state, round, &mut rows);
        }
    }
    Ok(MinBoxTrace { bound, rounds: round, max_active_danger, violation, rows, final_state: state })
}

fn push_minbox_rows(state: &MinBoxState, round: usize, rows: &mut Vec<BoxRow>) {
    for i in 0..state.len() {
        rows.push(BoxRow {
            round,
            index: i,
            w_m: state.w_m[i] as f64,
            w_b: state.w_b[i] as f64,
            dang: Some(state.dang(i)),
            active: state.is_active(i),
            free: state.is_free(i),
            destroyed: false,
        });
    }
}

/// Per-round rows of a CBox run, replayed from its trace.
pub fn cbox_rows(weights: &[f64], b: f64, cmaker: &mut dyn FnMut(&CBoxState) -> Vec<f64>) -> Result<Vec<BoxRow>> {
    let mut state = CBoxState::new(weights.to_vec(), b)?;
    let mut rows = Vec::new();
    while state.surviving().next().is_some() {
        let amounts = cmaker(&state);
        state.claim(&amounts)?;
        state.rounds += 1;
        let won = state.surviving().any(|i| state.is_won(i));
        if !won {
            if let Some(i) = cbreaker_strategy_s(&state) {
                state.destroy(i);
            }
        }
        for i in 0..state.len() {
            rows.push(BoxRow {
                round: state.rounds,
                index: i,
                w_m: state.claimed[i],
                w_b: 0.0,
                dang: None,
                active: !state.destroyed[i],
                free: state.claimed[i] < state.weights[i],
                destroyed: state.destroyed[i],
            });
        }
        if won {
            break;
        }
    }
    Ok(rows)
}

/// CSV with header `round,box,w_M,w_B,dang,active,free,destroyed`.
pub fn rows_to_csv(rows: &[BoxRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["round", "box", "w_M", "w_B", "dang", "active", "free", "destroyed"]).map_err(io)?;
    for r in rows {
        let dang = r.dang.map(|d| d.to_string()).unwrap_or_default();
        w.write_record([
            r.round.to_string(),
            r.index.to_string(),
            r.w_m.to_string(),
            r.w_b.to_string(),
            dang,
            r.active.to_string(),
            r.free.to_string(),
            r.destroyed.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Exhaustive check of strategy S against every CMaker playing on a grid of
/// `1/steps_per_unit` (integer budget `b`). Boxes are large enough never to
/// be filled. Returns the largest surviving claim seen, in grid units.
pub fn cbox_grid_max(n: usize, b: usize, steps_per_unit: usize) -> u64 {
    fn rec(claimed: &mut Vec<u64>, alive: &mut Vec<bool>, budget: u64, worst: &mut u64) {
        let live: Vec<usize> = (0..claimed.len()).filter(|&i| alive[i]).collect();
        if live.is_empty() {
            return;
        }
        let mut split = vec![0u64; live.len()];
        loop {
            for (k, &i) in live.iter().enumerate() {
                claimed[i] += split[k];
            }
            let peak = live.iter().map(|&i| claimed[i]).max().unwrap_or(0);
            *worst = (*worst).max(peak);
            // strategy S: lowest index among the maxima
            let target = live.iter().copied().find(|&i| claimed[i] == peak).unwrap();
            alive[target] = false;
            rec(claimed, alive, budget, worst);
            alive[target] = true;
            for (k, &i) in live.iter().enumerate() {
                claimed[i] -= split[k];
            }
            // next composition with sum <= budget
            let mut pos = 0;
            loop {
                if pos == split.len() {
                    return;
                }
                split[pos] += 1;
                if split.iter().sum::<u64>() <= budget {
                    break;
                }
                split[pos] = 0;
                pos += 1;
            }
        }
    }
    let mut claimed = vec![0u64; n];
    let mut alive = vec![true; n];
    let mut worst = 0;
    rec(&mut claimed, &mut alive, (b * steps_per_unit) as u64, &mut worst);
    worst
}

/// Text summary line for a trace, used by the command-line front end.
pub fn describe_minbox(trace: &MinBoxTrace) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "rounds={} max_active_danger={:.3} bound={:.3} violated={}",
        trace.rounds,
        trace.max_active_danger,
        trace.bound,
        trace.violation.is_some()
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Seed;

    #[test]
    fn strategy_s_examples() {
        let mut s = CBoxState::new(vec![10.0; 3], 1.0).unwrap();
        s.claimed = vec![0.5, 0.2, 0.9];
        assert_eq!(cbreaker_strategy_s(&s), Some(2));
        let mut s = CBoxState::new(vec![10.0; 2], 1.0).unwrap();
        s.claimed = vec![0.7, 0.7];
        assert_eq!(cbreaker_strategy_s(&s), Some(0));
        let s = CBoxState::new(vec![10.0; 4], 1.0).unwrap();
        assert_eq!(cbreaker_strategy_s(&s), Some(0));
    }

    #[test]
    fn cbox_single_box() {
        let t = simulate_cbox(vec![5.0], 1.0, &mut greedy_cmaker, None).unwrap();
        assert_eq!(t.rounds.len(), 1);
        assert!((t.max_observed() - 1.0).abs() < 1e-12);
        assert!((t.bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cbox_two_boxes_all_in_first() {
        let mut first = |s: &CBoxState| {
            let mut v = vec![0.0; s.len()];
            if !s.destroyed[0] {
                v[0] = s.bias;
            }
            v
        };
        let t = simulate_cbox(vec![10.0, 10.0], 2.0, &mut first, None).unwrap();
        assert_eq!(t.rounds[0].destroyed_box, Some(0));
        assert!((t.rounds[0].max_surviving_claimed - 2.0).abs() < 1e-12);
        assert!(2.0 <= t.bound);
    }

    #[test]
    fn cbox_budget_enforced() {
        let mut cheat = |s: &CBoxState| vec![s.bias + 0.1; s.len()];
        assert!(matches!(simulate_cbox(vec![5.0, 5.0], 1.0, &mut cheat, None), Err(Error::Budget(_))));
    }

    #[test]
    fn cbox_even_play_reaches_harmonic() {
        let t = simulate_cbox(vec![100.0; 5], 1.0, &mut even_cmaker, None).unwrap();
        let h5: f64 = (1..=5).map(|i| 1.0 / i as f64).sum();
        assert!((t.max_observed() - h5).abs() < 1e-9);
        assert!(t.max_observed() <= t.bound);
    }

    #[test]
    fn cbox_grid_small() {
        // n=3, b=1 in quarter steps: the bound is 2.0986 = 8.39 quarters
        let worst = cbox_grid_max(3, 1, 4);
        assert!((worst as f64) / 4.0 <= box_bound(1.0, 3));
        assert!(worst >= 6);
    }

    #[test]
    fn maker_move_examples() {
        let mut s = MinBoxState::new(3, 20, 0.3, 1).unwrap();
        s.w_b = vec![3, 5, 5];
        assert_eq!(minbox_maker_move(&s).unwrap(), 1);
        let mut s = MinBoxState::new(2, 4, 0.3, 1).unwrap();
        s.w_b = vec![0, 4];
        assert_eq!(minbox_maker_move(&s).unwrap(), 0);
        s.w_b = vec![4, 4];
        assert_eq!(minbox_maker_move(&s), Err(Error::NoFreeActiveBox));
    }

    #[test]
    fn minbox_single_box_hammered() {
        let mut rng = Seed(1).rng();
        let t = simulate_minbox(1, 20, 0.3, 1, MinBoxBreaker::Focused, None, &mut rng, true).unwrap();
        assert!(t.violation.is_none());
        assert!(t.max_active_danger <= 1.0);
    }

    #[test]
    fn minbox_random_small() {
        for i in 0..200 {
            let mut rng = Seed(3).split(i).rng();
            let t = simulate_minbox(10, 20, 0.3, 2, MinBoxBreaker::Random, None, &mut rng, false).unwrap();
            assert!(t.violation.is_none(), "{:?}", t.violation);
            assert!((t.bound - 6.605).abs() < 1e-3);
        }
    }

    #[test]
    fn csv_header() {
        let mut rng = Seed(1).rng();
        let t = simulate_minbox(2, 4, 0.5, 1, MinBoxBreaker::Random, Some(2), &mut rng, true).unwrap();
        let csv = rows_to_csv(&t.rows).unwrap();
        assert!(csv.starts_with("round,box,w_M,w_B,dang,active,free,destroyed\n"));
        assert_eq!(csv.lines().count(), 1 + t.rows.len());
    }
}
