//! Blocks, candidate sets and the edge predicates built on them.
//!
//! A `(B, x)`-structure is a copy of `S_k` whose sink is `x` and whose other
//! labels sit in their own blocks. Blocks are pairwise disjoint, so a
//! vertex determines its label and every block-respecting map is injective.
//! Existence questions therefore split along the tree:
//!
//! * `down[v]`: the sub-copy below `v`'s label can be completed from `v`;
//! * `up[v]`: some whole structure uses `v` (`down` plus a usable parent).
//!
//! An edge between a parent label and a child label lies on a structure iff
//! its parent end is `up` and its child end is `down`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, Seed, Vertex};
use crate::structure::{pow3, Label, StructureEmbedding, StructureSk};

/// `k = log_3(2/eps + 12) - 2`, which must be a positive integer.
pub fn eps_to_k(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} outside (0,1)")));
    }
    let raw = (2.0 / eps + 12.0).ln() / 3f64.ln() - 2.0;
    let k = raw.round();
    if (raw - k).abs() > 1e-9 || k < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "eps {eps} is not admissible: log_3(2/eps + 12) - 2 = {raw}"
        )));
    }
    Ok(k as usize)
}

/// Inverse of [`eps_to_k`]: `eps = 2 / (3^(k+2) - 12)`.
pub fn k_to_eps(k: usize) -> f64 {
    2.0 / (pow3(k + 2) as f64 - 12.0)
}

/// `n^(-2/3 + eps)`.
pub fn threshold_p(n: usize, eps: f64) -> f64 {
    (n as f64).powf(-2.0 / 3.0 + eps).min(1.0)
}

pub fn theory_block_divisor(k: usize) -> usize {
    pow3(k + 10)
}

/// Positive integer nearest to `x` (at least 1).
pub fn round_count(x: f64) -> usize {
    (x.round() as usize).max(1)
}

#[derive(Debug, Clone)]
pub struct BlockFamily {
    pub n: usize,
    pub k: usize,
    pub a: Vertex,
    pub v1: Vec<Vertex>,
    pub v2: Vec<Vertex>,
    /// `blocks[t-1][s]` for structure vertex `s` (the sink has no block).
    pub blocks: [Vec<Vec<Vertex>>; 2],
    pub residual: Vec<Vertex>,
    pub block_size: usize,
    pub block_divisor: usize,
    side: Vec<u8>,
    block_of: Vec<Option<(u8, u32)>>,
    structure: Arc<StructureSk>,
}

impl BlockFamily {
    pub fn structure(&self) -> &StructureSk {
        &self.structure
    }

    pub fn structure_arc(&self) -> Arc<StructureSk> {
        self.structure.clone()
    }

    /// 1 or 2 for vertices of `V_1`, `V_2`; 0 for `a`.
    pub fn side(&self, v: Vertex) -> usize {
        self.side[v] as usize
    }

    /// The side `t` whose blocks host structures ending in `x`.
    pub fn side_for_target(&self, x: Vertex) -> Option<usize> {
        match self.side[x] {
            1 => Some(2),
            2 => Some(1),
            _ => None,
        }
    }

    /// `(t, structure vertex)` of the block containing `v`.
    pub fn block_of(&self, v: Vertex) -> Option<(usize, Vertex)> {
        self.block_of[v].map(|(t, s)| (t as usize, s as usize))
    }

    pub fn block(&self, t: usize, s: Vertex) -> &[Vertex] {
        &self.blocks[t - 1][s]
    }

    pub fn in_residual(&self, v: Vertex) -> bool {
        self.side[v] != 0 && self.block_of[v].is_none()
    }

    /// Label of the block containing `v` on side `t`.
    pub fn label_on(&self, v: Vertex, t: usize) -> Option<Label> {
        match self.block_of(v) {
            Some((bt, s)) if bt == t => Some(self.structure.label(s)),
            _ => None,
        }
    }

    /// Structural audit: disjointness, sizes, sides.
    pub fn check(&self) -> Result<()> {
        let mut seen = vec![false; self.n];
        seen[self.a] = true;
        for t in 1..=2 {
            for (s, b) in self.blocks[t - 1].iter().enumerate() {
                if s == self.structure.sink() {
                    continue;
                }
                if b.len() != self.block_size {
                    return Err(Error::Invariant(format!("block ({t},{s}) has size {}", b.len())));
                }
                for &v in b {
                    if seen[v] || self.side(v) != t {
                        return Err(Error::Invariant(format!("vertex {v} misplaced")));
                    }
                    seen[v] = true;
                }
            }
        }
        for &v in &self.residual {
            if seen[v] {
                return Err(Error::Invariant(format!("residual vertex {v} reused")));
            }
            seen[v] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Invariant("vertices missing from the partition".into()));
        }
        Ok(())
    }
}

/// Shuffles the vertices with `seed`, takes the first as `a`, splits the
/// rest into two halves and cuts `2*3^k - 2` blocks of `floor(n /
/// block_divisor)` vertices from each half. Leftovers form `R`.
pub fn partition_blocks(n: usize, k: usize, block_divisor: usize, seed: Seed) -> Result<BlockFamily> {
    let structure = Arc::new(StructureSk::build(k)?);
    if block_divisor == 0 {
        return Err(Error::InvalidParameter("block divisor must be positive".into()));
    }
    let per_side = 2 * pow3(k) - 2;
    if 2 * per_side > block_divisor {
        return Err(Error::InvalidParameter(format!(
            "divisor {block_divisor} cannot fit {per_side} blocks per side for k = {k}; need at least {}",
            2 * per_side
        )));
    }
    let fits = |n: usize| {
        let bs = n / block_divisor;
        bs >= 1 && per_side * bs <= (n - 1) / 2
    };
    if n < 3 || !fits(n) {
        let mut m = n.max(3);
        while !fits(m) {
            m += 1;
        }
        return Err(Error::InvalidParameter(format!(
            "n = {n} too small for k = {k} with divisor {block_divisor}; minimal feasible n is {m}"
        )));
    }
    let block_size = n / block_divisor;
    let mut perm: Vec<Vertex> = (0..n).collect();
    perm.shuffle(&mut seed.rng());
    let a = perm[0];
    let half = (n - 1) / 2;
    let mut v1: Vec<Vertex> = perm[1..1 + half].to_vec();
    let mut v2: Vec<Vertex> = perm[1 + half..].to_vec();
    let mut side = vec![0u8; n];
    let mut block_of = vec![None; n];
    let mut blocks: [Vec<Vec<Vertex>>; 2] = [Vec::new(), Vec::new()];
    let mut residual = Vec::new();
    let sink = structure.sink();
    for (t, part) in [&v1, &v2].into_iter().enumerate() {
        let mut it = part.iter().copied();
        for s in 0..structure.vertex_count() {
            let mut b = Vec::new();
            if s != sink {
                for _ in 0..block_size {
                    let v = it.next().expect("sizes checked");
                    block_of[v] = Some((t as u8 + 1, s as u32));
                    b.push(v);
                }
                b.sort_unstable();
            }
            blocks[t].push(b);
        }
        residual.extend(it);
        for &v in part.iter() {
            side[v] = t as u8 + 1;
        }
    }
    residual.sort_unstable();
    v1.sort_unstable();
    v2.sort_unstable();
    let bf = BlockFamily {
        n,
        k,
        a,
        v1,
        v2,
        blocks,
        residual,
        block_size,
        block_divisor,
        side,
        block_of,
        structure,
    };
    bf.check()?;
    Ok(bf)
}

/// Per-target candidate data on one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateFamily {
    pub x: Vertex,
    pub t: usize,
    down: Vec<bool>,
    up: Vec<bool>,
    cand: Vec<bool>,
}

impl CandidateFamily {
    /// `C^x(s)` for a structure vertex `s` (`{x}` for the sink).
    pub fn set(&self, bf: &BlockFamily, s: Vertex) -> Vec<Vertex> {
        if s == bf.structure().sink() {
            return vec![self.x];
        }
        bf.block(self.t, s).iter().copied().filter(|&v| self.cand[v]).collect()
    }

    /// `C^x = C^x(s_{k,1})`.
    pub fn root_candidates(&self, bf: &BlockFamily) -> Vec<Vertex> {
        self.set(bf, bf.structure().root())
    }

    pub fn is_candidate(&self, v: Vertex) -> bool {
        self.cand[v]
    }

    pub fn completes_down(&self, v: Vertex) -> bool {
        self.down[v]
    }

    pub fn on_some_structure(&self, v: Vertex) -> bool {
        self.up[v]
    }
}

// `allowed(v)` filters block vertices (used to pin labels to one vertex).
fn down_sets(g: &Graph, bf: &BlockFamily, x: Vertex, t: usize, allowed: &dyn Fn(Vertex) -> bool) -> Vec<bool> {
    let s = bf.structure();
    let mut down = vec![false; bf.n];
    let sink = s.sink();
    for sid in (0..sink).rev() {
        let label = s.label(sid);
        for &v in bf.block(t, sid) {
            if !allowed(v) {
                continue;
            }
            down[v] = match label {
                Label::Secondary { level: 0, .. } => g.has_edge(v, x),
                Label::Secondary { level, index } => {
                    let child = s.vertex(Label::Main { level, index }).expect("label");
                    g.neighbour_vertices(v).any(|w| down[w] && bf.block_of(w) == Some((t, child)))
                }
                Label::Main { level, index } => {
                    let mut hit = [false; 3];
                    for w in g.neighbour_vertices(v) {
                        if !down[w] {
                            continue;
                        }
                        if let Some(Label::Secondary { level: wl, index: wi }) = bf.label_on(w, t) {
                            if wl + 1 == level && (3 * index - 2..=3 * index).contains(&wi) {
                                hit[wi + 2 - 3 * index] = true;
                            }
                        }
                    }
                    hit.iter().all(|&h| h)
                }
                Label::Sink => unreachable!(),
            };
        }
    }
    down
}

fn up_sets(g: &Graph, bf: &BlockFamily, t: usize, down: &[bool]) -> Vec<bool> {
    let s = bf.structure();
    let mut up = vec![false; bf.n];
    for sid in 0..s.sink() {
        let parent = s.parent(s.label(sid)).map(|l| s.vertex(l).expect("label"));
        for &v in bf.block(t, sid) {
            up[v] = down[v]
                && match parent {
                    None => true,
                    Some(p) => g.neighbour_vertices(v).any(|w| up[w] && bf.block_of(w) == Some((t, p))),
                };
        }
    }
    up
}

fn check_target(bf: &BlockFamily, x: Vertex, t: usize) -> Result<()> {
    if !(1..=2).contains(&t) || x >= bf.n {
        return Err(Error::InvalidParameter(format!("bad side {t} or vertex {x}")));
    }
    if bf.side(x) != 3 - t {
        return Err(Error::InvalidParameter(format!("target {x} must lie in V_{}", 3 - t)));
    }
    Ok(())
}

/// Candidate sets for target `x` on side `t` (`x` must lie in `V_{3-t}`).
///
/// Main labels keep every block vertex that has, for each of its three
/// children, a path through the child's secondary block into the child's
/// candidate set. Secondary labels keep the middle vertices of such paths.
pub fn compute_candidates(g: &Graph, bf: &BlockFamily, x: Vertex, t: usize) -> Result<CandidateFamily> {
    check_target(bf, x, t)?;
    let down = down_sets(g, bf, x, t, &|_| true);
    let up = up_sets(g, bf, t, &down);
    let s = bf.structure();
    let mut cand = vec![false; bf.n];
    for sid in 0..s.sink() {
        match s.label(sid) {
            Label::Main { .. } => {
                for &v in bf.block(t, sid) {
                    cand[v] = down[v];
                }
            }
            l @ Label::Secondary { .. } => {
                let p = s.vertex(s.parent(l).expect("secondary has a parent")).expect("label");
                for &v in bf.block(t, sid) {
                    cand[v] = down[v] && g.neighbour_vertices(v).any(|w| down[w] && bf.block_of(w) == Some((t, p)));
                }
            }
            Label::Sink => {}
        }
    }
    Ok(CandidateFamily { x, t, down, up, cand })
}

/// One level of the candidate recursion: vertices of `b` that, for every
/// `j`, have a path `(b, y_j, z_j)` with `y_j` in `bstar[j]` and `z_j` in
/// `m[j]`.
pub fn next_level_candidates(g: &Graph, m: [&[Vertex]; 3], bstar: [&[Vertex]; 3], b: &[Vertex]) -> Vec<Vertex> {
    let n = g.vertex_count();
    let mut hubs = Vec::with_capacity(3);
    for j in 0..3 {
        let mut in_m = vec![false; n];
        for &z in m[j] {
            in_m[z] = true;
        }
        let mut a = vec![false; n];
        for &y in bstar[j] {
            a[y] = g.neighbour_vertices(y).any(|z| in_m[z]);
        }
        hubs.push(a);
    }
    b.iter()
        .copied()
        .filter(|&v| hubs.iter().all(|a| g.neighbour_vertices(v).any(|y| a[y])))
        .collect()
}

/// Candidate families for every vertex outside `{a}`.
#[derive(Debug, Clone)]
pub struct CandidateCache {
    families: Vec<Option<CandidateFamily>>,
}

impl CandidateCache {
    pub fn build(g: &Graph, bf: &BlockFamily) -> Result<Self> {
        let families = (0..bf.n)
            .map(|x| match bf.side_for_target(x) {
                Some(t) => compute_candidates(g, bf, x, t).map(Some),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateCache { families })
    }

    pub fn get(&self, x: Vertex) -> Option<&CandidateFamily> {
        self.families[x].as_ref()
    }
}

// Labels of an edge's ends on side t as (parent end, child end), where the
// child end may be the sink x.
fn edge_roles(g: &Graph, bf: &BlockFamily, t: usize, e: EdgeId, x: Vertex) -> Option<(Vertex, Option<Vertex>)> {
    let (p, q) = g.edge(e);
    let s = bf.structure();
    for (a, b) in [(p, q), (q, p)] {
        if b == x {
            if let Some(Label::Secondary { level: 0, .. }) = bf.label_on(a, t) {
                return Some((a, None));
            }
            continue;
        }
        let (Some(la), Some(lb)) = (bf.label_on(a, t), bf.label_on(b, t)) else {
            continue;
        };
        if s.parent(lb) == Some(la) {
            return Some((a, Some(b)));
        }
    }
    None
}

/// Whether `e` lies on some `(B_t, x)`-structure, read off the candidate
/// family of `x`.
pub fn edge_sees(g: &Graph, bf: &BlockFamily, cf: &CandidateFamily, e: EdgeId) -> bool {
    match edge_roles(g, bf, cf.t, e, cf.x) {
        Some((parent, Some(child))) => cf.up[parent] && cf.down[child],
        Some((leaf, None)) => cf.up[leaf],
        None => false,
    }
}

/// Whether some `(B_t, x)`-structure contains both `v` and `e`. Computed by
/// pinning `v`'s label to `v` and recomputing from scratch.
pub fn edge_relevant(g: &Graph, bf: &BlockFamily, t: usize, e: EdgeId, v: Vertex, x: Vertex) -> Result<bool> {
    check_target(bf, x, t)?;
    if v == x {
        let cf = compute_candidates(g, bf, x, t)?;
        return Ok(edge_sees(g, bf, &cf, e));
    }
    let Some((vt, vs)) = bf.block_of(v) else {
        return Ok(false);
    };
    if vt != t {
        return Ok(false);
    }
    let allowed = |w: Vertex| bf.block_of(w) != Some((t, vs)) || w == v;
    let down = down_sets(g, bf, x, t, &allowed);
    let up = up_sets(g, bf, t, &down);
    let pinned = CandidateFamily { x, t, down, up, cand: Vec::new() };
    Ok(edge_sees(g, bf, &pinned, e))
}

/// Root vertices `r` such that some structure rooted at `r` contains `e`.
/// Only the labels on the path from `e` up to the root are recomputed.
pub fn relevant_roots(g: &Graph, bf: &BlockFamily, cf: &CandidateFamily, e: EdgeId) -> Vec<Vertex> {
    let t = cf.t;
    let s = bf.structure();
    let (parent_end, child_end) = match edge_roles(g, bf, t, e, cf.x) {
        Some(r) => r,
        None => return Vec::new(),
    };
    let ok = match child_end {
        Some(c) => cf.down[parent_end] && cf.down[c],
        None => cf.down[parent_end],
    };
    if !ok {
        return Vec::new();
    }
    let mut current: Vec<Vertex> = vec![parent_end];
    let mut label = bf.label_on(parent_end, t).expect("block vertex");
    let n = bf.n;
    let mut mark = vec![false; n];
    while let Some(up) = s.parent(label) {
        for &v in &current {
            mark[v] = true;
        }
        let sid = s.vertex(up).expect("label");
        let next: Vec<Vertex> = bf
            .block(t, sid)
            .iter()
            .copied()
            .filter(|&v| cf.down[v] && g.neighbour_vertices(v).any(|w| mark[w]))
            .collect();
        for &v in &current {
            mark[v] = false;
        }
        current = next;
        label = up;
        if current.is_empty() {
            break;
        }
    }
    current
}

/// Smallest `l` such that `e` touches a block of secondary level `l - 1`
/// on side `t`.
pub fn appears_between_levels(g: &Graph, bf: &BlockFamily, t: usize, e: EdgeId) -> Option<usize> {
    let (p, q) = g.edge(e);
    [p, q]
        .into_iter()
        .filter_map(|v| match bf.label_on(v, t) {
            Some(Label::Secondary { level, .. }) => Some(level + 1),
            _ => None,
        })
        .min()
}

/// `C^x[Z1, Z2]`: root candidates for which no edge of `Z1 ∪ Z2` is
/// relevant. `Z1` edges must appear below level `k-1`, `Z2` edges between
/// levels `k-1` and `k`.
pub fn candidates_excluding(
    g: &Graph,
    bf: &BlockFamily,
    cf: &CandidateFamily,
    z1: &[EdgeId],
    z2: &[EdgeId],
) -> Result<Vec<Vertex>> {
    let k = bf.k;
    for &e in z1 {
        match appears_between_levels(g, bf, cf.t, e) {
            Some(l) if l < k => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} in Z1 appears at {other:?}, not below level {}",
                    k - 1
                )))
            }
        }
    }
    for &e in z2 {
        if appears_between_levels(g, bf, cf.t, e) != Some(k) {
            return Err(Error::InvalidParameter(format!("edge {e} in Z2 does not appear between levels {} and {k}", k - 1)));
        }
    }
    Ok(candidates_excluding_unchecked(g, bf, cf, z1.iter().chain(z2)))
}

pub(crate) fn candidates_excluding_unchecked<'a>(
    g: &Graph,
    bf: &BlockFamily,
    cf: &CandidateFamily,
    edges: impl Iterator<Item = &'a EdgeId>,
) -> Vec<Vertex> {
    let mut killed = vec![false; bf.n];
    for &e in edges {
        for r in relevant_roots(g, bf, cf, e) {
            killed[r] = true;
        }
    }
    cf.root_candidates(bf).into_iter().filter(|&v| !killed[v]).collect()
}

/// A concrete structure from root candidate `v` down to `x`, choosing the
/// lowest-index qualifying neighbour at every step.
pub fn extract_structure(g: &Graph, bf: &BlockFamily, cf: &CandidateFamily, v: Vertex) -> Result<StructureEmbedding> {
    extract_structure_avoiding(g, bf, cf, v, &|_| true)
}

/// Like [`extract_structure`] but only through edges accepted by `usable`
/// (used to stay clear of Breaker's edges).
pub fn extract_structure_avoiding(
    g: &Graph,
    bf: &BlockFamily,
    cf: &CandidateFamily,
    v: Vertex,
    usable: &dyn Fn(EdgeId) -> bool,
) -> Result<StructureEmbedding> {
    let s = bf.structure();
    let t = cf.t;
    if bf.block_of(v) != Some((t, s.root())) || !cf.cand[v] {
        return Err(Error::InvalidParameter(format!("{v} is not a root candidate for {}", cf.x)));
    }
    let mut map = vec![usize::MAX; s.vertex_count()];
    map[s.root()] = v;
    map[s.sink()] = cf.x;
    // ids run top-down, so every parent is placed before its children
    for sid in 1..s.sink() {
        let label = s.label(sid);
        let parent = map[s.vertex(s.parent(label).expect("non-root")).expect("label")];
        let need_sink = matches!(label, Label::Secondary { level: 0, .. });
        let pick = g.neighbours(parent).iter().find(|&&(w, e)| {
            bf.block_of(w) == Some((t, sid))
                && cf.down[w]
                && usable(e)
                && (!need_sink || g.edge_id(w, cf.x).is_some_and(usable))
        });
        match pick {
            Some(&(w, _)) => map[sid] = w,
            None => {
                return Err(Error::Invariant(format!(
                    "descent from {v} to {} stuck at {label:?} below {parent}",
                    cf.x
                )))
            }
        }
    }
    Ok(StructureEmbedding { map })
}

/// Every block-respecting copy of `S_k` ending in `x`, by plain
/// backtracking. Exponential; meant as a reference for tiny instances.
pub fn brute_force_structures(g: &Graph, bf: &BlockFamily, t: usize, x: Vertex) -> Vec<StructureEmbedding> {
    let s = bf.structure();
    let mut out = Vec::new();
    let mut map = vec![usize::MAX; s.vertex_count()];
    map[s.sink()] = x;
    fn rec(g: &Graph, bf: &BlockFamily, s: &StructureSk, t: usize, sid: usize, map: &mut Vec<Vertex>, out: &mut Vec<StructureEmbedding>) {
        if sid == s.sink() {
            out.push(StructureEmbedding { map: map.clone() });
            return;
        }
        let label = s.label(sid);
        for &v in bf.block(t, sid) {
            if let Some(pl) = s.parent(label) {
                if !g.has_edge(v, map[s.vertex(pl).unwrap()]) {
                    continue;
                }
            }
            if matches!(label, Label::Secondary { level: 0, .. }) && !g.has_edge(v, map[s.sink()]) {
                continue;
            }
            map[sid] = v;
            rec(g, bf, s, t, sid + 1, map, out);
        }
        map[sid] = usize::MAX;
    }
    rec(g, bf, s, t, 0, &mut map, &mut out);
    out
}

/// Host edges of an embedded structure.
pub fn embedding_edges(g: &Graph, s: &StructureSk, emb: &StructureEmbedding) -> Vec<EdgeId> {
    s.graph()
        .edges()
        .iter()
        .map(|&(u, v)| g.edge_id(emb.host(u), emb.host(v)).expect("embedded edge"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyEntry {
    pub property: String,
    pub bound_formula: String,
    pub bound_value: f64,
    pub measured: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub block_size: usize,
    pub block_divisor: usize,
    pub sampled_targets: usize,
    /// Edges with an end in `V_{3-t}` (they can only see that end).
    pub exceptional_edges: usize,
    pub entries: Vec<PropertyEntry>,
}

impl PropertyReport {
    pub fn entry(&self, name: &str) -> Option<&PropertyEntry> {
        self.entries.iter().find(|e| e.property == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyOptions {
    /// Targets examined for (C); `None` means all.
    pub target_sample: Option<usize>,
    pub r_samples: usize,
    pub seed: Seed,
}

impl Default for PropertyOptions {
    fn default() -> Self {
        PropertyOptions { target_sample: None, r_samples: 100, seed: Seed(0) }
    }
}

/// Evaluates (S), (C1)-(C3), (E1), (E2) and (R) on a concrete instance.
pub fn check_properties(g: &Graph, bf: &BlockFamily, eps: f64, opts: &PropertyOptions) -> Result<PropertyReport> {
    let n = bf.n;
    let nf = n as f64;
    let ln = nf.ln();
    let k = bf.k;
    let s = bf.structure();
    let mut rng: ChaCha8Rng = opts.seed.rng();
    let mut entries = Vec::new();
    let mut push = |property: &str, formula: &str, bound: f64, measured: f64, pass: bool| {
        entries.push(PropertyEntry {
            property: property.into(),
            bound_formula: formula.into(),
            bound_value: bound,
            measured,
            pass,
        })
    };

    // (S)
    let r = bf.residual.len() as f64;
    push("S.residual", "|R| >= n/2", nf / 2.0, r, r >= nf / 2.0);
    let sizes_ok = bf.check().is_ok();
    push("S.block_size", "|B_t(s)| = n/divisor", (nf / bf.block_divisor as f64).floor(), bf.block_size as f64, sizes_ok);
    let in_r: Vec<bool> = (0..n).map(|v| bf.in_residual(v)).collect();
    let nar = g.neighbour_vertices(bf.a).filter(|&w| in_r[w]).count() as f64;
    let nar_bound = nf.powf(1.0 / 3.0 + eps / 2.0);
    push("S.star", "|N(a,R)| >= n^(1/3+eps/2)", nar_bound, nar, nar >= nar_bound);

    // (C) on sampled targets
    let mut targets: Vec<Vertex> = (0..n).filter(|&x| bf.side_for_target(x).is_some()).collect();
    if let Some(m) = opts.target_sample {
        targets.shuffle(&mut rng);
        targets.truncate(m);
        targets.sort_unstable();
    }
    let families: Vec<CandidateFamily> = targets
        .iter()
        .map(|&x| compute_candidates(g, bf, x, bf.side_for_target(x).unwrap()))
        .collect::<Result<_>>()?;
    for level in 1..=k {
        let centre = nf.powf((pow3(level + 1) - 3) as f64 * eps);
        let spread = ln.powf(pow3(3 * level) as f64);
        let (lo, hi) = (centre / spread, centre * spread);
        let mut worst_lo = f64::INFINITY;
        let mut worst_hi: f64 = 0.0;
        for cf in &families {
            for sid in s.main_level(level) {
                let size = cf.set(bf, sid).len() as f64;
                worst_lo = worst_lo.min(size);
                worst_hi = worst_hi.max(size);
            }
        }
        if families.is_empty() {
            worst_lo = 0.0;
        }
        push(
            &format!("C1.level{level}.lower"),
            &format!("|C^x(s)| >= n^({}eps) ln^-{}(n)", pow3(level + 1) - 3, pow3(3 * level)),
            lo,
            worst_lo,
            worst_lo >= lo,
        );
        push(
            &format!("C1.level{level}.upper"),
            &format!("|C^x(s)| <= n^({}eps) ln^{}(n)", pow3(level + 1) - 3, pow3(3 * level)),
            hi,
            worst_hi,
            worst_hi <= hi,
        );
    }
    let (mut c2_bad, mut c3_bad) = (0usize, 0usize);
    for cf in &families {
        let (b2, b3) = structural_violations(g, bf, cf);
        c2_bad += b2;
        c3_bad += b3;
    }
    push("C2", "every main candidate has a neighbour in each child secondary set", 0.0, c2_bad as f64, c2_bad == 0);
    push("C3", "every secondary candidate has a neighbour in its child set", 0.0, c3_bad as f64, c3_bad == 0);

    // (E): how many targets each edge sees
    let all_families: Vec<Option<CandidateFamily>> = if opts.target_sample.is_none() {
        let mut v = vec![None; n];
        for cf in families.iter() {
            v[cf.x] = Some(cf.clone());
        }
        v
    } else {
        CandidateCache::build(g, bf)?.families
    };
    let mut exceptional = 0usize;
    let (mut e1_max, mut e2_max) = (0usize, 0usize);
    for t in 1..=2 {
        let side_targets: Vec<&CandidateFamily> = all_families.iter().flatten().filter(|cf| cf.t == t).collect();
        for e in 0..g.edge_count() {
            let Some(level) = appears_between_levels(g, bf, t, e) else { continue };
            let (p, q) = g.edge(e);
            if bf.side(p) == 3 - t || bf.side(q) == 3 - t {
                exceptional += 1;
            }
            let seen = side_targets.iter().filter(|cf| edge_sees(g, bf, cf, e)).count();
            if level < k {
                e1_max = e1_max.max(seen);
            } else {
                e2_max = e2_max.max(seen);
            }
        }
    }
    let e1_bound = ln * ln;
    let e2_bound = nf.powf(1.0 / 3.0 + 0.1 * eps);
    push("E1", "edges below level k-1 see <= ln^2(n) targets", e1_bound, e1_max as f64, e1_max as f64 <= e1_bound);
    push("E2", "edges between levels k-1 and k see <= n^(1/3+0.1eps) targets", e2_bound, e2_max as f64, e2_max as f64 <= e2_bound);

    // (R), sampled
    let a_size = round_count(nf.powf(1.0 / 3.0));
    let z1_size = round_count(ln.powi(4));
    let z2_size = round_count(nf.powf(1.0 / 3.0 + eps / 2.0));
    let r_bound = nf.powf(1.0 / 3.0 + 1.5 * eps);
    let star: Vec<Vertex> = g.neighbour_vertices(bf.a).filter(|&w| in_r[w]).collect();
    let mut r_min = f64::INFINITY;
    let mut r_tries = 0;
    if !families.is_empty() {
        let mut low = [Vec::new(), Vec::new()];
        let mut top = [Vec::new(), Vec::new()];
        for t in 1..=2 {
            for e in 0..g.edge_count() {
                match appears_between_levels(g, bf, t, e) {
                    Some(l) if l < k => low[t - 1].push(e),
                    Some(_) => top[t - 1].push(e),
                    None => {}
                }
            }
        }
        for _ in 0..opts.r_samples {
            let cf = families.choose(&mut rng).expect("nonempty");
            let a_set: Vec<Vertex> = star.choose_multiple(&mut rng, a_size.min(star.len())).copied().collect();
            let z1: Vec<EdgeId> = low[cf.t - 1].choose_multiple(&mut rng, z1_size.min(low[cf.t - 1].len())).copied().collect();
            let z2: Vec<EdgeId> = top[cf.t - 1].choose_multiple(&mut rng, z2_size.min(top[cf.t - 1].len())).copied().collect();
            let alive = candidates_excluding(g, bf, cf, &z1, &z2)?;
            let measured = g.edges_between(&a_set, &alive) as f64;
            r_min = r_min.min(measured);
            r_tries += 1;
        }
    }
    if r_tries == 0 {
        r_min = 0.0;
    }
    push(
        "R",
        &format!("e(A, C^x[Z1,Z2]) >= n^(1/3+1.5eps) with |A|={a_size}, |Z1|={z1_size}, |Z2|={z2_size}"),
        r_bound,
        r_min,
        r_min >= r_bound,
    );

    Ok(PropertyReport {
        n,
        k,
        eps,
        block_size: bf.block_size,
        block_divisor: bf.block_divisor,
        sampled_targets: families.len(),
        exceptional_edges: exceptional,
        entries,
    })
}

/// Counts of candidate vertices breaking (C2) and (C3).
pub fn structural_violations(g: &Graph, bf: &BlockFamily, cf: &CandidateFamily) -> (usize, usize) {
    let s = bf.structure();
    let t = cf.t;
    let (mut c2, mut c3) = (0, 0);
    for sid in 0..s.sink() {
        match s.label(sid) {
            Label::Main { level, index } => {
                for v in cf.set(bf, sid) {
                    let ok = s.branches(level, index).iter().all(|&(sec, _)| {
                        let ss = s.vertex(sec).unwrap();
                        g.neighbour_vertices(v).any(|w| cf.cand[w] && bf.block_of(w) == Some((t, ss)))
                    });
                    if !ok {
                        c2 += 1;
                    }
                }
            }
            Label::Secondary { level, index } => {
                for v in cf.set(bf, sid) {
                    let ok = if level == 0 {
                        g.has_edge(v, cf.x)
                    } else {
                        let child = s.vertex(Label::Main { level, index }).unwrap();
                        g.neighbour_vertices(v).any(|w| cf.cand[w] && bf.block_of(w) == Some((t, child)))
                    };
                    if !ok {
                        c3 += 1;
                    }
                }
            }
            Label::Sink => {}
        }
    }
    (c2, c3)
}

/// `|N(A) ∩ B|` inside `[ln^-2(n) p|A||B|, ln^2(n) p|A||B|]`.
pub fn check_neighbourhood_concentration(g: &Graph, a: &[Vertex], b: &[Vertex], p: f64) -> bool {
    let ln2 = (g.vertex_count() as f64).ln().powi(2);
    let centre = p * a.len() as f64 * b.len() as f64;
    let measured = neighbourhood_in(g, a, b) as f64;
    measured >= centre / ln2 && measured <= centre * ln2
}

/// `|N(A) ∩ B|`.
pub fn neighbourhood_in(g: &Graph, a: &[Vertex], b: &[Vertex]) -> usize {
    let mut in_a = vec![false; g.vertex_count()];
    for &v in a {
        in_a[v] = true;
    }
    b.iter().filter(|&&v| g.neighbour_vertices(v).any(|w| in_a[w])).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_k_examples() {
        assert_eq!(eps_to_k(2.0 / 15.0).unwrap(), 1);
        assert_eq!(eps_to_k(2.0 / 69.0).unwrap(), 2);
        assert!(eps_to_k(0.5).is_err());
        assert!(eps_to_k(1.5).is_err());
        for k in 1..5 {
            assert_eq!(eps_to_k(k_to_eps(k)).unwrap(), k);
        }
    }

    #[test]
    fn partition_sizes() {
        let bf = partition_blocks(9, 1, 9, Seed(1)).unwrap();
        assert_eq!(bf.block_size, 1);
        assert_eq!(bf.residual.len(), 0);
        let err = partition_blocks(8, 1, 9, Seed(1)).unwrap_err();
        assert!(err.to_string().contains("minimal feasible n is 9"), "{err}");
        assert!(partition_blocks(1000, 2, 22, Seed(1)).is_err());
        let bf = partition_blocks(300, 1, 27, Seed(4)).unwrap();
        assert_eq!(bf.block_size, 11);
        assert_eq!(bf.residual.len(), 299 - 88);
        let again = partition_blocks(300, 1, 27, Seed(4)).unwrap();
        assert_eq!(bf.blocks, again.blocks);
        assert_eq!(bf.a, again.a);
    }

    #[test]
    fn theory_divisor_leaves_half() {
        let k = 1;
        let n = theory_block_divisor(k) * 2;
        let bf = partition_blocks(n, k, theory_block_divisor(k), Seed(2)).unwrap();
        assert!(bf.residual.len() as f64 >= n as f64 / 2.0);
    }

    // Blocks of size one on each side, with the single copy of S_1 planted
    // on side 1 ending in a vertex of V_2.
    pub(crate) fn unique_copy() -> (Graph, BlockFamily, Vertex) {
        let bf = partition_blocks(9, 1, 9, Seed(11)).unwrap();
        let s = bf.structure();
        let x = bf.v2[0];
        let at = |sid| bf.block(1, sid)[0];
        let mut edges = Vec::new();
        for (u, v) in s.graph().edges().iter().copied() {
            let hu = if u == s.sink() { x } else { at(u) };
            let hv = if v == s.sink() { x } else { at(v) };
            edges.push((hu, hv));
        }
        (Graph::from_edges(9, edges).unwrap(), bf, x)
    }

    #[test]
    fn unique_copy_candidates() {
        let (g, bf, x) = unique_copy();
        let cf = compute_candidates(&g, &bf, x, 1).unwrap();
        let s = bf.structure();
        assert_eq!(cf.root_candidates(&bf), vec![bf.block(1, s.root())[0]]);
        for sid in s.secondary_level(0) {
            assert_eq!(cf.set(&bf, sid).len(), 1);
        }
        for e in 0..g.edge_count() {
            assert!(edge_sees(&g, &bf, &cf, e));
            assert_eq!(appears_between_levels(&g, &bf, 1, e), Some(1));
        }
        let emb = extract_structure(&g, &bf, &cf, cf.root_candidates(&bf)[0]).unwrap();
        emb.validate(s, &g).unwrap();
        assert_eq!(brute_force_structures(&g, &bf, 1, x), vec![emb]);
        // killing any copy edge empties C^x
        assert!(candidates_excluding(&g, &bf, &cf, &[], &[0]).unwrap().is_empty());
        assert_eq!(candidates_excluding(&g, &bf, &cf, &[], &[]).unwrap(), cf.root_candidates(&bf));
        // structures never end in the wrong side
        assert!(compute_candidates(&g, &bf, x, 2).is_err());
    }

    #[test]
    fn isolated_target_kills_everything() {
        let (g, bf, x) = unique_copy();
        let edges: Vec<_> = g.edges().iter().copied().filter(|&(u, v)| u != x && v != x).collect();
        let h = Graph::from_edges(9, edges).unwrap();
        let cf = compute_candidates(&h, &bf, x, 1).unwrap();
        let s = bf.structure();
        for sid in 0..s.sink() {
            assert!(cf.set(&bf, sid).is_empty());
        }
    }

    #[test]
    fn appearance_levels() {
        let bf = partition_blocks(200, 2, 40, Seed(5)).unwrap();
        let s = bf.structure();
        let s00 = bf.block(1, s.vertex(Label::Secondary { level: 0, index: 1 }).unwrap())[0];
        let s11 = bf.block(1, s.vertex(Label::Secondary { level: 1, index: 1 }).unwrap())[0];
        let m1 = bf.block(1, s.vertex(Label::Main { level: 1, index: 1 }).unwrap())[0];
        let m2 = bf.block(1, s.root())[0];
        let g = Graph::from_edges(200, [(s00, s11), (m1, m2), (m1, s00)]).unwrap();
        let e = |u, v| g.edge_id(u, v).unwrap();
        assert_eq!(appears_between_levels(&g, &bf, 1, e(s00, s11)), Some(1));
        assert_eq!(appears_between_levels(&g, &bf, 1, e(m1, m2)), None);
        assert_eq!(appears_between_levels(&g, &bf, 1, e(m1, s00)), Some(1));
        assert_eq!(appears_between_levels(&g, &bf, 2, e(m1, s00)), None);
    }

    #[test]
    fn concentration_examples() {
        // complete bipartite between A (size 3) and B (size 10), p = 1
        let a: Vec<Vertex> = (0..3).collect();
        let b: Vec<Vertex> = (3..13).collect();
        let edges: Vec<_> = a.iter().flat_map(|&u| b.iter().map(move |&v| (u, v))).collect();
        let g = Graph::from_edges(13, edges).unwrap();
        // ln^2(13) = 6.58 >= |A|
        assert!(check_neighbourhood_concentration(&g, &a, &b, 1.0));
        let a7: Vec<Vertex> = (0..7).collect();
        let b7: Vec<Vertex> = (7..13).collect();
        let edges: Vec<_> = a7.iter().flat_map(|&u| b7.iter().map(move |&v| (u, v))).collect();
        let g = Graph::from_edges(13, edges).unwrap();
        assert!(!check_neighbourhood_concentration(&g, &a7, &b7, 1.0));
        let empty = Graph::empty(13);
        assert!(!check_neighbourhood_concentration(&empty, &a, &b, 0.5));
    }

    fn dense_instance(k: usize, n: usize, divisor: usize, p: f64, seed: u64) -> (Graph, BlockFamily) {
        let bf = partition_blocks(n, k, divisor, Seed(seed)).unwrap();
        let g = crate::graph::sample_gnp(n, p, Seed(seed).split(9)).unwrap();
        (g, bf)
    }

    #[test]
    fn agrees_with_enumeration() {
        for (k, n, divisor, p) in [(1, 36, 12, 0.45), (1, 27, 9, 0.6), (2, 70, 35, 0.7)] {
            let (mut found, mut missing) = (0, 0);
            for seed in 0..6 {
                let (g, bf) = dense_instance(k, n, divisor, p, seed);
                let s = bf.structure();
                for x in 0..n {
                    let Some(t) = bf.side_for_target(x) else { continue };
                    let cf = compute_candidates(&g, &bf, x, t).unwrap();
                    let all = brute_force_structures(&g, &bf, t, x);
                    if all.is_empty() {
                        missing += 1;
                    } else {
                        found += 1;
                    }
                    let mut roots: Vec<Vertex> = all.iter().map(|e| e.host(s.root())).collect();
                    roots.sort_unstable();
                    roots.dedup();
                    assert_eq!(cf.root_candidates(&bf), roots, "k={k} seed={seed} x={x}");
                    let mut used = vec![false; n];
                    let mut edge_roots = vec![Vec::new(); g.edge_count()];
                    for emb in &all {
                        for v in 0..s.sink() {
                            used[emb.host(v)] = true;
                        }
                        for e in embedding_edges(&g, s, emb) {
                            edge_roots[e].push(emb.host(s.root()));
                        }
                    }
                    for v in 0..n {
                        if bf.block_of(v).is_some_and(|(bt, _)| bt == t) {
                            assert_eq!(cf.on_some_structure(v), used[v]);
                        }
                    }
                    for e in 0..g.edge_count() {
                        let r = &mut edge_roots[e];
                        r.sort_unstable();
                        r.dedup();
                        assert_eq!(edge_sees(&g, &bf, &cf, e), !r.is_empty());
                        assert_eq!(&relevant_roots(&g, &bf, &cf, e), r);
                    }
                    assert_eq!(structural_violations(&g, &bf, &cf), (0, 0));
                    for r in cf.root_candidates(&bf) {
                        extract_structure(&g, &bf, &cf, r).unwrap().validate(s, &g).unwrap();
                    }
                }
            }
            assert!(found > 0 && missing > 0, "k={k}: {found} targets with structures, {missing} without");
        }
    }

    #[test]
    fn relevance_agrees_with_enumeration() {
        let (g, bf) = dense_instance(1, 27, 9, 0.6, 3);
        let s = bf.structure();
        for x in bf.v2.iter().copied().take(4) {
            let all = brute_force_structures(&g, &bf, 1, x);
            for e in 0..g.edge_count() {
                for v in (0..27).filter(|&v| v == x || bf.block_of(v).is_some_and(|(t, _)| t == 1)) {
                    let expect = all.iter().any(|emb| {
                        (emb.map.contains(&v)) && embedding_edges(&g, s, emb).contains(&e)
                    });
                    assert_eq!(edge_relevant(&g, &bf, 1, e, v, x).unwrap(), expect, "e={e} v={v} x={x}");
                }
            }
        }
    }

    #[test]
    fn path_candidates_match_double_loop() {
        for seed in 0..20 {
            let n = 40;
            let g = crate::graph::sample_gnp(n, 0.2, Seed(seed)).unwrap();
            let mut perm: Vec<Vertex> = (0..n).collect();
            perm.shuffle(&mut Seed(seed + 100).rng());
            let chunk: Vec<&[Vertex]> = perm.chunks(5).collect();
            let m = [chunk[0], chunk[1], chunk[2]];
            let bstar = [chunk[3], chunk[4], chunk[5]];
            let b = chunk[6];
            let fast = next_level_candidates(&g, m, bstar, b);
            let slow: Vec<Vertex> = b
                .iter()
                .copied()
                .filter(|&v| {
                    (0..3).all(|j| {
                        bstar[j].iter().any(|&y| g.has_edge(v, y) && m[j].iter().any(|&z| g.has_edge(y, z)))
                    })
                })
                .collect();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn exclusion_validates_classes() {
        let (g, bf) = dense_instance(2, 70, 35, 0.7, 1);
        let x = bf.v2[0];
        let cf = compute_candidates(&g, &bf, x, 1).unwrap();
        let low = (0..g.edge_count()).find(|&e| appears_between_levels(&g, &bf, 1, e) == Some(1)).unwrap();
        let top = (0..g.edge_count()).find(|&e| appears_between_levels(&g, &bf, 1, e) == Some(2)).unwrap();
        assert!(candidates_excluding(&g, &bf, &cf, &[low], &[top]).is_ok());
        assert!(candidates_excluding(&g, &bf, &cf, &[top], &[]).is_err());
        assert!(candidates_excluding(&g, &bf, &cf, &[], &[low]).is_err());
    }

    #[test]
    fn property_report_shape() {
        let n = 300;
        let eps = 2.0 / 15.0;
        let g = crate::graph::sample_gnp(n, threshold_p(n, eps), Seed(8)).unwrap();
        let bf = partition_blocks(n, 1, 27, Seed(8)).unwrap();
        let report = check_properties(&g, &bf, eps, &PropertyOptions { r_samples: 10, ..Default::default() }).unwrap();
        for name in ["S.residual", "S.block_size", "S.star", "C2", "C3", "E1", "E2", "R"] {
            assert!(report.entry(name).is_some(), "{name}");
        }
        assert!(report.entry("C2").unwrap().pass && report.entry("C3").unwrap().pass);
        assert!(report.entry("S.residual").unwrap().pass);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("bound_formula"));
    }
}
