//! Undirected simple graphs: the board every game is played on.
//!
//! Vertices are `0..n`. Edges are stored canonically as `(min, max)` and
//! numbered by their position in the sorted edge list, so an [`EdgeId`] is a
//! stable index usable for ownership tables.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type EdgeId = usize;

/// Default vertex limit for the exact Hamiltonicity check.
pub const DEFAULT_HAMILTON_LIMIT: usize = 22;
/// Largest pattern accepted by [`contains_subgraph`].
pub const SUBGRAPH_PATTERN_LIMIT: usize = 8;

/// A 64-bit seed. Same seed and parameters always give the same output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Derives the seed of the `index`-th run from a master seed.
    ///
    /// `split(m, i) = splitmix64(m ^ splitmix64(i + 1))`, so external tools
    /// can replay a single run of a batch.
    pub fn split(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    // sorted by neighbour
    adj: Vec<Vec<(Vertex, EdgeId)>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an arbitrary edge list. Rejects self-loops,
    /// out-of-range endpoints and parallel edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("parallel edge ({},{})", w[0].0, w[0].1)));
        }
        Ok(Self::from_sorted_unique(n, list))
    }

    fn from_sorted_unique(n: usize, edges: Vec<(Vertex, Vertex)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = Graph { n, edges, adj };
        debug_assert!(g.check_invariants().is_ok());
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::from_sorted_unique(n, edges)
    }

    pub fn path(n: usize) -> Self {
        Self::from_sorted_unique(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n >= 3 {
            edges.push((0, n - 1));
        }
        edges.sort_unstable();
        Self::from_sorted_unique(n, edges)
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_sorted_unique(leaves + 1, (1..=leaves).map(|v| (0, v)).collect())
    }

    /// `n` disjoint edges `(2i, 2i+1)`; handy as a board whose elements
    /// carry no graph structure.
    pub fn matching(n_edges: usize) -> Self {
        Self::from_sorted_unique(2 * n_edges, (0..n_edges).map(|i| (2 * i, 2 * i + 1)).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (Vertex, Vertex) {
        self.edges[id]
    }

    /// Neighbours of `v` with the connecting edge id, sorted by neighbour.
    pub fn neighbours(&self, v: Vertex) -> &[(Vertex, EdgeId)] {
        &self.adj[v]
    }

    pub fn neighbour_vertices(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[v].iter().map(|&(w, _)| w)
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        if u >= self.n || v >= self.n {
            return None;
        }
        let list = &self.adj[u];
        list.binary_search_by_key(&v, |&(w, _)| w).ok().map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.edge_id(u, v).is_some()
    }

    /// The endpoint of `e` that is not `v`.
    pub fn other_end(&self, e: EdgeId, v: Vertex) -> Vertex {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Number of edges between two vertex sets (`e_G(A, B)`), each edge
    /// counted once.
    pub fn edges_between(&self, a: &[Vertex], b: &[Vertex]) -> usize {
        let mut in_b = vec![false; self.n];
        for &v in b {
            in_b[v] = true;
        }
        let mut in_a = vec![false; self.n];
        for &v in a {
            in_a[v] = true;
        }
        self.edges
            .iter()
            .filter(|&&(u, v)| (in_a[u] && in_b[v]) || (in_a[v] && in_b[u]))
            .count()
    }

    /// Structural audit: symmetric adjacency, no loops, no parallel edges,
    /// adjacency consistent with the edge list.
    pub fn check_invariants(&self) -> Result<()> {
        let mut degree_sum = 0;
        for (u, list) in self.adj.iter().enumerate() {
            degree_sum += list.len();
            for w in list.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidGraph(format!("parallel edge at {u}")));
                }
            }
            for &(v, id) in list {
                if v == u {
                    return Err(Error::InvalidGraph(format!("self-loop at {u}")));
                }
                if self.edges[id] != (u.min(v), u.max(v)) {
                    return Err(Error::InvalidGraph(format!("edge id {id} inconsistent")));
                }
                if self.edge_id(v, u) != Some(id) {
                    return Err(Error::InvalidGraph(format!("asymmetric adjacency {u}-{v}")));
                }
            }
        }
        if degree_sum != 2 * self.edges.len() {
            return Err(Error::InvalidGraph("degree sum mismatch".into()));
        }
        Ok(())
    }

    /// Writes the edge-list text format: `n m` followed by `u v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(12 * (self.edges.len() + 1));
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let mut it = header.split_whitespace();
        let n = parse_usize(it.next(), "vertex count")?;
        let m = parse_usize(it.next(), "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let mut it = line.split_whitespace();
            let u = parse_usize(it.next(), "edge endpoint")?;
            let v = parse_usize(it.next(), "edge endpoint")?;
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("header says {m} edges, found {}", edges.len())));
        }
        Self::from_edges(n, edges)
    }
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

/// Samples `G(n, p)`. Every pair is an edge independently with probability
/// `p`; the pairs are visited in lexicographic order with geometric skips so
/// sparse graphs cost `O(n + m)`.
pub fn sample_gnp(n: usize, p: f64, seed: Seed) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside [0,1]")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let total = n * (n - 1) / 2;
    let mut edges = Vec::new();
    if p == 0.0 || total == 0 {
        return Ok(Graph::empty(n));
    }
    if p == 1.0 {
        return Ok(Graph::complete(n));
    }
    let log_q = (1.0 - p).ln();
    // linear pair index -> (u, v) walking rows
    let mut u = 0usize;
    let mut row_start = 0usize; // linear index of (u, u+1)
    let mut idx: usize = 0;
    loop {
        let r: f64 = rng.gen::<f64>();
        let skip = ((1.0 - r).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (total - idx) as f64 {
            break;
        }
        idx += skip as usize;
        if idx >= total {
            break;
        }
        while idx >= row_start + (n - 1 - u) {
            row_start += n - 1 - u;
            u += 1;
        }
        let v = u + 1 + (idx - row_start);
        edges.push((u, v));
        idx += 1;
        if idx >= total {
            break;
        }
    }
    Ok(Graph::from_sorted_unique(n, edges))
}

/// `K_{n-2,2}` plus the edge inside the two-element class. The two-element
/// class is `{0, 1}`.
pub fn build_hn(n: usize) -> Result<Graph> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("H_n needs n >= 4, got {n}")));
    }
    let mut edges = vec![(0, 1)];
    for v in 2..n {
        edges.push((0, v));
        edges.push((1, v));
    }
    Graph::from_edges(n, edges)
}

/// Connectivity by BFS. With `restricted_to`, connectivity of the induced
/// subgraph on that vertex set (an empty set counts as connected).
pub fn is_connected(g: &Graph, restricted_to: Option<&[Vertex]>) -> bool {
    let n = g.vertex_count();
    let mut allowed = vec![restricted_to.is_none(); n];
    let start = match restricted_to {
        Some(set) => {
            for &v in set {
                allowed[v] = true;
            }
            match set.first() {
                Some(&v) => v,
                None => return true,
            }
        }
        None => {
            if n == 0 {
                return true;
            }
            0
        }
    };
    let target = allowed.iter().filter(|&&a| a).count();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut count = 1;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for w in g.neighbour_vertices(u) {
            if allowed[w] && !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == target
}

/// Exact Hamiltonicity by dynamic programming over vertex subsets
/// (`O(2^n n^2)`), refusing graphs above `limit` vertices.
pub fn has_hamilton_cycle_with_limit(g: &Graph, limit: usize) -> Result<bool> {
    let n = g.vertex_count();
    if n > limit || n > 30 {
        return Err(Error::TooLarge(format!("exact Hamiltonicity limited to {limit} vertices, got {n}")));
    }
    if n < 3 {
        return Ok(false);
    }
    if (0..n).any(|v| g.degree(v) < 2) {
        return Ok(false);
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| g.neighbour_vertices(v).fold(0u32, |m, w| m | (1 << w)))
        .collect();
    // paths start at vertex 0; masks range over vertices 1..n
    let rest = n - 1;
    let full = (1usize << rest) - 1;
    // reach[mask] = bitset of end vertices (1-based shift) of paths 0 -> ... covering mask
    let mut reach = vec![0u32; 1 << rest];
    for v in 1..n {
        if nbr[0] & (1 << v) != 0 {
            reach[1 << (v - 1)] |= 1 << v;
        }
    }
    for mask in 1..=full {
        let ends = reach[mask];
        if ends == 0 {
            continue;
        }
        let mut e = ends;
        while e != 0 {
            let v = e.trailing_zeros() as usize;
            e &= e - 1;
            // extend to unvisited neighbours
            let mut cand = nbr[v] & !((mask as u32) << 1) & !1;
            while cand != 0 {
                let w = cand.trailing_zeros() as usize;
                cand &= cand - 1;
                reach[mask | (1 << (w - 1))] |= 1 << w;
            }
        }
    }
    Ok(reach[full] & nbr[0] != 0)
}

pub fn has_hamilton_cycle(g: &Graph) -> Result<bool> {
    has_hamilton_cycle_with_limit(g, DEFAULT_HAMILTON_LIMIT)
}

/// Whether `host` has a (not necessarily induced) subgraph isomorphic to
/// `pattern`. Plain backtracking, exponential; patterns are capped at
/// [`SUBGRAPH_PATTERN_LIMIT`] vertices.
pub fn contains_subgraph(host: &Graph, pattern: &Graph) -> Result<bool> {
    let k = pattern.vertex_count();
    if k > SUBGRAPH_PATTERN_LIMIT {
        return Err(Error::TooLarge(format!(
            "subgraph patterns limited to {SUBGRAPH_PATTERN_LIMIT} vertices, got {k}"
        )));
    }
    if k > host.vertex_count() || pattern.edge_count() > host.edge_count() {
        return Ok(false);
    }
    // map high-degree pattern vertices first
    let mut order: Vec<Vertex> = (0..k).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(pattern.degree(v)));
    let mut image = vec![usize::MAX; k];
    let mut used = vec![false; host.vertex_count()];
    Ok(embed(host, pattern, &order, 0, &mut image, &mut used))
}

fn embed(
    host: &Graph,
    pattern: &Graph,
    order: &[Vertex],
    depth: usize,
    image: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let p = order[depth];
    for h in 0..host.vertex_count() {
        if used[h] || host.degree(h) < pattern.degree(p) {
            continue;
        }
        let ok = pattern
            .neighbour_vertices(p)
            .all(|q| image[q] == usize::MAX || host.has_edge(h, image[q]));
        if !ok {
            continue;
        }
        image[p] = h;
        used[h] = true;
        if embed(host, pattern, order, depth + 1, image, used) {
            return true;
        }
        used[h] = false;
        image[p] = usize::MAX;
    }
    false
}

/// True iff every degree lies in `[(1-eps)pn, (1+eps)pn]`.
pub fn degree_concentration_check(g: &Graph, p: f64, eps: f64) -> bool {
    let pn = p * g.vertex_count() as f64;
    let (lo, hi) = ((1.0 - eps) * pn, (1.0 + eps) * pn);
    (0..g.vertex_count()).all(|v| {
        let d = g.degree(v) as f64;
        d >= lo && d <= hi
    })
}
