//! The layered structure `S_k`: a perfect ternary tree of depth `k` with
//! every edge subdivided and all leaves glued into one sink.
//!
//! Main vertices `s(l, i)` sit on levels `1..=k` (`i` is 1-based, `i <= 3^(k-l)`),
//! the subdivision vertices `s*(l, i)` on secondary levels `0..k`, and the
//! glued leaves form the sink. The children of `s(l, i)` are
//! `s(l-1, 3i-2..=3i)`, reached through `s*(l-1, 3i-2..=3i)`.
//!
//! Vertex ids run level by level from the root: `L_k, L*_(k-1), L_(k-1), ...,
//! L_1, L*_0`, then the sink.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{BoardState, Move, Owner};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, Vertex};

pub const MAX_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Main { level: usize, index: usize },
    Secondary { level: usize, index: usize },
    Sink,
}

impl Label {
    pub fn level(self) -> usize {
        match self {
            Label::Main { level, .. } | Label::Secondary { level, .. } => level,
            Label::Sink => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StructureSk {
    k: usize,
    graph: Arc<Graph>,
    labels: Vec<Label>,
    ids: HashMap<Label, Vertex>,
}

pub fn pow3(e: usize) -> usize {
    3usize.pow(e as u32)
}

impl StructureSk {
    pub fn build(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("S_k needs k >= 1".into()));
        }
        if k > MAX_K {
            return Err(Error::TooLarge(format!("S_k supported up to k = {MAX_K}")));
        }
        let mut labels = Vec::with_capacity(2 * pow3(k) - 1);
        for level in (1..=k).rev() {
            for index in 1..=pow3(k - level) {
                labels.push(Label::Main { level, index });
            }
            for index in 1..=pow3(k - level + 1) {
                labels.push(Label::Secondary { level: level - 1, index });
            }
        }
        labels.push(Label::Sink);
        let ids: HashMap<Label, Vertex> = labels.iter().enumerate().map(|(v, &l)| (l, v)).collect();
        let mut edges = Vec::with_capacity(pow3(k + 1) - 3);
        for &l in &labels {
            if let Label::Secondary { level, index } = l {
                let parent = Label::Main { level: level + 1, index: index.div_ceil(3) };
                let child = if level == 0 { Label::Sink } else { Label::Main { level, index } };
                edges.push((ids[&parent], ids[&l]));
                edges.push((ids[&l], ids[&child]));
            }
        }
        let graph = Arc::new(Graph::from_edges(labels.len(), edges)?);
        Ok(StructureSk { k, graph, labels, ids })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        self.graph.clone()
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: Vertex) -> Label {
        self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn vertex(&self, l: Label) -> Option<Vertex> {
        self.ids.get(&l).copied()
    }

    pub fn root(&self) -> Vertex {
        0
    }

    pub fn sink(&self) -> Vertex {
        self.labels.len() - 1
    }

    pub fn main_level(&self, level: usize) -> Vec<Vertex> {
        (1..=pow3(self.k - level))
            .map(|index| self.ids[&Label::Main { level, index }])
            .collect()
    }

    pub fn secondary_level(&self, level: usize) -> Vec<Vertex> {
        (1..=pow3(self.k - level))
            .map(|index| self.ids[&Label::Secondary { level, index }])
            .collect()
    }

    /// Leaves of the tree `S_k - s_0`.
    pub fn leaf_count(&self) -> usize {
        let sink = self.sink();
        (0..self.vertex_count())
            .filter(|&v| v != sink)
            .filter(|&v| self.graph.neighbour_vertices(v).filter(|&w| w != sink).count() == 1)
            .count()
    }

    /// The three `(secondary, next)` steps below a main vertex, in child
    /// order; `next` is a main vertex or the sink.
    pub fn branches(&self, level: usize, index: usize) -> [(Label, Label); 3] {
        let mut out = [(Label::Sink, Label::Sink); 3];
        for (slot, j) in (3 * index - 2..=3 * index).enumerate() {
            let sec = Label::Secondary { level: level - 1, index: j };
            let next = if level == 1 { Label::Sink } else { Label::Main { level: level - 1, index: j } };
            out[slot] = (sec, next);
        }
        out
    }

    /// Parent of a non-root label in the subdivided tree.
    pub fn parent(&self, l: Label) -> Option<Label> {
        match l {
            Label::Main { level, index } if level < self.k => Some(Label::Secondary { level, index }),
            Label::Secondary { level, index } => Some(Label::Main { level: level + 1, index: index.div_ceil(3) }),
            _ => None,
        }
    }

    /// Edges (structure ids) of the copy of `S_level` hanging below the main
    /// vertex, including its edges into the sink.
    pub fn subtree_edges(&self, level: usize, index: usize) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut stack = vec![(level, index)];
        while let Some((l, i)) = stack.pop() {
            for (sec, next) in self.branches(l, i) {
                let (m, s, t) = (self.ids[&Label::Main { level: l, index: i }], self.ids[&sec], self.ids[&next]);
                out.push(self.graph.edge_id(m, s).expect("structure edge"));
                out.push(self.graph.edge_id(s, t).expect("structure edge"));
                if let Label::Main { level, index } = next {
                    stack.push((level, index));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Neighbour-count audit per level.
    pub fn check_degrees(&self) -> Result<()> {
        for (v, &l) in self.labels.iter().enumerate() {
            let nbrs: Vec<Label> = self.graph.neighbour_vertices(v).map(|w| self.labels[w]).collect();
            match l {
                Label::Main { level, .. } => {
                    let down = nbrs
                        .iter()
                        .filter(|n| matches!(n, Label::Secondary { level: sl, .. } if *sl + 1 == level))
                        .count();
                    if down != 3 {
                        return Err(Error::Invariant(format!("{l:?} has {down} children")));
                    }
                }
                Label::Secondary { level, .. } => {
                    let below = if level == 0 {
                        nbrs.iter().filter(|n| **n == Label::Sink).count()
                    } else {
                        nbrs.iter().filter(|n| matches!(n, Label::Main { level: ml, .. } if *ml == level)).count()
                    };
                    let above = nbrs
                        .iter()
                        .filter(|n| matches!(n, Label::Main { level: ml, .. } if *ml == level + 1))
                        .count();
                    if below != 1 || above != 1 || nbrs.len() != 2 {
                        return Err(Error::Invariant(format!("{l:?} has bad neighbourhood {nbrs:?}")));
                    }
                }
                Label::Sink => {
                    if nbrs.len() != pow3(self.k) {
                        return Err(Error::Invariant("sink degree wrong".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Lines `level index kind vertex`; the sink is `0 0 sink v`.
    pub fn label_dump(&self, embedding: Option<&StructureEmbedding>) -> String {
        let mut out = String::new();
        for (v, &l) in self.labels.iter().enumerate() {
            let host = embedding.map_or(v, |e| e.host(v));
            let _ = match l {
                Label::Main { level, index } => writeln!(out, "{level} {index} main {host}"),
                Label::Secondary { level, index } => writeln!(out, "{level} {index} secondary {host}"),
                Label::Sink => writeln!(out, "0 0 sink {host}"),
            };
        }
        out
    }
}

/// A copy of `S_k` inside a host graph: structure vertex id -> host vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureEmbedding {
    pub map: Vec<Vertex>,
}

impl StructureEmbedding {
    pub fn identity(s: &StructureSk) -> Self {
        StructureEmbedding { map: (0..s.vertex_count()).collect() }
    }

    pub fn host(&self, v: Vertex) -> Vertex {
        self.map[v]
    }

    pub fn structure_vertex(&self, host: Vertex) -> Option<Vertex> {
        self.map.iter().position(|&h| h == host)
    }

    /// Checks injectivity and that every structure edge is a host edge.
    pub fn validate(&self, s: &StructureSk, host: &Graph) -> Result<()> {
        if self.map.len() != s.vertex_count() {
            return Err(Error::Invariant("embedding has the wrong size".into()));
        }
        let mut sorted = self.map.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invariant("embedding is not injective".into()));
        }
        for &(u, v) in s.graph().edges() {
            if !host.has_edge(self.map[u], self.map[v]) {
                return Err(Error::Invariant(format!("structure edge ({u},{v}) missing in host")));
            }
        }
        Ok(())
    }

    fn host_edge(&self, s: &StructureSk, host: &Graph, a: Label, b: Label) -> EdgeId {
        let (u, v) = (s.vertex(a).expect("label"), s.vertex(b).expect("label"));
        host.edge_id(self.map[u], self.map[v]).expect("embedded edge present")
    }
}

fn step_move(state: &BoardState, e: EdgeId) -> Move {
    if state.owner(e) == Owner::Maker {
        Move::Traverse(e)
    } else {
        Move::Claim(e)
    }
}

/// Walker's next move along an embedded copy of `S_k`.
///
/// At a main vertex she takes the first child (in child order) whose path
/// is available and whose hanging sub-copy holds no Breaker edge; at a
/// secondary vertex she continues down. Returns `None` at the sink.
pub fn structure_walk(state: &BoardState, s: &StructureSk, emb: &StructureEmbedding) -> Result<Option<Move>> {
    let pos = state
        .walker_position()
        .ok_or_else(|| Error::InvalidParameter("structure walk needs a Walker position".into()))?;
    let sv = emb
        .structure_vertex(pos)
        .ok_or_else(|| Error::NoBranch(format!("walker position {pos} is not on the structure")))?;
    let g = state.graph();
    match s.label(sv) {
        Label::Sink => Ok(None),
        sec @ Label::Secondary { level, index } => {
            let next = if level == 0 { Label::Sink } else { Label::Main { level, index } };
            let e = emb.host_edge(s, g, sec, next);
            if state.owner(e) == Owner::Breaker {
                return Err(Error::NoBranch(format!("edge below {sec:?} is Breaker's")));
            }
            Ok(Some(step_move(state, e)))
        }
        main @ Label::Main { level, index } => {
            let mut diagnoses = Vec::new();
            for (sec, next) in s.branches(level, index) {
                let up = emb.host_edge(s, g, main, sec);
                let down = emb.host_edge(s, g, sec, next);
                if state.owner(up) == Owner::Breaker || state.owner(down) == Owner::Breaker {
                    diagnoses.push(format!("{sec:?}: path blocked"));
                    continue;
                }
                if let Label::Main { level: nl, index: ni } = next {
                    let blocked = s
                        .subtree_edges(nl, ni)
                        .into_iter()
                        .map(|se| {
                            let (a, b) = s.graph().edge(se);
                            g.edge_id(emb.host(a), emb.host(b)).expect("embedded edge present")
                        })
                        .filter(|&he| state.owner(he) == Owner::Breaker)
                        .count();
                    if blocked > 0 {
                        diagnoses.push(format!("{next:?}: sub-copy holds {blocked} Breaker edge(s)"));
                        continue;
                    }
                }
                return Ok(Some(step_move(state, up)));
            }
            Err(Error::NoBranch(format!("at {main:?}: {}", diagnoses.join("; "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{GameDef, Player, Variant, WinCondition};

    #[test]
    fn sizes() {
        for k in 1..=6 {
            let s = StructureSk::build(k).unwrap();
            assert_eq!(s.vertex_count(), 2 * pow3(k) - 1);
            assert_eq!(s.graph().edge_count(), pow3(k + 1) - 3);
            assert_eq!(s.leaf_count(), pow3(k));
            s.check_degrees().unwrap();
        }
        assert!(StructureSk::build(0).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let s = StructureSk::build(3).unwrap();
        for v in 0..s.vertex_count() {
            assert_eq!(s.vertex(s.label(v)), Some(v));
        }
        assert_eq!(s.label(s.root()), Label::Main { level: 3, index: 1 });
        assert_eq!(s.label(s.sink()), Label::Sink);
        assert_eq!(s.subtree_edges(3, 1).len(), s.graph().edge_count());
        assert_eq!(s.subtree_edges(1, 5).len(), 6);
        assert_eq!(s.parent(Label::Secondary { level: 0, index: 7 }), Some(Label::Main { level: 1, index: 3 }));
    }

    #[test]
    fn dump_has_every_vertex() {
        let s = StructureSk::build(1).unwrap();
        let d = s.label_dump(None);
        assert_eq!(d.lines().count(), 5);
        assert!(d.contains("0 0 sink 4"));
        assert!(d.starts_with("1 1 main 0"));
    }

    fn walk_setup(k: usize) -> (StructureSk, GameDef, BoardState) {
        let s = StructureSk::build(k).unwrap();
        let def = GameDef::new(Variant::WalkerBreaker, 2, 2, Player::Breaker, WinCondition::ReachVertex(s.sink()));
        let st = BoardState::new(s.graph_arc(), &def, Some(s.root())).unwrap();
        (s, def, st)
    }

    #[test]
    fn k1_takes_the_unblocked_path() {
        let (s, def, mut st) = walk_setup(1);
        let emb = StructureEmbedding::identity(&s);
        let g = s.graph_arc();
        let sec = |i| s.vertex(Label::Secondary { level: 0, index: i }).unwrap();
        st.apply(&def, Move::Claim(g.edge_id(s.root(), sec(1)).unwrap())).unwrap();
        st.apply(&def, Move::Claim(g.edge_id(sec(2), s.sink()).unwrap())).unwrap();
        let m = structure_walk(&st, &s, &emb).unwrap().unwrap();
        assert_eq!(m, Move::Claim(g.edge_id(s.root(), sec(3)).unwrap()));
        st.apply(&def, m).unwrap();
        let m = structure_walk(&st, &s, &emb).unwrap().unwrap();
        st.apply(&def, m).unwrap();
        assert_eq!(st.walker_position(), Some(s.sink()));
        assert_eq!(structure_walk(&st, &s, &emb).unwrap(), None);
    }

    #[test]
    fn k2_avoids_damaged_subcopy() {
        let (s, def, mut st) = walk_setup(2);
        let emb = StructureEmbedding::identity(&s);
        let sub = s.subtree_edges(1, 1);
        st.apply(&def, Move::Claim(sub[0])).unwrap();
        st.apply(&def, Move::Claim(sub[3])).unwrap();
        let m = structure_walk(&st, &s, &emb).unwrap().unwrap();
        st.apply(&def, m).unwrap();
        let m = structure_walk(&st, &s, &emb).unwrap().unwrap();
        st.apply(&def, m).unwrap();
        assert_eq!(st.walker_position(), s.vertex(Label::Main { level: 1, index: 2 }));
    }

    #[test]
    fn no_branch_is_diagnosed() {
        let (s, def, _) = walk_setup(1);
        let g = s.graph_arc();
        let mut def2 = def.clone();
        def2.breaker_bias = 3;
        let mut st = BoardState::new(g.clone(), &def2, Some(s.root())).unwrap();
        for i in 1..=3 {
            let sec = s.vertex(Label::Secondary { level: 0, index: i }).unwrap();
            st.apply(&def2, Move::Claim(g.edge_id(s.root(), sec).unwrap())).unwrap();
        }
        let err = structure_walk(&st, &s, &StructureEmbedding::identity(&s)).unwrap_err();
        assert_eq!(err.to_string().matches("path blocked").count(), 3);
    }
}
