//! Author/concept hypergraph with hop-count shortest paths.
//!
//! Every paper is a hyperedge over its authors and concepts. Incidences are
//! stored twice in compressed-row form (node -> edges, edge -> nodes) so a
//! breadth-first search touches every incidence at most once.
//!
//! Distances count hyperedges: two concepts co-mentioned in one paper are
//! at distance 1, concepts linked through a shared author at distance 2.

mod cache;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use chrono::NaiveDate;
use thiserror::Error;

use crate::corpus::{CorpusSlice, EntityKind, PaperRecord};

pub use cache::{read_cache, write_cache, CACHE_MAGIC};

pub type NodeId = u32;
pub type EdgeId = u32;

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node id {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("graph cache io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a graph cache file (bad magic header)")]
    BadMagic,
    #[error("corrupt graph cache: {0}")]
    Corrupt(String),
}

/// Hop count between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Hops(u32),
    Unreachable,
}

impl Distance {
    pub fn hops(self) -> Option<u32> {
        match self {
            Distance::Hops(h) => Some(h),
            Distance::Unreachable => None,
        }
    }

    /// Hop count as a float, with unreachable mapped to `+inf`.
    pub fn as_f64(self) -> f64 {
        match self {
            Distance::Hops(h) => f64::from(h),
            Distance::Unreachable => f64::INFINITY,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Hops(h) => write!(f, "{h}"),
            Distance::Unreachable => f.write_str("unreachable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    tokens: Vec<String>,
    kinds: Vec<EntityKind>,
    node_offsets: Vec<usize>,
    node_edges: Vec<EdgeId>,
    edge_offsets: Vec<usize>,
    edge_nodes: Vec<NodeId>,
    cutoff: Option<NaiveDate>,
}

impl Hypergraph {
    /// One hyperedge per record with at least one token. Nodes are indexed
    /// in sorted token order, edges in record order.
    pub fn build(slice: &CorpusSlice) -> Hypergraph {
        let mut g = Self::from_records(slice.records());
        g.cutoff = Some(slice.cutoff());
        g
    }

    pub fn from_records(records: &[PaperRecord]) -> Hypergraph {
        let mut kinds_by_token: HashMap<&str, EntityKind> = HashMap::new();
        for r in records {
            for a in &r.authors {
                kinds_by_token.insert(a, EntityKind::Author);
            }
            for c in &r.concepts {
                kinds_by_token.entry(c).or_insert(EntityKind::Concept);
            }
        }
        let mut sorted: Vec<(&str, EntityKind)> = kinds_by_token.into_iter().collect();
        sorted.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let index: HashMap<&str, NodeId> = sorted
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (*t, i as NodeId))
            .collect();

        let mut edge_offsets = Vec::with_capacity(records.len() + 1);
        let mut edge_nodes = Vec::new();
        edge_offsets.push(0);
        let mut members = Vec::new();
        for r in records {
            members.clear();
            members.extend(r.authors.iter().chain(&r.concepts).map(|t| index[t.as_str()]));
            if members.is_empty() {
                continue;
            }
            members.sort_unstable();
            members.dedup();
            edge_nodes.extend_from_slice(&members);
            edge_offsets.push(edge_nodes.len());
        }

        let (node_offsets, node_edges) = transpose(sorted.len(), &edge_offsets, &edge_nodes);
        Hypergraph {
            tokens: sorted.iter().map(|(t, _)| (*t).to_owned()).collect(),
            kinds: sorted.iter().map(|(_, k)| *k).collect(),
            node_offsets,
            node_edges,
            edge_offsets,
            edge_nodes,
            cutoff: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_offsets.len() - 1
    }

    pub fn incidence_count(&self) -> usize {
        self.edge_nodes.len()
    }

    /// Prediction date of the slice this graph was built from, if known.
    pub fn cutoff(&self) -> Option<NaiveDate> {
        self.cutoff
    }

    pub fn node_id(&self, token: &str) -> Option<NodeId> {
        self.tokens
            .binary_search_by(|t| t.as_str().cmp(token))
            .ok()
            .map(|i| i as NodeId)
    }

    pub fn token(&self, node: NodeId) -> Option<&str> {
        self.tokens.get(node as usize).map(String::as_str)
    }

    pub fn kind(&self, node: NodeId) -> Option<EntityKind> {
        self.kinds.get(node as usize).copied()
    }

    pub fn edges_of(&self, node: NodeId) -> &[EdgeId] {
        let n = node as usize;
        &self.node_edges[self.node_offsets[n]..self.node_offsets[n + 1]]
    }

    pub fn members(&self, edge: EdgeId) -> &[NodeId] {
        let e = edge as usize;
        &self.edge_nodes[self.edge_offsets[e]..self.edge_offsets[e + 1]]
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            nodes: self.node_count(),
            authors: self.kinds.iter().filter(|k| **k == EntityKind::Author).count(),
            concepts: self.kinds.iter().filter(|k| **k == EntityKind::Concept).count(),
            hyperedges: self.edge_count(),
            incidences: self.incidence_count(),
        }
    }

    /// Single-source hop distances by level-synchronous BFS over the
    /// bipartite incidence structure. Each hyperedge is expanded once.
    pub fn spd_from(&self, source: NodeId) -> Result<DistanceVector, GraphError> {
        let n = self.node_count();
        if source as usize >= n {
            return Err(GraphError::NodeOutOfRange(source));
        }
        let mut dist = vec![UNREACHABLE; n];
        let mut edge_done = vec![false; self.edge_count()];
        let mut frontier = vec![source];
        let mut next = Vec::new();
        dist[source as usize] = 0;
        let mut level = 0u32;
        while !frontier.is_empty() {
            level += 1;
            for &u in &frontier {
                for &e in self.edges_of(u) {
                    if std::mem::replace(&mut edge_done[e as usize], true) {
                        continue;
                    }
                    for &v in self.members(e) {
                        let slot = &mut dist[v as usize];
                        if *slot == UNREACHABLE {
                            *slot = level;
                            next.push(v);
                        }
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        Ok(DistanceVector { source, dist })
    }

    pub fn spd_from_token(&self, token: &str) -> Result<DistanceVector, GraphError> {
        let id = self
            .node_id(token)
            .ok_or_else(|| GraphError::UnknownNode(token.to_owned()))?;
        self.spd_from(id)
    }

    /// Bins `targets` by their distance from `property`. Targets absent from
    /// the graph are counted separately.
    pub fn spd_histogram<'a>(
        &self,
        property: &str,
        targets: impl IntoIterator<Item = &'a str>,
    ) -> Result<SpdHistogram, GraphError> {
        let dv = self.spd_from_token(property)?;
        let mut hist = SpdHistogram::default();
        for t in targets {
            match self.node_id(t) {
                Some(id) => *hist.bins.entry(dv.get(id)).or_default() += 1,
                None => hist.missing += 1,
            }
        }
        Ok(hist)
    }

    pub(crate) fn from_parts(
        tokens: Vec<String>,
        kinds: Vec<EntityKind>,
        node_offsets: Vec<usize>,
        node_edges: Vec<EdgeId>,
        edge_offsets: Vec<usize>,
        edge_nodes: Vec<NodeId>,
        cutoff: Option<NaiveDate>,
    ) -> Hypergraph {
        Hypergraph {
            tokens,
            kinds,
            node_offsets,
            node_edges,
            edge_offsets,
            edge_nodes,
            cutoff,
        }
    }
}

/// Builds node -> edge lists from edge -> node lists. Edge ids within each
/// node list come out ascending.
pub(crate) fn transpose(
    node_count: usize,
    edge_offsets: &[usize],
    edge_nodes: &[NodeId],
) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; node_count + 1];
    for &v in edge_nodes {
        offsets[v as usize + 1] += 1;
    }
    for i in 0..node_count {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut node_edges = vec![0 as EdgeId; edge_nodes.len()];
    for e in 0..edge_offsets.len().saturating_sub(1) {
        for &v in &edge_nodes[edge_offsets[e]..edge_offsets[e + 1]] {
            node_edges[fill[v as usize]] = e as EdgeId;
            fill[v as usize] += 1;
        }
    }
    (offsets, node_edges)
}

/// Distances from one source to every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistanceVector {
    source: NodeId,
    dist: Vec<u32>,
}

impl DistanceVector {
    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Panics if `node` is out of range.
    pub fn get(&self, node: NodeId) -> Distance {
        match self.dist[node as usize] {
            UNREACHABLE => Distance::Unreachable,
            h => Distance::Hops(h),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Distance> + '_ {
        (0..self.dist.len() as NodeId).map(|i| self.get(i))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpdHistogram {
    pub bins: BTreeMap<Distance, usize>,
    pub missing: usize,
}

impl SpdHistogram {
    pub fn total_in_graph(&self) -> usize {
        self.bins.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub authors: usize,
    pub concepts: usize,
    pub hyperedges: usize,
    pub incidences: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes={}", self.nodes)?;
        writeln!(f, "authors={}", self.authors)?;
        writeln!(f, "concepts={}", self.concepts)?;
        writeln!(f, "hyperedges={}", self.hyperedges)?;
        writeln!(f, "incidences={}", self.incidences)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_date;

    fn rec(id: &str, year: &str, authors: &[&str], concepts: &[&str]) -> PaperRecord {
        PaperRecord::new(
            id,
            parse_date(year).unwrap(),
            authors.iter().copied(),
            concepts.iter().copied(),
        )
    }

    fn two_edge() -> Hypergraph {
        Hypergraph::from_records(&[
            rec("p1", "1999", &["A1"], &["M1", "prop"]),
            rec("p2", "1999", &["A1"], &["M2"]),
            rec("p3", "1999", &["A9"], &["M9"]),
        ])
    }

    #[test]
    fn shared_author_links_two_edges() {
        let g = Hypergraph::from_records(&[
            rec("p1", "1999", &["a"], &["x"]),
            rec("p2", "1999", &["a"], &["y"]),
        ]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges_of(g.node_id("a").unwrap()), &[0, 1]);
    }

    #[test]
    fn empty_slice_gives_empty_graph() {
        let g = Hypergraph::from_records(&[]);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
        assert!(g.spd_from(0).is_err());
    }

    #[test]
    fn edge_cardinality_is_authors_plus_concepts() {
        let g = Hypergraph::from_records(&[rec(
            "p",
            "2000",
            &["a1", "a2", "a3"],
            &["c1", "c2", "c3", "c4"],
        )]);
        assert_eq!(g.members(0).len(), 7);
        assert_eq!(g.stats().incidences, 7);
        assert_eq!(g.stats().authors, 3);
    }

    #[test]
    fn tokenless_records_are_skipped() {
        let g = Hypergraph::from_records(&[rec("p", "2000", &[], &[]), rec("q", "2000", &["a"], &[])]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn hand_bfs_fixture() {
        let g = two_edge();
        let dv = g.spd_from_token("prop").unwrap();
        let at = |t: &str| dv.get(g.node_id(t).unwrap());
        assert_eq!(at("prop"), Distance::Hops(0));
        assert_eq!(at("M1"), Distance::Hops(1));
        assert_eq!(at("A1"), Distance::Hops(1));
        assert_eq!(at("M2"), Distance::Hops(2));
        assert_eq!(at("M9"), Distance::Unreachable);
    }

    #[test]
    fn unknown_source() {
        let g = two_edge();
        assert!(matches!(g.spd_from_token("zzz"), Err(GraphError::UnknownNode(_))));
        assert!(matches!(g.spd_from(99), Err(GraphError::NodeOutOfRange(99))));
    }

    #[test]
    fn histogram_bins() {
        let g = Hypergraph::from_records(&[
            rec("p1", "1999", &["A"], &["prop", "m1", "m2"]),
            rec("p2", "1999", &["A"], &["m3"]),
            rec("p3", "1999", &["B"], &["far"]),
        ]);
        let h = g.spd_histogram("prop", ["m1", "m2", "m3"]).unwrap();
        assert_eq!(h.bins, BTreeMap::from([(Distance::Hops(1), 2), (Distance::Hops(2), 1)]));
        assert_eq!(h.missing, 0);
        let h = g.spd_histogram("prop", []).unwrap();
        assert!(h.bins.is_empty());
        let h = g.spd_histogram("prop", ["far", "ghost"]).unwrap();
        assert_eq!(h.bins, BTreeMap::from([(Distance::Unreachable, 1)]));
        assert_eq!(h.missing, 1);
        assert_eq!(h.total_in_graph(), 1);
    }

    #[test]
    fn unreachable_sorts_last() {
        assert!(Distance::Hops(u32::MAX - 1) < Distance::Unreachable);
        assert_eq!(Distance::Unreachable.as_f64(), f64::INFINITY);
        assert_eq!(Distance::Unreachable.to_string(), "unreachable");
    }

    #[test]
    fn stats_text() {
        let text = two_edge().stats().to_string();
        assert_eq!(
            text,
            "nodes=6\nauthors=2\nconcepts=4\nhyperedges=3\nincidences=7\n"
        );
    }
}
