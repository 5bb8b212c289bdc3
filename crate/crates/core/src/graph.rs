//! Undirected simple graphs over at most 64 agents, agent sets, and the
//! edge-boundary count `d(S, T)`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint actions and agent sets are stored as `u64` bitmasks.
pub const MAX_AGENTS: usize = 64;

/// A set of agent indices, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentSet(u64);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    /// Every agent in `0..n`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            AgentSet(u64::MAX)
        } else {
            AgentSet((1u64 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Result<Self> {
        let mut bits = 0u64;
        for i in indices {
            if i >= n {
                return Err(Error::AgentOutOfRange { index: i, n });
            }
            bits |= 1 << i;
        }
        Ok(AgentSet(bits))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn union(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AgentSet) -> AgentSet {
        AgentSet(self.0 & other.0)
    }

    /// Complement within `0..n`.
    pub fn complement(self, n: usize) -> AgentSet {
        AgentSet(!self.0 & AgentSet::full(n).0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Indices in ascending order.
    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// 1-based labels, as printed by the CLI.
    pub fn labels(self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

/// Prints 1-based labels: agents `{0, 3}` show as `{1,4}`.
impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.labels().into_iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i)?;
        }
        write!(f, "}}")
    }
}

/// An immutable undirected simple graph on agents `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<AgentSet>,
    ring: bool,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalized to `(min, max)`;
    /// self-loops, duplicates and out-of-range indices are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one agent".into()));
        }
        if n > MAX_AGENTS {
            return Err(Error::TooLarge { what: "graph", n, cap: MAX_AGENTS });
        }
        let mut neighbors = vec![AgentSet::EMPTY; n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::AgentOutOfRange { index: v, n });
                }
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at {}", i)));
            }
            if neighbors[i].contains(j) {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{}, {}}}", i, j)));
            }
            neighbors[i].insert(j);
            neighbors[j].insert(i);
            normalized.push((i.min(j), i.max(j)));
        }
        normalized.sort_unstable();
        let ring = detect_ring(n, &neighbors);
        Ok(Graph { n, edges: normalized, neighbors, ring })
    }

    /// The cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!(
                "a ring needs at least 3 agents, got {}",
                n
            )));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges)
    }

    /// A random connected graph: a random recursive spanning tree (agent `i`
    /// joins a uniformly chosen earlier agent) plus every other pair
    /// independently with probability `extra`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra: f64, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one agent".into()));
        }
        let mut edges = Vec::new();
        for i in 1..n {
            edges.push((rng.gen_range(0..i), i));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !edges.contains(&(i, j)) && rng.gen_bool(extra) {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> AgentSet {
        self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// True when the graph is the canonical cycle `i ~ i+1 (mod n)`, which is
    /// what the ring-specific policies assume about agent ordering.
    pub fn is_ring(&self) -> bool {
        self.ring
    }

    pub fn agents(&self) -> AgentSet {
        AgentSet::full(self.n)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = AgentSet::EMPTY;
        seen.insert(0);
        let mut frontier = seen;
        while !frontier.is_empty() {
            let mut next = AgentSet::EMPTY;
            for v in frontier.iter() {
                next = next.union(self.neighbors[v]);
            }
            frontier = AgentSet::from_bits(next.bits() & !seen.bits());
            seen = seen.union(next);
        }
        seen == self.agents()
    }

    /// `d(S, T)`: number of edges with one endpoint in `s` and the other in
    /// `t`. Each undirected edge counts at most once.
    pub fn edge_boundary(&self, s: AgentSet, t: AgentSet) -> usize {
        self.edges
            .iter()
            .filter(|&&(i, j)| {
                (s.contains(i) && t.contains(j)) || (s.contains(j) && t.contains(i))
            })
            .count()
    }
}

fn detect_ring(n: usize, neighbors: &[AgentSet]) -> bool {
    n >= 3
        && (0..n).all(|i| {
            let nb = neighbors[i];
            nb.len() == 2 && nb.contains((i + 1) % n) && nb.contains((i + n - 1) % n)
        })
}

/// JSON graph literal: `{"n": 4, "edges": [[0,1],[1,2]]}` or `{"ring": 10}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Ring { ring: usize },
    Explicit { n: usize, edges: Vec<[usize; 2]> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Ring { ring } => Graph::ring(*ring),
            GraphSpec::Explicit { n, edges } => {
                let pairs: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                Graph::new(*n, &pairs)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph literal: {}", e)))
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Ring { ring } => write!(f, "ring{}", ring),
            GraphSpec::Explicit { n, edges } => write!(f, "graph{}e{}", n, edges.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(n: usize, v: &[usize]) -> AgentSet {
        AgentSet::from_indices(n, v.iter().copied()).unwrap()
    }

    #[test]
    fn ring_three_is_a_triangle() {
        let g = Graph::ring(3).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(g.is_ring());
    }

    #[test]
    fn ring_ten_has_ten_edges_all_degree_two() {
        let g = Graph::ring(10).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!((0..10).all(|i| g.degree(i) == 2));
        assert!(g.is_connected());
    }

    #[test]
    fn ring_rejects_fewer_than_three() {
        assert!(Graph::ring(2).is_err());
        assert!(Graph::ring(0).is_err());
    }

    #[test]
    fn new_rejects_loops_duplicates_and_range() {
        assert!(matches!(Graph::new(3, &[(1, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(3, &[(0, 1), (1, 0)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::new(3, &[(0, 3)]), Err(Error::AgentOutOfRange { .. })));
        assert!(Graph::new(65, &[]).is_err());
    }

    #[test]
    fn path_is_not_a_ring() {
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(!g.is_ring());
        // same cycle, relabelled: still a 4-cycle but not the canonical ordering
        let g = Graph::new(4, &[(0, 2), (2, 1), (1, 3), (3, 0)]).unwrap();
        assert!(!g.is_ring());
    }

    #[test]
    fn edge_boundary_examples() {
        let g = Graph::ring(5).unwrap();
        assert_eq!(g.edge_boundary(g.agents(), g.agents()), 5);
        let g = Graph::ring(3).unwrap();
        assert_eq!(g.edge_boundary(set(3, &[0]), set(3, &[1, 2])), 2);
        // arc {0,1,2} on a 6-ring contains edges {0,1},{1,2}
        let g = Graph::ring(6).unwrap();
        let arc = set(6, &[0, 1, 2]);
        let brute = g
            .edges()
            .iter()
            .filter(|&&(i, j)| arc.contains(i) && arc.contains(j))
            .count();
        assert_eq!(brute, 2);
        assert_eq!(g.edge_boundary(arc, arc), 2);
    }

    #[test]
    fn graph_spec_literals() {
        let g = GraphSpec::parse(r#"{"ring": 4}"#).unwrap().build().unwrap();
        assert_eq!(g, Graph::ring(4).unwrap());
        let g = GraphSpec::parse(r#"{"n": 3, "edges": [[0,1],[1,2]]}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(GraphSpec::parse(r#"{"nodes": 3}"#).is_err());
    }

    #[test]
    fn agent_set_ops() {
        let s = set(6, &[0, 3, 5]);
        assert_eq!(s.to_vec(), vec![0, 3, 5]);
        assert_eq!(s.labels(), vec![1, 4, 6]);
        assert_eq!(s.complement(6).to_vec(), vec![1, 2, 4]);
        assert_eq!(s.to_string(), "{1,4,6}");
        assert!(AgentSet::from_indices(3, [3]).is_err());
    }

    fn random_graph() -> impl Strategy<Value = Graph> {
        (2usize..9).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let len = pairs.len();
            proptest::collection::vec(any::<bool>(), len).prop_map(move |keep| {
                let edges: Vec<_> = pairs
                    .iter()
                    .zip(keep)
                    .filter(|(_, k)| *k)
                    .map(|(e, _)| *e)
                    .collect();
                Graph::new(n, &edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn edge_partition_identity(g in random_graph(), t_bits in any::<u64>()) {
            let t = AgentSet::from_bits(t_bits & g.agents().bits());
            let rest = t.complement(g.n());
            prop_assert_eq!(
                g.edge_boundary(t, rest) + g.edge_boundary(t, t) + g.edge_boundary(rest, rest),
                g.edge_count()
            );
        }

        #[test]
        fn edge_boundary_is_symmetric(g in random_graph(), a in any::<u64>(), b in any::<u64>()) {
            let s = AgentSet::from_bits(a & g.agents().bits());
            let t = AgentSet::from_bits(b & g.agents().bits());
            prop_assert_eq!(g.edge_boundary(s, t), g.edge_boundary(t, s));
        }

        #[test]
        fn ring_self_boundary_is_n(n in 3usize..40) {
            let g = Graph::ring(n).unwrap();
            prop_assert_eq!(g.edge_boundary(g.agents(), g.agents()), n);
        }
    }
}
