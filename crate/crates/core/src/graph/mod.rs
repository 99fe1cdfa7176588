//! The thresholded endorsement graph and its two-sided partition.

mod partition;
mod snapshot;

use std::collections::{BTreeMap, HashMap};

use crate::ingest::EdgeCounts;
use crate::{Error, Result};

pub use partition::{
    bisect, bisect_exact, top_degree_sets, Partition, Side, EXACT_BISECTION_LIMIT,
};
pub use snapshot::{read_graph_snapshot, write_graph_snapshot, GraphHeader};

/// A retained endorsement `source -> target` with its record count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub count: u64,
}

/// Directed endorsement graph over the users that kept at least one edge.
///
/// Vertices are indexed in ascending user-id order, so index order doubles as
/// the deterministic id tie-break used throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct EndorsementGraph {
    users: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    degree: Vec<usize>,
    threshold: u64,
}

impl EndorsementGraph {
    /// Builds the graph from already-thresholded `(source, target, count)`
    /// triples. Self-loops and duplicate pairs are rejected.
    pub fn from_edges<I, S>(threshold: u64, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, u64)>,
        S: Into<String>,
    {
        let mut named: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (source, target, count) in edges {
            let (source, target) = (source.into(), target.into());
            if source == target {
                return Err(Error::malformed("graph", format!("self-loop on {source:?}")));
            }
            if count < threshold.max(1) {
                return Err(Error::malformed(
                    "graph",
                    format!("edge {source}->{target} has count {count} below {threshold}"),
                ));
            }
            if named.insert((source.clone(), target.clone()), count).is_some() {
                return Err(Error::malformed(
                    "graph",
                    format!("duplicate edge {source}->{target}"),
                ));
            }
        }
        if named.is_empty() {
            return Err(Error::EmptyGraph { threshold });
        }

        let mut users: Vec<String> = named
            .keys()
            .flat_map(|(s, t)| [s.clone(), t.clone()])
            .collect();
        users.sort();
        users.dedup();
        let index: HashMap<String, usize> = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();

        let mut out = vec![Vec::new(); users.len()];
        let mut degree = vec![0usize; users.len()];
        let mut edge_list = Vec::with_capacity(named.len());
        for ((s, t), count) in &named {
            let (source, target) = (index[s], index[t]);
            out[source].push(target);
            degree[source] += 1;
            degree[target] += 1;
            edge_list.push(Edge {
                source,
                target,
                count: *count,
            });
        }
        edge_list.sort();
        Ok(Self {
            users,
            index,
            edges: edge_list,
            out,
            degree,
            threshold,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.users.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn user(&self, vertex: usize) -> &str {
        &self.users[vertex]
    }

    pub fn vertex(&self, user: &str) -> Option<usize> {
        self.index.get(user).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Users that `vertex` endorsed (its feed sources).
    pub fn out_neighbors(&self, vertex: usize) -> &[usize] {
        &self.out[vertex]
    }

    /// In-degree plus out-degree, counting distinct endorsement pairs.
    pub fn degree(&self, vertex: usize) -> usize {
        self.degree[vertex]
    }

    /// Undirected projection: `w(u,v) = count(u,v) + count(v,u)`.
    pub fn undirected(&self) -> UndirectedGraph {
        UndirectedGraph::from_weighted_edges(
            self.num_vertices(),
            self.edges.iter().map(|e| (e.source, e.target, e.count)),
        )
    }
}

/// Keeps the pairs with at least `min_pair_count` endorsements.
///
/// Vertices left without edges are dropped. When nothing survives the
/// threshold the distinct [`Error::EmptyGraph`] is returned.
pub fn build_graph(edge_counts: &EdgeCounts, min_pair_count: u64) -> Result<EndorsementGraph> {
    if min_pair_count == 0 {
        return Err(Error::InvalidArgument("min_pair_count must be at least 1".into()));
    }
    EndorsementGraph::from_edges(
        min_pair_count,
        edge_counts
            .iter()
            .filter(|((s, t), c)| **c >= min_pair_count && s != t)
            .map(|((s, t), c)| (s.as_str(), t.as_str(), *c)),
    )
}

/// Weighted undirected graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    offsets: Vec<usize>,
    adj: Vec<usize>,
    weight: Vec<u64>,
}

impl UndirectedGraph {
    /// Merges parallel and antiparallel edges by summing weights; self-loops
    /// are ignored.
    pub fn from_weighted_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, u64)>) -> Self {
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            *merged.entry(key).or_insert(0) += w;
        }
        let mut lists: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for (&(u, v), &w) in &merged {
            lists[u].push((v, w));
            lists[v].push((u, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(2 * merged.len());
        let mut weight = Vec::with_capacity(2 * merged.len());
        offsets.push(0);
        for list in lists.iter_mut() {
            list.sort_unstable();
            for &(v, w) in list.iter() {
                adj.push(v);
                weight.push(w);
            }
            offsets.push(adj.len());
        }
        Self {
            offsets,
            adj,
            weight,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.adj[range.clone()]
            .iter()
            .copied()
            .zip(self.weight[range].iter().copied())
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.num_vertices())
            .flat_map(move |u| self.neighbors(u).filter(move |&(v, _)| u < v).map(move |(v, w)| (u, v, w)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, &str, u64)]) -> EdgeCounts {
        pairs
            .iter()
            .map(|(s, t, c)| ((s.to_string(), t.to_string()), *c))
            .collect()
    }

    #[test]
    fn threshold_filters_edges() {
        let c = counts(&[("a", "b", 5), ("a", "c", 4)]);
        let g = build_graph(&c, 5).unwrap();
        assert_eq!(g.users(), &["a", "b"]);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edges()[0].count, 5);

        let g = build_graph(&c, 1).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.degree(g.vertex("a").unwrap()), 2);
    }

    #[test]
    fn all_filtered_is_empty_graph() {
        let c = counts(&[("a", "b", 4)]);
        assert!(matches!(build_graph(&c, 5), Err(Error::EmptyGraph { threshold: 5 })));
        assert!(matches!(build_graph(&EdgeCounts::new(), 1), Err(Error::EmptyGraph { .. })));
    }

    #[test]
    fn undirected_projection_sums_directions() {
        let c = counts(&[("a", "b", 5), ("b", "a", 7), ("b", "c", 6)]);
        let g = build_graph(&c, 5).unwrap();
        let u = g.undirected();
        let a = g.vertex("a").unwrap();
        let b = g.vertex("b").unwrap();
        assert_eq!(u.neighbors(a).collect::<Vec<_>>(), vec![(b, 12)]);
        assert_eq!(u.degree(b), 2);
        assert_eq!(u.edges().count(), 2);
        assert_eq!(g.degree(b), 3);
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(EndorsementGraph::from_edges(1, [("a", "a", 3)]).is_err());
        assert!(EndorsementGraph::from_edges(1, [("a", "b", 3), ("a", "b", 4)]).is_err());
        assert!(EndorsementGraph::from_edges(5, [("a", "b", 3)]).is_err());
    }
}
