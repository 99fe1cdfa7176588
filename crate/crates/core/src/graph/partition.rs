//! Two-way partitioning of the endorsement graph.
//!
//! Small graphs (up to [`EXACT_BISECTION_LIMIT`] vertices) are bisected by
//! exhaustive search. Larger graphs go through a multilevel scheme:
//! heavy-edge matching coarsens the undirected projection, the coarsest graph
//! is bisected by greedy region growing from several random seeds, and
//! Fiduccia-Mattheyses passes refine the cut at every level on the way back
//! up. Edge weights are endorsement counts; the balance constraint counts
//! vertices.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EndorsementGraph, UndirectedGraph};
use crate::{Error, Result};

/// Graphs with at most this many vertices are bisected exactly.
pub const EXACT_BISECTION_LIMIT: usize = 16;

const COARSEST_SIZE: usize = 40;
const GROWING_TRIALS: usize = 8;
const MAX_FM_PASSES: usize = 10;
const FM_STALL_MOVES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

/// Side assignment of every vertex plus the hub sets of each side.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub side: Vec<Side>,
    /// Highest-degree vertices of side X, degree descending, ties by id.
    pub top_x: Vec<usize>,
    pub top_y: Vec<usize>,
    /// Directed endorsement edges whose endpoints lie on different sides.
    pub cut_size: usize,
    /// Endorsement count carried by the cut edges.
    pub cut_weight: u64,
    /// `min(|X|, |Y|) / |V|`.
    pub balance: f64,
    /// False when the balance constraint could not be met.
    pub feasible: bool,
}

impl Partition {
    fn from_assignment(graph: &EndorsementGraph, assignment: &[u8], min_balance: f64) -> Self {
        // Orient so that the smallest user id lands on X.
        let flip = assignment.first() == Some(&1);
        let side: Vec<Side> = assignment
            .iter()
            .map(|&a| if (a == 1) ^ flip { Side::Y } else { Side::X })
            .collect();
        let mut partition = Partition {
            side,
            top_x: Vec::new(),
            top_y: Vec::new(),
            cut_size: 0,
            cut_weight: 0,
            balance: 0.0,
            feasible: false,
        };
        partition.recompute_stats(graph);
        partition.feasible =
            graph.num_vertices() >= 2 && partition.balance + 1e-12 >= min_balance;
        partition
    }

    fn recompute_stats(&mut self, graph: &EndorsementGraph) {
        let crossing = graph
            .edges()
            .iter()
            .filter(|e| self.side[e.source] != self.side[e.target]);
        let (mut size, mut weight) = (0, 0);
        for e in crossing {
            size += 1;
            weight += e.count;
        }
        self.cut_size = size;
        self.cut_weight = weight;
        let xs = self.side.iter().filter(|s| **s == Side::X).count();
        let n = self.side.len().max(1);
        self.balance = xs.min(self.side.len() - xs) as f64 / n as f64;
    }

    /// Partition with the given labels, empty top sets and fresh cut
    /// statistics.
    pub fn from_sides(graph: &EndorsementGraph, side: Vec<Side>) -> Result<Self> {
        if side.len() != graph.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} vertices",
                side.len(),
                graph.num_vertices()
            )));
        }
        let mut partition = Partition {
            side,
            top_x: Vec::new(),
            top_y: Vec::new(),
            cut_size: 0,
            cut_weight: 0,
            balance: 0.0,
            feasible: true,
        };
        partition.recompute_stats(graph);
        Ok(partition)
    }

    pub fn side_of(&self, vertex: usize) -> Side {
        self.side[vertex]
    }

    pub fn members(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        self.side
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == side)
            .map(|(v, _)| v)
    }

    pub fn top(&self, side: Side) -> &[usize] {
        match side {
            Side::X => &self.top_x,
            Side::Y => &self.top_y,
        }
    }

    /// Fills `top_x` / `top_y` with the `k` highest-degree vertices per side.
    pub fn assign_top_sets(&mut self, graph: &EndorsementGraph, k: usize) -> Result<()> {
        let (x, y) = top_degree_sets(graph, self, k)?;
        self.top_x = x;
        self.top_y = y;
        Ok(())
    }

    pub fn to_json(&self, graph: &EndorsementGraph) -> String {
        let file = PartitionFile {
            side: self
                .side
                .iter()
                .enumerate()
                .map(|(v, s)| (graph.user(v).to_string(), *s))
                .collect(),
            top_x: self.top_x.iter().map(|&v| graph.user(v).to_string()).collect(),
            top_y: self.top_y.iter().map(|&v| graph.user(v).to_string()).collect(),
            cut_size: self.cut_size,
            cut_weight: self.cut_weight,
            balance: self.balance,
            feasible: self.feasible,
        };
        serde_json::to_string_pretty(&file).expect("partition serializes")
    }

    pub fn from_json(graph: &EndorsementGraph, json: &str) -> Result<Self> {
        let file: PartitionFile =
            serde_json::from_str(json).map_err(|e| Error::malformed("partition", e))?;
        if file.side.len() != graph.num_vertices() {
            return Err(Error::malformed(
                "partition",
                format!("{} labels for {} vertices", file.side.len(), graph.num_vertices()),
            ));
        }
        let mut side = vec![Side::X; graph.num_vertices()];
        for (user, s) in &file.side {
            let v = graph
                .vertex(user)
                .ok_or_else(|| Error::malformed("partition", format!("unknown user {user:?}")))?;
            side[v] = *s;
        }
        let resolve = |users: &[String], want: Side| -> Result<Vec<usize>> {
            let mut seen = HashSet::new();
            users
                .iter()
                .map(|u| {
                    let v = graph
                        .vertex(u)
                        .filter(|&v| side[v] == want && seen.insert(v))
                        .ok_or_else(|| {
                            Error::malformed("partition", format!("bad top-set member {u:?}"))
                        })?;
                    Ok(v)
                })
                .collect()
        };
        let top_x = resolve(&file.top_x, Side::X)?;
        let top_y = resolve(&file.top_y, Side::Y)?;
        let mut partition = Partition {
            side,
            top_x,
            top_y,
            cut_size: 0,
            cut_weight: 0,
            balance: 0.0,
            feasible: file.feasible,
        };
        partition.recompute_stats(graph);
        if partition.cut_size != file.cut_size || partition.cut_weight != file.cut_weight {
            return Err(Error::malformed("partition", "cut statistics do not match labels"));
        }
        Ok(partition)
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    side: BTreeMap<String, Side>,
    top_x: Vec<String>,
    top_y: Vec<String>,
    cut_size: usize,
    #[serde(default)]
    cut_weight: u64,
    #[serde(default)]
    balance: f64,
    #[serde(default = "default_true")]
    feasible: bool,
}

fn default_true() -> bool {
    true
}

/// The `k` highest-degree vertices of each side, degree descending with ties
/// broken by ascending user id.
pub fn top_degree_sets(
    graph: &EndorsementGraph,
    partition: &Partition,
    k: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let top = |side: Side| {
        let mut members: Vec<usize> = partition.members(side).collect();
        members.sort_by_key(|&v| (Reverse(graph.degree(v)), v));
        members.truncate(k);
        members
    };
    Ok((top(Side::X), top(Side::Y)))
}

fn check_balance(min_balance: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&min_balance) {
        return Err(Error::InvalidArgument(format!(
            "min_balance must lie in [0, 1], got {min_balance}"
        )));
    }
    Ok(())
}

/// Smallest admissible side weight for `n` unit vertices.
fn lower_bound(n: usize, min_balance: f64) -> i64 {
    let lo = (min_balance * n as f64 - 1e-9).ceil().max(1.0) as i64;
    lo.min((n / 2) as i64)
}

/// Bisects the undirected projection of `graph`, minimizing the weighted cut
/// subject to `min(|X|,|Y|) >= min_balance * |V|`.
///
/// Deterministic for a given `seed`. When the constraint cannot be met the
/// most balanced minimum-cut partition found is returned with `feasible`
/// cleared. The returned partition has empty top sets; see
/// [`Partition::assign_top_sets`].
pub fn bisect(graph: &EndorsementGraph, seed: u64, min_balance: f64) -> Result<Partition> {
    check_balance(min_balance)?;
    let n = graph.num_vertices();
    if n <= EXACT_BISECTION_LIMIT {
        return bisect_exact(graph, min_balance);
    }
    let level = Level::from_graph(&graph.undirected());
    let assignment = multilevel(&level, seed, lower_bound(n, min_balance));
    Ok(Partition::from_assignment(graph, &assignment, min_balance))
}

/// Exhaustive bisection; the reference used for small graphs and in tests.
pub fn bisect_exact(graph: &EndorsementGraph, min_balance: f64) -> Result<Partition> {
    check_balance(min_balance)?;
    let n = graph.num_vertices();
    if n > EXACT_BISECTION_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "exact bisection is limited to {EXACT_BISECTION_LIMIT} vertices, got {n}"
        )));
    }
    let level = Level::from_graph(&graph.undirected());
    let assignment = exhaustive(&level, lower_bound(n, min_balance));
    Ok(Partition::from_assignment(graph, &assignment, min_balance))
}

/// Working graph for one level of the multilevel hierarchy.
#[derive(Debug, Clone)]
struct Level {
    offsets: Vec<usize>,
    adj: Vec<usize>,
    ewgt: Vec<i64>,
    vwgt: Vec<i64>,
}

impl Level {
    fn from_graph(g: &UndirectedGraph) -> Self {
        let n = g.num_vertices();
        Self::from_edges(vec![1; n], g.edges().map(|(u, v, w)| (u, v, w as i64)).collect())
    }

    /// `edges` may contain duplicates in either orientation; they are merged.
    fn from_edges(vwgt: Vec<i64>, mut edges: Vec<(usize, usize, i64)>) -> Self {
        let n = vwgt.len();
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        }
        edges.sort_unstable();
        let mut merged: Vec<(usize, usize, i64)> = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }
        let mut deg = vec![0usize; n];
        for &(u, v, _) in &merged {
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for u in 0..n {
            offsets[u + 1] = offsets[u] + deg[u];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![0usize; offsets[n]];
        let mut ewgt = vec![0i64; offsets[n]];
        for &(u, v, w) in &merged {
            adj[fill[u]] = v;
            ewgt[fill[u]] = w;
            fill[u] += 1;
            adj[fill[v]] = u;
            ewgt[fill[v]] = w;
            fill[v] += 1;
        }
        Self {
            offsets,
            adj,
            ewgt,
            vwgt,
        }
    }

    fn n(&self) -> usize {
        self.vwgt.len()
    }

    fn total(&self) -> i64 {
        self.vwgt.iter().sum()
    }

    fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.adj[r.clone()].iter().copied().zip(self.ewgt[r].iter().copied())
    }

    fn cut(&self, part: &[u8]) -> i64 {
        (0..self.n())
            .flat_map(|u| self.neighbors(u).map(move |(v, w)| (u, v, w)))
            .filter(|&(u, v, _)| u < v && part[u] != part[v])
            .map(|(_, _, w)| w)
            .sum()
    }

    fn side_weights(&self, part: &[u8]) -> [i64; 2] {
        let mut w = [0i64; 2];
        for (u, &p) in part.iter().enumerate() {
            w[p as usize] += self.vwgt[u];
        }
        w
    }
}

/// Ordering key for candidate partitions: balance violation, then cut, then
/// imbalance. Smaller is better.
fn quality(level: &Level, part: &[u8], lo: i64) -> (i64, i64, i64) {
    let w = level.side_weights(part);
    let violation = (lo - w[0].min(w[1])).max(0);
    (violation, level.cut(part), (w[0] - w[1]).abs())
}

fn exhaustive(level: &Level, lo: i64) -> Vec<u8> {
    let n = level.n();
    if n <= 1 {
        return vec![0; n];
    }
    let edges: Vec<(usize, usize, i64)> = (0..n)
        .flat_map(|u| level.neighbors(u).map(move |(v, w)| (u, v, w)))
        .filter(|&(u, v, _)| u < v)
        .collect();
    let total = level.total();
    let mut best: Option<((i64, i64, i64), u32)> = None;
    // Vertex 0 stays on side 0; bit i-1 of the mask places vertex i.
    for mask in 0u32..(1u32 << (n - 1)) {
        let on_y = |v: usize| v > 0 && mask & (1 << (v - 1)) != 0;
        let wy: i64 = (1..n).filter(|&v| on_y(v)).map(|v| level.vwgt[v]).sum();
        let wx = total - wy;
        let cut: i64 = edges
            .iter()
            .filter(|&&(u, v, _)| on_y(u) != on_y(v))
            .map(|&(_, _, w)| w)
            .sum();
        let key = ((lo - wx.min(wy)).max(0), cut, (wx - wy).abs());
        if best.is_none_or(|(b, _)| key < b) {
            best = Some((key, mask));
        }
    }
    let (_, mask) = best.expect("at least one mask");
    (0..n)
        .map(|v| u8::from(v > 0 && mask & (1 << (v - 1)) != 0))
        .collect()
}

fn multilevel(fine: &Level, seed: u64, lo: i64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = fine.total();
    let max_vwgt = ((total as f64 * 1.5 / COARSEST_SIZE as f64).ceil() as i64).max(1);

    let mut levels = vec![fine.clone()];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().unwrap().n() > COARSEST_SIZE {
        let current = levels.last().unwrap();
        let (coarse, map) = coarsen(current, &mut rng, max_vwgt);
        if coarse.n() * 10 > current.n() * 9 {
            break;
        }
        maps.push(map);
        levels.push(coarse);
    }

    let coarsest = levels.last().unwrap();
    let mut best: Option<((i64, i64, i64), Vec<u8>)> = None;
    for _ in 0..GROWING_TRIALS {
        let mut part = grow_bisection(coarsest, &mut rng);
        fm_refine(coarsest, &mut part, lo);
        let key = quality(coarsest, &part, lo);
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            best = Some((key, part));
        }
    }
    let mut part = best.expect("at least one trial").1;

    for depth in (0..maps.len()).rev() {
        let map = &maps[depth];
        part = map.iter().map(|&c| part[c]).collect();
        fm_refine(&levels[depth], &mut part, lo);
    }
    part
}

/// Heavy-edge matching. Returns the coarse level and the fine-to-coarse map.
fn coarsen(level: &Level, rng: &mut ChaCha8Rng, max_vwgt: i64) -> (Level, Vec<usize>) {
    let n = level.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &u in &order {
        if mate[u] != usize::MAX {
            continue;
        }
        let mut pick = u;
        let mut pick_key = (i64::MIN, i64::MIN, Reverse(usize::MAX));
        for (v, w) in level.neighbors(u) {
            if mate[v] != usize::MAX || level.vwgt[u] + level.vwgt[v] > max_vwgt {
                continue;
            }
            let key = (w, -level.vwgt[v], Reverse(v));
            if key > pick_key {
                pick_key = key;
                pick = v;
            }
        }
        mate[u] = pick;
        mate[pick] = u;
    }

    let mut map = vec![usize::MAX; n];
    let mut vwgt = Vec::new();
    for u in 0..n {
        if map[u] == usize::MAX {
            let c = vwgt.len();
            map[u] = c;
            map[mate[u]] = c;
            let w = if mate[u] == u {
                level.vwgt[u]
            } else {
                level.vwgt[u] + level.vwgt[mate[u]]
            };
            vwgt.push(w);
        }
    }
    let edges = (0..n)
        .flat_map(|u| level.neighbors(u).map(move |(v, w)| (u, v, w)))
        .filter(|&(u, v, _)| u < v)
        .map(|(u, v, w)| (map[u], map[v], w))
        .collect();
    (Level::from_edges(vwgt, edges), map)
}

/// Greedy graph growing: side 1 grows from a random vertex, always absorbing
/// the frontier vertex with the best cut gain, until it holds half the weight.
fn grow_bisection(level: &Level, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = level.n();
    let mut part = vec![0u8; n];
    if n < 2 {
        return part;
    }
    let target = level.total() / 2;
    let mut gain = vec![0i64; n];
    for (u, g) in gain.iter_mut().enumerate() {
        *g = -level.neighbors(u).map(|(_, w)| w).sum::<i64>();
    }
    let mut heap: BinaryHeap<(i64, Reverse<usize>)> = BinaryHeap::new();
    let mut grown = 0i64;
    while grown < target {
        let next = loop {
            match heap.pop() {
                Some((g, Reverse(v))) if part[v] == 0 && g == gain[v] => break Some(v),
                Some(_) => continue,
                None => break None,
            }
        };
        let v = match next {
            Some(v) => v,
            None => {
                let remaining: Vec<usize> = (0..n).filter(|&v| part[v] == 0).collect();
                remaining[rng.random_range(0..remaining.len())]
            }
        };
        if grown > 0 && grown + level.vwgt[v] > target + level.vwgt[v] / 2 {
            break;
        }
        part[v] = 1;
        grown += level.vwgt[v];
        for (u, w) in level.neighbors(v) {
            if part[u] == 0 {
                gain[u] += 2 * w;
                heap.push((gain[u], Reverse(u)));
            }
        }
    }
    part
}

/// Fiduccia-Mattheyses refinement with rollback to the best prefix of moves.
fn fm_refine(level: &Level, part: &mut [u8], lo: i64) {
    let n = level.n();
    if n < 2 {
        return;
    }
    for _ in 0..MAX_FM_PASSES {
        let mut weights = level.side_weights(part);
        let mut gain = vec![0i64; n];
        let mut heaps: [BinaryHeap<(i64, Reverse<usize>)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
        for u in 0..n {
            gain[u] = level
                .neighbors(u)
                .map(|(v, w)| if part[v] == part[u] { -w } else { w })
                .sum();
            heaps[part[u] as usize].push((gain[u], Reverse(u)));
        }
        let mut locked = vec![false; n];
        let state = |w: &[i64; 2], cut_delta: i64| {
            ((lo - w[0].min(w[1])).max(0), -cut_delta, (w[0] - w[1]).abs())
        };
        let mut cumulative = 0i64;
        let mut best_state = state(&weights, 0);
        let mut best_len = 0usize;
        let mut moves: Vec<usize> = Vec::new();

        loop {
            let mut candidate: Option<(i64, usize)> = None;
            for from in 0..2 {
                let heap = &mut heaps[from];
                while let Some(&(g, Reverse(v))) = heap.peek() {
                    if locked[v] || part[v] as usize != from || g != gain[v] {
                        heap.pop();
                    } else {
                        break;
                    }
                }
                let Some(&(g, Reverse(v))) = heap.peek() else {
                    continue;
                };
                let after = weights[from] - level.vwgt[v];
                let other_after = weights[1 - from] + level.vwgt[v];
                let allowed = after >= lo || after.min(other_after) > weights[0].min(weights[1]);
                if !allowed {
                    continue;
                }
                let better = match candidate {
                    None => true,
                    Some((cg, cv)) => {
                        g > cg || (g == cg && weights[from] > weights[part[cv] as usize])
                    }
                };
                if better {
                    candidate = Some((g, v));
                }
            }
            let Some((g, v)) = candidate else { break };
            let from = part[v] as usize;
            heaps[from].pop();
            part[v] = 1 - part[v];
            weights[from] -= level.vwgt[v];
            weights[1 - from] += level.vwgt[v];
            locked[v] = true;
            cumulative += g;
            moves.push(v);
            for (u, w) in level.neighbors(v) {
                if locked[u] {
                    continue;
                }
                if part[u] == part[v] {
                    gain[u] -= 2 * w;
                } else {
                    gain[u] += 2 * w;
                }
                heaps[part[u] as usize].push((gain[u], Reverse(u)));
            }
            let s = state(&weights, cumulative);
            if s < best_state {
                best_state = s;
                best_len = moves.len();
            } else if moves.len() - best_len > FM_STALL_MOVES {
                break;
            }
        }
        for &v in moves[best_len..].iter().rev() {
            part[v] = 1 - part[v];
        }
        if best_len == 0 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two 4-cliques {a0..a3}, {b0..b3} joined by the edge a0 - b0.
    pub(crate) fn two_cliques() -> EndorsementGraph {
        let mut edges = Vec::new();
        for side in ["a", "b"] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((format!("{side}{i}"), format!("{side}{j}"), 5));
                }
            }
        }
        edges.push(("a0".into(), "b0".into(), 5));
        EndorsementGraph::from_edges(5, edges).unwrap()
    }

    #[test]
    fn two_cliques_split_at_bridge() {
        let g = two_cliques();
        let p = bisect(&g, 1, 0.25).unwrap();
        assert_eq!(p.cut_size, 1);
        assert!(p.feasible);
        let side_a = p.side[g.vertex("a1").unwrap()];
        for i in 0..4 {
            assert_eq!(p.side[g.vertex(&format!("a{i}")).unwrap()], side_a);
            assert_ne!(p.side[g.vertex(&format!("b{i}")).unwrap()], side_a);
        }
    }

    #[test]
    fn single_edge() {
        let g = EndorsementGraph::from_edges(1, [("a", "b", 3)]).unwrap();
        let p = bisect(&g, 0, 0.25).unwrap();
        assert_eq!(p.side, vec![Side::X, Side::Y]);
        assert_eq!(p.cut_size, 1);
        assert_eq!(p.balance, 0.5);
    }

    #[test]
    fn infeasible_balance_is_flagged() {
        let g = EndorsementGraph::from_edges(1, [("a", "b", 3), ("b", "c", 3)]).unwrap();
        let p = bisect(&g, 0, 0.5).unwrap();
        assert!(!p.feasible);
        assert!(p.balance > 0.0);
        assert!(bisect(&g, 0, 1.5).is_err());
    }

    #[test]
    fn top_sets_by_degree_then_id() {
        // Side X = {a, b, c} with degrees a:3, b:2, c:2 (plus the bridge).
        let g = EndorsementGraph::from_edges(
            1,
            [("a", "b", 1), ("a", "c", 1), ("b", "c", 1), ("a", "d", 1), ("d", "e", 1), ("e", "f", 1), ("d", "f", 1)],
        )
        .unwrap();
        let p = bisect(&g, 0, 0.25).unwrap();
        assert_eq!(p.cut_size, 1);
        let (x, _) = top_degree_sets(&g, &p, 2).unwrap();
        let names: Vec<_> = x.iter().map(|&v| g.user(v)).collect();
        assert_eq!(names, vec!["a", "b"]);
        let (x, y) = top_degree_sets(&g, &p, 10).unwrap();
        assert_eq!(x.len() + y.len(), 6);
        assert!(top_degree_sets(&g, &p, 0).is_err());
    }

    #[test]
    fn bridge_endpoints_are_hubs() {
        let g = two_cliques();
        let mut p = bisect(&g, 0, 0.25).unwrap();
        p.assign_top_sets(&g, 1).unwrap();
        let mut hubs = vec![g.user(p.top_x[0]), g.user(p.top_y[0])];
        hubs.sort();
        assert_eq!(hubs, vec!["a0", "b0"]);
    }

    #[test]
    fn json_round_trip() {
        let g = two_cliques();
        let mut p = bisect(&g, 0, 0.25).unwrap();
        p.assign_top_sets(&g, 2).unwrap();
        let json = p.to_json(&g);
        assert_eq!(Partition::from_json(&g, &json).unwrap(), p);
        let tampered = json.replace("\"cut_size\": 1", "\"cut_size\": 2");
        assert!(Partition::from_json(&g, &tampered).is_err());
    }

    fn ring_of_cliques(cliques: usize, size: usize) -> EndorsementGraph {
        let mut edges = Vec::new();
        for c in 0..cliques {
            for i in 0..size {
                for j in (i + 1)..size {
                    edges.push((format!("c{c:02}v{i:02}"), format!("c{c:02}v{j:02}"), 5));
                }
            }
            let next = (c + 1) % cliques;
            edges.push((format!("c{c:02}v00"), format!("c{next:02}v01"), 5));
        }
        EndorsementGraph::from_edges(5, edges).unwrap()
    }

    #[test]
    fn multilevel_finds_ring_cut() {
        // Eight 6-cliques in a ring: the best balanced cut severs two links.
        let g = ring_of_cliques(8, 6);
        for seed in 0..5 {
            let p = bisect(&g, seed, 0.25).unwrap();
            assert_eq!(p.cut_size, 2, "seed {seed}");
            assert!(p.feasible);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let g = ring_of_cliques(6, 5);
        assert_eq!(bisect(&g, 9, 0.25).unwrap(), bisect(&g, 9, 0.25).unwrap());
    }

    #[test]
    fn beats_alternating_strawman() {
        let g = ring_of_cliques(5, 5);
        let p = bisect(&g, 3, 0.25).unwrap();
        let strawman = g
            .edges()
            .iter()
            .filter(|e| e.source % 2 != e.target % 2)
            .count();
        assert!(p.cut_size <= strawman);
    }
}
