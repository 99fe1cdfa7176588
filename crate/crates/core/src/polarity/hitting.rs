//! Expected hitting times of weighted random walks.
//!
//! The walk moves on the undirected projection of the endorsement graph with
//! transition probability proportional to edge weight. For a target set `T`
//! the expected number of steps `l(u)` to first reach `T` satisfies
//! `l(u) = 0` on `T` and `l(u) = 1 + sum_v P(u,v) l(v)` elsewhere.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::EndorsementGraph;
use crate::{Error, Result};

/// Largest admissible max-norm residual of the exact solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Below this survival probability a walk plays Russian roulette: it stops, or
/// continues with its survival reset to the threshold.
const ROULETTE_THRESHOLD: f64 = 1e-3;

/// Weighted undirected graph the walks move on.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkGraph {
    offsets: Vec<usize>,
    adj: Vec<usize>,
    weight: Vec<f64>,
    strength: Vec<f64>,
}

impl WalkGraph {
    pub fn from_graph(graph: &EndorsementGraph) -> Self {
        let u = graph.undirected();
        Self::from_edges(
            graph.num_vertices(),
            u.edges().map(|(a, b, w)| (a, b, w as f64)),
        )
    }

    /// Builds the walk graph from undirected `(u, v, weight)` edges; parallel
    /// edges are merged by summing their weights.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u == v || w <= 0.0 {
                continue;
            }
            lists[u].push((v, w));
            lists[v].push((u, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adj = Vec::new();
        let mut weight = Vec::new();
        let mut strength = Vec::with_capacity(n);
        offsets.push(0);
        for list in lists.iter_mut() {
            list.sort_by(|a, b| a.0.cmp(&b.0));
            let mut total = 0.0;
            let start = adj.len();
            for &(v, w) in list.iter() {
                if adj.len() > start && *adj.last().unwrap() == v {
                    *weight.last_mut().unwrap() += w;
                } else {
                    adj.push(v);
                    weight.push(w);
                }
                total += w;
            }
            strength.push(total);
            offsets.push(adj.len());
        }
        Self {
            offsets,
            adj,
            weight,
            strength,
        }
    }

    /// Copy of the graph with `w` added to the undirected edge `(u, v)`,
    /// creating it when absent.
    pub fn with_extra_edge(&self, u: usize, v: usize, w: f64) -> Self {
        let n = self.num_vertices();
        let edges = (0..n)
            .flat_map(|a| self.neighbors(a).map(move |(b, x)| (a, b, x)))
            .filter(|&(a, b, _)| a < b)
            .chain(std::iter::once((u, v, w)));
        Self::from_edges(n, edges.collect::<Vec<_>>())
    }

    pub fn num_vertices(&self) -> usize {
        self.strength.len()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.adj[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    /// Total weight of the edges at `u`.
    pub fn strength(&self, u: usize) -> f64 {
        self.strength[u]
    }

    /// Vertices connected to some target.
    fn reachable(&self, targets: &[bool]) -> Vec<bool> {
        let mut seen = targets.to_vec();
        let mut queue: VecDeque<usize> = (0..self.num_vertices()).filter(|&v| targets[v]).collect();
        while let Some(u) = queue.pop_front() {
            for (v, _) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HittingMethod {
    Exact,
    MonteCarlo,
}

/// Per-vertex expected steps to the target set.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimes {
    pub values: Vec<f64>,
    pub method: HittingMethod,
    /// Walks per vertex (Monte Carlo only).
    pub walks: usize,
    /// Step cap per walk (Monte Carlo) or the value given to unreachable
    /// vertices (exact).
    pub max_len: usize,
    /// Exact: vertex cannot reach the targets and holds the cap.
    /// Monte Carlo: more than 1% of its walks were truncated.
    pub flagged: Vec<bool>,
    /// Max-norm residual of the exact solve; zero for Monte Carlo.
    pub residual: f64,
}

fn target_mask(n: usize, targets: &[usize]) -> Result<Vec<bool>> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("target set is empty".into()));
    }
    let mut mask = vec![false; n];
    for &t in targets {
        if t >= n {
            return Err(Error::InvalidArgument(format!("target {t} out of range")));
        }
        mask[t] = true;
    }
    Ok(mask)
}

/// Solves the absorbing-chain system exactly (to [`RESIDUAL_TOLERANCE`]).
///
/// Multiplying each equation by the vertex strength gives the grounded
/// Laplacian system `(D - W) l = d` on the non-target vertices, which is
/// symmetric positive definite on every component that touches a target and
/// is solved with Jacobi-preconditioned conjugate gradients. Vertices that
/// cannot reach any target receive `cap` and are flagged.
pub fn hitting_times_exact(graph: &WalkGraph, targets: &[usize], cap: f64) -> Result<HittingTimes> {
    let n = graph.num_vertices();
    let is_target = target_mask(n, targets)?;
    let reachable = graph.reachable(&is_target);

    // Unknowns: reachable non-target vertices.
    let mut slot = vec![usize::MAX; n];
    let mut free = Vec::new();
    for u in 0..n {
        if reachable[u] && !is_target[u] {
            slot[u] = free.len();
            free.push(u);
        }
    }
    let m = free.len();
    let diag: Vec<f64> = free.iter().map(|&u| graph.strength(u)).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &u) in free.iter().enumerate() {
            let mut acc = diag[i] * x[i];
            for (v, w) in graph.neighbors(u) {
                if slot[v] != usize::MAX {
                    acc -= w * x[slot[v]];
                }
            }
            out[i] = acc;
        }
    };
    // Residual of the walk equations, l(u) - 1 - sum_v P(u,v) l(v).
    let walk_residual = |x: &[f64]| {
        let mut ax = vec![0.0; m];
        apply(x, &mut ax);
        ax.iter()
            .zip(&diag)
            .map(|(a, d)| ((a - d) / d).abs())
            .fold(0.0f64, f64::max)
    };

    let mut x = vec![0.0; m];
    let mut residual = if m == 0 { 0.0 } else { walk_residual(&x) };
    let max_iter = (20 * m).max(1000);
    let mut iterations = 0usize;
    // Restart from the current iterate a few times in case the recursive
    // residual drifts from the true one.
    for _restart in 0..4 {
        if residual <= RESIDUAL_TOLERANCE {
            break;
        }
        let mut ax = vec![0.0; m];
        apply(&x, &mut ax);
        let mut r: Vec<f64> = diag.iter().zip(&ax).map(|(d, a)| d - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; m];
        for _ in 0..max_iter {
            iterations += 1;
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 || !pap.is_finite() {
                break;
            }
            let alpha = rz / pap;
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let scaled = r
                .iter()
                .zip(&diag)
                .map(|(r, d)| (r / d).abs())
                .fold(0.0f64, f64::max);
            if scaled <= RESIDUAL_TOLERANCE * 0.01 {
                break;
            }
            for i in 0..m {
                z[i] = r[i] / diag[i];
            }
            let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
        residual = walk_residual(&x);
    }
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::SolverDiverged {
            residual,
            iterations,
        });
    }

    let mut values = vec![0.0; n];
    let mut flagged = vec![false; n];
    for u in 0..n {
        if is_target[u] {
            continue;
        }
        if reachable[u] {
            values[u] = x[slot[u]];
        } else {
            values[u] = cap;
            flagged[u] = true;
        }
    }
    Ok(HittingTimes {
        values,
        method: HittingMethod::Exact,
        walks: 0,
        max_len: cap as usize,
        flagged,
        residual,
    })
}

/// Per-vertex sampling tables for walks that are conditioned to avoid the
/// target set at every step.
struct ConditionedSteps {
    /// Probability that one step from `u` lands in the target set.
    absorb: Vec<f64>,
    offsets: Vec<usize>,
    next: Vec<usize>,
    /// Cumulative weights over the non-target neighbours.
    cumulative: Vec<f64>,
}

impl ConditionedSteps {
    fn new(graph: &WalkGraph, is_target: &[bool]) -> Self {
        let n = graph.num_vertices();
        let mut absorb = vec![0.0; n];
        let mut offsets = vec![0];
        let mut next = Vec::new();
        let mut cumulative = Vec::new();
        for u in 0..n {
            let mut to_target = 0.0;
            let mut acc = 0.0;
            for (v, w) in graph.neighbors(u) {
                if is_target[v] {
                    to_target += w;
                } else {
                    acc += w;
                    next.push(v);
                    cumulative.push(acc);
                }
            }
            let s = graph.strength(u);
            absorb[u] = if s > 0.0 { to_target / s } else { 0.0 };
            offsets.push(next.len());
        }
        Self {
            absorb,
            offsets,
            next,
            cumulative,
        }
    }

    fn step(&self, u: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let r = self.offsets[u]..self.offsets[u + 1];
        let cumulative = &self.cumulative[r.clone()];
        let total = *cumulative.last()?;
        let x = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1);
        Some(self.next[r][i])
    }
}

/// Monte Carlo estimate of hitting times from `walks` independent walks per
/// vertex, each capped at `max_len` steps.
///
/// Each walk is the Rao-Blackwellised version of a plain walk: instead of
/// sampling whether the next step is absorbed, the walk carries its survival
/// probability `s` and always moves to a non-target neighbour. Its
/// contribution `sum_t s_t` is the conditional expectation of the plain
/// walk's truncated length given the visited non-target path, so the mean is
/// unchanged while the variance drops. Once `s` is small the walk is ended by
/// Russian roulette, which keeps the estimate unbiased. A walk from a vertex
/// that cannot reach the targets keeps `s = 1` and contributes exactly
/// `max_len`.
///
/// The walks from `u`'s neighbours are independent samples of the rest of a
/// walk after its first step, so `1 + sum_v P(u,v) l_v` is a second unbiased
/// estimate of `l(u)`; the result averages it with `u`'s own walks.
///
/// The random stream of vertex `u` is stream `u` of a ChaCha generator seeded
/// with `seed`, so the result does not depend on the thread count.
pub fn hitting_times_mc(
    graph: &WalkGraph,
    targets: &[usize],
    walks: usize,
    max_len: usize,
    seed: u64,
) -> Result<HittingTimes> {
    if walks == 0 || max_len == 0 {
        return Err(Error::InvalidArgument("walks and max_len must be at least 1".into()));
    }
    let n = graph.num_vertices();
    let is_target = target_mask(n, targets)?;
    let steps = ConditionedSteps::new(graph, &is_target);

    let own: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|start| {
            if is_target[start] {
                return (0.0, false);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start as u64);
            let mut total = 0.0;
            let mut truncated = 0usize;
            for _ in 0..walks {
                let mut at = start;
                let mut survival = 1.0;
                let mut length = 0.0;
                let mut taken = 0usize;
                loop {
                    length += survival;
                    taken += 1;
                    survival *= 1.0 - steps.absorb[at];
                    if survival < ROULETTE_THRESHOLD {
                        if survival <= 0.0 || rng.random::<f64>() * ROULETTE_THRESHOLD >= survival {
                            break;
                        }
                        survival = ROULETTE_THRESHOLD;
                    }
                    if taken == max_len {
                        truncated += 1;
                        break;
                    }
                    match steps.step(at, &mut rng) {
                        Some(next) => at = next,
                        None => break,
                    }
                }
                total += length;
            }
            (total / walks as f64, truncated * 100 > walks)
        })
        .collect();

    let values = (0..n)
        .map(|u| {
            let (mine, flagged) = own[u];
            if is_target[u] || flagged || graph.strength(u) <= 0.0 {
                return mine;
            }
            let s = graph.strength(u);
            let first_step: f64 = graph.neighbors(u).map(|(v, w)| w / s * own[v].0).sum();
            0.5 * (mine + 1.0 + first_step)
        })
        .collect();

    Ok(HittingTimes {
        values,
        method: HittingMethod::MonteCarlo,
        walks,
        max_len,
        flagged: own.iter().map(|e| e.1).collect(),
        residual: 0.0,
    })
}
