//! Weighted rank aggregation under the Spearman footrule.
//!
//! Given lists `L_1..L_k` with weights `w_i`, find the ordered selection
//! `delta` of `n` items from the union of the lists minimizing
//! `phi(delta) = sum_i w_i * d(delta, L_i)`.

mod ce;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use crate::{Error, Result};

pub use ce::{aggregate_ce, CeConfig};

/// Largest universe [`aggregate_bruteforce`] accepts.
pub const BRUTEFORCE_LIMIT: usize = 8;

/// Relative tolerance under which two objective values count as equal.
pub(crate) const PHI_TOLERANCE: f64 = 1e-9;

pub(crate) fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - PHI_TOLERANCE * best.abs().max(1.0)
}

fn positions<'a, T: Eq + Hash>(list: &'a [T], what: &'static str) -> Result<HashMap<&'a T, u64>> {
    let mut rank = HashMap::with_capacity(list.len());
    for (i, x) in list.iter().enumerate() {
        if rank.insert(x, i as u64 + 1).is_some() {
            return Err(Error::malformed(what, "duplicate item"));
        }
    }
    Ok(rank)
}

/// Footrule distance between two partial rankings.
///
/// Items of `delta` missing from `l` take rank `|l| + 1` there, and items of
/// `l` missing from `delta` take rank `|delta| + 1`. Ranks are 1-based.
pub fn footrule_distance<T: Eq + Hash>(delta: &[T], l: &[T]) -> Result<u64> {
    let in_delta = positions(delta, "ranking")?;
    let in_l = positions(l, "ranking")?;
    let missing_l = l.len() as u64 + 1;
    let missing_delta = delta.len() as u64 + 1;
    let forward: u64 = in_delta
        .iter()
        .map(|(x, &r)| r.abs_diff(in_l.get(x).copied().unwrap_or(missing_l)))
        .sum();
    let backward: u64 = in_l
        .iter()
        .filter(|(x, _)| !in_delta.contains_key(*x))
        .map(|(_, &r)| r.abs_diff(missing_delta))
        .sum();
    Ok(forward + backward)
}

/// Lists, normalized weights, the universe (sorted union of the truncated
/// lists) and the output length.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationProblem {
    lists: Vec<Vec<usize>>,
    /// `ranks[i][x]`: 1-based rank of item `x` in list `i`, 0 when absent.
    ranks: Vec<Vec<u64>>,
    weights: Vec<f64>,
    universe: Vec<String>,
    output_len: usize,
}

impl AggregationProblem {
    /// Truncates each list to `m` items and normalizes the weights to sum 1.
    pub fn new<S: AsRef<str>>(
        lists: &[Vec<S>],
        weights: &[f64],
        m: usize,
        output_len: usize,
    ) -> Result<Self> {
        if lists.len() != weights.len() || lists.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} lists but {} weights",
                lists.len(),
                weights.len()
            )));
        }
        let weights = normalize_weights(weights)?;
        let truncated: Vec<Vec<&str>> = lists
            .iter()
            .map(|l| l.iter().take(m).map(AsRef::as_ref).collect())
            .collect();
        for l in &truncated {
            let mut seen = HashSet::new();
            if let Some(dup) = l.iter().find(|x| !seen.insert(**x)) {
                return Err(Error::DuplicateItem(dup.to_string()));
            }
        }
        let universe: Vec<String> = truncated
            .iter()
            .flatten()
            .map(|s| s.to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if output_len == 0 || output_len > universe.len() {
            return Err(Error::InvalidArgument(format!(
                "output length {output_len} outside 1..={}",
                universe.len()
            )));
        }
        let index: HashMap<&str, usize> =
            universe.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lists: Vec<Vec<usize>> = truncated
            .iter()
            .map(|l| l.iter().map(|x| index[x]).collect())
            .collect();
        let ranks = lists
            .iter()
            .map(|l| {
                let mut r = vec![0; universe.len()];
                for (i, &x) in l.iter().enumerate() {
                    r[x] = i as u64 + 1;
                }
                r
            })
            .collect();
        Ok(Self {
            lists,
            ranks,
            weights,
            universe,
            output_len,
        })
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn num_lists(&self) -> usize {
        self.lists.len()
    }

    fn to_indices<S: AsRef<str>>(&self, delta: &[S]) -> Result<Vec<usize>> {
        delta
            .iter()
            .map(|x| {
                self.universe
                    .binary_search_by(|u| u.as_str().cmp(x.as_ref()))
                    .map_err(|_| Error::InvalidArgument(format!("{:?} is not in the universe", x.as_ref())))
            })
            .collect()
    }

    pub fn names(&self, delta: &[usize]) -> Vec<String> {
        delta.iter().map(|&i| self.universe[i].clone()).collect()
    }

    /// `phi(delta)`.
    pub fn objective<S: AsRef<str>>(&self, delta: &[S]) -> Result<f64> {
        if delta.len() != self.output_len {
            return Err(Error::InvalidArgument(format!(
                "ranking has {} items, expected {}",
                delta.len(),
                self.output_len
            )));
        }
        let idx = self.to_indices(delta)?;
        Ok(self.contributions_idx(&idx)?.iter().sum())
    }

    /// `w_i * d(delta, L_i)` per list.
    pub fn contributions<S: AsRef<str>>(&self, delta: &[S]) -> Result<Vec<f64>> {
        self.contributions_idx(&self.to_indices(delta)?)
    }

    fn contributions_idx(&self, delta: &[usize]) -> Result<Vec<f64>> {
        self.lists
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| Ok(w * footrule_distance(delta, l)? as f64))
            .collect()
    }

    /// Objective on universe indices; `scratch` must hold `universe.len()`
    /// zeros and is left zeroed.
    pub(crate) fn phi_idx(&self, delta: &[usize], scratch: &mut [u64]) -> f64 {
        for (p, &x) in delta.iter().enumerate() {
            scratch[x] = p as u64 + 1;
        }
        let missing_delta = delta.len() as u64 + 1;
        let mut phi = 0.0;
        for ((l, ranks), w) in self.lists.iter().zip(&self.ranks).zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let missing_l = l.len() as u64 + 1;
            let mut d = 0u64;
            for (r, &x) in l.iter().enumerate() {
                let p = match scratch[x] {
                    0 => missing_delta,
                    p => p,
                };
                d += (r as u64 + 1).abs_diff(p);
            }
            for (p, &x) in delta.iter().enumerate() {
                if ranks[x] == 0 {
                    d += (p as u64 + 1).abs_diff(missing_l);
                }
            }
            phi += w * d as f64;
        }
        for &x in delta {
            scratch[x] = 0;
        }
        phi
    }
}

/// Non-negative finite weights scaled to sum 1.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// An aggregated ranking and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub delta: Vec<String>,
    pub phi: f64,
}

/// Exact minimum over every ordered selection of `output_len` items.
///
/// Selections are enumerated in lexicographic order of item ids and a later
/// one only replaces the incumbent when strictly better, so the
/// lexicographically least minimizer is returned.
pub fn aggregate_bruteforce(problem: &AggregationProblem) -> Result<Aggregate> {
    let size = problem.universe.len();
    if size > BRUTEFORCE_LIMIT {
        return Err(Error::UniverseTooLarge {
            size,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let n = problem.output_len;
    let mut scratch = vec![0u64; size];
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; size];
    let mut best: Option<(Vec<usize>, f64)> = None;

    fn walk(
        problem: &AggregationProblem,
        n: usize,
        current: &mut Vec<usize>,
        used: &mut [bool],
        scratch: &mut [u64],
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if current.len() == n {
            let phi = problem.phi_idx(current, scratch);
            if best.as_ref().is_none_or(|(_, b)| improves(phi, *b)) {
                *best = Some((current.clone(), phi));
            }
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                current.push(x);
                walk(problem, n, current, used, scratch, best);
                current.pop();
                used[x] = false;
            }
        }
    }

    walk(problem, n, &mut current, &mut used, &mut scratch, &mut best);
    let (delta, phi) = best.expect("universe is non-empty");
    Ok(Aggregate {
        delta: problem.names(&delta),
        phi,
    })
}
