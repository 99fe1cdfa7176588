//! User and item polarization scores.
//!
//! A user's lean toward side X is measured by how the expected hitting time
//! of its random walk to each side's hubs compares with everybody else's.
//! Writing `F_S(u)` for the fraction of users whose walk reaches the hubs of
//! side `S` strictly faster than `u`'s, the score is
//!
//! ```text
//! rho_x(u) = F_Y(u)        share of users closer to Y's hubs than u
//! rho_y(u) = F_X(u)        share of users closer to X's hubs than u
//! rho(u)   = rho_x(u) - rho_y(u)   in (-1, 1)
//! ```
//!
//! so users near X's hubs and far from Y's score close to `+1`. An item's
//! score is the mean score of the users who shared it.

mod hitting;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::graph::{top_degree_sets, EndorsementGraph, Partition};
use crate::ingest::ItemPool;
use crate::{Error, Result};

pub use hitting::{
    hitting_times_exact, hitting_times_mc, HittingMethod, HittingTimes, WalkGraph,
    RESIDUAL_TOLERANCE,
};

#[cfg(test)]
pub(crate) use hitting::tests as hitting_tests;

/// Relative tolerance under which two hitting times count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// For each vertex, the fraction of vertices with a strictly smaller value.
///
/// Values within a relative `1e-9` of each other are treated as equal so that
/// solver round-off does not split genuine ties.
pub fn rho_fraction(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    times
        .iter()
        .map(|&t| {
            let below = t - TIE_TOLERANCE * t.abs().max(1.0);
            sorted.partition_point(|&v| v < below) as f64 / n as f64
        })
        .collect()
}

/// How hitting times are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Exact up to `exact_limit` vertices, Monte Carlo above.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityConfig {
    pub k: usize,
    pub method: MethodChoice,
    pub walks: usize,
    /// Walk cap and unreachable-vertex value; defaults to `100 * |V|`.
    pub max_len: Option<usize>,
    pub exact_limit: usize,
    pub seed: u64,
}

impl Default for PolarityConfig {
    fn default() -> Self {
        Self {
            k: 10,
            method: MethodChoice::Auto,
            walks: 2000,
            max_len: None,
            exact_limit: 20_000,
            seed: 0,
        }
    }
}

impl PolarityConfig {
    pub fn resolve(&self, n: usize) -> HittingMethod {
        match self.method {
            MethodChoice::Exact => HittingMethod::Exact,
            MethodChoice::MonteCarlo => HittingMethod::MonteCarlo,
            MethodChoice::Auto if n <= self.exact_limit => HittingMethod::Exact,
            MethodChoice::Auto => HittingMethod::MonteCarlo,
        }
    }

    pub fn max_len(&self, n: usize) -> usize {
        self.max_len.unwrap_or(100 * n).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserScore {
    pub l_x: f64,
    pub l_y: f64,
    pub rho_x: f64,
    pub rho_y: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub rho: f64,
    pub num_sharers: usize,
}

/// Scores of every graph user and every scorable pool item.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarityTable {
    pub users: BTreeMap<String, UserScore>,
    pub items: BTreeMap<String, ItemScore>,
}

impl PolarityTable {
    pub fn user(&self, user: &str) -> Option<&UserScore> {
        self.users.get(user)
    }

    pub fn item(&self, item: &str) -> Option<&ItemScore> {
        self.items.get(item)
    }
}

/// Hitting times to a target set with the configured method.
pub fn hitting_times(
    walk: &WalkGraph,
    targets: &[usize],
    method: HittingMethod,
    config: &PolarityConfig,
) -> Result<HittingTimes> {
    let n = walk.num_vertices();
    let max_len = config.max_len(n);
    match method {
        HittingMethod::Exact => hitting_times_exact(walk, targets, max_len as f64),
        HittingMethod::MonteCarlo => {
            hitting_times_mc(walk, targets, config.walks, max_len, config.seed)
        }
    }
}

/// Combines hitting times to X's and Y's hubs into per-vertex scores.
pub fn scores_from_times(l_x: &[f64], l_y: &[f64]) -> Vec<UserScore> {
    let closer_to_x = rho_fraction(l_x);
    let closer_to_y = rho_fraction(l_y);
    (0..l_x.len())
        .map(|u| {
            let rho_x = closer_to_y[u];
            let rho_y = closer_to_x[u];
            UserScore {
                l_x: l_x[u],
                l_y: l_y[u],
                rho_x,
                rho_y,
                rho: rho_x - rho_y,
            }
        })
        .collect()
}

/// Scores every user of `graph` against the `k` highest-degree vertices of
/// each side of `partition`.
pub fn user_polarity(
    graph: &EndorsementGraph,
    partition: &Partition,
    config: &PolarityConfig,
) -> Result<BTreeMap<String, UserScore>> {
    let (top_x, top_y) = top_degree_sets(graph, partition, config.k)?;
    if top_x.is_empty() || top_y.is_empty() {
        return Err(Error::Infeasible("partition has an empty side".into()));
    }
    let walk = WalkGraph::from_graph(graph);
    let method = config.resolve(graph.num_vertices());
    let (to_x, to_y) = rayon::join(
        || hitting_times(&walk, &top_x, method, config),
        || hitting_times(&walk, &top_y, method, config),
    );
    let (to_x, to_y) = (to_x?, to_y?);
    let flagged = to_x
        .flagged
        .iter()
        .zip(&to_y.flagged)
        .filter(|(a, b)| **a || **b)
        .count();
    if flagged > 0 {
        warn!("{flagged} users hit the walk cap for at least one side");
    }
    Ok(graph
        .users()
        .iter()
        .cloned()
        .zip(scores_from_times(&to_x.values, &to_y.values))
        .collect())
}

/// Item scores and what was left out of them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItemPolarityReport {
    pub items: BTreeMap<String, ItemScore>,
    /// Sharer entries without a user score (outside the graph).
    pub skipped_sharers: usize,
    /// Items none of whose sharers has a score.
    pub excluded: Vec<String>,
}

/// Mean user score over each item's scored sharers.
pub fn item_polarity(users: &BTreeMap<String, UserScore>, pool: &ItemPool) -> ItemPolarityReport {
    let mut report = ItemPolarityReport::default();
    for (id, item) in pool {
        let scored: Vec<f64> = item
            .sharers
            .iter()
            .filter_map(|s| users.get(s).map(|score| score.rho))
            .collect();
        report.skipped_sharers += item.sharers.len() - scored.len();
        if scored.is_empty() {
            report.excluded.push(id.clone());
            continue;
        }
        let rho = scored.iter().sum::<f64>() / scored.len() as f64;
        report.items.insert(
            id.clone(),
            ItemScore {
                rho,
                num_sharers: scored.len(),
            },
        );
    }
    if !report.excluded.is_empty() {
        warn!(
            "{} items have no scored sharer and leave the pool",
            report.excluded.len()
        );
    }
    report
}

#[derive(Serialize, Deserialize)]
struct UserRow {
    user_id: String,
    l_x: f64,
    l_y: f64,
    rho_x: f64,
    rho_y: f64,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
struct ItemRow {
    item_id: String,
    rho: f64,
    num_sharers: usize,
}

fn csv_error(e: csv::Error) -> Error {
    Error::malformed("polarity table", e)
}

pub fn write_user_scores<W: Write>(users: &BTreeMap<String, UserScore>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, s) in users {
        w.serialize(UserRow {
            user_id: id.clone(),
            l_x: s.l_x,
            l_y: s.l_y,
            rho_x: s.rho_x,
            rho_y: s.rho_y,
            rho: s.rho,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_item_scores<W: Write>(items: &BTreeMap<String, ItemScore>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, s) in items {
        w.serialize(ItemRow {
            item_id: id.clone(),
            rho: s.rho,
            num_sharers: s.num_sharers,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_user_scores<R: Read>(input: R) -> Result<BTreeMap<String, UserScore>> {
    let mut users = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize::<UserRow>() {
        let row = row.map_err(csv_error)?;
        let score = UserScore {
            l_x: row.l_x,
            l_y: row.l_y,
            rho_x: row.rho_x,
            rho_y: row.rho_y,
            rho: row.rho,
        };
        if users.insert(row.user_id, score).is_some() {
            return Err(Error::malformed("polarity table", "duplicate user row"));
        }
    }
    Ok(users)
}

pub fn read_item_scores<R: Read>(input: R) -> Result<BTreeMap<String, ItemScore>> {
    let mut items = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize::<ItemRow>() {
        let row = row.map_err(csv_error)?;
        let score = ItemScore {
            rho: row.rho,
            num_sharers: row.num_sharers,
        };
        if items.insert(row.item_id, score).is_some() {
            return Err(Error::malformed("polarity table", "duplicate item row"));
        }
    }
    Ok(items)
}
