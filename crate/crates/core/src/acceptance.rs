//! Bucketed acceptance model.
//!
//! User and item scores are bucketed into `B` equal bins over `[-1, 1]`. For
//! every (user bucket, item bucket) pair the model counts how many distinct
//! (user, item) pairs were *exposed* and how many were *endorsed*; the
//! acceptance probability is the Laplace-smoothed ratio
//! `(N_e + alpha) / (N_x + 2 alpha)`.
//!
//! A user is exposed to an item when one of the users it endorsed (its
//! out-neighbours in the endorsement graph) shared the item. Sharing an item
//! counts as both an exposure and an endorsement.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::EndorsementGraph;
use crate::ingest::{shares_by_user, ShareRecord};
use crate::polarity::PolarityTable;
use crate::{Error, Result};

/// Bucket of a score in `(-1, 1)`: `floor((rho + 1) / 2 * B)` clamped to
/// `[0, B - 1]`.
pub fn bucket_of(rho: f64, buckets: usize) -> usize {
    let raw = ((rho + 1.0) / 2.0 * buckets as f64).floor();
    if raw.is_nan() || raw < 0.0 {
        0
    } else {
        (raw as usize).min(buckets - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceModel {
    #[serde(rename = "B")]
    pub buckets: usize,
    pub alpha: f64,
    /// `exposures[user_bucket][item_bucket]`.
    pub exposures: Vec<Vec<u64>>,
    pub endorsements: Vec<Vec<u64>>,
}

impl AcceptanceModel {
    pub fn new(buckets: usize, alpha: f64) -> Result<Self> {
        Self::check_params(buckets, alpha)?;
        Ok(Self {
            buckets,
            alpha,
            exposures: vec![vec![0; buckets]; buckets],
            endorsements: vec![vec![0; buckets]; buckets],
        })
    }

    fn check_params(buckets: usize, alpha: f64) -> Result<()> {
        if buckets < 2 || buckets % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "bucket count must be even and at least 2, got {buckets}"
            )));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(())
    }

    /// Records one event at a bucket pair; an endorsement is also an exposure.
    pub fn record(&mut self, user_bucket: usize, item_bucket: usize, endorsed: bool) {
        self.exposures[user_bucket][item_bucket] += 1;
        if endorsed {
            self.endorsements[user_bucket][item_bucket] += 1;
        }
    }

    pub fn observe(&mut self, rho_user: f64, rho_item: f64, endorsed: bool) {
        let (bu, bi) = (bucket_of(rho_user, self.buckets), bucket_of(rho_item, self.buckets));
        self.record(bu, bi, endorsed);
    }

    /// Elementwise sum of two models with the same shape.
    pub fn merge(&mut self, other: &AcceptanceModel) -> Result<()> {
        if other.buckets != self.buckets {
            return Err(Error::InvalidArgument("bucket counts differ".into()));
        }
        for b in 0..self.buckets {
            for c in 0..self.buckets {
                self.exposures[b][c] += other.exposures[b][c];
                self.endorsements[b][c] += other.endorsements[b][c];
            }
        }
        Ok(())
    }

    /// Smoothed probability at a bucket pair. With `alpha = 0` and no
    /// exposures the ratio is undefined and 0.5 is returned.
    pub fn prob_at(&self, user_bucket: usize, item_bucket: usize) -> f64 {
        let e = self.endorsements[user_bucket][item_bucket] as f64;
        let x = self.exposures[user_bucket][item_bucket] as f64;
        let denominator = x + 2.0 * self.alpha;
        if denominator == 0.0 {
            0.5
        } else {
            (e + self.alpha) / denominator
        }
    }

    pub fn accept_prob(&self, rho_user: f64, rho_item: f64) -> f64 {
        self.prob_at(bucket_of(rho_user, self.buckets), bucket_of(rho_item, self.buckets))
    }

    pub fn total_endorsements(&self) -> u64 {
        self.endorsements.iter().flatten().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    /// Parses and validates a persisted model.
    pub fn from_json(json: &str) -> Result<Self> {
        let model: AcceptanceModel =
            serde_json::from_str(json).map_err(|e| Error::malformed("acceptance model", e))?;
        Self::check_params(model.buckets, model.alpha).map_err(|e| Error::malformed("acceptance model", e))?;
        let b = model.buckets;
        let shaped = |m: &Vec<Vec<u64>>| m.len() == b && m.iter().all(|r| r.len() == b);
        if !shaped(&model.exposures) || !shaped(&model.endorsements) {
            return Err(Error::malformed("acceptance model", "matrices are not B x B"));
        }
        let consistent = model
            .exposures
            .iter()
            .flatten()
            .zip(model.endorsements.iter().flatten())
            .all(|(x, e)| e <= x);
        if !consistent {
            return Err(Error::malformed("acceptance model", "endorsements exceed exposures"));
        }
        Ok(model)
    }
}

/// Counts exposure and endorsement events for every scored graph user and
/// every scored item. Each (user, item) pair counts at most once per matrix.
pub fn count_events(
    records: &[ShareRecord],
    graph: &EndorsementGraph,
    table: &PolarityTable,
    buckets: usize,
    alpha: f64,
) -> Result<AcceptanceModel> {
    let mut model = AcceptanceModel::new(buckets, alpha)?;
    let shares = shares_by_user(records, None);
    let empty = BTreeSet::new();
    let scored = |item: &&String| table.items.contains_key(*item);

    for (u, user) in graph.users().iter().enumerate() {
        let Some(score) = table.user(user) else { continue };
        let bu = bucket_of(score.rho, buckets);
        let endorsed = shares.get(user).unwrap_or(&empty);
        let mut exposed: BTreeSet<&String> = graph
            .out_neighbors(u)
            .iter()
            .flat_map(|&v| shares.get(graph.user(v)).unwrap_or(&empty))
            .filter(scored)
            .collect();
        exposed.extend(endorsed.iter().filter(scored));
        for item in exposed {
            let bi = bucket_of(table.items[item].rho, buckets);
            model.record(bu, bi, endorsed.contains(item));
        }
    }
    Ok(model)
}
