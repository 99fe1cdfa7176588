//! Planted two-community share logs for tests and demos.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Side;
use crate::ingest::ShareRecord;
use crate::{Error, Result};

const ENTITIES: [[&str; 5]; 2] = [
    ["Harbor Party", "Lake County", "Governor Reyes", "Solar Fund", "Union Rally"],
    ["River Alliance", "Hill County", "Senator Okafor", "Pipeline Act", "Farm Caucus"],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Users on side X and side Y.
    pub sizes: [usize; 2],
    /// Probability of a directed endorsement edge within a side.
    pub p_in: f64,
    /// Probability of a directed endorsement edge across sides.
    pub p_out: f64,
    /// Endorsements per edge, drawn uniformly from this inclusive range.
    pub pair_counts: [u64; 2],
    pub items_per_side: usize,
    /// Fraction of each side's items that only that side shares.
    pub exclusivity: f64,
    /// `acceptance[s][t]`: chance that a user on side `s` shares an item of
    /// side `t` it may share.
    pub acceptance: [[f64; 2]; 2],
    /// Retweet counts on share records are drawn from `0..=max_retweets`.
    pub max_retweets: u64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            sizes: [50, 50],
            p_in: 0.2,
            p_out: 0.01,
            pair_counts: [5, 8],
            items_per_side: 30,
            exclusivity: 0.8,
            acceptance: [[0.25, 0.03], [0.03, 0.25]],
            max_retweets: 500,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let probability = |p: f64| (0.0..=1.0).contains(&p);
        let ok = self.sizes.iter().all(|&s| s >= 1)
            && probability(self.p_in)
            && probability(self.p_out)
            && probability(self.exclusivity)
            && self.acceptance.iter().flatten().all(|&p| probability(p))
            && self.pair_counts[0] >= 1
            && self.pair_counts[0] <= self.pair_counts[1];
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid synthetic spec {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedItem {
    pub home: Side,
    pub exclusive: bool,
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sides: BTreeMap<String, Side>,
    pub items: BTreeMap<String, PlantedItem>,
    pub acceptance: [[f64; 2]; 2],
    /// Directed endorsement edges between the planted sides.
    pub planted_cut: usize,
}

fn side_index(side: Side) -> usize {
    match side {
        Side::X => 0,
        Side::Y => 1,
    }
}

/// Records and ground truth for `spec`; the same spec always yields the
/// same output.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Vec<ShareRecord>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.sizes[0] + spec.sizes[1];
    let users: Vec<(String, Side)> = (0..total)
        .map(|i| {
            let side = if i < spec.sizes[0] { Side::X } else { Side::Y };
            (format!("u{i:04}"), side)
        })
        .collect();

    let mut records = Vec::new();
    let mut push = |actor: &str, origin: Option<&str>, items: Vec<String>, text: Option<String>, retweets: Option<u64>| {
        let n = records.len();
        records.push(ShareRecord {
            record_id: format!("r{n:07}"),
            actor: actor.to_string(),
            origin: origin.map(str::to_string),
            items,
            text,
            retweet_count: retweets,
            timestamp: 1_600_000_000 + n as i64,
        });
    };

    let mut planted_cut = 0;
    for (u, (actor, su)) in users.iter().enumerate() {
        for (v, (origin, sv)) in users.iter().enumerate() {
            if u == v {
                continue;
            }
            let p = if su == sv { spec.p_in } else { spec.p_out };
            if rng.random::<f64>() < p {
                if su != sv {
                    planted_cut += 1;
                }
                let count = rng.random_range(spec.pair_counts[0]..=spec.pair_counts[1]);
                for _ in 0..count {
                    push(actor, Some(origin), Vec::new(), None, None);
                }
            }
        }
    }

    let exclusive_count = (spec.exclusivity * spec.items_per_side as f64).round() as usize;
    let mut items = BTreeMap::new();
    for home in [Side::X, Side::Y] {
        let t = side_index(home);
        let tag = if home == Side::X { "x" } else { "y" };
        for j in 0..spec.items_per_side {
            let id = format!("https://{tag}.example.org/story/{j:03}");
            let exclusive = j < exclusive_count;
            let a = rng.random_range(0..ENTITIES[t].len());
            let b = (a + 1 + rng.random_range(0..ENTITIES[t].len() - 1)) % ENTITIES[t].len();
            let text = format!("thoughts on {} and {} #story{tag}{j}", ENTITIES[t][a], ENTITIES[t][b]);
            for (actor, side) in &users {
                if exclusive && *side != home {
                    continue;
                }
                if rng.random::<f64>() < spec.acceptance[side_index(*side)][t] {
                    let retweets = rng.random_range(0..=spec.max_retweets);
                    push(actor, None, vec![id.clone()], Some(text.clone()), Some(retweets));
                }
            }
            items.insert(id, PlantedItem { home, exclusive });
        }
    }

    let truth = GroundTruth {
        sides: users.into_iter().collect(),
        items,
        acceptance: spec.acceptance,
        planted_cut,
    };
    Ok((records, truth))
}
