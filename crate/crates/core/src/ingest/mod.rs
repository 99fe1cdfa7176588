//! Endorsement-log ingestion: records, endorsement counts and the item pool.

mod normalize;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use normalize::normalize_item;
pub use parse::{parse_records, write_records_jsonl, InputFormat, ParseReport};

/// One observed share or endorsement event.
///
/// `origin` is the author whose content `actor` retweeted; it is absent for
/// original posts. Field names on the wire follow the JSONL log schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecord {
    #[serde(rename = "id")]
    pub record_id: String,
    pub actor: String,
    pub origin: Option<String>,
    pub items: Vec<String>,
    pub text: Option<String>,
    pub retweet_count: Option<u64>,
    #[serde(rename = "ts")]
    pub timestamp: i64,
}

/// A candidate item with its sharing statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: String,
    pub share_count: u64,
    pub sharers: BTreeSet<String>,
    pub max_retweets: u64,
    /// Whether any contributing record carried a retweet count.
    #[serde(default)]
    pub retweets_observed: bool,
}

pub type EdgeCounts = BTreeMap<(String, String), u64>;
pub type ItemPool = BTreeMap<String, Item>;

/// Counts endorsements per ordered `(actor, origin)` pair.
///
/// Records without an origin are original posts and contribute nothing.
pub fn build_edge_counts(records: &[ShareRecord]) -> EdgeCounts {
    let mut counts = EdgeCounts::new();
    for record in records {
        if let Some(origin) = &record.origin {
            *counts
                .entry((record.actor.clone(), origin.clone()))
                .or_insert(0) += 1;
        }
    }
    counts
}

/// Items shared by at least `min_shares` records.
pub fn build_item_pool(records: &[ShareRecord], min_shares: u64) -> Result<ItemPool> {
    if min_shares == 0 {
        return Err(Error::InvalidArgument("min_shares must be at least 1".into()));
    }
    let mut pool = ItemPool::new();
    for record in records {
        for item_id in &record.items {
            let item = pool.entry(item_id.clone()).or_insert_with(|| Item {
                item_id: item_id.clone(),
                share_count: 0,
                sharers: BTreeSet::new(),
                max_retweets: 0,
                retweets_observed: false,
            });
            item.share_count += 1;
            item.sharers.insert(record.actor.clone());
            if let Some(retweets) = record.retweet_count {
                item.max_retweets = item.max_retweets.max(retweets);
                item.retweets_observed = true;
            }
        }
    }
    pool.retain(|_, item| item.share_count >= min_shares);
    Ok(pool)
}

/// Items shared by each actor, restricted to `pool` when given.
pub fn shares_by_user(
    records: &[ShareRecord],
    pool: Option<&ItemPool>,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut shares: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for record in records {
        for item in &record.items {
            if pool.is_none_or(|p| p.contains_key(item)) {
                shares
                    .entry(record.actor.clone())
                    .or_default()
                    .insert(item.clone());
            }
        }
    }
    shares
}

pub fn write_item_pool_jsonl<W: Write>(pool: &ItemPool, mut out: W) -> Result<()> {
    for item in pool.values() {
        serde_json::to_writer(&mut out, item).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_item_pool_jsonl<R: BufRead>(input: R) -> Result<ItemPool> {
    let mut pool = ItemPool::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: Item = serde_json::from_str(&line)
            .map_err(|e| Error::malformed("item snapshot", format!("line {}: {e}", lineno + 1)))?;
        if pool.insert(item.item_id.clone(), item).is_some() {
            return Err(Error::malformed(
                "item snapshot",
                format!("line {}: duplicate item", lineno + 1),
            ));
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(id: &str, actor: &str, origin: Option<&str>, items: &[&str]) -> ShareRecord {
        ShareRecord {
            record_id: id.into(),
            actor: actor.into(),
            origin: origin.map(Into::into),
            items: items.iter().map(|s| s.to_string()).collect(),
            text: None,
            retweet_count: None,
            timestamp: 0,
        }
    }

    #[test]
    fn edge_counts_count_pairs() {
        let mut records: Vec<_> = (0..5)
            .map(|i| rec(&i.to_string(), "a", Some("b"), &[]))
            .collect();
        records.push(rec("5", "a", Some("c"), &[]));
        records.push(rec("6", "a", None, &["u1"]));
        let counts = build_edge_counts(&records);
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[&("a".into(), "b".into())], 5);
        assert_eq!(counts[&("a".into(), "c".into())], 1);
        assert!(build_edge_counts(&[]).is_empty());
    }

    #[test]
    fn item_pool_threshold() {
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(rec(&format!("a{i}"), &format!("s{i}"), None, &["u1"]));
        }
        for i in 0..4 {
            records.push(rec(&format!("b{i}"), &format!("s{i}"), None, &["u2"]));
        }
        let pool = build_item_pool(&records, 5).unwrap();
        assert_eq!(pool.keys().collect::<Vec<_>>(), vec!["u1"]);
        assert_eq!(pool["u1"].share_count, 5);
        assert_eq!(pool["u1"].sharers.len(), 5);

        let all = build_item_pool(&records, 1).unwrap();
        assert_eq!(all.len(), 2);
        assert!(build_item_pool(&records, 0).is_err());
    }

    #[test]
    fn max_retweets_takes_maximum() {
        let mut a = rec("1", "x", None, &["u1"]);
        a.retweet_count = Some(3);
        let mut b = rec("2", "y", None, &["u1"]);
        b.retweet_count = Some(7);
        let c = rec("3", "z", None, &["u1"]);
        let pool = build_item_pool(&[a, b, c], 1).unwrap();
        assert_eq!(pool["u1"].max_retweets, 7);
        assert!(pool["u1"].retweets_observed);

        let pool = build_item_pool(&[rec("1", "x", None, &["u2"])], 1).unwrap();
        assert_eq!(pool["u2"].max_retweets, 0);
        assert!(!pool["u2"].retweets_observed);
    }

    #[test]
    fn item_pool_snapshot_round_trips() {
        let records: Vec<_> = (0..3)
            .map(|i| rec(&i.to_string(), &format!("s{i}"), None, &["u1", "u2"]))
            .collect();
        let pool = build_item_pool(&records, 1).unwrap();
        let mut buf = Vec::new();
        write_item_pool_jsonl(&pool, &mut buf).unwrap();
        assert_eq!(read_item_pool_jsonl(&buf[..]).unwrap(), pool);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn records() -> impl Strategy<Value = Vec<ShareRecord>> {
            prop::collection::vec(
                (0u8..6, prop::option::of(0u8..6), prop::collection::vec(0u8..5, 0..3)),
                0..60,
            )
            .prop_map(|raw| {
                raw.into_iter()
                    .enumerate()
                    .map(|(i, (actor, origin, items))| {
                        let origin = origin.filter(|o| *o != actor).map(|o| format!("v{o}"));
                        let mut items: Vec<String> = items.iter().map(|i| format!("i{i}")).collect();
                        items.sort();
                        items.dedup();
                        ShareRecord {
                            record_id: i.to_string(),
                            actor: format!("v{actor}"),
                            origin,
                            items,
                            text: None,
                            retweet_count: None,
                            timestamp: i as i64,
                        }
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn edge_count_total_matches_endorsements(records in records()) {
                let counts = build_edge_counts(&records);
                let total: u64 = counts.values().sum();
                let endorsements = records.iter().filter(|r| r.origin.is_some()).count() as u64;
                prop_assert_eq!(total, endorsements);
            }

            #[test]
            fn pool_is_monotone_in_threshold(records in records(), low in 1u64..4, extra in 0u64..4) {
                let loose = build_item_pool(&records, low).unwrap();
                let strict = build_item_pool(&records, low + extra).unwrap();
                for key in strict.keys() {
                    prop_assert!(loose.contains_key(key));
                }
            }

            #[test]
            fn share_counts_match_records(records in records()) {
                let pool = build_item_pool(&records, 1).unwrap();
                for (id, item) in &pool {
                    let n = records.iter().filter(|r| r.items.contains(id)).count() as u64;
                    prop_assert_eq!(item.share_count, n);
                    for s in &item.sharers {
                        prop_assert!(records.iter().any(|r| &r.actor == s));
                    }
                }
            }
        }
    }
}
