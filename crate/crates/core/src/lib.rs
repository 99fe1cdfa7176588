//! Contrarian content recommendation over endorsement graphs.
//!
//! The crate turns a log of endorsement records (retweets and link shares
//! around one controversial topic) into per-user recommendations of items
//! from the opposing side of the discussion. The stages are:
//!
//! 1. [`ingest`] parses the log, counts user-to-user endorsements and builds
//!    the candidate item pool.
//! 2. [`graph`] thresholds the endorsement counts into a graph and bisects it
//!    into two sides with their highest-degree hubs.
//! 3. [`polarity`] scores users by random-walk hitting times to the hubs of
//!    each side and scores items by the mean score of their sharers.
//! 4. [`acceptance`] fits bucketed endorsement/exposure rates.
//! 5. [`ranking`] builds the five factor lists for a target user.
//! 6. [`aggregate`] fuses the lists by weighted footrule rank aggregation.
//!
//! [`pipeline`] wires the stages together with on-disk snapshots and backs
//! the `contrarian` command-line tool.

pub mod acceptance;
pub mod aggregate;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod polarity;
pub mod ranking;

pub use error::{Error, Result};
