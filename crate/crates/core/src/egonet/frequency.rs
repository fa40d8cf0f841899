//! Contact frequencies from timestamped direct interactions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EgonetError;
use crate::graph::NodeId;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const SECONDS_PER_YEAR: f64 = 365.0 * SECONDS_PER_DAY as f64;

/// A direct interaction (mention, reply, retweet) from `ego` to `alter`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub ego: NodeId,
    pub alter: NodeId,
    pub timestamp: i64,
}

/// Contacts per year for each alter of a single ego.
///
/// The rate for an alter is its record count divided by the time from the
/// first record with that alter to `window_end`, floored at one day.
pub fn contact_frequencies(
    records: &[InteractionRecord],
    window_end: i64,
) -> Result<BTreeMap<NodeId, f64>, EgonetError> {
    let mut ego = None;
    let mut stats: BTreeMap<NodeId, (u64, i64)> = BTreeMap::new();
    for r in records {
        check_record(r, window_end)?;
        match ego {
            None => ego = Some(r.ego),
            Some(e) if e != r.ego => return Err(EgonetError::MixedEgos(e, r.ego)),
            _ => {}
        }
        let entry = stats.entry(r.alter).or_insert((0, r.timestamp));
        entry.0 += 1;
        entry.1 = entry.1.min(r.timestamp);
    }
    Ok(stats.into_iter().map(|(alter, (count, first))| (alter, rate(count, first, window_end))).collect())
}

/// [`contact_frequencies`] for a log holding many egos.
pub fn contact_frequencies_by_ego(
    records: &[InteractionRecord],
    window_end: i64,
) -> Result<BTreeMap<NodeId, BTreeMap<NodeId, f64>>, EgonetError> {
    let mut stats: BTreeMap<NodeId, BTreeMap<NodeId, (u64, i64)>> = BTreeMap::new();
    for r in records {
        check_record(r, window_end)?;
        let entry = stats.entry(r.ego).or_default().entry(r.alter).or_insert((0, r.timestamp));
        entry.0 += 1;
        entry.1 = entry.1.min(r.timestamp);
    }
    Ok(stats
        .into_iter()
        .map(|(ego, alters)| {
            let freqs = alters
                .into_iter()
                .map(|(alter, (count, first))| (alter, rate(count, first, window_end)))
                .collect();
            (ego, freqs)
        })
        .collect())
}

fn check_record(r: &InteractionRecord, window_end: i64) -> Result<(), EgonetError> {
    if r.ego == r.alter {
        return Err(EgonetError::SelfInteraction(r.ego));
    }
    if r.timestamp > window_end {
        return Err(EgonetError::FutureTimestamp { timestamp: r.timestamp, window_end });
    }
    Ok(())
}

fn rate(count: u64, first: i64, window_end: i64) -> f64 {
    let span = (window_end - first).max(SECONDS_PER_DAY) as f64;
    count as f64 / (span / SECONDS_PER_YEAR)
}
