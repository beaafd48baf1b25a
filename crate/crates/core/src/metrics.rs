//! Counters and timings behind the reported throughput and footprint figures.

use std::iter::Sum;
use std::ops::AddAssign;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::index::Index;

/// Work counters. Workers accumulate privately; phases sum them at the end.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub node_visits: u64,
    pub key_comparisons: u64,
    /// Searches over the sorted batch (dispatch only).
    pub binary_searches: u64,
    pub splits: u64,
    pub merges: u64,
    pub nodes_freed: u64,
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Counters) {
        self.node_visits += o.node_visits;
        self.key_comparisons += o.key_comparisons;
        self.binary_searches += o.binary_searches;
        self.splits += o.splits;
        self.merges += o.merges;
        self.nodes_freed += o.nodes_freed;
    }
}

impl Sum for Counters {
    fn sum<I: Iterator<Item = Counters>>(iter: I) -> Counters {
        let mut total = Counters::default();
        for c in iter {
            total += c;
        }
        total
    }
}

/// What one query or update phase did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseStats {
    pub counters: Counters,
    /// Node visits per bucket, in bucket order. Cross-bucket reads made by
    /// successor queries are not included here.
    pub bucket_visits: Vec<u32>,
    /// Nodes read in neighbouring buckets by successor queries.
    pub cross_bucket_visits: u64,
    pub dispatch_time: Duration,
    pub execute_time: Duration,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub sort: Duration,
    pub dispatch: Duration,
    pub execute: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.sort + self.dispatch + self.execute
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub phase: String,
    pub round: u32,
    pub ops: u64,
    pub sort_ns: u64,
    pub dispatch_ns: u64,
    pub execute_ns: u64,
    #[serde(flatten)]
    pub counters: Counters,
    pub buckets: u64,
    pub reachable_nodes: u64,
    pub free_nodes: u64,
    pub live_pairs: u64,
    /// (reachable + free-list nodes) * node bytes + MKBA bytes.
    pub footprint_bytes: u64,
    /// Reachable nodes only * node bytes + MKBA bytes.
    pub live_footprint_bytes: u64,
    pub throughput_ops_s: f64,
    pub qtmf: f64,
}

/// Bytes reserved for nodes in use or parked on the free list, plus the MKBA.
pub fn footprint_bytes(index: &Index) -> u64 {
    let nodes = index.reachable_nodes() + index.arena().free_list_len();
    (nodes * index.config().node_bytes() + index.bucket_count() * 8) as u64
}

pub fn live_footprint_bytes(index: &Index) -> u64 {
    (index.reachable_nodes() * index.config().node_bytes() + index.bucket_count() * 8) as u64
}

/// Captures the index shape after a completed phase.
///
/// Throughput is measured over dispatch + execute; the batch sort is
/// reported separately.
pub fn snapshot(
    index: &Index,
    phase: &str,
    round: u32,
    ops: u64,
    timings: PhaseTimings,
    counters: Counters,
) -> MetricsReport {
    let reachable = index.reachable_nodes() as u64;
    let free = index.arena().free_list_len() as u64;
    let node_bytes = index.config().node_bytes() as u64;
    let mkba_bytes = index.bucket_count() as u64 * 8;
    let footprint = (reachable + free) * node_bytes + mkba_bytes;
    let secs = (timings.dispatch + timings.execute).as_secs_f64();
    let throughput = if ops == 0 || secs == 0.0 { 0.0 } else { ops as f64 / secs };
    MetricsReport {
        phase: phase.to_string(),
        round,
        ops,
        sort_ns: timings.sort.as_nanos() as u64,
        dispatch_ns: timings.dispatch.as_nanos() as u64,
        execute_ns: timings.execute.as_nanos() as u64,
        counters,
        buckets: index.bucket_count() as u64,
        reachable_nodes: reachable,
        free_nodes: free,
        live_pairs: index.len() as u64,
        footprint_bytes: footprint,
        live_footprint_bytes: reachable * node_bytes + mkba_bytes,
        throughput_ops_s: throughput,
        qtmf: if footprint == 0 { 0.0 } else { throughput / footprint as f64 },
    }
}
