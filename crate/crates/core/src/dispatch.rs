//! Sorting a batch once and letting each bucket find its own sublist.
//!
//! There is no routing layer: bucket `i` binary searches the sorted batch for
//! the first key above `mkba[i-1]` and the first key above `mkba[i]`, and the
//! keys in between are its work.

use std::ops::Range;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Counters;
use crate::node::KeyValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BatchKind {
    Query,
    SuccessorQuery,
    Insert,
    Delete,
}

/// One homogeneous batch, sorted by key.
///
/// `permutation[i]` is the submission position of sorted entry `i`. For
/// inserts, duplicate keys are collapsed to the last submission, so the
/// permutation is injective rather than a bijection.
#[derive(Clone, Debug)]
pub struct SortedBatch {
    kind: BatchKind,
    keys: Vec<u64>,
    row_ids: Vec<u64>,
    permutation: Vec<u32>,
    submitted: usize,
    sort_time: Duration,
}

impl SortedBatch {
    pub fn queries(keys: &[u64]) -> Self {
        sort_batch(BatchKind::Query, keys, None)
    }

    pub fn successors(keys: &[u64]) -> Self {
        sort_batch(BatchKind::SuccessorQuery, keys, None)
    }

    pub fn deletes(keys: &[u64]) -> Self {
        sort_batch(BatchKind::Delete, keys, None)
    }

    pub fn inserts(pairs: &[KeyValue]) -> Self {
        let keys: Vec<u64> = pairs.iter().map(|kv| kv.key).collect();
        let rows: Vec<u64> = pairs.iter().map(|kv| kv.row_id).collect();
        sort_batch(BatchKind::Insert, &keys, Some(&rows))
    }

    pub fn kind(&self) -> BatchKind {
        self.kind
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    /// Row ids aligned with [`keys`](Self::keys); empty unless this is an
    /// insert batch.
    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn permutation(&self) -> &[u32] {
        &self.permutation
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Number of entries originally submitted (before insert dedupe).
    pub fn submitted_len(&self) -> usize {
        self.submitted
    }

    pub fn sort_time(&self) -> Duration {
        self.sort_time
    }

    pub fn pair(&self, i: usize) -> KeyValue {
        KeyValue::new(self.keys[i], self.row_ids[i])
    }

    pub(crate) fn expect_kind(&self, expected: BatchKind) -> Result<()> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(Error::WrongBatchKind { expected, found: self.kind })
        }
    }

    /// The half-open span of entries destined for `bucket`.
    pub fn span(&self, bucket: usize, mkba: &[u64]) -> Range<usize> {
        extract_sublist(&self.keys, bucket, mkba)
    }
}

/// Stable sort by key, recording the permutation back to submission order.
/// For inserts only the last submission of each key survives.
pub fn sort_batch(kind: BatchKind, keys: &[u64], row_ids: Option<&[u64]>) -> SortedBatch {
    let start = Instant::now();
    assert!(keys.len() < u32::MAX as usize, "batch too large");
    if kind == BatchKind::Insert {
        assert_eq!(row_ids.map(<[u64]>::len), Some(keys.len()), "insert batches need one row id per key");
    }

    // Sorting (key, position) pairs is a stable sort by key.
    let mut order: Vec<(u64, u32)> = keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
    order.par_sort_unstable();

    if kind == BatchKind::Insert {
        let mut w = 0;
        for i in 0..order.len() {
            if w > 0 && order[w - 1].0 == order[i].0 {
                order[w - 1] = order[i];
            } else {
                order[w] = order[i];
                w += 1;
            }
        }
        order.truncate(w);
    }

    let sorted_keys = order.iter().map(|&(k, _)| k).collect();
    let permutation: Vec<u32> = order.iter().map(|&(_, i)| i).collect();
    let sorted_rows = match (kind, row_ids) {
        (BatchKind::Insert, Some(rows)) => permutation.iter().map(|&i| rows[i as usize]).collect(),
        _ => Vec::new(),
    };

    SortedBatch {
        kind,
        keys: sorted_keys,
        row_ids: sorted_rows,
        permutation,
        submitted: keys.len(),
        sort_time: start.elapsed(),
    }
}

/// `[lo, hi)` where `lo` is the first key above `mkba[bucket-1]` (0 for the
/// first bucket) and `hi` the first key above `mkba[bucket]` (the batch end
/// for the last bucket, whose upper bound is open).
pub fn extract_sublist(keys: &[u64], bucket: usize, mkba: &[u64]) -> Range<usize> {
    let lo = if bucket == 0 { 0 } else { keys.partition_point(|&k| k <= mkba[bucket - 1]) };
    let hi = if bucket + 1 == mkba.len() { keys.len() } else { keys.partition_point(|&k| k <= mkba[bucket]) };
    lo..hi.max(lo)
}

/// Spans for every bucket plus the dispatch counters. An empty batch costs
/// no searches at all.
pub(crate) fn bucket_spans(keys: &[u64], mkba: &[u64]) -> (Vec<Range<usize>>, Counters) {
    let mut counters = Counters::default();
    if keys.is_empty() {
        return (vec![0..0; mkba.len()], counters);
    }
    let spans: Vec<Range<usize>> = (0..mkba.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|b| extract_sublist(keys, b, mkba))
        .collect();
    let last = mkba.len() - 1;
    counters.binary_searches = (0..mkba.len()).map(|b| (b > 0) as u64 + (b < last) as u64).sum();
    (spans, counters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_span(keys: &[u64], bucket: usize, mkba: &[u64]) -> Vec<u64> {
        keys.iter()
            .copied()
            .filter(|&k| {
                let above_prev = bucket == 0 || k > mkba[bucket - 1];
                let within = bucket + 1 == mkba.len() || k <= mkba[bucket];
                above_prev && within
            })
            .collect()
    }

    #[test]
    fn insert_dedupe_keeps_last() {
        let b = SortedBatch::inserts(&[KeyValue::new(5, 1), KeyValue::new(3, 2), KeyValue::new(5, 3)]);
        assert_eq!(b.keys(), &[3, 5]);
        assert_eq!(b.row_ids(), &[2, 3]);
        assert_eq!(b.permutation(), &[1, 2]);
        assert_eq!(b.submitted_len(), 3);
    }

    #[test]
    fn query_sort_keeps_duplicates_and_permutation() {
        let raw = [9, 2, 2, 7];
        let b = SortedBatch::queries(&raw);
        assert_eq!(b.keys(), &[2, 2, 7, 9]);
        assert_eq!(b.permutation(), &[1, 2, 3, 0]);
        let mut restored = [0u64; 4];
        for (i, &p) in b.permutation().iter().enumerate() {
            restored[p as usize] = b.keys()[i];
        }
        assert_eq!(restored, raw);
    }

    #[test]
    fn empty_delete_batch() {
        let b = SortedBatch::deletes(&[]);
        assert!(b.is_empty());
        assert_eq!(b.kind(), BatchKind::Delete);
    }

    #[test]
    fn spans_match_linear_scan() {
        let keys = [5, 12, 25, 33, 41];
        let mkba = [10, 30, 50];
        let expect = [vec![5], vec![12, 25], vec![33, 41]];
        for (b, want) in expect.iter().enumerate() {
            assert_eq!(&linear_span(&keys, b, &mkba), want);
            assert_eq!(&keys[extract_sublist(&keys, b, &mkba)], want.as_slice());
        }
    }

    #[test]
    fn boundary_key_belongs_to_lower_bucket() {
        let keys = [10, 11, 30];
        let mkba = [10, 30];
        assert_eq!(extract_sublist(&keys, 0, &mkba), 0..1);
        assert_eq!(extract_sublist(&keys, 1, &mkba), 1..3);
    }

    #[test]
    fn keys_above_last_max_go_to_last_bucket() {
        let keys = [1, 100, 1000];
        let mkba = [5, 50];
        assert_eq!(extract_sublist(&keys, 1, &mkba), 1..3);
    }

    #[test]
    fn empty_batch_costs_no_searches() {
        let (spans, c) = bucket_spans(&[], &[1, 2, 3]);
        assert!(spans.iter().all(|s| s.is_empty()));
        assert_eq!(c.binary_searches, 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mkba_strategy() -> impl Strategy<Value = Vec<u64>> {
            proptest::collection::btree_set(0u64..1000, 1..20).prop_map(|s| s.into_iter().collect())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]
            #[test]
            fn spans_partition_the_batch(
                mut keys in proptest::collection::vec(0u64..1100, 0..60),
                mkba in mkba_strategy(),
            ) {
                keys.sort();
                let mut next = 0;
                for b in 0..mkba.len() {
                    let span = extract_sublist(&keys, b, &mkba);
                    prop_assert_eq!(span.start, next);
                    prop_assert_eq!(keys[span.clone()].to_vec(), linear_span(&keys, b, &mkba));
                    next = span.end;
                }
                prop_assert_eq!(next, keys.len());
            }
        }
    }
}
