//! Point and successor queries. Each bucket with a non-empty sublist walks
//! its chain forward once, searching inside the node that can hold each key.

use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use crate::dispatch::{bucket_spans, BatchKind, SortedBatch};
use crate::error::Result;
use crate::index::Index;
use crate::metrics::{Counters, PhaseStats};
use crate::node::{NodeRef, RESERVED_KEY};

/// Query results in submission order. Misses hold [`RESERVED_KEY`].
#[derive(Clone, Debug, Default)]
pub struct ResultBuffer {
    pub values: Vec<u64>,
    pub stats: PhaseStats,
}

impl ResultBuffer {
    pub fn misses(&self) -> usize {
        self.values.iter().filter(|&&v| v == RESERVED_KEY).count()
    }
}

#[derive(Clone, Copy)]
enum Mode {
    Point,
    Successor,
}

/// Row id for every queried key, or [`RESERVED_KEY`] when absent.
pub fn point_query(index: &Index, batch: &SortedBatch) -> Result<ResultBuffer> {
    batch.expect_kind(BatchKind::Query)?;
    Ok(run(index, batch, Mode::Point))
}

/// Smallest stored key `>= k` for every queried `k`, or [`RESERVED_KEY`].
pub fn successor_query(index: &Index, batch: &SortedBatch) -> Result<ResultBuffer> {
    batch.expect_kind(BatchKind::SuccessorQuery)?;
    Ok(run(index, batch, Mode::Successor))
}

struct BucketOutcome {
    bucket: usize,
    counters: Counters,
    visits: u32,
    cross_visits: u64,
}

fn run(index: &Index, batch: &SortedBatch, mode: Mode) -> ResultBuffer {
    let n = batch.len();
    let mut stats = PhaseStats { bucket_visits: vec![0; index.bucket_count()], ..Default::default() };
    if n == 0 {
        return ResultBuffer { values: Vec::new(), stats };
    }

    let t0 = Instant::now();
    let (spans, dispatch_counters) = bucket_spans(batch.keys(), index.mkba());
    stats.dispatch_time = t0.elapsed();

    let t1 = Instant::now();
    let mut sorted = vec![RESERVED_KEY; n];
    let work = split_by_spans(&mut sorted, &spans);
    let keys = batch.keys();
    let outcomes: Vec<BucketOutcome> = work
        .into_par_iter()
        .with_min_len(64)
        .map(|(bucket, span, out)| query_bucket(index, bucket, &keys[span], out, mode))
        .collect();

    let mut values = vec![RESERVED_KEY; n];
    for (i, &p) in batch.permutation().iter().enumerate() {
        values[p as usize] = sorted[i];
    }
    stats.execute_time = t1.elapsed();

    stats.counters = dispatch_counters;
    for o in outcomes {
        stats.counters += o.counters;
        stats.counters.node_visits += o.visits as u64 + o.cross_visits;
        stats.bucket_visits[o.bucket] = o.visits;
        stats.cross_bucket_visits += o.cross_visits;
    }
    ResultBuffer { values, stats }
}

/// Cuts `out` into the disjoint per-bucket slices named by `spans`, keeping
/// only buckets with work.
pub(crate) fn split_by_spans<'a, T>(
    mut out: &'a mut [T],
    spans: &[Range<usize>],
) -> Vec<(usize, Range<usize>, &'a mut [T])> {
    let mut work = Vec::new();
    let mut offset = 0;
    for (bucket, span) in spans.iter().enumerate() {
        if span.is_empty() {
            continue;
        }
        debug_assert_eq!(span.start, offset);
        let (head, tail) = std::mem::take(&mut out).split_at_mut(span.len());
        work.push((bucket, span.clone(), head));
        out = tail;
        offset = span.end;
    }
    work
}

fn search_cost(len: usize) -> u64 {
    (usize::BITS - len.leading_zeros()) as u64
}

fn query_bucket(index: &Index, bucket: usize, keys: &[u64], out: &mut [u64], mode: Mode) -> BucketOutcome {
    let arena = index.arena();
    let mut outcome = BucketOutcome { bucket, counters: Counters::default(), visits: 0, cross_visits: 0 };
    let mut beyond: Option<u64> = None;

    let mut curr = match index.bucket_head(bucket) {
        Some(h) => h,
        None => {
            if let Mode::Successor = mode {
                let s = successor_beyond(index, bucket, &mut outcome.cross_visits);
                out.fill(s);
            }
            return outcome;
        }
    };
    outcome.visits = 1;

    for (&k, o) in keys.iter().zip(out.iter_mut()) {
        let mut node = arena.node(curr);
        loop {
            outcome.counters.key_comparisons += 1;
            match node.next() {
                Some(next) if k > node.max_key() => {
                    curr = next;
                    node = arena.node(curr);
                    outcome.visits += 1;
                }
                _ => break,
            }
        }
        let pairs = node.pairs();
        outcome.counters.key_comparisons += search_cost(pairs.len());
        let pos = pairs.partition_point(|kv| kv.key < k);
        *o = match mode {
            Mode::Point => match pairs.get(pos) {
                Some(kv) if kv.key == k => kv.row_id,
                _ => RESERVED_KEY,
            },
            Mode::Successor => match pairs.get(pos) {
                Some(kv) => kv.key,
                None => *beyond.get_or_insert_with(|| successor_beyond(index, bucket, &mut outcome.cross_visits)),
            },
        };
    }
    outcome
}

/// First key of the next non-empty bucket after `bucket`.
fn successor_beyond(index: &Index, bucket: usize, cross_visits: &mut u64) -> u64 {
    for b in bucket + 1..index.bucket_count() {
        if let Some(h) = index.bucket_head(b) {
            *cross_visits += 1;
            return first_key(index, h);
        }
    }
    RESERVED_KEY
}

fn first_key(index: &Index, r: NodeRef) -> u64 {
    index.arena().node(r).pairs()[0].key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::build;
    use crate::index::BuildConfig;
    use crate::node::KeyValue;

    fn index_of(keys: &[u64]) -> Index {
        let pairs: Vec<KeyValue> = keys.iter().map(|&k| KeyValue::new(k, k + 1000)).collect();
        build(&pairs, &BuildConfig::with_node_capacity(4)).unwrap()
    }

    #[test]
    fn hit_and_miss() {
        let index = build(&[KeyValue::new(10, 1), KeyValue::new(25, 2)], &BuildConfig::default()).unwrap();
        let r = point_query(&index, &SortedBatch::queries(&[25, 99])).unwrap();
        assert_eq!(r.values, vec![2, RESERVED_KEY]);
    }

    #[test]
    fn results_follow_submission_order() {
        let index = index_of(&[1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let r = point_query(&index, &SortedBatch::queries(&[9, 1, 5, 5, 42, 0])).unwrap();
        assert_eq!(r.values, vec![1009, 1001, 1005, 1005, RESERVED_KEY, RESERVED_KEY]);
    }

    #[test]
    fn successor_is_inclusive_and_crosses_buckets() {
        let index = index_of(&[10, 25, 40]);
        let r = successor_query(&index, &SortedBatch::successors(&[25, 26, 41, 0, 10])).unwrap();
        assert_eq!(r.values, vec![25, 40, RESERVED_KEY, 10, 10]);
    }

    #[test]
    fn wrong_kind_rejected() {
        let index = index_of(&[1]);
        assert!(point_query(&index, &SortedBatch::successors(&[1])).is_err());
        assert!(successor_query(&index, &SortedBatch::queries(&[1])).is_err());
    }

    #[test]
    fn empty_batch_does_no_work() {
        let index = index_of(&[1, 2, 3]);
        let r = point_query(&index, &SortedBatch::queries(&[])).unwrap();
        assert!(r.values.is_empty());
        assert_eq!(r.stats.counters.binary_searches, 0);
        assert_eq!(r.stats.counters.node_visits, 0);
    }

    #[test]
    fn dispatch_searches_bounded_by_two_per_bucket() {
        let keys: Vec<u64> = (1..=200).map(|k| k * 5).collect();
        let index = index_of(&keys);
        let probe: Vec<u64> = (0..1100).collect();
        let r = point_query(&index, &SortedBatch::queries(&probe)).unwrap();
        assert!(r.stats.counters.binary_searches <= 2 * index.bucket_count() as u64);
        for (b, &v) in r.stats.bucket_visits.iter().enumerate() {
            assert!(v as usize <= index.chain_len(b));
        }
    }

    #[test]
    fn query_does_not_mutate() {
        let index = index_of(&[3, 6, 9, 12, 15]);
        let before = index.checksum();
        point_query(&index, &SortedBatch::queries(&[3, 4, 15])).unwrap();
        successor_query(&index, &SortedBatch::successors(&[3, 4, 16])).unwrap();
        assert_eq!(index.checksum(), before);
    }
}
