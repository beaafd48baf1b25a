//! Initial construction: sort, collapse duplicates, cut into partitions of
//! `p` pairs, one single-node bucket per partition.

use rayon::prelude::*;

use crate::arena::NodeArena;
use crate::error::{Error, Result};
use crate::index::{BuildConfig, Index};
use crate::node::{KeyValue, RESERVED_KEY};

/// Sorts by key and keeps the last submitted pair for each key.
pub(crate) fn sort_dedup_last_wins(pairs: &[KeyValue]) -> Vec<KeyValue> {
    let mut sorted = pairs.to_vec();
    sorted.par_sort_by_key(|kv| kv.key);
    let mut out: Vec<KeyValue> = Vec::with_capacity(sorted.len());
    for kv in sorted {
        match out.last_mut() {
            Some(last) if last.key == kv.key => *last = kv,
            _ => out.push(kv),
        }
    }
    out
}

pub fn build(pairs: &[KeyValue], config: &BuildConfig) -> Result<Index> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyBuild);
    }
    if let Some(kv) = pairs.iter().find(|kv| kv.key == RESERVED_KEY) {
        return Err(Error::ReservedKey(kv.key));
    }

    let sorted = sort_dedup_last_wins(pairs);
    let p = config.partition_size();
    let buckets = sorted.len().div_ceil(p);
    let mut arena = NodeArena::new(
        config.node_capacity,
        buckets,
        buckets.saturating_mul(config.allocation_region_factor),
    );

    let mut heads = Vec::with_capacity(buckets);
    let mut mkba = Vec::with_capacity(buckets);
    for (i, part) in sorted.chunks(p).enumerate() {
        let r = arena.bucket_node(i);
        let mut node = arena.node_mut(r);
        node.slots[..part.len()].copy_from_slice(part);
        node.set_len(part.len());
        heads.push(r.0);
        mkba.push(part[part.len() - 1].key);
    }

    Ok(Index { heads, mkba, arena, config: config.clone(), live: sorted.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kvs(keys: &[u64]) -> Vec<KeyValue> {
        keys.iter().map(|&k| KeyValue::new(k, k * 10)).collect()
    }

    fn bucket_keys(index: &Index, b: usize) -> Vec<Vec<u64>> {
        index
            .chain(b)
            .map(|r| index.arena().node(r).pairs().iter().map(|kv| kv.key).collect())
            .collect()
    }

    #[test]
    fn eight_keys_into_four_buckets() {
        let index = build(&kvs(&[5, 3, 8, 1, 2, 7, 6, 4]), &BuildConfig::with_node_capacity(4)).unwrap();
        assert_eq!(index.bucket_count(), 4);
        assert_eq!(index.mkba(), &[2, 4, 6, 8]);
        assert_eq!(bucket_keys(&index, 0), vec![vec![1, 2]]);
        assert_eq!(bucket_keys(&index, 1), vec![vec![3, 4]]);
        assert_eq!(bucket_keys(&index, 2), vec![vec![5, 6]]);
        assert_eq!(bucket_keys(&index, 3), vec![vec![7, 8]]);
        index.validate().unwrap();
    }

    #[test]
    fn single_pair() {
        let index = build(&[KeyValue::new(42, 7)], &BuildConfig::with_node_capacity(4)).unwrap();
        assert_eq!(index.bucket_count(), 1);
        assert_eq!(index.mkba(), &[42]);
        assert_eq!(index.walk(), vec![KeyValue::new(42, 7)]);
        assert_eq!(index.reachable_nodes(), 1);
    }

    #[test]
    fn duplicate_keys_keep_last_row_id() {
        let pairs = [KeyValue::new(9, 1), KeyValue::new(3, 0), KeyValue::new(9, 2)];
        let index = build(&pairs, &BuildConfig::with_node_capacity(4)).unwrap();
        assert_eq!(index.len(), 2);
        assert_eq!(index.walk(), vec![KeyValue::new(3, 0), KeyValue::new(9, 2)]);
    }

    #[test]
    fn last_partition_may_be_short() {
        let index = build(&kvs(&[1, 2, 3, 4, 5]), &BuildConfig::with_node_capacity(4)).unwrap();
        assert_eq!(index.mkba(), &[2, 4, 5]);
        assert_eq!(bucket_keys(&index, 2), vec![vec![5]]);
    }

    #[test]
    fn rejects_empty_and_reserved() {
        let c = BuildConfig::default();
        assert_eq!(build(&[], &c).unwrap_err(), Error::EmptyBuild);
        assert_eq!(
            build(&[KeyValue::new(RESERVED_KEY, 0)], &c).unwrap_err(),
            Error::ReservedKey(RESERVED_KEY)
        );
    }

    #[test]
    fn arena_is_sized_from_factor() {
        let c = BuildConfig { allocation_region_factor: 3, ..BuildConfig::with_node_capacity(4) };
        let index = build(&kvs(&[1, 2, 3, 4]), &c).unwrap();
        assert_eq!(index.arena().bucket_region_len(), 2);
        assert_eq!(index.arena().allocation_region_len(), 6);
    }
}
