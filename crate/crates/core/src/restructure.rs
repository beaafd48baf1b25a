//! Flattening every bucket chain back into one build-fill node per bucket,
//! which both reclaims underfull nodes and realigns buckets with the current
//! key distribution.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::Index;
use crate::node::{NodeRef, NIL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryStats {
    pub nodes_before: u64,
    pub nodes_after: u64,
    pub nodes_recovered: u64,
    /// `nodes_recovered / nodes_before`.
    pub percent_recovered: f64,
    pub wall_time: Duration,
}

/// Repacks all pairs, in order, into nodes of `p` pairs (the build partition
/// size), one node per bucket, and rebuilds the MKBA from the new nodes.
///
/// New nodes are written before the old ones are released, so the arena
/// needs `ceil(len / p)` available nodes; otherwise
/// [`Error::ArenaExhausted`] is returned and the index is left untouched.
pub fn restructure(index: &mut Index) -> Result<RecoveryStats> {
    let start = Instant::now();
    let nodes_before = index.reachable_nodes();
    let p = index.config.partition_size();
    let needed = index.live.div_ceil(p);
    if index.arena.available() < needed {
        return Err(Error::ArenaExhausted { capacity: index.arena.total_nodes() });
    }

    let old_heads = std::mem::take(&mut index.heads);
    let mut heads = Vec::with_capacity(needed.max(1));
    let mut mkba = Vec::with_capacity(needed.max(1));
    let view = index.arena.view();

    // Pass 2: stream pairs in key order into fresh nodes.
    let mut out: Option<(NodeRef, usize)> = None;
    for &head in &old_heads {
        let mut link = head;
        while let Some(r) = NodeRef::from_link(link) {
            // SAFETY: old nodes are only read here; fresh nodes come from the
            // allocator and are therefore distinct from every reachable node.
            let old = unsafe { view.node(r) };
            for &kv in old.pairs() {
                let (node, filled) = match out {
                    Some((n, f)) if f < p => (n, f),
                    _ => {
                        let n = view.allocate()?;
                        heads.push(n.0);
                        (n, 0)
                    }
                };
                let mut dst = unsafe { view.node_mut(node) };
                dst.slots[filled] = kv;
                dst.set_len(filled + 1);
                if filled + 1 == p {
                    mkba.push(kv.key);
                }
                out = Some((node, filled + 1));
            }
            link = old.meta.next;
        }
    }
    if let Some((n, filled)) = out {
        if filled < p {
            mkba.push(unsafe { view.node(n) }.max_key());
        }
    }

    // Retire the old chains.
    for &head in &old_heads {
        let mut link = head;
        while let Some(r) = NodeRef::from_link(link) {
            // SAFETY: `r` is unreachable from the new heads and visited once.
            unsafe {
                link = view.node(r).meta.next;
                view.node_mut(r).meta.size = 0;
                view.free(r);
            }
        }
    }

    if heads.is_empty() {
        heads.push(NIL);
        mkba.push(index.mkba.last().copied().unwrap_or(0));
    }
    let nodes_after = if index.live == 0 { 0 } else { heads.len() };
    index.heads = heads;
    index.mkba = mkba;

    let recovered = nodes_before.saturating_sub(nodes_after);
    Ok(RecoveryStats {
        nodes_before: nodes_before as u64,
        nodes_after: nodes_after as u64,
        nodes_recovered: recovered as u64,
        percent_recovered: if nodes_before == 0 { 0.0 } else { recovered as f64 / nodes_before as f64 },
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::NodeArena;
    use crate::build::build;
    use crate::index::BuildConfig;
    use crate::node::KeyValue;

    /// One bucket whose chain holds nodes of the given key groups.
    fn chained(groups: &[&[u64]], capacity: usize, spare: usize) -> Index {
        let config = BuildConfig { node_capacity: capacity, build_fill_fraction: 0.5, allocation_region_factor: 0 };
        let mut arena = NodeArena::new(capacity, 1, spare);
        let mut refs = vec![arena.bucket_node(0)];
        for _ in 1..groups.len() {
            refs.push(arena.allocate_node().unwrap());
        }
        for (i, keys) in groups.iter().enumerate() {
            let mut n = arena.node_mut(refs[i]);
            for (s, &k) in n.slots.iter_mut().zip(keys.iter()) {
                *s = KeyValue::new(k, k * 2);
            }
            n.set_len(keys.len());
            n.meta.next = refs.get(i + 1).map_or(NIL, |r| r.0);
        }
        let live = groups.iter().map(|g| g.len()).sum();
        let max = *groups.last().unwrap().last().unwrap();
        Index { heads: vec![refs[0].0], mkba: vec![max], arena, config, live }
    }

    #[test]
    fn repacks_underfull_chain() {
        let mut index = chained(&[&[1, 2], &[3], &[4]], 4, 6);
        index.validate().unwrap();
        let before = index.walk();
        let stats = restructure(&mut index).unwrap();
        assert_eq!(stats.nodes_before, 3);
        assert_eq!(stats.nodes_after, 2);
        assert_eq!(stats.nodes_recovered, 1);
        assert_eq!(index.walk(), before);
        assert_eq!(index.bucket_count(), 2);
        assert_eq!(index.mkba(), &[2, 4]);
        for b in 0..2 {
            assert_eq!(index.chain_len(b), 1);
        }
        index.validate().unwrap();
    }

    #[test]
    fn fresh_build_is_a_fixed_point() {
        let pairs: Vec<KeyValue> = (1..=100).map(|k| KeyValue::new(k, k)).collect();
        let mut index = build(&pairs, &BuildConfig::with_node_capacity(8)).unwrap();
        let mkba = index.mkba().to_vec();
        let stats = restructure(&mut index).unwrap();
        assert_eq!(stats.nodes_recovered, 0);
        assert_eq!(index.mkba(), mkba.as_slice());
        assert_eq!(index.walk(), pairs);
        index.validate().unwrap();
        assert_eq!(restructure(&mut index).unwrap().nodes_recovered, 0);
    }

    #[test]
    fn refuses_without_headroom() {
        let pairs: Vec<KeyValue> = (1..=100).map(|k| KeyValue::new(k, k)).collect();
        let config = BuildConfig { allocation_region_factor: 0, ..BuildConfig::with_node_capacity(8) };
        let mut index = build(&pairs, &config).unwrap();
        let sum = index.checksum();
        assert!(matches!(restructure(&mut index), Err(Error::ArenaExhausted { .. })));
        assert_eq!(index.checksum(), sum);
    }
}
