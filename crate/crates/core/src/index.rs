//! The index container: bucket heads, the max-key-per-bucket array (MKBA),
//! the node arena, and the structural validator.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::NodeArena;
use crate::error::{Error, Result};
use crate::node::{node_bytes, KeyValue, NodeRef, MAX_NODE_CAPACITY, NIL, RESERVED_KEY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Slots per node (NS).
    pub node_capacity: usize,
    /// Fraction of each node filled at build and after restructuring.
    pub build_fill_fraction: f64,
    /// Allocation region size as a multiple of the bucket region.
    pub allocation_region_factor: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { node_capacity: 32, build_fill_fraction: 0.5, allocation_region_factor: 4 }
    }
}

impl BuildConfig {
    pub fn with_node_capacity(node_capacity: usize) -> Self {
        BuildConfig { node_capacity, ..Default::default() }
    }

    /// Pairs per node at build: `floor(NS * fill)`.
    pub fn partition_size(&self) -> usize {
        (self.node_capacity as f64 * self.build_fill_fraction + 1e-9).floor() as usize
    }

    /// Lane group width TS: the smallest power of two `>= NS`.
    pub fn lane_group_width(&self) -> usize {
        self.node_capacity.next_power_of_two()
    }

    pub fn node_bytes(&self) -> usize {
        node_bytes(self.node_capacity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_capacity < 2 || self.node_capacity > MAX_NODE_CAPACITY {
            return Err(Error::InvalidConfig(format!(
                "node capacity must be in 2..={MAX_NODE_CAPACITY}, got {}",
                self.node_capacity
            )));
        }
        if !(self.build_fill_fraction > 0.0 && self.build_fill_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "build fill fraction must be in (0, 1], got {}",
                self.build_fill_fraction
            )));
        }
        if self.partition_size() == 0 {
            return Err(Error::InvalidConfig(format!(
                "partition size floor({} * {}) is zero",
                self.node_capacity, self.build_fill_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Index {
    pub(crate) heads: Vec<u32>,
    pub(crate) mkba: Vec<u64>,
    pub(crate) arena: NodeArena,
    pub(crate) config: BuildConfig,
    pub(crate) live: usize,
}

impl Index {
    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn bucket_count(&self) -> usize {
        self.heads.len()
    }

    pub fn mkba(&self) -> &[u64] {
        &self.mkba
    }

    pub fn arena(&self) -> &NodeArena {
        &self.arena
    }

    /// Number of stored pairs.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn bucket_head(&self, bucket: usize) -> Option<NodeRef> {
        NodeRef::from_link(self.heads[bucket])
    }

    /// Nodes of one bucket in link order.
    pub fn chain(&self, bucket: usize) -> ChainIter<'_> {
        ChainIter { arena: &self.arena, cur: self.heads[bucket] }
    }

    pub fn chain_len(&self, bucket: usize) -> usize {
        self.chain(bucket).count()
    }

    /// Nodes reachable from bucket heads.
    pub fn reachable_nodes(&self) -> usize {
        (0..self.bucket_count()).map(|b| self.chain_len(b)).sum()
    }

    /// All pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = KeyValue> + '_ {
        (0..self.bucket_count())
            .flat_map(move |b| self.chain(b))
            .flat_map(move |r| self.arena.node(r).pairs().iter().copied())
    }

    pub fn walk(&self) -> Vec<KeyValue> {
        let mut out = Vec::with_capacity(self.live);
        out.extend(self.iter());
        out
    }

    /// Hash over the MKBA, chain shapes, and every stored pair.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.mkba.hash(&mut h);
        for b in 0..self.bucket_count() {
            for r in self.chain(b) {
                let n = self.arena.node(r);
                r.hash(&mut h);
                n.pairs().hash(&mut h);
            }
            NIL.hash(&mut h);
        }
        h.finish()
    }

    /// Checks every structural invariant the update and query paths rely on.
    pub fn validate(&self) -> std::result::Result<ValidationReport, ValidationError> {
        use ValidationError as V;

        for (i, w) in self.mkba.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(V::MkbaNotIncreasing { bucket: i + 1 });
            }
        }
        if self.mkba.len() != self.heads.len() {
            return Err(V::Shape(format!(
                "{} bucket heads but {} MKBA entries",
                self.heads.len(),
                self.mkba.len()
            )));
        }

        let capacity = self.arena.node_capacity();
        let total = self.arena.total_nodes();
        let mut seen = vec![false; total];
        let mut reachable = 0usize;
        let mut live = 0usize;
        let mut max_chain = 0usize;
        let mut last_key: Option<u64> = None;
        let last_bucket = self.bucket_count().saturating_sub(1);

        for b in 0..self.bucket_count() {
            let lower = if b == 0 { None } else { Some(self.mkba[b - 1]) };
            let upper = if b == last_bucket { RESERVED_KEY - 1 } else { self.mkba[b] };
            let mut chain_len = 0usize;
            let mut prev_max: Option<u64> = None;
            for r in self.chain(b) {
                let i = r.index();
                if i >= total {
                    return Err(V::Shape(format!("bucket {b} links to node {i} outside the arena")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(V::NodeReachedTwice { node: r.0 });
                }
                chain_len += 1;
                let n = self.arena.node(r);
                if n.len() > capacity {
                    return Err(V::NodeOverflow { node: r.0, size: n.len() });
                }
                if n.is_empty() {
                    return Err(V::EmptyNodeLinked { bucket: b, node: r.0 });
                }
                let pairs = n.pairs();
                if pairs.windows(2).any(|w| w[0].key >= w[1].key) {
                    return Err(V::UnsortedNode { node: r.0 });
                }
                if n.max_key() != pairs[pairs.len() - 1].key {
                    return Err(V::MaxKeyMismatch { node: r.0 });
                }
                if let Some(p) = prev_max {
                    if n.max_key() <= p {
                        return Err(V::ChainNotIncreasing { bucket: b, node: r.0 });
                    }
                }
                prev_max = Some(n.max_key());
                for kv in pairs {
                    if kv.key == RESERVED_KEY {
                        return Err(V::ReservedKeyStored { bucket: b });
                    }
                    if lower.is_some_and(|lo| kv.key <= lo) || kv.key > upper {
                        return Err(V::OutOfBucket { bucket: b, key: kv.key });
                    }
                    if last_key.is_some_and(|k| kv.key <= k) {
                        return Err(V::WalkNotSorted { key: kv.key });
                    }
                    last_key = Some(kv.key);
                }
                live += pairs.len();
            }
            reachable += chain_len;
            max_chain = max_chain.max(chain_len);
        }

        if live != self.live {
            return Err(V::LiveCountMismatch { recorded: self.live, counted: live });
        }

        let free = self.arena.free_list();
        for r in &free {
            if std::mem::replace(&mut seen[r.index()], true) {
                return Err(V::FreeNodeLinked { node: r.0 });
            }
        }
        let never = self.arena.never_allocated();
        if reachable + free.len() + never != total {
            return Err(V::ArenaLeak { reachable, free: free.len(), never_allocated: never, total });
        }

        Ok(ValidationReport {
            buckets: self.bucket_count(),
            reachable_nodes: reachable,
            free_nodes: free.len(),
            never_allocated: never,
            live_pairs: live,
            max_chain_len: max_chain,
        })
    }
}

pub struct ChainIter<'a> {
    arena: &'a NodeArena,
    cur: u32,
}

impl Iterator for ChainIter<'_> {
    type Item = NodeRef;

    fn next(&mut self) -> Option<NodeRef> {
        let r = NodeRef::from_link(self.cur)?;
        self.cur = self.arena.node(r).next().map_or(NIL, |n| n.0);
        Some(r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub buckets: usize,
    pub reachable_nodes: usize,
    pub free_nodes: usize,
    pub never_allocated: usize,
    pub live_pairs: usize,
    pub max_chain_len: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("MKBA not strictly increasing at bucket {bucket}")]
    MkbaNotIncreasing { bucket: usize },
    #[error("malformed index: {0}")]
    Shape(String),
    #[error("node {node} reached twice")]
    NodeReachedTwice { node: u32 },
    #[error("node {node} holds {size} pairs, above capacity")]
    NodeOverflow { node: u32, size: usize },
    #[error("empty node {node} still linked in bucket {bucket}")]
    EmptyNodeLinked { bucket: usize, node: u32 },
    #[error("node {node} slots are not strictly increasing")]
    UnsortedNode { node: u32 },
    #[error("node {node} maxKey does not match its last key")]
    MaxKeyMismatch { node: u32 },
    #[error("bucket {bucket}: node {node} maxKey not above its predecessor")]
    ChainNotIncreasing { bucket: usize, node: u32 },
    #[error("bucket {bucket} stores the reserved key")]
    ReservedKeyStored { bucket: usize },
    #[error("key {key} stored outside the range of bucket {bucket}")]
    OutOfBucket { bucket: usize, key: u64 },
    #[error("global walk not strictly increasing at key {key}")]
    WalkNotSorted { key: u64 },
    #[error("live count {recorded} but {counted} pairs reachable")]
    LiveCountMismatch { recorded: usize, counted: usize },
    #[error("node {node} is on the free list and in a chain (or freed twice)")]
    FreeNodeLinked { node: u32 },
    #[error("arena leak: {reachable} reachable + {free} free + {never_allocated} unused != {total}")]
    ArenaLeak { reachable: usize, free: usize, never_allocated: usize, total: usize },
}
