//! Reference ordered maps used to check the index.

use std::collections::BTreeMap;

use crate::node::{KeyValue, RESERVED_KEY};

/// Ordered map with the index's semantics: upsert on insert, physical delete,
/// inclusive successor, [`RESERVED_KEY`] for "not found".
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Oracle {
    map: BTreeMap<u64, u64>,
}

impl Oracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[KeyValue]) -> Self {
        let mut o = Oracle::new();
        o.insert_all(pairs);
        o
    }

    /// Upserts in submission order, so the last duplicate wins.
    /// Returns (inserted, updated).
    pub fn insert_all(&mut self, pairs: &[KeyValue]) -> (u64, u64) {
        let (mut inserted, mut updated) = (0, 0);
        for kv in pairs {
            match self.map.insert(kv.key, kv.row_id) {
                Some(_) => updated += 1,
                None => inserted += 1,
            }
        }
        (inserted, updated)
    }

    /// Returns (deleted, misses).
    pub fn delete_all(&mut self, keys: &[u64]) -> (u64, u64) {
        let (mut deleted, mut misses) = (0, 0);
        for k in keys {
            match self.map.remove(k) {
                Some(_) => deleted += 1,
                None => misses += 1,
            }
        }
        (deleted, misses)
    }

    pub fn point(&self, k: u64) -> u64 {
        self.map.get(&k).copied().unwrap_or(RESERVED_KEY)
    }

    pub fn successor(&self, k: u64) -> u64 {
        self.map.range(k..).next().map_or(RESERVED_KEY, |(&key, _)| key)
    }

    pub fn points(&self, keys: &[u64]) -> Vec<u64> {
        keys.iter().map(|&k| self.point(k)).collect()
    }

    pub fn successors(&self, keys: &[u64]) -> Vec<u64> {
        keys.iter().map(|&k| self.successor(k)).collect()
    }

    pub fn contains(&self, k: u64) -> bool {
        self.map.contains_key(&k)
    }

    pub fn walk(&self) -> Vec<KeyValue> {
        self.map.iter().map(|(&k, &v)| KeyValue::new(k, v)).collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.map.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A second, independent reference: a plain sorted vector updated by linear
/// scans. Only meant for small instances.
#[derive(Clone, Debug, Default)]
pub struct SortedVecOracle {
    pairs: Vec<KeyValue>,
}

impl SortedVecOracle {
    pub fn insert(&mut self, kv: KeyValue) {
        let mut at = self.pairs.len();
        for (i, p) in self.pairs.iter_mut().enumerate() {
            if p.key == kv.key {
                p.row_id = kv.row_id;
                return;
            }
            if p.key > kv.key {
                at = i;
                break;
            }
        }
        self.pairs.insert(at, kv);
    }

    pub fn delete(&mut self, k: u64) {
        self.pairs.retain(|p| p.key != k);
    }

    pub fn point(&self, k: u64) -> u64 {
        self.pairs.iter().find(|p| p.key == k).map_or(RESERVED_KEY, |p| p.row_id)
    }

    pub fn successor(&self, k: u64) -> u64 {
        self.pairs.iter().find(|p| p.key >= k).map_or(RESERVED_KEY, |p| p.key)
    }

    pub fn walk(&self) -> Vec<KeyValue> {
        self.pairs.clone()
    }
}
