//! Lockstep emulation of a lane group (tile) of `TS` lanes.
//!
//! Lane `i` holds slot `i` of the node it loaded. Collective decisions are
//! ballots: every active lane evaluates a predicate and the results form a
//! bit mask, as a warp vote would.

use crate::node::{KeyValue, MAX_NODE_CAPACITY};

pub(crate) struct LaneGroup {
    width: usize,
    active: usize,
    regs: [KeyValue; MAX_NODE_CAPACITY],
    /// Predicate evaluations, summed over lanes.
    pub comparisons: u64,
}

impl LaneGroup {
    pub fn new(width: usize) -> Self {
        assert!(width.is_power_of_two() && width <= MAX_NODE_CAPACITY);
        LaneGroup { width, active: 0, regs: [KeyValue::default(); MAX_NODE_CAPACITY], comparisons: 0 }
    }

    /// Each lane lifts one slot into its register; lanes past `pairs.len()`
    /// sit idle.
    pub fn load(&mut self, pairs: &[KeyValue]) {
        debug_assert!(pairs.len() <= self.width);
        self.active = pairs.len();
        self.regs[..pairs.len()].copy_from_slice(pairs);
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn reg(&self, lane: usize) -> KeyValue {
        self.regs[lane]
    }

    pub fn regs(&self) -> &[KeyValue] {
        &self.regs[..self.active]
    }

    pub fn set_row(&mut self, lane: usize, row_id: u64) {
        self.regs[lane].row_id = row_id;
    }

    pub fn ballot(&mut self, pred: impl Fn(u64) -> bool) -> u64 {
        self.comparisons += self.active as u64;
        let mut mask = 0u64;
        for (lane, kv) in self.regs[..self.active].iter().enumerate() {
            mask |= (pred(kv.key) as u64) << lane;
        }
        mask
    }

    /// Lanes whose key is `< k`. Keys are sorted, so this is also the
    /// insertion position of `k`.
    pub fn count_below(&mut self, k: u64) -> usize {
        self.ballot(|key| key < k).count_ones() as usize
    }

    /// Lanes whose key is `<= k`: the lane index of the smallest key `> k`.
    pub fn count_at_most(&mut self, k: u64) -> usize {
        self.ballot(|key| key <= k).count_ones() as usize
    }

    /// The lane holding `k`, if any.
    pub fn find(&mut self, k: u64) -> Option<usize> {
        let m = self.ballot(|key| key == k);
        (m != 0).then(|| m.trailing_zeros() as usize)
    }
}

/// Number of set bits strictly below `lane`.
pub(crate) fn prefix_count(mask: u64, lane: usize) -> usize {
    (mask & ((1u64 << lane) - 1)).count_ones() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(keys: &[u64]) -> LaneGroup {
        let pairs: Vec<KeyValue> = keys.iter().map(|&k| KeyValue::new(k, 0)).collect();
        let mut g = LaneGroup::new(keys.len().next_power_of_two().max(1));
        g.load(&pairs);
        g
    }

    #[test]
    fn ballots() {
        let mut g = group(&[10, 25, 30, 40, 70]);
        assert_eq!(g.count_below(15), 1);
        assert_eq!(g.count_at_most(25), 2);
        assert_eq!(g.count_at_most(99), 5);
        assert_eq!(g.find(40), Some(3));
        assert_eq!(g.find(41), None);
        assert_eq!(g.comparisons, 25);
    }

    #[test]
    fn prefix_counts() {
        let mask = 0b0001_0100;
        assert_eq!(prefix_count(mask, 0), 0);
        assert_eq!(prefix_count(mask, 3), 1);
        assert_eq!(prefix_count(mask, 5), 2);
        assert_eq!(prefix_count(mask, 63), 2);
    }
}
