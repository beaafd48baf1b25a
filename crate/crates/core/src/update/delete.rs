//! Deletion kernels for one bucket. Deleted pairs are removed physically and
//! survivors compacted left; a node that empties is unlinked and freed.

use super::lanes::{prefix_count, LaneGroup};
use super::trace::Tracer;
use super::{BucketUpdate, DeleteKernel};
use crate::chain::BucketChain;
use crate::node::NodeRef;

pub(crate) fn run<T: Tracer>(
    kernel: DeleteKernel,
    chain: &mut BucketChain<'_, '_>,
    keys: &[u64],
    lanes: &mut LaneGroup,
    tracer: &mut T,
) -> BucketUpdate {
    let mut out = BucketUpdate::default();
    match kernel {
        DeleteKernel::StShiftLeft => shift_left(chain, keys, None, &mut out),
        DeleteKernel::TlShiftLeft => shift_left(chain, keys, Some(lanes), &mut out),
        DeleteKernel::TlBulk => tl_bulk(chain, keys, lanes, tracer, &mut out),
    }
    chain.counters.key_comparisons += std::mem::take(&mut lanes.comparisons);
    out
}

/// Cursor over a chain that remembers the predecessor for unlinking.
struct Cursor {
    prev: Option<NodeRef>,
    curr: NodeRef,
}

impl Cursor {
    /// Advances while `k` is above the current node's maxKey. Returns false
    /// when `k` is above every key in the chain.
    fn seek(&mut self, chain: &mut BucketChain<'_, '_>, k: u64) -> bool {
        loop {
            let node = chain.node(self.curr);
            let (max, next) = (node.max_key(), node.next());
            chain.counters.key_comparisons += 1;
            if k <= max {
                return true;
            }
            match next {
                Some(n) => {
                    self.prev = Some(self.curr);
                    self.curr = n;
                    chain.visit();
                }
                None => return false,
            }
        }
    }

    /// Unlinks the (empty) current node. Returns false when it was the last.
    fn drop_current(&mut self, chain: &mut BucketChain<'_, '_>) -> bool {
        match chain.unlink(self.prev, self.curr) {
            Some(next) => {
                self.curr = next;
                chain.visit();
                true
            }
            None => false,
        }
    }
}

fn start(chain: &mut BucketChain<'_, '_>) -> Option<Cursor> {
    let head = chain.head()?;
    chain.visit();
    Some(Cursor { prev: None, curr: head })
}

/// Per key: locate it, shift the suffix left by one. With a lane group the
/// lookup is a ballot and the shift a parallel write from registers.
fn shift_left(chain: &mut BucketChain<'_, '_>, keys: &[u64], mut lanes: Option<&mut LaneGroup>, out: &mut BucketUpdate) {
    let Some(mut cur) = start(chain) else {
        out.misses += keys.len() as u64;
        return;
    };
    for (done, &k) in keys.iter().enumerate() {
        if !cur.seek(chain, k) {
            out.misses += (keys.len() - done) as u64;
            return;
        }
        let remaining = match lanes.as_deref_mut() {
            None => {
                let pairs = chain.node(cur.curr).pairs();
                let cost = (usize::BITS - pairs.len().leading_zeros()) as u64;
                let found = pairs.binary_search_by_key(&k, |kv| kv.key);
                chain.counters.key_comparisons += cost;
                let Ok(pos) = found else {
                    out.misses += 1;
                    continue;
                };
                let mut node = chain.node_mut(cur.curr);
                let len = node.len();
                node.slots.copy_within(pos + 1..len, pos);
                node.set_len(len - 1);
                len - 1
            }
            Some(lanes) => {
                lanes.load(chain.node(cur.curr).pairs());
                let Some(pos) = lanes.find(k) else {
                    out.misses += 1;
                    continue;
                };
                let active = lanes.active();
                let mut node = chain.node_mut(cur.curr);
                for lane in pos + 1..active {
                    node.slots[lane - 1] = lanes.reg(lane);
                }
                node.set_len(active - 1);
                active - 1
            }
        };
        out.deleted += 1;
        if remaining == 0 && !cur.drop_current(chain) {
            out.misses += (keys.len() - done - 1) as u64;
            return;
        }
    }
}

/// Tiled bulk deletion: lanes load one key each, every delete key aimed at
/// the node votes into a deletion mask, and each surviving lane moves left
/// by the number of deleted lanes before it.
fn tl_bulk<T: Tracer>(chain: &mut BucketChain<'_, '_>, keys: &[u64], lanes: &mut LaneGroup, tracer: &mut T, out: &mut BucketUpdate) {
    let Some(mut cur) = start(chain) else {
        out.misses += keys.len() as u64;
        return;
    };
    let mut i = 0;
    while i < keys.len() {
        if !cur.seek(chain, keys[i]) {
            out.misses += (keys.len() - i) as u64;
            return;
        }
        let node = chain.node(cur.curr);
        let max = node.max_key();
        let end = i + keys[i..].partition_point(|&k| k <= max);
        lanes.load(node.pairs());

        let mut mask = 0u64;
        for &dk in &keys[i..end] {
            let hit = lanes.ballot(|key| key == dk);
            if hit & !mask == 0 {
                out.misses += 1;
            } else {
                mask |= hit;
            }
        }
        let deleted = mask.count_ones() as usize;
        let active = lanes.active();
        let mut node = chain.node_mut(cur.curr);
        for lane in 0..active {
            if mask >> lane & 1 == 0 {
                node.slots[lane - prefix_count(mask, lane)] = lanes.reg(lane);
            }
        }
        let remaining = active - deleted;
        node.set_len(remaining);
        if T::ENABLED {
            tracer.delete_node(lanes.regs(), mask, node.pairs());
        }
        out.deleted += deleted as u64;
        i = end;

        if remaining == 0 && !cur.drop_current(chain) {
            out.misses += (keys.len() - i) as u64;
            return;
        }
    }
}
