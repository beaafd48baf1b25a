//! Insertion kernels for one bucket. Every kernel receives the bucket's
//! sorted, duplicate-free sublist and upserts it into the chain.

use super::lanes::LaneGroup;
use super::trace::Tracer;
use super::{BucketUpdate, InsertKernel};
use crate::chain::BucketChain;
use crate::error::Result;
use crate::node::{KeyValue, NodeRef};

pub(crate) fn run<T: Tracer>(
    kernel: InsertKernel,
    chain: &mut BucketChain<'_, '_>,
    keys: &[u64],
    rows: &[u64],
    lanes: &mut LaneGroup,
    tracer: &mut T,
) -> BucketUpdate {
    let mut out = BucketUpdate::default();
    let res = match kernel {
        InsertKernel::StShiftRight => st_shift_right(chain, keys, rows, &mut out),
        InsertKernel::StBulk => st_bulk(chain, keys, rows, &mut out),
        InsertKernel::TlShiftRight => tl_shift_right(chain, keys, rows, lanes, &mut out),
        InsertKernel::TlBulk => tl_bulk(chain, keys, rows, lanes, tracer, &mut out),
        InsertKernel::StTlMixed => unreachable!("mixed kernel is resolved per round"),
    };
    chain.counters.key_comparisons += std::mem::take(&mut lanes.comparisons);
    out.error = res.err();
    out
}

fn search_cost(len: usize) -> u64 {
    (usize::BITS - len.leading_zeros()) as u64
}

fn entry(chain: &mut BucketChain<'_, '_>) -> Result<NodeRef> {
    let head = chain.head_or_allocate()?;
    chain.visit();
    Ok(head)
}

/// Per key: search the node, shift the suffix right by one, place the pair.
fn st_shift_right(chain: &mut BucketChain<'_, '_>, keys: &[u64], rows: &[u64], out: &mut BucketUpdate) -> Result<()> {
    let mut curr = entry(chain)?;
    for (&k, &v) in keys.iter().zip(rows) {
        curr = chain.route(curr, k);
        let len = chain.node(curr).len();
        chain.counters.key_comparisons += search_cost(len);
        let found = chain.node(curr).pairs().binary_search_by_key(&k, |kv| kv.key);
        let mut pos = match found {
            Ok(i) => {
                chain.node_mut(curr).slots[i].row_id = v;
                out.updated += 1;
                continue;
            }
            Err(i) => i,
        };
        if len == chain.capacity() {
            let right = chain.split(curr)?;
            let left_max = chain.node(curr).max_key();
            chain.counters.key_comparisons += 1;
            if k > left_max {
                curr = right;
                chain.visit();
                pos = chain.node(curr).pairs().partition_point(|kv| kv.key < k);
            }
        }
        let mut node = chain.node_mut(curr);
        let len = node.len();
        node.slots.copy_within(pos..len, pos + 1);
        node.slots[pos] = KeyValue::new(k, v);
        node.set_len(len + 1);
        out.inserted += 1;
    }
    Ok(())
}

/// Per node: merge the node's share of the sublist with its contents in a
/// private copy space, then copy back, splitting whenever the node fills.
fn st_bulk(chain: &mut BucketChain<'_, '_>, keys: &[u64], rows: &[u64], out: &mut BucketUpdate) -> Result<()> {
    let mut curr = entry(chain)?;
    let mut copy: Vec<KeyValue> = Vec::with_capacity(2 * chain.capacity());
    let mut i = 0;
    while i < keys.len() {
        curr = chain.route(curr, keys[i]);
        let node = chain.node(curr);
        let limit = if node.next().is_some() { node.max_key() } else { u64::MAX };
        let end = i + keys[i..].partition_point(|&k| k <= limit);

        copy.clear();
        let pairs = node.pairs();
        let (mut a, mut b) = (0, i);
        let (mut inserted, mut updated, mut comparisons) = (0, 0, 0);
        while a < pairs.len() || b < end {
            comparisons += 1;
            if b == end || (a < pairs.len() && pairs[a].key < keys[b]) {
                copy.push(pairs[a]);
                a += 1;
            } else if a < pairs.len() && pairs[a].key == keys[b] {
                copy.push(KeyValue::new(keys[b], rows[b]));
                updated += 1;
                a += 1;
                b += 1;
            } else {
                copy.push(KeyValue::new(keys[b], rows[b]));
                inserted += 1;
                b += 1;
            }
        }
        chain.counters.key_comparisons += comparisons;
        curr = write_back(chain, curr, &copy)?;
        out.inserted += inserted;
        out.updated += updated;
        i = end;
    }
    Ok(())
}

/// Nodes that [`write_back`] will split off while writing `len` pairs.
fn splits_needed(cap: usize, len: usize) -> usize {
    let (mut w, mut rem, mut n) = (0, len, 0);
    loop {
        rem -= (cap - w).min(rem);
        if rem == 0 {
            return n;
        }
        n += 1;
        w = cap - cap.div_ceil(2);
    }
}

/// Writes `src` into `curr` from slot 0, splitting each time the node is
/// full and continuing in the new right node. Returns the last node written.
/// All right nodes are reserved first, so on exhaustion nothing is written.
fn write_back(chain: &mut BucketChain<'_, '_>, mut curr: NodeRef, mut src: &[KeyValue]) -> Result<NodeRef> {
    let cap = chain.capacity();
    let mut spare = chain.reserve(splits_needed(cap, src.len()))?.into_iter();
    let mut w = 0;
    loop {
        let take = (cap - w).min(src.len());
        {
            let mut node = chain.node_mut(curr);
            node.slots[w..w + take].copy_from_slice(&src[..take]);
            node.set_len(w + take);
        }
        src = &src[take..];
        if src.is_empty() {
            debug_assert!(spare.next().is_none());
            return Ok(curr);
        }
        let right = spare.next().expect("reserved");
        chain.split_into(curr, right);
        curr = right;
        chain.visit();
        w = chain.node(curr).len();
    }
}

/// Shift-right with one lane per slot: a ballot finds the insertion point and
/// the lanes at or past it write their key one slot to the right.
fn tl_shift_right(
    chain: &mut BucketChain<'_, '_>,
    keys: &[u64],
    rows: &[u64],
    lanes: &mut LaneGroup,
    out: &mut BucketUpdate,
) -> Result<()> {
    let mut curr = entry(chain)?;
    for (&k, &v) in keys.iter().zip(rows) {
        curr = chain.route(curr, k);
        lanes.load(chain.node(curr).pairs());
        if let Some(lane) = lanes.find(k) {
            chain.node_mut(curr).slots[lane].row_id = v;
            out.updated += 1;
            continue;
        }
        if lanes.active() == chain.capacity() {
            let right = chain.split(curr)?;
            chain.counters.key_comparisons += 1;
            if k > chain.node(curr).max_key() {
                curr = right;
                chain.visit();
            }
            lanes.load(chain.node(curr).pairs());
        }
        let pos = lanes.count_below(k);
        let active = lanes.active();
        let mut node = chain.node_mut(curr);
        for lane in pos..active {
            node.slots[lane + 1] = lanes.reg(lane);
        }
        node.slots[pos] = KeyValue::new(k, v);
        node.set_len(active + 1);
        out.inserted += 1;
    }
    Ok(())
}

/// Tiled bulk insertion without a copy space.
///
/// 1. Lanes lift the node's keys (the originals) into registers.
/// 2. For the current insert key `k`, the test-key is the smallest original
///    `> k` (+inf if none).
/// 3. Originals not yet written back that are `< test-key` go to the next free
///    positions, then every insert key in `[k, test-key)` does.
/// 4. Repeat until the node's share of the sublist is exhausted or the node
///    cannot take another key without dropping an original; either way the
///    remaining originals are written back.
/// 5. A full node with keys pending is split and the loop restarts from 1 at
///    whichever half the next key routes to.
///
/// An insert key equal to an original updates that lane's row id before the
/// original is written back.
fn tl_bulk<T: Tracer>(
    chain: &mut BucketChain<'_, '_>,
    keys: &[u64],
    rows: &[u64],
    lanes: &mut LaneGroup,
    tracer: &mut T,
    out: &mut BucketUpdate,
) -> Result<()> {
    let cap = chain.capacity();
    let mut curr = entry(chain)?;
    let mut i = 0;
    while i < keys.len() {
        curr = chain.route(curr, keys[i]);
        let node = chain.node(curr);
        let limit = if node.next().is_some() { node.max_key() } else { u64::MAX };
        let end = i + keys[i..].partition_point(|&k| k <= limit);

        // Step 1: load node state.
        lanes.load(node.pairs());
        let n0 = lanes.active();
        if T::ENABLED {
            tracer.load(lanes.regs());
        }

        // Originals below the first insert key never move.
        let mut w = lanes.count_below(keys[i]);
        let mut o = w;
        let mut full = false;
        let mut node = chain.node_mut(curr);
        while i < end {
            let k = keys[i];
            // Step 2: successor boundary.
            let t = lanes.count_at_most(k);
            let test_key = (t < n0).then(|| lanes.reg(t).key);
            if t > o && lanes.reg(t - 1).key == k {
                lanes.set_row(t - 1, rows[i]);
                out.updated += 1;
                i += 1;
            }
            // Write back originals in [previous test-key, test-key).
            for lane in o..t {
                node.slots[w] = lanes.reg(lane);
                w += 1;
            }
            o = t;
            // Step 3: in-place merge for this boundary.
            let bound = test_key.unwrap_or(u64::MAX);
            while i < end && keys[i] < bound {
                if w + 1 + (n0 - o) > cap {
                    full = true;
                    break;
                }
                node.slots[w] = KeyValue::new(keys[i], rows[i]);
                w += 1;
                i += 1;
                out.inserted += 1;
            }
            if full || i == end {
                for lane in o..n0 {
                    node.slots[w] = lanes.reg(lane);
                    w += 1;
                }
                o = n0;
            }
            if T::ENABLED {
                tracer.insert_step(test_key, &node.slots[..w.max(n0)]);
            }
            if full {
                break;
            }
        }
        debug_assert_eq!(o, n0);
        node.set_len(w);

        if full {
            if T::ENABLED {
                tracer.split();
            }
            chain.split(curr)?;
        }
    }
    Ok(())
}
