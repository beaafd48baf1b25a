//! Exclusive handle on one bucket's node chain for the duration of a phase.

use crate::arena::ArenaView;
use crate::error::Result;
use crate::metrics::Counters;
use crate::node::{NodeMut, NodeRef, NodeView};

pub(crate) struct BucketChain<'v, 'a> {
    view: &'v ArenaView<'a>,
    head: &'v mut u32,
    pub counters: Counters,
}

impl<'v, 'a> BucketChain<'v, 'a> {
    /// # Safety
    /// The caller must be the only party touching the nodes reachable from
    /// `head` (and any nodes this chain allocates) while the handle lives.
    pub(crate) unsafe fn new(view: &'v ArenaView<'a>, head: &'v mut u32) -> Self {
        BucketChain { view, head, counters: Counters::default() }
    }

    pub fn capacity(&self) -> usize {
        self.view.capacity()
    }

    pub fn head(&self) -> Option<NodeRef> {
        NodeRef::from_link(*self.head)
    }

    pub fn set_head(&mut self, r: Option<NodeRef>) {
        *self.head = NodeRef::link(r);
    }

    pub fn node(&self, r: NodeRef) -> NodeView<'_> {
        // SAFETY: the chain is exclusively owned and every mutable borrow
        // goes through `&mut self`.
        unsafe { self.view.node(r) }
    }

    pub fn node_mut(&mut self, r: NodeRef) -> NodeMut<'_> {
        // SAFETY: as above; `&mut self` rules out a concurrent borrow.
        unsafe { self.view.node_mut(r) }
    }

    pub fn pair_mut(&mut self, a: NodeRef, b: NodeRef) -> (NodeMut<'_>, NodeMut<'_>) {
        assert_ne!(a, b);
        // SAFETY: distinct nodes of an exclusively owned chain.
        unsafe { (self.view.node_mut(a), self.view.node_mut(b)) }
    }

    /// Records arrival at a node.
    pub fn visit(&mut self) {
        self.counters.node_visits += 1;
    }

    /// Follows node links from `from` until `key <= maxKey` or the chain ends.
    pub fn route(&mut self, mut from: NodeRef, key: u64) -> NodeRef {
        loop {
            let n = self.node(from);
            let (next, max) = (n.next(), n.max_key());
            self.counters.key_comparisons += 1;
            match next {
                Some(next) if key > max => {
                    from = next;
                    self.visit();
                }
                _ => return from,
            }
        }
    }

    /// Returns the head, allocating a fresh one for an empty bucket.
    pub fn head_or_allocate(&mut self) -> Result<NodeRef> {
        match self.head() {
            Some(h) => Ok(h),
            None => {
                let r = self.view.allocate()?;
                self.set_head(Some(r));
                Ok(r)
            }
        }
    }

    /// Moves the upper half of a full node into a new right sibling linked
    /// directly after it. The left node keeps `ceil(NS/2)` pairs.
    pub fn split(&mut self, left: NodeRef) -> Result<NodeRef> {
        let right = self.view.allocate()?;
        self.split_into(left, right);
        Ok(right)
    }

    /// [`split`](Self::split) with a right node the caller already holds.
    pub fn split_into(&mut self, left: NodeRef, right: NodeRef) {
        let (mut l, mut r) = self.pair_mut(left, right);
        let len = l.len();
        let keep = len.div_ceil(2);
        let moved = len - keep;
        r.slots[..moved].copy_from_slice(&l.slots[keep..len]);
        r.meta.next = l.meta.next;
        r.set_len(moved);
        l.meta.next = right.0;
        l.set_len(keep);
        self.counters.splits += 1;
    }

    /// Allocates `n` nodes, or none at all.
    pub fn reserve(&mut self, n: usize) -> Result<Vec<NodeRef>> {
        let mut got = Vec::with_capacity(n);
        for _ in 0..n {
            match self.view.allocate() {
                Ok(r) => got.push(r),
                Err(e) => {
                    for r in got.into_iter().rev() {
                        // SAFETY: just allocated by this chain and never linked.
                        unsafe { self.view.free(r) };
                    }
                    return Err(e);
                }
            }
        }
        Ok(got)
    }

    /// Detaches an emptied node, frees it, and returns its successor.
    pub fn unlink(&mut self, prev: Option<NodeRef>, r: NodeRef) -> Option<NodeRef> {
        let next = self.node(r).next();
        debug_assert_eq!(self.node(r).len(), 0);
        match prev {
            Some(p) => self.node_mut(p).meta.next = NodeRef::link(next),
            None => self.set_head(next),
        }
        // SAFETY: `r` is empty, now unreachable, and owned by this chain.
        unsafe { self.view.free(r) };
        self.counters.nodes_freed += 1;
        next
    }
}
