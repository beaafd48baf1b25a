//! Pre-sized node storage split into a bucket region (filled at build) and an
//! allocation region (handed out to splits), plus a LIFO free list.
//!
//! Allocation and freeing are safe to call from many workers at once. Node
//! contents are only ever touched by the worker owning the chain the node
//! belongs to; [`ArenaView`] is the type that hands out that access during a
//! parallel phase.

use std::marker::PhantomData;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::node::{KeyValue, NodeMeta, NodeMut, NodeRef, NodeView};

/// Which contiguous region a node lives in, with its offset in that region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Bucket(usize),
    Allocation(usize),
}

#[derive(Debug)]
struct AllocState {
    /// Next never-allocated node (absolute index).
    next_fresh: AtomicUsize,
    free: Mutex<Vec<NodeRef>>,
}

impl AllocState {
    fn take(&self, total: usize) -> Result<NodeRef> {
        if let Some(r) = self.free.lock().unwrap().pop() {
            return Ok(r);
        }
        let mut cur = self.next_fresh.load(Ordering::Relaxed);
        loop {
            if cur >= total {
                return Err(Error::ArenaExhausted { capacity: total });
            }
            match self.next_fresh.compare_exchange_weak(
                cur,
                cur + 1,
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => return Ok(NodeRef(cur as u32)),
                Err(seen) => cur = seen,
            }
        }
    }

    fn give_back(&self, r: NodeRef) {
        self.free.lock().unwrap().push(r);
    }
}

#[derive(Debug)]
pub struct NodeArena {
    capacity: usize,
    bucket_region: usize,
    meta: Vec<NodeMeta>,
    slots: Vec<KeyValue>,
    alloc: AllocState,
}

impl Clone for NodeArena {
    fn clone(&self) -> Self {
        NodeArena {
            capacity: self.capacity,
            bucket_region: self.bucket_region,
            meta: self.meta.clone(),
            slots: self.slots.clone(),
            alloc: AllocState {
                next_fresh: AtomicUsize::new(self.alloc.next_fresh.load(Ordering::Relaxed)),
                free: Mutex::new(self.alloc.free.lock().unwrap().clone()),
            },
        }
    }
}

impl NodeArena {
    /// Reserves `bucket_region + allocation_region` nodes of `capacity` slots.
    ///
    /// The bucket region is considered handed out already: the builder writes
    /// into it directly through [`NodeArena::bucket_node`].
    pub fn new(capacity: usize, bucket_region: usize, allocation_region: usize) -> Self {
        let total = bucket_region + allocation_region;
        assert!(total < u32::MAX as usize, "arena too large for 32-bit node links");
        NodeArena {
            capacity,
            bucket_region,
            meta: vec![NodeMeta::EMPTY; total],
            slots: vec![KeyValue::default(); total * capacity],
            alloc: AllocState {
                next_fresh: AtomicUsize::new(bucket_region),
                free: Mutex::new(Vec::new()),
            },
        }
    }

    pub fn node_capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_nodes(&self) -> usize {
        self.meta.len()
    }

    pub fn bucket_region_len(&self) -> usize {
        self.bucket_region
    }

    pub fn allocation_region_len(&self) -> usize {
        self.meta.len() - self.bucket_region
    }

    pub fn free_list_len(&self) -> usize {
        self.alloc.free.lock().unwrap().len()
    }

    /// Nodes in the allocation region that have never been handed out.
    pub fn never_allocated(&self) -> usize {
        self.meta.len() - self.alloc.next_fresh.load(Ordering::Relaxed)
    }

    /// Nodes that [`allocate_node`](Self::allocate_node) can still supply.
    pub fn available(&self) -> usize {
        self.free_list_len() + self.never_allocated()
    }

    pub fn free_list(&self) -> Vec<NodeRef> {
        self.alloc.free.lock().unwrap().clone()
    }

    pub fn region_of(&self, r: NodeRef) -> Region {
        let i = r.index();
        if i < self.bucket_region {
            Region::Bucket(i)
        } else {
            Region::Allocation(i - self.bucket_region)
        }
    }

    /// The `i`-th node of the bucket region.
    pub fn bucket_node(&self, i: usize) -> NodeRef {
        assert!(i < self.bucket_region);
        NodeRef(i as u32)
    }

    /// Hands out a zeroed node, preferring the free list over the allocation
    /// region.
    pub fn allocate_node(&mut self) -> Result<NodeRef> {
        let r = self.alloc.take(self.meta.len())?;
        self.meta[r.index()] = NodeMeta::EMPTY;
        Ok(r)
    }

    /// Returns an empty, unlinked node to the free list.
    pub fn free_node(&mut self, r: NodeRef) -> Result<()> {
        let size = self.meta[r.index()].size as usize;
        if size > 0 {
            return Err(Error::FreeingLiveNode { node: r.0, size });
        }
        self.meta[r.index()] = NodeMeta::EMPTY;
        self.alloc.give_back(r);
        Ok(())
    }

    pub fn node(&self, r: NodeRef) -> NodeView<'_> {
        let i = r.index();
        NodeView {
            meta: &self.meta[i],
            slots: &self.slots[i * self.capacity..(i + 1) * self.capacity],
        }
    }

    pub(crate) fn node_mut(&mut self, r: NodeRef) -> NodeMut<'_> {
        let i = r.index();
        NodeMut {
            meta: &mut self.meta[i],
            slots: &mut self.slots[i * self.capacity..(i + 1) * self.capacity],
        }
    }

    pub(crate) fn view(&mut self) -> ArenaView<'_> {
        ArenaView {
            meta: self.meta.as_mut_ptr(),
            slots: self.slots.as_mut_ptr(),
            len: self.meta.len(),
            capacity: self.capacity,
            alloc: &self.alloc,
            _marker: PhantomData,
        }
    }
}

/// Shared handle over an exclusively borrowed arena, used by the workers of
/// one update phase. Each worker owns one bucket chain; node access goes
/// through [`BucketChain`](crate::chain::BucketChain), which is only built
/// for chains the caller owns.
pub(crate) struct ArenaView<'a> {
    meta: *mut NodeMeta,
    slots: *mut KeyValue,
    len: usize,
    capacity: usize,
    alloc: &'a AllocState,
    _marker: PhantomData<&'a mut NodeArena>,
}

// SAFETY: node memory is partitioned by chain ownership; the allocator state is
// internally synchronized.
unsafe impl Send for ArenaView<'_> {}
unsafe impl Sync for ArenaView<'_> {}

impl ArenaView<'_> {
    pub(crate) fn capacity(&self) -> usize {
        self.capacity
    }

    /// # Safety
    /// No other live reference to node `r` may exist while the returned view
    /// is alive.
    pub(crate) unsafe fn node_mut(&self, r: NodeRef) -> NodeMut<'_> {
        let i = r.index();
        assert!(i < self.len);
        NodeMut {
            meta: &mut *self.meta.add(i),
            slots: std::slice::from_raw_parts_mut(self.slots.add(i * self.capacity), self.capacity),
        }
    }

    /// # Safety
    /// No mutable reference to node `r` may exist while the returned view is
    /// alive.
    pub(crate) unsafe fn node(&self, r: NodeRef) -> NodeView<'_> {
        let i = r.index();
        assert!(i < self.len);
        NodeView {
            meta: &*self.meta.add(i),
            slots: std::slice::from_raw_parts(self.slots.add(i * self.capacity), self.capacity),
        }
    }

    pub(crate) fn allocate(&self) -> Result<NodeRef> {
        let r = self.alloc.take(self.len)?;
        // SAFETY: a node fresh from the allocator is referenced by nobody else.
        unsafe { *self.meta.add(r.index()) = NodeMeta::EMPTY };
        Ok(r)
    }

    /// # Safety
    /// `r` must be empty, unlinked, and owned by the caller.
    pub(crate) unsafe fn free(&self, r: NodeRef) {
        *self.meta.add(r.index()) = NodeMeta::EMPTY;
        self.alloc.give_back(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_arena_hands_out_allocation_slot_zero() {
        let mut arena = NodeArena::new(4, 3, 5);
        let r = arena.allocate_node().unwrap();
        assert_eq!(arena.region_of(r), Region::Allocation(0));
        assert_eq!(arena.node(r).len(), 0);
        assert_eq!(arena.node(r).next(), None);
    }

    #[test]
    fn free_then_allocate_recycles_same_node() {
        let mut arena = NodeArena::new(4, 0, 4);
        let a = arena.allocate_node().unwrap();
        let _b = arena.allocate_node().unwrap();
        arena.free_node(a).unwrap();
        assert_eq!(arena.free_list_len(), 1);
        assert_eq!(arena.allocate_node().unwrap(), a);
    }

    #[test]
    fn second_allocation_after_recycle_comes_from_region() {
        let mut arena = NodeArena::new(4, 0, 4);
        let a = arena.allocate_node().unwrap();
        arena.free_node(a).unwrap();
        assert_eq!(arena.allocate_node().unwrap(), a);
        let b = arena.allocate_node().unwrap();
        assert_eq!(arena.region_of(b), Region::Allocation(1));
    }

    #[test]
    fn exhaustion_is_reported() {
        let mut arena = NodeArena::new(4, 2, 3);
        for _ in 0..3 {
            arena.allocate_node().unwrap();
        }
        assert_eq!(arena.allocate_node(), Err(Error::ArenaExhausted { capacity: 5 }));
    }

    #[test]
    fn freeing_live_node_is_rejected() {
        let mut arena = NodeArena::new(4, 0, 2);
        let r = arena.allocate_node().unwrap();
        {
            let mut n = arena.node_mut(r);
            for (i, s) in n.slots.iter_mut().take(3).enumerate() {
                *s = KeyValue::new(i as u64 + 1, 0);
            }
            n.set_len(3);
        }
        assert_eq!(arena.free_node(r), Err(Error::FreeingLiveNode { node: r.0, size: 3 }));
        assert_eq!(arena.free_list_len(), 0);
    }

    #[test]
    fn free_list_is_lifo() {
        let mut arena = NodeArena::new(2, 0, 3);
        let a = arena.allocate_node().unwrap();
        let b = arena.allocate_node().unwrap();
        arena.free_node(a).unwrap();
        arena.free_node(b).unwrap();
        assert_eq!(arena.allocate_node().unwrap(), b);
        assert_eq!(arena.allocate_node().unwrap(), a);
    }

    #[test]
    fn concurrent_allocation_hands_out_distinct_nodes() {
        use rayon::prelude::*;
        let mut arena = NodeArena::new(2, 0, 1000);
        let view = arena.view();
        let mut got: Vec<NodeRef> = (0..1000).into_par_iter().map(|_| view.allocate().unwrap()).collect();
        assert!(view.allocate().is_err());
        got.sort();
        got.dedup();
        assert_eq!(got.len(), 1000);
    }
}
