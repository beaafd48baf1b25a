//! Storage cells: key/rowId pairs and fixed-capacity sorted nodes.

use serde::{Deserialize, Serialize};

/// Largest representable key. Never stored; doubles as +infinity for the last
/// bucket and as the not-found marker in query results.
pub const RESERVED_KEY: u64 = u64::MAX;

pub(crate) const NIL: u32 = u32::MAX;

/// Largest supported node capacity. A lane group is at most 64 lanes wide so
/// ballots fit in a `u64`.
pub const MAX_NODE_CAPACITY: usize = 64;

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyValue {
    pub key: u64,
    pub row_id: u64,
}

impl KeyValue {
    pub const fn new(key: u64, row_id: u64) -> Self {
        KeyValue { key, row_id }
    }
}

impl From<(u64, u64)> for KeyValue {
    fn from((key, row_id): (u64, u64)) -> Self {
        KeyValue { key, row_id }
    }
}

/// Handle to a node inside a [`NodeArena`](crate::arena::NodeArena).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(pub(crate) u32);

impl NodeRef {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_link(link: u32) -> Option<NodeRef> {
        (link != NIL).then_some(NodeRef(link))
    }

    pub(crate) fn link(node: Option<NodeRef>) -> u32 {
        node.map_or(NIL, |r| r.0)
    }
}

/// Per-node metadata stored beside the slot array.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct NodeMeta {
    pub max_key: u64,
    pub size: u32,
    pub next: u32,
}

impl NodeMeta {
    pub(crate) const EMPTY: NodeMeta = NodeMeta { max_key: 0, size: 0, next: NIL };
}

impl Default for NodeMeta {
    fn default() -> Self {
        NodeMeta::EMPTY
    }
}

/// Bytes one node occupies: the slot array plus maxKey, size and next link.
pub const fn node_bytes(capacity: usize) -> usize {
    capacity * std::mem::size_of::<KeyValue>() + 8 + 4 + 4
}

/// Read-only view of one node.
#[derive(Clone, Copy, Debug)]
pub struct NodeView<'a> {
    pub(crate) meta: &'a NodeMeta,
    pub(crate) slots: &'a [KeyValue],
}

impl<'a> NodeView<'a> {
    pub fn len(&self) -> usize {
        self.meta.size as usize
    }

    pub fn is_empty(&self) -> bool {
        self.meta.size == 0
    }

    pub fn max_key(&self) -> u64 {
        self.meta.max_key
    }

    pub fn next(&self) -> Option<NodeRef> {
        NodeRef::from_link(self.meta.next)
    }

    /// Occupied slots, sorted by key.
    pub fn pairs(&self) -> &'a [KeyValue] {
        &self.slots[..self.meta.size as usize]
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }
}

/// Exclusive view of one node. `slots` spans the full capacity.
#[derive(Debug)]
pub(crate) struct NodeMut<'a> {
    pub meta: &'a mut NodeMeta,
    pub slots: &'a mut [KeyValue],
}

impl NodeMut<'_> {
    pub fn len(&self) -> usize {
        self.meta.size as usize
    }

    pub fn pairs(&self) -> &[KeyValue] {
        &self.slots[..self.meta.size as usize]
    }

    /// Sets the size and re-derives maxKey from the last occupied slot.
    pub fn set_len(&mut self, len: usize) {
        debug_assert!(len <= self.slots.len());
        self.meta.size = len as u32;
        if len > 0 {
            self.meta.max_key = self.slots[len - 1].key;
        }
    }
}
