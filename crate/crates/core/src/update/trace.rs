//! Step logs for the tiled bulk kernels, recorded on single-bucket indexes.

use serde::Serialize;

use super::{delete, insert, DeleteKernel, InsertKernel};
use crate::arena::NodeArena;
use crate::chain::BucketChain;
use crate::error::{Error, Result};
use crate::index::{BuildConfig, Index};
use crate::node::{KeyValue, RESERVED_KEY};

/// Hooks the kernels call at step boundaries. The no-op implementation
/// compiles away.
pub(crate) trait Tracer {
    const ENABLED: bool;
    fn load(&mut self, _originals: &[KeyValue]) {}
    fn insert_step(&mut self, _test_key: Option<u64>, _slots: &[KeyValue]) {}
    fn split(&mut self) {}
    fn delete_node(&mut self, _lanes: &[KeyValue], _mask: u64, _result: &[KeyValue]) {}
}

pub(crate) struct NoTrace;

impl Tracer for NoTrace {
    const ENABLED: bool = false;
}

/// One boundary step of a tiled bulk insertion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InsertStep {
    /// Smallest original key above the current insert key; `None` is +inf.
    pub test_key: Option<u64>,
    /// Node memory after the step, up to the highest position holding data.
    pub slots: Vec<u64>,
}

/// Everything that happened between one load of node state and the next.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NodeInsertTrace {
    /// Keys lifted into lane registers.
    pub originals: Vec<u64>,
    pub steps: Vec<InsertStep>,
    /// Whether the node filled up and was split afterwards.
    pub split: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InsertTrace {
    pub loads: Vec<NodeInsertTrace>,
    /// Keys per node of the resulting chain.
    pub final_chain: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeleteNodeTrace {
    /// Keys lifted into lane registers.
    pub lanes: Vec<u64>,
    /// Lanes whose key was deleted.
    pub mask: Vec<bool>,
    /// Shift-left distance per surviving lane; `None` for deleted lanes.
    pub shift: Vec<Option<usize>>,
    /// Lane keys that survive, at their original lane positions.
    pub compacted: Vec<Option<u64>>,
    /// Node contents after compaction.
    pub result: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DeleteTrace {
    pub nodes: Vec<DeleteNodeTrace>,
    pub final_chain: Vec<Vec<u64>>,
}

#[derive(Default)]
struct Recorder {
    insert: InsertTrace,
    delete: DeleteTrace,
}

impl Tracer for Recorder {
    const ENABLED: bool = true;

    fn load(&mut self, originals: &[KeyValue]) {
        self.insert.loads.push(NodeInsertTrace {
            originals: originals.iter().map(|kv| kv.key).collect(),
            ..Default::default()
        });
    }

    fn insert_step(&mut self, test_key: Option<u64>, slots: &[KeyValue]) {
        let step = InsertStep { test_key, slots: slots.iter().map(|kv| kv.key).collect() };
        self.insert.loads.last_mut().expect("step before load").steps.push(step);
    }

    fn split(&mut self) {
        self.insert.loads.last_mut().expect("split before load").split = true;
    }

    fn delete_node(&mut self, lanes: &[KeyValue], mask: u64, result: &[KeyValue]) {
        let deleted = |i: usize| mask >> i & 1 == 1;
        self.delete.nodes.push(DeleteNodeTrace {
            lanes: lanes.iter().map(|kv| kv.key).collect(),
            mask: (0..lanes.len()).map(deleted).collect(),
            shift: (0..lanes.len())
                .map(|i| (!deleted(i)).then(|| super::lanes::prefix_count(mask, i)))
                .collect(),
            compacted: lanes.iter().enumerate().map(|(i, kv)| (!deleted(i)).then_some(kv.key)).collect(),
            result: result.iter().map(|kv| kv.key).collect(),
        });
    }
}

/// A one-bucket index whose single node holds `node_keys` (row id = key).
fn single_node_index(node_keys: &[u64], capacity: usize, spare_nodes: usize) -> Result<Index> {
    let config = BuildConfig { node_capacity: capacity, build_fill_fraction: 1.0, allocation_region_factor: 0 };
    config.validate()?;
    if node_keys.len() > capacity || node_keys.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("node keys must be strictly increasing and fit one node".into()));
    }
    if node_keys.contains(&RESERVED_KEY) {
        return Err(Error::ReservedKey(RESERVED_KEY));
    }
    let mut arena = NodeArena::new(capacity, 1, spare_nodes);
    let head = arena.bucket_node(0);
    let mut node = arena.node_mut(head);
    for (slot, &k) in node.slots.iter_mut().zip(node_keys) {
        *slot = KeyValue::new(k, k);
    }
    node.set_len(node_keys.len());
    let heads = vec![if node_keys.is_empty() { crate::node::NIL } else { head.0 }];
    if node_keys.is_empty() {
        arena.free_node(head)?;
    }
    Ok(Index {
        heads,
        mkba: vec![node_keys.last().copied().unwrap_or(0)],
        arena,
        config,
        live: node_keys.len(),
    })
}

fn chain_keys(index: &Index) -> Vec<Vec<u64>> {
    index.chain(0).map(|r| index.arena().node(r).pairs().iter().map(|kv| kv.key).collect()).collect()
}

/// Runs the tiled bulk insertion of `sublist` (sorted, row id = key) into a
/// node holding `node_keys` and returns the step log.
pub fn trace_tl_bulk_insert(node_keys: &[u64], sublist: &[u64], capacity: usize) -> Result<InsertTrace> {
    let mut index = single_node_index(node_keys, capacity, sublist.len() + 1)?;
    let rows = sublist.to_vec();
    let mut rec = Recorder::default();
    let Index { heads, arena, live, .. } = &mut index;
    let view = arena.view();
    // SAFETY: single-threaded; this is the only handle on the chain.
    let mut chain = unsafe { BucketChain::new(&view, &mut heads[0]) };
    let mut lanes = super::lanes::LaneGroup::new(capacity.next_power_of_two());
    let out = insert::run(InsertKernel::TlBulk, &mut chain, sublist, &rows, &mut lanes, &mut rec);
    *live += out.inserted as usize;
    if let Some(e) = out.error {
        return Err(e);
    }
    rec.insert.final_chain = chain_keys(&index);
    Ok(rec.insert)
}

/// Runs the tiled bulk deletion of `deletes` (sorted) against a node holding
/// `node_keys` and returns the per-node mask and shift log.
pub fn trace_tl_bulk_delete(node_keys: &[u64], deletes: &[u64], capacity: usize) -> Result<DeleteTrace> {
    let mut index = single_node_index(node_keys, capacity, 0)?;
    let mut rec = Recorder::default();
    let Index { heads, arena, live, .. } = &mut index;
    let view = arena.view();
    // SAFETY: single-threaded; this is the only handle on the chain.
    let mut chain = unsafe { BucketChain::new(&view, &mut heads[0]) };
    let mut lanes = super::lanes::LaneGroup::new(capacity.next_power_of_two());
    let out = delete::run(DeleteKernel::TlBulk, &mut chain, deletes, &mut lanes, &mut rec);
    *live -= out.deleted as usize;
    rec.delete.final_chain = chain_keys(&index);
    Ok(rec.delete)
}
