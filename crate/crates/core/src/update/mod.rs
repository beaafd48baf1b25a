//! Batched insertion and deletion.
//!
//! One worker owns one bucket chain for the whole phase. Single-threaded (ST)
//! kernels process the sublist key by key or through a copy space; tiled (TL)
//! kernels run a lane group of `TS` lanes in lockstep over each node.

mod delete;
mod insert;
mod lanes;
pub mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::BucketChain;
use crate::dispatch::{bucket_spans, BatchKind, SortedBatch};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::metrics::{Counters, PhaseStats};
use crate::node::{NodeRef, NIL, RESERVED_KEY};

use lanes::LaneGroup;
use trace::NoTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InsertKernel {
    StShiftRight,
    StBulk,
    TlShiftRight,
    TlBulk,
    /// ST-Shift-Right for the first round, TL-Bulk afterwards.
    StTlMixed,
}

impl InsertKernel {
    pub const ALL: [InsertKernel; 5] = [
        InsertKernel::StShiftRight,
        InsertKernel::StBulk,
        InsertKernel::TlShiftRight,
        InsertKernel::TlBulk,
        InsertKernel::StTlMixed,
    ];

    /// The kernel that actually runs in `round` (1-based).
    pub fn resolve(self, round: u32) -> InsertKernel {
        match self {
            InsertKernel::StTlMixed if round <= 1 => InsertKernel::StShiftRight,
            InsertKernel::StTlMixed => InsertKernel::TlBulk,
            k => k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InsertKernel::StShiftRight => "st-shift-right",
            InsertKernel::StBulk => "st-bulk",
            InsertKernel::TlShiftRight => "tl-shift-right",
            InsertKernel::TlBulk => "tl-bulk",
            InsertKernel::StTlMixed => "st-tl-mixed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeleteKernel {
    StShiftLeft,
    TlShiftLeft,
    TlBulk,
}

impl DeleteKernel {
    pub const ALL: [DeleteKernel; 3] = [DeleteKernel::StShiftLeft, DeleteKernel::TlShiftLeft, DeleteKernel::TlBulk];

    pub fn name(self) -> &'static str {
        match self {
            DeleteKernel::StShiftLeft => "st-shift-left",
            DeleteKernel::TlShiftLeft => "tl-shift-left",
            DeleteKernel::TlBulk => "tl-bulk",
        }
    }
}

impl fmt::Display for InsertKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for DeleteKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InsertKernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        InsertKernel::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown insert kernel `{s}`"))
    }
}

impl FromStr for DeleteKernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.to_ascii_lowercase();
        let s = if s == "tl-bulk-delete" { "tl-bulk" } else { s.as_str() };
        DeleteKernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown delete kernel `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelChoice {
    pub insert: InsertKernel,
    pub delete: DeleteKernel,
}

impl Default for KernelChoice {
    fn default() -> Self {
        KernelChoice { insert: InsertKernel::TlBulk, delete: DeleteKernel::TlBulk }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub inserted: u64,
    pub updated_in_place: u64,
    pub deleted: u64,
    pub misses_ignored: u64,
    pub splits: u64,
    pub nodes_freed: u64,
    pub phase: PhaseStats,
}

#[derive(Debug, Default)]
pub(crate) struct BucketUpdate {
    pub inserted: u64,
    pub updated: u64,
    pub deleted: u64,
    pub misses: u64,
    pub error: Option<Error>,
}

struct BucketOutcome {
    bucket: usize,
    update: BucketUpdate,
    counters: Counters,
}

/// Upserts a sorted insert batch. `round` is 1-based and only matters for
/// [`InsertKernel::StTlMixed`].
///
/// On [`Error::ArenaExhausted`] the batch is partially applied; the index
/// stays structurally valid and its live count accurate.
pub fn insert_batch(index: &mut Index, batch: &SortedBatch, choice: &KernelChoice, round: u32) -> Result<UpdateStats> {
    batch.expect_kind(BatchKind::Insert)?;
    if batch.keys().last() == Some(&RESERVED_KEY) {
        return Err(Error::ReservedKey(RESERVED_KEY));
    }
    let kernel = choice.insert.resolve(round);
    let rows = batch.row_ids();
    let (stats, err) = execute(index, batch, |chain, span, lanes| {
        insert::run(kernel, chain, &batch.keys()[span.clone()], &rows[span], lanes, &mut NoTrace)
    });
    finish(stats, err)
}

/// Removes every key of a sorted delete batch. Absent keys are counted in
/// `misses_ignored`.
pub fn delete_batch(index: &mut Index, batch: &SortedBatch, choice: &KernelChoice) -> Result<UpdateStats> {
    batch.expect_kind(BatchKind::Delete)?;
    let kernel = choice.delete;
    let (stats, err) = execute(index, batch, |chain, span, lanes| {
        delete::run(kernel, chain, &batch.keys()[span], lanes, &mut NoTrace)
    });
    finish(stats, err)
}

fn finish(stats: UpdateStats, err: Option<Error>) -> Result<UpdateStats> {
    match err {
        Some(e) => Err(e),
        None => Ok(stats),
    }
}

fn execute<F>(index: &mut Index, batch: &SortedBatch, kernel: F) -> (UpdateStats, Option<Error>)
where
    F: Fn(&mut BucketChain<'_, '_>, std::ops::Range<usize>, &mut LaneGroup) -> BucketUpdate + Sync,
{
    let mut stats = UpdateStats::default();
    stats.phase.bucket_visits = vec![0; index.bucket_count()];
    if batch.is_empty() {
        return (stats, None);
    }

    let t0 = Instant::now();
    let (spans, dispatch) = bucket_spans(batch.keys(), &index.mkba);
    stats.phase.dispatch_time = t0.elapsed();

    let t1 = Instant::now();
    let width = index.config.lane_group_width();
    let Index { heads, arena, .. } = index;
    let view = arena.view();
    let outcomes: Vec<BucketOutcome> = heads
        .par_iter_mut()
        .zip(spans.par_iter())
        .enumerate()
        .with_min_len(256)
        .filter(|(_, (_, span))| !span.is_empty())
        .map_init(
            || LaneGroup::new(width),
            |lanes, (bucket, (head, span))| {
                // SAFETY: `par_iter_mut` hands each worker a distinct head, and
                // chains never share nodes (checked by `Index::validate`).
                let mut chain = unsafe { BucketChain::new(&view, head) };
                let update = kernel(&mut chain, span.clone(), lanes);
                BucketOutcome { bucket, update, counters: chain.counters }
            },
        )
        .collect();
    stats.phase.execute_time = t1.elapsed();

    let mut error = None;
    stats.phase.counters = dispatch;
    for o in outcomes {
        stats.inserted += o.update.inserted;
        stats.updated_in_place += o.update.updated;
        stats.deleted += o.update.deleted;
        stats.misses_ignored += o.update.misses;
        stats.phase.counters += o.counters;
        stats.phase.bucket_visits[o.bucket] = o.counters.node_visits as u32;
        if error.is_none() {
            error = o.update.error;
        }
    }
    stats.splits = stats.phase.counters.splits;
    stats.nodes_freed = stats.phase.counters.nodes_freed;
    index.live = index.live + stats.inserted as usize - stats.deleted as usize;
    (stats, error)
}

/// Splits a full node: the left keeps the lower `ceil(NS/2)` pairs, a new
/// right node linked after it receives the rest.
pub fn node_split(index: &mut Index, node: NodeRef) -> Result<NodeRef> {
    let size = index.arena.node(node).len();
    if size != index.config.node_capacity {
        return Err(Error::InvalidConfig(format!("node {} holds {size} pairs; only full nodes split", node.0)));
    }
    let view = index.arena.view();
    let mut detached = NIL;
    // SAFETY: exclusive borrow of the index; the split only touches `node`
    // and the freshly allocated right node.
    let mut chain = unsafe { BucketChain::new(&view, &mut detached) };
    chain.split(node)
}
