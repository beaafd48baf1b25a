//! A bucketed ordered index for batched key/rowId workloads.
//!
//! Keys live in fixed-capacity sorted nodes chained into buckets. A sorted
//! batch is split across buckets by binary searching the bucket boundaries
//! (the max-key-per-bucket array, MKBA), and every bucket then processes its
//! own contiguous sublist independently.
//!
//! ```
//! use bucketpull::{build, point_query, BuildConfig, KeyValue, SortedBatch};
//!
//! let pairs: Vec<KeyValue> = (1..=100).map(|k| KeyValue::new(k * 10, k)).collect();
//! let index = build(&pairs, &BuildConfig::with_node_capacity(8)).unwrap();
//! let hits = point_query(&index, &SortedBatch::queries(&[500, 501])).unwrap();
//! assert_eq!(hits.values, vec![50, bucketpull::RESERVED_KEY]);
//! ```

pub mod arena;
pub mod bench;
pub mod build;
pub(crate) mod chain;
pub mod dispatch;
pub mod error;
pub mod index;
pub mod metrics;
pub mod node;
pub mod oracle;
pub mod query;
pub mod restructure;
pub mod update;
pub mod workload;

pub use arena::{NodeArena, Region};
pub use build::build;
pub use dispatch::{extract_sublist, sort_batch, BatchKind, SortedBatch};
pub use error::{Error, Result};
pub use index::{BuildConfig, Index, ValidationError, ValidationReport};
pub use metrics::{Counters, MetricsReport, PhaseStats};
pub use node::{KeyValue, NodeRef, NodeView, MAX_NODE_CAPACITY, RESERVED_KEY};
pub use oracle::Oracle;
pub use query::{point_query, successor_query, ResultBuffer};
pub use restructure::{restructure, RecoveryStats};
pub use update::{delete_batch, insert_batch, node_split, DeleteKernel, InsertKernel, KernelChoice, UpdateStats};
