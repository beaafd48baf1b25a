use thiserror::Error;

use crate::dispatch::BatchKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("node arena exhausted: {capacity} nodes reserved, none free")]
    ArenaExhausted { capacity: usize },

    #[error("attempted to free node {node} which still holds {size} pairs")]
    FreeingLiveNode { node: u32, size: usize },

    #[error("cannot build an index from an empty set of pairs")]
    EmptyBuild,

    #[error("key {0:#x} is reserved as the not-found sentinel")]
    ReservedKey(u64),

    #[error("invalid build configuration: {0}")]
    InvalidConfig(String),

    #[error("expected a {expected:?} batch, got {found:?}")]
    WrongBatchKind { expected: BatchKind, found: BatchKind },

    #[error("key space exhausted: could not draw {wanted} fresh keys")]
    KeySpaceExhausted { wanted: usize },

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
}
