//! C ABI over the `bucketpull` index.
//!
//! Every fallible function returns a [`BpStatus`]. Indexes are opaque
//! [`BpIndex`] handles created by [`bp_index_build`] and released with
//! [`bp_index_free`]. Functions taking `const BpIndex *` only read the index
//! and may run concurrently with each other; mutating calls need exclusive
//! access to the handle.
//!
//! On failure, [`bp_last_error_message`] describes the most recent error on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bucketpull::{
    BatchKind, BuildConfig, DeleteKernel, Error, Index, InsertKernel, KernelChoice, KeyValue, SortedBatch,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidArgument = 3,
    EmptyBuild = 4,
    ReservedKey = 5,
    ArenaExhausted = 6,
    ValidationFailed = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

pub const BP_INSERT_ST_SHIFT_RIGHT: u32 = 0;
pub const BP_INSERT_ST_BULK: u32 = 1;
pub const BP_INSERT_TL_SHIFT_RIGHT: u32 = 2;
pub const BP_INSERT_TL_BULK: u32 = 3;
pub const BP_INSERT_ST_TL_MIXED: u32 = 4;

pub const BP_DELETE_ST_SHIFT_LEFT: u32 = 0;
pub const BP_DELETE_TL_SHIFT_LEFT: u32 = 1;
pub const BP_DELETE_TL_BULK: u32 = 2;

/// Returned for absent keys by queries.
pub const BP_NOT_FOUND: u64 = u64::MAX;

/// Opaque index handle.
pub struct BpIndex {
    inner: Index,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BpConfig {
    /// Pairs per node, 2 to 64.
    pub node_capacity: u32,
    /// Share of each node filled by the build, in (0, 1].
    pub build_fill_fraction: f64,
    /// Spare nodes reserved per bucket for splits.
    pub allocation_region_factor: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BpUpdateStats {
    pub inserted: u64,
    pub updated_in_place: u64,
    pub deleted: u64,
    pub misses_ignored: u64,
    pub splits: u64,
    pub nodes_freed: u64,
    pub node_visits: u64,
    pub binary_searches: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BpRecoveryStats {
    pub nodes_before: u64,
    pub nodes_after: u64,
    pub nodes_recovered: u64,
    /// `nodes_recovered / nodes_before`, in [0, 1].
    pub percent_recovered: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: BpStatus, msg: impl AsRef<str>) -> BpStatus {
    set_last_error(msg.as_ref());
    status
}

fn from_error(e: Error) -> BpStatus {
    let status = match e {
        Error::ArenaExhausted { .. } => BpStatus::ArenaExhausted,
        Error::EmptyBuild => BpStatus::EmptyBuild,
        Error::ReservedKey(_) => BpStatus::ReservedKey,
        Error::InvalidConfig(_) => BpStatus::InvalidConfig,
        _ => BpStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting a panic into [`BpStatus::Panic`].
fn guard(f: impl FnOnce() -> BpStatus) -> BpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        fail(BpStatus::Panic, msg)
    })
}

/// Borrows `n` elements; a null pointer is accepted only when `n == 0`.
unsafe fn slice<'a, T>(p: *const T, n: usize) -> Option<&'a [T]> {
    if n == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Option<&'a mut [T]> {
    if n == 0 {
        Some(&mut [])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(p, n))
    }
}

fn insert_kernel(k: u32) -> Option<InsertKernel> {
    InsertKernel::ALL.get(k as usize).copied()
}

fn delete_kernel(k: u32) -> Option<DeleteKernel> {
    DeleteKernel::ALL.get(k as usize).copied()
}

impl From<BpConfig> for BuildConfig {
    fn from(c: BpConfig) -> Self {
        BuildConfig {
            node_capacity: c.node_capacity as usize,
            build_fill_fraction: c.build_fill_fraction,
            allocation_region_factor: c.allocation_region_factor as usize,
        }
    }
}

/// Writes the default configuration to `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `BpConfig`.
#[no_mangle]
pub unsafe extern "C" fn bp_config_default(out: *mut BpConfig) -> BpStatus {
    if out.is_null() {
        return fail(BpStatus::NullPointer, "out is null");
    }
    let d = BuildConfig::default();
    out.write(BpConfig {
        node_capacity: d.node_capacity as u32,
        build_fill_fraction: d.build_fill_fraction,
        allocation_region_factor: d.allocation_region_factor as u32,
    });
    BpStatus::Ok
}

/// Builds an index from `n` pairs, in any order. A repeated key keeps its
/// last row id. On success `*out` receives a handle owned by the caller.
///
/// # Safety
/// `keys` and `row_ids` must each point to `n` readable values; `config`
/// and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bp_index_build(
    config: *const BpConfig,
    keys: *const u64,
    row_ids: *const u64,
    n: usize,
    out: *mut *mut BpIndex,
) -> BpStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(BpStatus::NullPointer, "config and out must not be null");
        }
        let (Some(keys), Some(rows)) = (slice(keys, n), slice(row_ids, n)) else {
            return fail(BpStatus::NullPointer, "keys and row_ids must not be null");
        };
        let pairs: Vec<KeyValue> = keys.iter().zip(rows).map(|(&k, &v)| KeyValue::new(k, v)).collect();
        match bucketpull::build(&pairs, &BuildConfig::from(*config)) {
            Ok(inner) => {
                out.write(Box::into_raw(Box::new(BpIndex { inner })));
                BpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `index` must come from [`bp_index_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_index_free(index: *mut BpIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

fn write_stats(out: *mut BpUpdateStats, s: &bucketpull::UpdateStats) {
    if !out.is_null() {
        let c = s.phase.counters;
        // SAFETY: the caller guarantees a non-null `out` is writable.
        unsafe {
            out.write(BpUpdateStats {
                inserted: s.inserted,
                updated_in_place: s.updated_in_place,
                deleted: s.deleted,
                misses_ignored: s.misses_ignored,
                splits: s.splits,
                nodes_freed: s.nodes_freed,
                node_visits: c.node_visits,
                binary_searches: c.binary_searches,
            })
        }
    }
}

/// Upserts `n` pairs. `kernel` is one of the `BP_INSERT_*` constants;
/// `round` (1-based) selects the phase of `BP_INSERT_ST_TL_MIXED`.
/// `stats` may be null.
///
/// On [`BpStatus::ArenaExhausted`] part of the batch may have been applied;
/// the index stays valid.
///
/// # Safety
/// `index` must be a live handle; `keys` and `row_ids` must each point to
/// `n` readable values.
#[no_mangle]
pub unsafe extern "C" fn bp_index_insert(
    index: *mut BpIndex,
    keys: *const u64,
    row_ids: *const u64,
    n: usize,
    kernel: u32,
    round: u32,
    stats: *mut BpUpdateStats,
) -> BpStatus {
    guard(|| {
        let Some(index) = index.as_mut() else { return fail(BpStatus::NullPointer, "index is null") };
        let (Some(keys), Some(rows)) = (slice(keys, n), slice(row_ids, n)) else {
            return fail(BpStatus::NullPointer, "keys and row_ids must not be null");
        };
        let Some(insert) = insert_kernel(kernel) else {
            return fail(BpStatus::InvalidArgument, format!("unknown insert kernel {kernel}"));
        };
        let choice = KernelChoice { insert, ..KernelChoice::default() };
        let batch = bucketpull::sort_batch(BatchKind::Insert, keys, Some(rows));
        match bucketpull::insert_batch(&mut index.inner, &batch, &choice, round.max(1)) {
            Ok(s) => {
                write_stats(stats, &s);
                BpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Deletes `n` keys; absent keys are counted in `misses_ignored`.
/// `kernel` is one of the `BP_DELETE_*` constants. `stats` may be null.
///
/// # Safety
/// `index` must be a live handle; `keys` must point to `n` readable values.
#[no_mangle]
pub unsafe extern "C" fn bp_index_delete(
    index: *mut BpIndex,
    keys: *const u64,
    n: usize,
    kernel: u32,
    stats: *mut BpUpdateStats,
) -> BpStatus {
    guard(|| {
        let Some(index) = index.as_mut() else { return fail(BpStatus::NullPointer, "index is null") };
        let Some(keys) = slice(keys, n) else { return fail(BpStatus::NullPointer, "keys is null") };
        let Some(delete) = delete_kernel(kernel) else {
            return fail(BpStatus::InvalidArgument, format!("unknown delete kernel {kernel}"));
        };
        let choice = KernelChoice { delete, ..KernelChoice::default() };
        match bucketpull::delete_batch(&mut index.inner, &SortedBatch::deletes(keys), &choice) {
            Ok(s) => {
                write_stats(stats, &s);
                BpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

unsafe fn lookup(
    index: *const BpIndex,
    keys: *const u64,
    n: usize,
    out: *mut u64,
    batch: fn(&[u64]) -> SortedBatch,
    run: fn(&Index, &SortedBatch) -> bucketpull::Result<bucketpull::ResultBuffer>,
) -> BpStatus {
    guard(|| {
        let Some(index) = index.as_ref() else { return fail(BpStatus::NullPointer, "index is null") };
        let (Some(keys), Some(out)) = (slice(keys, n), slice_mut(out, n)) else {
            return fail(BpStatus::NullPointer, "keys and out must not be null");
        };
        match run(&index.inner, &batch(keys)) {
            Ok(r) => {
                out.copy_from_slice(&r.values);
                BpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Point lookups: `out[i]` receives the row id of `keys[i]`, or
/// [`BP_NOT_FOUND`].
///
/// # Safety
/// `index` must be a live handle; `keys` and `out` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn bp_index_query(index: *const BpIndex, keys: *const u64, n: usize, out: *mut u64) -> BpStatus {
    lookup(index, keys, n, out, SortedBatch::queries, bucketpull::point_query)
}

/// Successor lookups: `out[i]` receives the smallest stored key `>= keys[i]`,
/// or [`BP_NOT_FOUND`].
///
/// # Safety
/// As for [`bp_index_query`].
#[no_mangle]
pub unsafe extern "C" fn bp_index_successor(
    index: *const BpIndex,
    keys: *const u64,
    n: usize,
    out: *mut u64,
) -> BpStatus {
    lookup(index, keys, n, out, SortedBatch::successors, bucketpull::successor_query)
}

/// Repacks every chain into single-node buckets. Fails with
/// [`BpStatus::ArenaExhausted`], leaving the index untouched, when the
/// arena cannot hold the repacked nodes. `stats` may be null.
///
/// # Safety
/// `index` must be a live handle; `stats` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bp_index_restructure(index: *mut BpIndex, stats: *mut BpRecoveryStats) -> BpStatus {
    guard(|| {
        let Some(index) = index.as_mut() else { return fail(BpStatus::NullPointer, "index is null") };
        match bucketpull::restructure(&mut index.inner) {
            Ok(r) => {
                if !stats.is_null() {
                    stats.write(BpRecoveryStats {
                        nodes_before: r.nodes_before,
                        nodes_after: r.nodes_after,
                        nodes_recovered: r.nodes_recovered,
                        percent_recovered: r.percent_recovered,
                    });
                }
                BpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of live pairs.
///
/// # Safety
/// `index` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_index_len(index: *const BpIndex, out: *mut u64) -> BpStatus {
    let (Some(index), false) = (index.as_ref(), out.is_null()) else {
        return fail(BpStatus::NullPointer, "index and out must not be null");
    };
    out.write(index.inner.len() as u64);
    BpStatus::Ok
}

/// Bytes held by reachable and free-listed nodes plus the bucket bounds.
///
/// # Safety
/// `index` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_index_footprint_bytes(index: *const BpIndex, out: *mut u64) -> BpStatus {
    let (Some(index), false) = (index.as_ref(), out.is_null()) else {
        return fail(BpStatus::NullPointer, "index and out must not be null");
    };
    out.write(bucketpull::metrics::footprint_bytes(&index.inner));
    BpStatus::Ok
}

/// Checks every structural invariant; [`BpStatus::ValidationFailed`] names
/// the first violation in the last-error message.
///
/// # Safety
/// `index` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_index_validate(index: *const BpIndex) -> BpStatus {
    guard(|| {
        let Some(index) = index.as_ref() else { return fail(BpStatus::NullPointer, "index is null") };
        match index.inner.validate() {
            Ok(_) => BpStatus::Ok,
            Err(e) => fail(BpStatus::ValidationFailed, e.to_string()),
        }
    })
}

/// Copies all live pairs in key order. `*written` always receives the
/// number of live pairs; when it exceeds `capacity` nothing is copied and
/// [`BpStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `index` must be a live handle; `keys` and `row_ids` must each have room
/// for `capacity` values; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_index_walk(
    index: *const BpIndex,
    keys: *mut u64,
    row_ids: *mut u64,
    capacity: usize,
    written: *mut usize,
) -> BpStatus {
    guard(|| {
        let (Some(index), false) = (index.as_ref(), written.is_null()) else {
            return fail(BpStatus::NullPointer, "index and written must not be null");
        };
        let len = index.inner.len();
        written.write(len);
        if len > capacity {
            return fail(BpStatus::BufferTooSmall, format!("{len} pairs do not fit in {capacity}"));
        }
        let (Some(keys), Some(rows)) = (slice_mut(keys, len), slice_mut(row_ids, len)) else {
            return fail(BpStatus::NullPointer, "keys and row_ids must not be null");
        };
        for (i, kv) in index.inner.iter().enumerate() {
            keys[i] = kv.key;
            rows[i] = kv.row_id;
        }
        BpStatus::Ok
    })
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn bp_status_string(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer\0",
        2 => b"invalid configuration\0",
        3 => b"invalid argument\0",
        4 => b"empty build\0",
        5 => b"reserved key\0",
        6 => b"arena exhausted\0",
        7 => b"validation failed\0",
        8 => b"buffer too small\0",
        9 => b"panic\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Message for the last failure on this thread, or an empty string. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
