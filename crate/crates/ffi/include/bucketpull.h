/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BUCKETPULL_H
#define BUCKETPULL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BP_INSERT_ST_SHIFT_RIGHT 0

#define BP_INSERT_ST_BULK 1

#define BP_INSERT_TL_SHIFT_RIGHT 2

#define BP_INSERT_TL_BULK 3

#define BP_INSERT_ST_TL_MIXED 4

#define BP_DELETE_ST_SHIFT_LEFT 0

#define BP_DELETE_TL_SHIFT_LEFT 1

#define BP_DELETE_TL_BULK 2

// Returned for absent keys by queries.
#define BP_NOT_FOUND UINT64_MAX

// Result of every fallible call.
typedef enum BpStatus {
  BP_STATUS_OK = 0,
  BP_STATUS_NULL_POINTER = 1,
  BP_STATUS_INVALID_CONFIG = 2,
  BP_STATUS_INVALID_ARGUMENT = 3,
  BP_STATUS_EMPTY_BUILD = 4,
  BP_STATUS_RESERVED_KEY = 5,
  BP_STATUS_ARENA_EXHAUSTED = 6,
  BP_STATUS_VALIDATION_FAILED = 7,
  BP_STATUS_BUFFER_TOO_SMALL = 8,
  BP_STATUS_PANIC = 9,
} BpStatus;

// Opaque index handle.
typedef struct BpIndex BpIndex;

typedef struct BpConfig {
  // Pairs per node, 2 to 64.
  uint32_t node_capacity;
  // Share of each node filled by the build, in (0, 1].
  double build_fill_fraction;
  // Spare nodes reserved per bucket for splits.
  uint32_t allocation_region_factor;
} BpConfig;

typedef struct BpUpdateStats {
  uint64_t inserted;
  uint64_t updated_in_place;
  uint64_t deleted;
  uint64_t misses_ignored;
  uint64_t splits;
  uint64_t nodes_freed;
  uint64_t node_visits;
  uint64_t binary_searches;
} BpUpdateStats;

typedef struct BpRecoveryStats {
  uint64_t nodes_before;
  uint64_t nodes_after;
  uint64_t nodes_recovered;
  // `nodes_recovered / nodes_before`, in [0, 1].
  double percent_recovered;
} BpRecoveryStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Writes the default configuration to `out`.
//
// # Safety
// `out` must be null or point to writable memory for one `BpConfig`.
enum BpStatus bp_config_default(struct BpConfig *out);

// Builds an index from `n` pairs, in any order. A repeated key keeps its
// last row id. On success `*out` receives a handle owned by the caller.
//
// # Safety
// `keys` and `row_ids` must each point to `n` readable values; `config`
// and `out` must be valid pointers.
enum BpStatus bp_index_build(const struct BpConfig *config,
                             const uint64_t *keys,
                             const uint64_t *row_ids,
                             size_t n,
                             struct BpIndex **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `index` must come from [`bp_index_build`] and not be used afterwards.
void bp_index_free(struct BpIndex *index);

// Upserts `n` pairs. `kernel` is one of the `BP_INSERT_*` constants;
// `round` (1-based) selects the phase of `BP_INSERT_ST_TL_MIXED`.
// `stats` may be null.
//
// On [`BpStatus::ArenaExhausted`] part of the batch may have been applied;
// the index stays valid.
//
// # Safety
// `index` must be a live handle; `keys` and `row_ids` must each point to
// `n` readable values.
enum BpStatus bp_index_insert(struct BpIndex *index,
                              const uint64_t *keys,
                              const uint64_t *row_ids,
                              size_t n,
                              uint32_t kernel,
                              uint32_t round,
                              struct BpUpdateStats *stats);

// Deletes `n` keys; absent keys are counted in `misses_ignored`.
// `kernel` is one of the `BP_DELETE_*` constants. `stats` may be null.
//
// # Safety
// `index` must be a live handle; `keys` must point to `n` readable values.
enum BpStatus bp_index_delete(struct BpIndex *index,
                              const uint64_t *keys,
                              size_t n,
                              uint32_t kernel,
                              struct BpUpdateStats *stats);

// Point lookups: `out[i]` receives the row id of `keys[i]`, or
// [`BP_NOT_FOUND`].
//
// # Safety
// `index` must be a live handle; `keys` and `out` must each hold `n` values.
enum BpStatus bp_index_query(const struct BpIndex *index,
                             const uint64_t *keys,
                             size_t n,
                             uint64_t *out);

// Successor lookups: `out[i]` receives the smallest stored key `>= keys[i]`,
// or [`BP_NOT_FOUND`].
//
// # Safety
// As for [`bp_index_query`].
enum BpStatus bp_index_successor(const struct BpIndex *index,
                                 const uint64_t *keys,
                                 size_t n,
                                 uint64_t *out);

// Repacks every chain into single-node buckets. Fails with
// [`BpStatus::ArenaExhausted`], leaving the index untouched, when the
// arena cannot hold the repacked nodes. `stats` may be null.
//
// # Safety
// `index` must be a live handle; `stats` must be null or writable.
enum BpStatus bp_index_restructure(struct BpIndex *index, struct BpRecoveryStats *stats);

// Number of live pairs.
//
// # Safety
// `index` must be a live handle; `out` must be writable.
enum BpStatus bp_index_len(const struct BpIndex *index, uint64_t *out);

// Bytes held by reachable and free-listed nodes plus the bucket bounds.
//
// # Safety
// `index` must be a live handle; `out` must be writable.
enum BpStatus bp_index_footprint_bytes(const struct BpIndex *index, uint64_t *out);

// Checks every structural invariant; [`BpStatus::ValidationFailed`] names
// the first violation in the last-error message.
//
// # Safety
// `index` must be a live handle.
enum BpStatus bp_index_validate(const struct BpIndex *index);

// Copies all live pairs in key order. `*written` always receives the
// number of live pairs; when it exceeds `capacity` nothing is copied and
// [`BpStatus::BufferTooSmall`] is returned.
//
// # Safety
// `index` must be a live handle; `keys` and `row_ids` must each have room
// for `capacity` values; `written` must be writable.
enum BpStatus bp_index_walk(const struct BpIndex *index,
                            uint64_t *keys,
                            uint64_t *row_ids,
                            size_t capacity,
                            size_t *written);

// Static, NUL-terminated name of a status code.
const char *bp_status_string(int32_t status);

// Message for the last failure on this thread, or an empty string. Valid
// until the next failing call on the same thread.
const char *bp_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BUCKETPULL_H */
