use std::ffi::CStr;
use std::ptr;

use bucketpull_ffi::*;

fn config(ns: u32) -> BpConfig {
    let mut c = BpConfig { node_capacity: 0, build_fill_fraction: 0.0, allocation_region_factor: 0 };
    assert_eq!(unsafe { bp_config_default(&mut c) }, BpStatus::Ok);
    c.node_capacity = ns;
    c
}

fn build(keys: &[u64], c: &BpConfig) -> *mut BpIndex {
    let rows: Vec<u64> = keys.iter().map(|k| k * 10).collect();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bp_index_build(c, keys.as_ptr(), rows.as_ptr(), keys.len(), &mut h) }, BpStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bp_last_error_message()) }.to_string_lossy().into_owned()
}

fn walk(h: *const BpIndex) -> Vec<u64> {
    let mut n = 0usize;
    let status = unsafe { bp_index_walk(h, ptr::null_mut(), ptr::null_mut(), 0, &mut n) };
    if n == 0 {
        assert_eq!(status, BpStatus::Ok);
        return Vec::new();
    }
    assert_eq!(status, BpStatus::BufferTooSmall);
    let (mut keys, mut rows) = (vec![0; n], vec![0; n]);
    assert_eq!(unsafe { bp_index_walk(h, keys.as_mut_ptr(), rows.as_mut_ptr(), n, &mut n) }, BpStatus::Ok);
    assert!(keys.iter().zip(&rows).all(|(k, r)| *r == k * 10 || *r == 7));
    keys
}

#[test]
fn round_trip_through_the_c_abi() {
    let keys: Vec<u64> = (1..=100).map(|k| k * 4).collect();
    let h = build(&keys, &config(8));
    unsafe {
        let mut len = 0;
        assert_eq!(bp_index_len(h, &mut len), BpStatus::Ok);
        assert_eq!(len, 100);

        let new = [2u64, 6, 402, 400];
        let rows = [20u64, 60, 4020, 7];
        let mut stats = BpUpdateStats::default();
        assert_eq!(bp_index_insert(h, new.as_ptr(), rows.as_ptr(), 4, BP_INSERT_TL_BULK, 1, &mut stats), BpStatus::Ok);
        assert_eq!((stats.inserted, stats.updated_in_place), (3, 1));
        assert!(stats.binary_searches > 0);

        let probe = [2u64, 3, 400];
        let mut out = [0u64; 3];
        assert_eq!(bp_index_query(h, probe.as_ptr(), 3, out.as_mut_ptr()), BpStatus::Ok);
        assert_eq!(out, [20, BP_NOT_FOUND, 7]);
        assert_eq!(bp_index_successor(h, probe.as_ptr(), 3, out.as_mut_ptr()), BpStatus::Ok);
        assert_eq!(out, [2, 4, 400]);

        let gone: Vec<u64> = keys[..90].to_vec();
        assert_eq!(bp_index_delete(h, gone.as_ptr(), gone.len(), BP_DELETE_ST_SHIFT_LEFT, &mut stats), BpStatus::Ok);
        assert_eq!(stats.deleted, 90);
        assert_eq!(bp_index_validate(h), BpStatus::Ok);

        let mut r = BpRecoveryStats::default();
        assert_eq!(bp_index_restructure(h, &mut r), BpStatus::Ok);
        assert_eq!(r.nodes_before - r.nodes_after, r.nodes_recovered);
        assert!((0.0..=1.0).contains(&r.percent_recovered));
        assert_eq!(r.nodes_after, 13u64.div_ceil(4));

        let mut bytes = 0;
        assert_eq!(bp_index_footprint_bytes(h, &mut bytes), BpStatus::Ok);
        assert!(bytes > 0);
        bp_index_free(h);
    }
    assert_eq!(walk_after_rebuild(), vec![2, 6, 364, 368, 372]);
}

fn walk_after_rebuild() -> Vec<u64> {
    let h = build(&[364, 2, 368, 6, 372], &config(4));
    let w = walk(h);
    unsafe { bp_index_free(h) };
    w
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut h = ptr::null_mut();
        let c = config(8);
        assert_eq!(bp_index_build(&c, ptr::null(), ptr::null(), 0, &mut h), BpStatus::EmptyBuild);
        assert!(last_error().contains("empty"));
        assert_eq!(bp_index_build(&c, ptr::null(), ptr::null(), 3, &mut h), BpStatus::NullPointer);
        assert_eq!(bp_index_build(&config(65), [1u64].as_ptr(), [1u64].as_ptr(), 1, &mut h), BpStatus::InvalidConfig);
        assert_eq!(bp_index_build(&c, [u64::MAX].as_ptr(), [1u64].as_ptr(), 1, &mut h), BpStatus::ReservedKey);
        assert!(h.is_null());

        let h = build(&[10, 20, 30], &c);
        let k = [5u64];
        assert_eq!(bp_index_insert(h, k.as_ptr(), k.as_ptr(), 1, 99, 1, ptr::null_mut()), BpStatus::InvalidArgument);
        assert!(last_error().contains("99"));
        assert_eq!(bp_index_delete(h, k.as_ptr(), 1, 3, ptr::null_mut()), BpStatus::InvalidArgument);
        assert_eq!(bp_index_insert(h, [u64::MAX].as_ptr(), k.as_ptr(), 1, BP_INSERT_ST_BULK, 1, ptr::null_mut()), BpStatus::ReservedKey);
        assert_eq!(bp_index_query(ptr::null(), k.as_ptr(), 1, [0u64].as_mut_ptr()), BpStatus::NullPointer);
        assert_eq!(bp_index_len(h, ptr::null_mut()), BpStatus::NullPointer);

        // One bucket with no spare nodes cannot absorb a split.
        let mut tight = config(2);
        tight.allocation_region_factor = 0;
        let t = build(&[1], &tight);
        let many: Vec<u64> = (2..10).collect();
        assert_eq!(bp_index_insert(t, many.as_ptr(), many.as_ptr(), many.len(), BP_INSERT_TL_BULK, 1, ptr::null_mut()), BpStatus::ArenaExhausted);
        assert_eq!(bp_index_validate(t), BpStatus::Ok);
        bp_index_free(t);
        bp_index_free(h);
        bp_index_free(ptr::null_mut());
    }
}

#[test]
fn status_strings_are_static() {
    for (code, name) in [(0, "ok"), (6, "arena exhausted"), (9, "panic"), (42, "unknown status")] {
        assert_eq!(unsafe { CStr::from_ptr(bp_status_string(code)) }.to_str().unwrap(), name);
    }
}

#[test]
fn every_kernel_constant_is_accepted() {
    for k in [BP_INSERT_ST_SHIFT_RIGHT, BP_INSERT_ST_BULK, BP_INSERT_TL_SHIFT_RIGHT, BP_INSERT_TL_BULK, BP_INSERT_ST_TL_MIXED] {
        let mut c = config(4);
        c.allocation_region_factor = 32;
        let h = build(&[100, 200, 300], &c);
        let keys: Vec<u64> = (1..50).map(|i| i * 7).collect();
        let rows: Vec<u64> = keys.iter().map(|k| k * 10).collect();
        assert_eq!(unsafe { bp_index_insert(h, keys.as_ptr(), rows.as_ptr(), keys.len(), k, 2, ptr::null_mut()) }, BpStatus::Ok);
        for d in [BP_DELETE_ST_SHIFT_LEFT, BP_DELETE_TL_SHIFT_LEFT, BP_DELETE_TL_BULK] {
            let del = [7u64 * (d as u64 + 1)];
            assert_eq!(unsafe { bp_index_delete(h, del.as_ptr(), 1, d, ptr::null_mut()) }, BpStatus::Ok);
        }
        assert_eq!(walk(h).len(), 3 + 49 - 3);
        unsafe { bp_index_free(h) };
    }
}
