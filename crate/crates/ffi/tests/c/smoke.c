#include <stdio.h>
#include <string.h>

#include "bucketpull.h"

#define CHECK(call)                                                                   \
    do {                                                                              \
        enum BpStatus s_ = (call);                                                    \
        if (s_ != BP_STATUS_OK) {                                                     \
            fprintf(stderr, "%s: %s (%s)\n", #call, bp_status_string(s_), bp_last_error_message()); \
            return 1;                                                                 \
        }                                                                             \
    } while (0)

int main(void) {
    BpConfig cfg;
    CHECK(bp_config_default(&cfg));
    cfg.node_capacity = 8;

    uint64_t keys[64], rows[64];
    for (int i = 0; i < 64; i++) {
        keys[i] = (uint64_t)(i + 1) * 10;
        rows[i] = (uint64_t)i;
    }
    BpIndex *index = NULL;
    CHECK(bp_index_build(&cfg, keys, rows, 64, &index));

    uint64_t more[3] = {15, 25, 1000};
    uint64_t more_rows[3] = {100, 200, 300};
    BpUpdateStats stats;
    CHECK(bp_index_insert(index, more, more_rows, 3, BP_INSERT_TL_BULK, 1, &stats));
    if (stats.inserted != 3) return 2;

    uint64_t del[2] = {10, 11};
    CHECK(bp_index_delete(index, del, 2, BP_DELETE_TL_BULK, &stats));
    if (stats.deleted != 1 || stats.misses_ignored != 1) return 3;

    uint64_t probe[3] = {15, 10, 641};
    uint64_t out[3];
    CHECK(bp_index_query(index, probe, 3, out));
    if (out[0] != 100 || out[1] != BP_NOT_FOUND || out[2] != BP_NOT_FOUND) return 4;
    CHECK(bp_index_successor(index, probe, 3, out));
    if (out[0] != 15 || out[1] != 15 || out[2] != 1000) return 5;

    BpRecoveryStats rec;
    CHECK(bp_index_restructure(index, &rec));
    CHECK(bp_index_validate(index));
    uint64_t len = 0;
    CHECK(bp_index_len(index, &len));
    if (len != 66) return 6;

    if (bp_index_insert(index, more, more_rows, 3, 77, 1, NULL) != BP_STATUS_INVALID_ARGUMENT) return 7;
    if (strlen(bp_last_error_message()) == 0) return 8;

    bp_index_free(index);
    puts("c smoke ok");
    return 0;
}
