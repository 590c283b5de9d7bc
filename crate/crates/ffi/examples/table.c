/* Prints the closed-form interference of an OQAM subcarrier on nearby
 * CP-OFDM subcarriers. Build against the static library:
 *
 *   cc table.c -I../include -L../../../target/release -lcoexist_ffi -lpthread -ldl -lm
 */
#include <stdio.h>

#include "coexist.h"

int main(void) {
    CoexConfig *cfg = NULL;
    CoexTable *table = NULL;
    if (coex_config_default(COEX_DIRECTION_S2I, &cfg) != COEX_STATUS_OK) {
        fprintf(stderr, "%s\n", coex_last_error());
        return 1;
    }
    CoexStatus st = coex_table_build(COEX_DIRECTION_S2I, COEX_MODEL_CLOSED_FORM, -3.0, 3.0, 1.0, cfg, &table);
    if (st != COEX_STATUS_OK) {
        fprintf(stderr, "%s\n", coex_last_error());
        coex_config_free(cfg);
        return 1;
    }
    for (size_t i = 0; i < coex_table_len(table); i++) {
        CoexTableEntry e;
        coex_table_entry(table, i, &e);
        printf("%g %.6f\n", e.l, e.power_db);
    }
    CoexTableEntry e;
    st = coex_table_entry(table, coex_table_len(table), &e);
    printf("past end: %d\n", (int)st);
    coex_table_free(table);
    coex_config_free(cfg);
    return 0;
}
