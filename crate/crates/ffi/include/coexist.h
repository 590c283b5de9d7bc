#ifndef COEXIST_H
#define COEXIST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  COEX_STATUS_OK = 0,
  COEX_STATUS_NULL_POINTER = 1,
  COEX_STATUS_INVALID_ARGUMENT = 2,
  COEX_STATUS_CONFIG_ERROR = 3,
  COEX_STATUS_NUMERICAL_ERROR = 4,
  COEX_STATUS_IO_ERROR = 5,
  COEX_STATUS_PANIC = 6,
  COEX_STATUS_OUT_OF_RANGE = 7,
} CoexStatus;

typedef enum {
  /**
   * OFDM/OQAM secondary onto the CP-OFDM incumbent.
   */
  COEX_DIRECTION_S2I = 0,
  /**
   * CP-OFDM incumbent onto the OFDM/OQAM secondary.
   */
  COEX_DIRECTION_I2S = 1,
  /**
   * Asynchronous CP-OFDM secondary onto the CP-OFDM incumbent.
   */
  COEX_DIRECTION_O2O = 2,
} CoexDirection;

typedef enum {
  COEX_MODEL_CLOSED_FORM = 0,
  COEX_MODEL_PSD = 1,
} CoexModel;

typedef struct CoexConfig CoexConfig;

typedef struct CoexEstimate CoexEstimate;

typedef struct CoexFilter CoexFilter;

typedef struct CoexTable CoexTable;

typedef struct {
  double l;
  double power;
  double power_db;
} CoexTableEntry;

typedef struct {
  double l;
  int64_t victim;
  double power_mean;
  double std_error;
  size_t windows;
} CoexMcPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *coex_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *coex_version(void);

/**
 * The four-tap PHYDYAS prototype.
 *
 * # Safety
 * `out` must be valid for writes.
 */
CoexStatus coex_filter_phydyas_k4(CoexFilter **out);

/**
 * Frequency-sampling prototype from `len` coefficients `G_0..G_{K-1}`.
 *
 * # Safety
 * `coeffs` must point to `len` readable doubles; `out` must be valid for writes.
 */
CoexStatus coex_filter_new(const double *coeffs, size_t len, CoexFilter **out);

/**
 * # Safety
 * `filter` must be null or come from a `coex_filter_*` constructor.
 */
void coex_filter_free(CoexFilter *filter);

/**
 * Impulse response at time `t` in units of the useful period.
 *
 * # Safety
 * `filter` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_filter_evaluate(const CoexFilter *filter, double t, double *out);

/**
 * Frequency response at `f` in subcarrier spacings.
 *
 * # Safety
 * `filter` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_filter_frequency_response(const CoexFilter *filter, double f, double *out);

/**
 * Default scenario with the single interferer placed for `direction`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
CoexStatus coex_config_default(CoexDirection direction, CoexConfig **out);

/**
 * Scenario parsed from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid for writes.
 */
CoexStatus coex_config_from_toml(const char *toml, CoexConfig **out);

/**
 * Scenario read from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
CoexStatus coex_config_load(const char *path, CoexConfig **out);

/**
 * # Safety
 * `config` must be null or come from a `coex_config_*` constructor.
 */
void coex_config_free(CoexConfig *config);

/**
 * # Safety
 * `config` must be a live handle.
 */
CoexStatus coex_config_set_subcarriers(CoexConfig *config, size_t subcarriers);

/**
 * Prefix length as the fraction `num/den` of the useful period.
 *
 * # Safety
 * `config` must be a live handle.
 */
CoexStatus coex_config_set_cp_ratio(CoexConfig *config, uint32_t num, uint32_t den);

/**
 * # Safety
 * `config` must be a live handle.
 */
CoexStatus coex_config_set_variances(CoexConfig *config, double var_qam, double var_pam);

/**
 * # Safety
 * `config` must be a live handle.
 */
CoexStatus coex_config_set_delta_f(CoexConfig *config, double delta_f);

/**
 * # Safety
 * `config` must be a live handle.
 */
CoexStatus coex_config_set_seed(CoexConfig *config, uint64_t seed);

/**
 * Copies the prototype; `filter` may be freed afterwards.
 *
 * # Safety
 * `config` and `filter` must be live handles.
 */
CoexStatus coex_config_set_filter(CoexConfig *config, const CoexFilter *filter);

/**
 * # Safety
 * `config` must be a live handle and `subcarriers` point to `len` readable values.
 */
CoexStatus coex_config_set_incumbent_set(CoexConfig *config,
                                         const int64_t *subcarriers,
                                         size_t len);

/**
 * # Safety
 * `config` must be a live handle and `subcarriers` point to `len` readable values.
 */
CoexStatus coex_config_set_secondary_set(CoexConfig *config,
                                         const int64_t *subcarriers,
                                         size_t len);

/**
 * Closed-form interference power at spectral distance `l`.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_interference(CoexDirection direction,
                             double l,
                             const CoexConfig *config,
                             double *out);

/**
 * Interference power predicted from the power spectral densities alone.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_psd_interference(CoexDirection direction,
                                 double l,
                                 const CoexConfig *config,
                                 double *out);

/**
 * Table over `l_min, l_min + step, ..., l_max`.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_table_build(CoexDirection direction,
                            CoexModel model,
                            double l_min,
                            double l_max,
                            double step,
                            const CoexConfig *config,
                            CoexTable **out);

/**
 * Number of entries; 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t coex_table_len(const CoexTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_table_entry(const CoexTable *table, size_t index, CoexTableEntry *out);

/**
 * # Safety
 * `table` must be null or come from [`coex_table_build`].
 */
void coex_table_free(CoexTable *table);

/**
 * Monte-Carlo estimate over every victim subcarrier.
 *
 * For `O2O`, a negative `fixed_offset` draws the interferer timing uniformly
 * per trial; otherwise it is the offset in samples. Other directions ignore it.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_simulate(CoexDirection direction,
                         const CoexConfig *config,
                         size_t n_symbols,
                         size_t trials,
                         int64_t fixed_offset,
                         CoexEstimate **out);

/**
 * Number of points; 0 for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live handle.
 */
size_t coex_estimate_len(const CoexEstimate *estimate);

/**
 * Point `index`, in increasing spectral distance.
 *
 * # Safety
 * `estimate` must be a live handle and `out` valid for writes.
 */
CoexStatus coex_estimate_point(const CoexEstimate *estimate, size_t index, CoexMcPoint *out);

/**
 * # Safety
 * `estimate` must be null or come from [`coex_simulate`].
 */
void coex_estimate_free(CoexEstimate *estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COEXIST_H */
