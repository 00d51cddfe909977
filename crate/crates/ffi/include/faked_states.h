#ifndef FAKED_STATES_H
#define FAKED_STATES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_CONFIG = 3,
  /**
   * The quantity has no value, e.g. a QBER with nothing sifted.
   */
  FS_STATUS_UNDEFINED = 4,
  FS_STATUS_UTF8 = 5,
  FS_STATUS_PANIC = 6,
} FsStatus;

/**
 * Rows produced by running a scenario.
 */
typedef struct FsOutcome FsOutcome;

/**
 * A validated scenario.
 */
typedef struct FsScenario FsScenario;

/**
 * One result row. Missing values are NaN.
 */
typedef struct FsRow {
  double sweep_value;
  double eta0_t0;
  double eta0_t1;
  double eta1_t0;
  double eta1_t1;
  uint64_t rounds;
  uint64_t sifted;
  uint64_t errors;
  double qber;
  double qber_ci_low;
  double qber_ci_high;
  double expected_qber;
  double eve_knowledge;
  double coincidence_rate;
  double chsh;
} FsRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *fs_last_error(void);

/**
 * Library version, statically allocated.
 */
const char *fs_version(void);

/**
 * Parses and validates a TOML scenario.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum FsStatus fs_scenario_from_toml(const char *toml, struct FsScenario **out);

/**
 * # Safety
 * `scenario` must come from [`fs_scenario_from_toml`] and not be freed yet.
 */
void fs_scenario_free(struct FsScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum FsStatus fs_scenario_set_seed(struct FsScenario *scenario, uint64_t seed);

/**
 * Worker threads. Results do not depend on this.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum FsStatus fs_scenario_set_workers(struct FsScenario *scenario, uintptr_t workers);

/**
 * Runs the scenario, or every point of its sweep.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum FsStatus fs_scenario_run(const struct FsScenario *scenario, struct FsOutcome **out);

/**
 * # Safety
 * `outcome` must come from [`fs_scenario_run`] and not be freed yet.
 */
void fs_outcome_free(struct FsOutcome *outcome);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `outcome` must be null or a live handle.
 */
uintptr_t fs_outcome_len(const struct FsOutcome *outcome);

/**
 * # Safety
 * `outcome` must be a live handle and `row` writable.
 */
enum FsStatus fs_outcome_row(const struct FsOutcome *outcome, uintptr_t index, struct FsRow *row);

/**
 * The rows as CSV (with header). Free the string with [`fs_string_free`].
 *
 * # Safety
 * `outcome` must be a live handle and `out` writable.
 */
enum FsStatus fs_outcome_csv(const struct FsOutcome *outcome, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void fs_string_free(char *s);

/**
 * Closed-form BB84 attack QBER for efficiencies η_d(t_k) given as
 * `eta<d>_t<k>`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FsStatus fs_bb84_qber(double eta0_t0,
                           double eta0_t1,
                           double eta1_t0,
                           double eta1_t1,
                           double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum FsStatus fs_bb84_symmetric_qber(double eta, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum FsStatus fs_sarg04_qber(double eta0_t0,
                             double eta0_t1,
                             double eta1_t0,
                             double eta1_t1,
                             double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum FsStatus fs_sarg04_symmetric_qber(double eta, double *out);

/**
 * Weights `(α, β, γ)` giving four CHSH terms of magnitude `magnitude`.
 *
 * # Safety
 * `out` must point to three writable doubles.
 */
enum FsStatus fs_ekert_solve_equal_terms(double magnitude, double *out);

/**
 * CHSH value of an α/β mix with weight `p_beta` on β.
 *
 * # Safety
 * `out` must be writable.
 */
enum FsStatus fs_ekert_s_of_beta(double p_beta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAKED_STATES_H */
