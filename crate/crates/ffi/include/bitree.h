#ifndef BITREE_H
#define BITREE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BITREE_METHOD_ACZ 0

#define BITREE_METHOD_WEI 1

#define BITREE_METHOD_HST 2

#define BITREE_PUT 0

#define BITREE_CALL 1

#define BITREE_EUROPEAN 0

#define BITREE_AMERICAN 1

#define BITREE_CLAMP_AND_COUNT 0

#define BITREE_UNPROJECTED 1

#define BITREE_SCHEME_WEAK_SECOND_ORDER 0

#define BITREE_SCHEME_FULL_TRUNCATION_EULER 1

/**
 * Result codes shared by every function.
 */
typedef enum BitreeStatus {
  BITREE_STATUS_OK = 0,
  BITREE_STATUS_NULL_POINTER = 1,
  BITREE_STATUS_INVALID_INPUT = 2,
  BITREE_STATUS_NON_FINITE = 3,
  BITREE_STATUS_INTERNAL = 4,
} BitreeStatus;

/**
 * Opaque handle holding model parameters and lattice options.
 */
typedef struct BitreePricer BitreePricer;

typedef struct BitreeParams {
  double s0;
  double sigma_s;
  double r0;
  double kappa;
  double theta;
  double sigma_r;
  double rho;
} BitreeParams;

typedef struct BitreeLatticeOptions {
  size_t steps;
  /**
   * Near-zero threshold; zero or NaN selects the default.
   */
  double theta_star;
  /**
   * `BITREE_CLAMP_AND_COUNT` or `BITREE_UNPROJECTED`.
   */
  uint32_t clamp_policy;
} BitreeLatticeOptions;

typedef struct BitreeContract {
  double strike;
  double maturity;
  /**
   * `BITREE_PUT` or `BITREE_CALL`.
   */
  uint32_t kind;
  /**
   * `BITREE_EUROPEAN` or `BITREE_AMERICAN`.
   */
  uint32_t exercise;
} BitreeContract;

/**
 * Output of a pricing call. `std_error` is zero for tree prices, and the
 * clamp and near-zero counters are zero for Monte Carlo prices.
 */
typedef struct BitreeResult {
  double price;
  double std_error;
  uint64_t clamp_count;
  uint64_t near_zero_count;
  double wall_time_secs;
} BitreeResult;

typedef struct BitreeMcOptions {
  uint64_t n_paths;
  size_t steps;
  uint64_t seed;
  /**
   * `BITREE_SCHEME_*`.
   */
  uint32_t scheme;
} BitreeMcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Reference model: `S0 = 100`, `σ_S = 0.25`, `r0 = 0.06`, `κ = 0.5`,
 * `θ = 0.1`, `ρ = -0.25` and the given rate volatility.
 */
struct BitreeParams bitree_params_reference(double sigma_r);

/**
 * Creates a pricer. Returns null and sets `*status` on failure; `status`
 * may be null.
 *
 * # Safety
 * `params` and `options` must be null or point to valid structs, and
 * `status` must be null or writable.
 */
struct BitreePricer *bitree_pricer_new(const struct BitreeParams *params,
                                       const struct BitreeLatticeOptions *options,
                                       enum BitreeStatus *status);

/**
 * Prices a contract with one of the tree methods.
 *
 * # Safety
 * `pricer` must come from [`bitree_pricer_new`] and not be freed;
 * `contract` must be null or valid and `out` null or writable.
 */
enum BitreeStatus bitree_pricer_price(const struct BitreePricer *pricer,
                                      uint32_t method_id,
                                      const struct BitreeContract *contract_in,
                                      struct BitreeResult *out);

/**
 * Releases a pricer. Null is accepted and ignored.
 *
 * # Safety
 * `pricer` must be null or come from [`bitree_pricer_new`], and must not be
 * used afterwards.
 */
void bitree_pricer_free(struct BitreePricer *pricer);

/**
 * Monte Carlo price of a European contract.
 *
 * # Safety
 * Pointers must be null or valid; `out` must be writable.
 */
enum BitreeStatus bitree_mc_price(const struct BitreeParams *params,
                                  const struct BitreeContract *contract_in,
                                  const struct BitreeMcOptions *options,
                                  struct BitreeResult *out);

/**
 * Static description of a status code; unknown codes are reported as such.
 */
const char *bitree_status_message(int32_t status);

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next call into the library on the same
 * thread.
 */
const char *bitree_last_error(void);

/**
 * Library version string.
 */
const char *bitree_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BITREE_H */
