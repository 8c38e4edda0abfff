#ifndef HETNET_H
#define HETNET_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HetnetStatus {
  HETNET_STATUS_OK = 0,
  HETNET_STATUS_NULL_POINTER = 1,
  HETNET_STATUS_INVALID_ARGUMENT = 2,
  HETNET_STATUS_INVALID_PARAMS = 3,
  HETNET_STATUS_NUMERIC = 4,
  HETNET_STATUS_SIMULATION = 5,
  HETNET_STATUS_PANIC = 6,
} HetnetStatus;

typedef enum HetnetTopology {
  HETNET_TOPOLOGY_COVERAGE = 0,
  HETNET_TOPOLOGY_CAPACITY = 1,
} HetnetTopology;

// Parameter set bound to a deployment topology.
typedef struct HetnetParams HetnetParams;

// Average delivery rates of the three curves.
typedef struct HetnetRates {
  double mu;
  double su_no_cache;
  double su;
} HetnetRates;

// Simulated rates with 95% confidence half-widths.
typedef struct HetnetSimRates {
  struct HetnetRates mean;
  struct HetnetRates ci_half_width;
  uint64_t realizations;
} HetnetSimRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error of this thread into `buf` (NUL-terminated, truncated
// to `len`) and returns the full message length without the NUL. Returns 0
// when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t hetnet_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *hetnet_version(void);

// Creates a parameter set holding the reference values of `topology`.
//
// # Safety
// `out` must be null or writable.
enum HetnetStatus hetnet_params_new(enum HetnetTopology topology, struct HetnetParams **out);

// Releases a parameter set. Null is ignored.
//
// # Safety
// `p` must come from [`hetnet_params_new`] and not be used afterwards.
void hetnet_params_free(struct HetnetParams *p);

// Sets a parameter by name (`gamma`, `F_sc`, `lambda_mc`, ...).
//
// # Safety
// `p` must be a live handle and `name` a NUL-terminated string.
enum HetnetStatus hetnet_params_set(struct HetnetParams *p, const char *name, double value);

// Reads a parameter by name.
//
// # Safety
// `p` must be a live handle, `name` a NUL-terminated string and `out`
// writable.
enum HetnetStatus hetnet_params_get(const struct HetnetParams *p, const char *name, double *out);

// Checks the parameter set against the constraints of its topology.
//
// # Safety
// `p` must be a live handle.
enum HetnetStatus hetnet_params_validate(const struct HetnetParams *p);

// Analytic average delivery rates with default options.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum HetnetStatus hetnet_theory_rates(const struct HetnetParams *p, struct HetnetRates *out);

// Monte-Carlo average delivery rates from `realizations` independent
// deployments. Identical inputs give identical outputs.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum HetnetStatus hetnet_sim_rates(const struct HetnetParams *p,
                                   uint64_t realizations,
                                   uint64_t seed,
                                   struct HetnetSimRates *out);

// `2F1(1, b; b + 1; x)` for `0 < b < 1` and `x <= 0`.
//
// # Safety
// `out` must be writable.
enum HetnetStatus hetnet_hyp2f1(double b, double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETNET_H */
