#ifndef SPINMECH_H
#define SPINMECH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SpinmechStatus {
  SPINMECH_STATUS_OK = 0,
  SPINMECH_STATUS_NULL_POINTER = 1,
  SPINMECH_STATUS_INVALID_ARGUMENT = 2,
  SPINMECH_STATUS_CONFIG = 3,
  SPINMECH_STATUS_INFEASIBLE_COOLING_SITE = 4,
  SPINMECH_STATUS_NUMERICAL = 5,
  SPINMECH_STATUS_BUFFER_TOO_SMALL = 6,
  SPINMECH_STATUS_PANIC = 7,
} SpinmechStatus;

/**
 * Readout outcome used for postselection.
 */
typedef enum SpinmechOutcome {
  SPINMECH_OUTCOME_UP = 0,
  SPINMECH_OUTCOME_DOWN = 1,
} SpinmechOutcome;

/**
 * Parsed configuration.
 */
typedef struct SpinmechConfig SpinmechConfig;

/**
 * Reduced mechanical state produced by a protocol.
 */
typedef struct SpinmechState SpinmechState;

/**
 * Scalar outputs of a cat preparation.
 */
typedef struct SpinmechCatSummary {
  double xi;
  double fidelity;
  double probability;
} SpinmechCatSummary;

/**
 * Scalar outputs of a squeezing run.
 */
typedef struct SpinmechSqueezeSummary {
  double min_db;
  double theta;
  double probability;
} SpinmechSqueezeSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *spinmech_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spinmech_version(void);

/**
 * Loads a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum SpinmechStatus spinmech_config_load(const char *path, struct SpinmechConfig **out);

/**
 * The built-in reference configuration.
 *
 * # Safety
 * `out` must be writable.
 */
enum SpinmechStatus spinmech_config_default(struct SpinmechConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library, not yet freed.
 */
void spinmech_config_free(struct SpinmechConfig *cfg);

/**
 * Replaces the membrane radius (μm).
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum SpinmechStatus spinmech_config_set_radius_um(struct SpinmechConfig *cfg, double radius_um);

/**
 * Mechanical occupation N̄ and coupling ξ = g₀/ω_m at the sweet spot.
 *
 * # Safety
 * `cfg` must be a live handle; outputs writable.
 */
enum SpinmechStatus spinmech_device_summary(const struct SpinmechConfig *cfg,
                                            double *nbar,
                                            double *xi);

/**
 * Steady-state `⟨b†b⟩` with the cooling qubit driven at (Ω, δ_c) in units
 * of ω_m, at the configured cooling site.
 *
 * # Safety
 * `cfg` must be a live handle; `n_eff` writable.
 */
enum SpinmechStatus spinmech_cooling_point(const struct SpinmechConfig *cfg,
                                           double rabi,
                                           double detuning,
                                           double *n_eff);

/**
 * Runs the cat protocol at decoherence rate Γ̃/ω_m = `decoherence`. The
 * reduced mechanical state is returned through `state` when non-NULL.
 *
 * # Safety
 * `cfg` must be a live handle; `summary` writable; `state` NULL or writable.
 */
enum SpinmechStatus spinmech_cat_run(const struct SpinmechConfig *cfg,
                                     double decoherence,
                                     enum SpinmechOutcome outcome,
                                     struct SpinmechCatSummary *summary,
                                     struct SpinmechState **state);

/**
 * Squeezing after a quarter period at (ξ, Ω/ω_m) with the configured
 * squeezing environment and rates. `fock_dim` 0 keeps the configured value.
 *
 * # Safety
 * `cfg` must be a live handle; `summary` writable; `state` NULL or writable.
 */
enum SpinmechStatus spinmech_squeeze_run(const struct SpinmechConfig *cfg,
                                         double xi,
                                         double rabi,
                                         size_t fock_dim,
                                         struct SpinmechSqueezeSummary *summary,
                                         struct SpinmechState **state);

/**
 * # Safety
 * `state` must be NULL or a handle from this library, not yet freed.
 */
void spinmech_state_free(struct SpinmechState *state);

/**
 * Fock dimension of a mechanical state.
 *
 * # Safety
 * `state` must be a live handle; `out` writable.
 */
enum SpinmechStatus spinmech_state_fock_dim(const struct SpinmechState *state, size_t *out);

/**
 * `⟨b†b⟩` of a mechanical state.
 *
 * # Safety
 * `state` must be a live handle; `out` writable.
 */
enum SpinmechStatus spinmech_state_phonon_number(const struct SpinmechState *state, double *out);

/**
 * Wigner function on a `resolution`² grid over `[lo, hi]²`, written row by
 * row (rows are p, columns x) into `values`, which must hold `len` doubles.
 *
 * # Safety
 * `state` must be a live handle; `values` valid for `len` writes.
 */
enum SpinmechStatus spinmech_state_wigner(const struct SpinmechState *state,
                                          double lo,
                                          double hi,
                                          size_t resolution,
                                          double *values,
                                          size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINMECH_H */
