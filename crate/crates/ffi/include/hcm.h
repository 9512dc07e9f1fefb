#ifndef HCM_H
#define HCM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum HcmStatus {
  HCM_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  HCM_STATUS_NULL_POINTER = 1,
  /**
   * Bad sizes, orders, or configuration values.
   */
  HCM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Requested average power outside the reachable range.
   */
  HCM_STATUS_OUT_OF_RANGE = 3,
  HCM_STATUS_IO = 4,
  /**
   * Numerical failure during a run.
   */
  HCM_STATUS_RUNTIME = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  HCM_STATUS_PANIC = 6,
} HcmStatus;

/**
 * HCM transmitter and receiver for one symbol length.
 */
typedef struct HcmModem HcmModem;

/**
 * A prepared Monte-Carlo experiment.
 */
typedef struct HcmSimulation HcmSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *hcm_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void hcm_string_free(char *s);

/**
 * In-place unnormalised Walsh-Hadamard transform of `len` (a power of two) values.
 *
 * # Safety
 * `data` must point to `len` writable doubles.
 */
enum HcmStatus hcm_fwht(double *data, size_t len);

/**
 * Closed-form HCM bit error rate over AWGN with clipping noise.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HcmStatus hcm_analytical_ber(size_t m,
                                  size_t n,
                                  double p,
                                  double noise_var,
                                  double clip_var,
                                  double gamma,
                                  double *out);

/**
 * Clipping-noise variance of a Gaussian signal limited to `[0, p_max]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HcmStatus hcm_gaussian_clipping_variance(double mean,
                                              double variance,
                                              double p_max,
                                              double *out);

/**
 * Optical power in watts on a detector of `area_m2` under `lux` of light
 * with luminous efficacy `lm_per_w`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HcmStatus hcm_illuminance_to_power(double lux, double lm_per_w, double area_m2, double *out);

/**
 * Creates a modem for `n` chips (power of two), `m`-PAM, optional DC
 * reduction and a cyclic prefix of `cp_len` samples.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`hcm_modem_free`].
 */
enum HcmStatus hcm_modem_new(size_t n, size_t m, bool dcr, size_t cp_len, struct HcmModem **out);

/**
 * # Safety
 * `modem` must come from [`hcm_modem_new`] and not have been freed. Null is ignored.
 */
void hcm_modem_free(struct HcmModem *modem);

/**
 * Data bits carried by one symbol.
 *
 * # Safety
 * `modem` must be a live handle.
 */
size_t hcm_modem_bits_per_symbol(const struct HcmModem *modem);

/**
 * Samples per framed symbol, cyclic prefix included.
 *
 * # Safety
 * `modem` must be a live handle.
 */
size_t hcm_modem_frame_len(const struct HcmModem *modem);

/**
 * Encodes `n_bits` bits (one per byte, 0 or 1) into a framed symbol of
 * peak `p`, written to `samples` (`n_samples` = frame length).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum HcmStatus hcm_modem_encode(const struct HcmModem *modem,
                                const uint8_t *bits,
                                size_t n_bits,
                                double p,
                                double *samples,
                                size_t n_samples);

/**
 * Decodes a received frame transmitted with peak `p` into `n_bits` bits.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum HcmStatus hcm_modem_decode(const struct HcmModem *modem,
                                const double *samples,
                                size_t n_samples,
                                double p,
                                uint8_t *bits,
                                size_t n_bits);

/**
 * Builds a simulation from TOML text in the `hcm simulate` config format.
 * Relative file paths inside the text resolve against the working directory.
 *
 * # Safety
 * `toml` must be a nul-terminated string and `out` a valid pointer; the
 * handle is released with [`hcm_simulation_free`].
 */
enum HcmStatus hcm_simulation_new(const char *toml, struct HcmSimulation **out);

/**
 * # Safety
 * `sim` must come from [`hcm_simulation_new`] and not have been freed. Null is ignored.
 */
void hcm_simulation_free(struct HcmSimulation *sim);

/**
 * Runs the whole power grid and returns the BER table as CSV in `*csv`,
 * to be released with [`hcm_string_free`].
 *
 * # Safety
 * `sim` must be a live handle and `csv` a valid pointer.
 */
enum HcmStatus hcm_simulation_run(const struct HcmSimulation *sim, char **csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HCM_H */
