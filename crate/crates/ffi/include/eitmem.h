#ifndef EITMEM_H
#define EITMEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EitStatus {
  EIT_STATUS_OK = 0,
  EIT_STATUS_NULL_POINTER = 1,
  EIT_STATUS_INVALID_ARGUMENT = 2,
  EIT_STATUS_NUMERICAL = 3,
  EIT_STATUS_IO = 4,
  EIT_STATUS_PANIC = 5,
} EitStatus;

// Opaque medium handle.
typedef struct EitMedium EitMedium;

// Opaque waveform handle.
typedef struct EitWaveform EitWaveform;

// Metrics of one storage/retrieval cycle.
typedef struct EitStorageResult {
  double efficiency;
  double likeness;
  double leaked_energy;
  double spinwave_peak;
  double t_off;
  double t_on;
} EitStorageResult;

// Herald, twofold and threefold counts.
typedef struct EitCounts {
  uint64_t n1;
  uint64_t n12;
  uint64_t n13;
  uint64_t n123;
} EitCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *eit_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t eit_last_error(char *buf, uintptr_t len);

// Creates a medium at the rubidium-85 D1 relaxation rate with zero probe
// detuning.
//
// # Safety
// `out` must be a valid pointer; the handle is released by [`eit_medium_free`].
enum EitStatus eit_medium_new(double od, double gamma12, double omega_c, struct EitMedium **out);

// Sets the probe carrier detuning (units of γ₁₃).
//
// # Safety
// `medium` must be a live handle.
enum EitStatus eit_medium_set_detuning(struct EitMedium *medium, double delta_p);

// # Safety
// `medium` must be null or a handle from [`eit_medium_new`] not yet freed.
void eit_medium_free(struct EitMedium *medium);

// Steady-state intensity transmission and phase at probe detuning `delta`.
//
// # Safety
// `medium` must be live; outputs must be valid pointers.
enum EitStatus eit_transmission(const struct EitMedium *medium,
                                double delta,
                                double *transmission,
                                double *phase);

// Group delay at the carrier, seconds.
//
// # Safety
// `medium` must be live; `out` must be valid.
enum EitStatus eit_group_delay(const struct EitMedium *medium, double *out);

// Full width of the transparency window at half its peak, hertz.
//
// # Safety
// `medium` must be live; `out` must be valid.
enum EitStatus eit_bandwidth_hz(const struct EitMedium *medium, double *out);

// Fits γ₁₂ to a measured transmission spectrum; every other parameter is
// taken from `known`.
//
// # Safety
// The three arrays must hold `n` values each; `gamma12` must be valid.
enum EitStatus eit_fit_dephasing(const struct EitMedium *known,
                                 const double *deltas,
                                 const double *transmission,
                                 const double *phase,
                                 uintptr_t n,
                                 double *gamma12);

// Unit-energy Gaussian (intensity FWHM `fwhm`) on `[t_start, t_end]`.
//
// # Safety
// `out` must be valid; release the handle with [`eit_waveform_free`].
enum EitStatus eit_waveform_gaussian(double t_start,
                                     double t_end,
                                     double dt,
                                     double center,
                                     double fwhm,
                                     struct EitWaveform **out);

// Waveform from `n` complex samples starting at `t_start` with step `dt`.
// `im` may be null for a real envelope.
//
// # Safety
// `re` (and `im` when non-null) must hold `n` values; `out` must be valid.
enum EitStatus eit_waveform_from_samples(double t_start,
                                         double dt,
                                         const double *re,
                                         const double *im,
                                         uintptr_t n,
                                         struct EitWaveform **out);

// # Safety
// `wave` must be null or a live waveform handle.
void eit_waveform_free(struct EitWaveform *wave);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `wave` must be null or live.
uintptr_t eit_waveform_len(const struct EitWaveform *wave);

// Copies up to `n` samples into `re` / `im` (either may be null) and the
// grid start and step into `t_start` / `dt` (either may be null).
//
// # Safety
// Non-null arrays must have room for `n` values.
enum EitStatus eit_waveform_samples(const struct EitWaveform *wave,
                                    double *re,
                                    double *im,
                                    uintptr_t n,
                                    double *t_start,
                                    double *dt);

// Trapezoidal energy `∫|ψ|² dt`.
//
// # Safety
// `wave` must be live; `out` valid.
enum EitStatus eit_waveform_energy(const struct EitWaveform *wave, double *out);

// Stores and retrieves `input`.
//
// A NaN `t_off` selects the spin-wave peak; a NaN `storage` selects two
// input pulse lengths. A negative `spin_decay` disables the extra decay.
// When `retrieved` is non-null it receives a new handle holding the
// retrieved envelope.
//
// # Safety
// Handles must be live; `result` valid; `retrieved` null or valid.
enum EitStatus eit_store_retrieve(const struct EitWaveform *input,
                                  const struct EitMedium *medium,
                                  double t_off,
                                  double storage,
                                  double ramp,
                                  double spin_decay,
                                  uintptr_t n_z,
                                  struct EitStorageResult *result,
                                  struct EitWaveform **retrieved);

// Time-reversal optimization from `seed` with the default policy (spin-wave
// peak switch-off, storage of two seed pulse lengths, 50 ns ramps).
// `optimal` (nullable) receives the final input waveform.
//
// # Safety
// Handles must be live; outputs valid or, where noted, null.
enum EitStatus eit_optimize(const struct EitWaveform *seed,
                            const struct EitMedium *medium,
                            uintptr_t max_iters,
                            double tol,
                            double *efficiency,
                            uintptr_t *iterations,
                            struct EitWaveform **optimal);

// Retrieved-to-input energy ratio.
//
// # Safety
// Handles must be live; `out` valid.
enum EitStatus eit_storage_efficiency(const struct EitWaveform *input,
                                      const struct EitWaveform *retrieved,
                                      double *out);

// Likeness of `input` and `retrieved` reversed about `pivot` (seconds).
//
// # Safety
// Handles must be live; `out` valid.
enum EitStatus eit_likeness(const struct EitWaveform *input,
                            const struct EitWaveform *retrieved,
                            double pivot,
                            double *out);

// Heralded autocorrelation and its Poisson error from raw counts.
//
// # Safety
// `value` and `error` must be valid.
enum EitStatus eit_conditional_g2(struct EitCounts counts, double *value, double *error);

// # Safety
// `out` must be valid.
enum EitStatus eit_cauchy_schwarz(double g_sas, double g_ss, double g_asas, double *out);

// # Safety
// `out` must be valid.
enum EitStatus eit_gc2_from_gbar(double gbar, double *out);

// Generation rate implied by `detected_rate` through a chain of `n`
// efficiencies and a duty cycle.
//
// # Safety
// `efficiencies` must hold `n` values; `out` valid.
enum EitStatus eit_loss_budget(const double *efficiencies,
                               uintptr_t n,
                               double duty_cycle,
                               double detected_rate,
                               double *out);

// Pairing efficiency implied by a per-herald success probability through
// the heralded arm's `n` efficiencies.
//
// # Safety
// `efficiencies` must hold `n` values; `out` valid.
enum EitStatus eit_pairing_efficiency(double success_probability,
                                      const double *efficiencies,
                                      uintptr_t n,
                                      double *out);

// Monte Carlo heralded counts behind a beam splitter; the coincidence record
// spans two windows on each side of the herald.
//
// # Safety
// `waveform` must be live; `out` valid.
enum EitStatus eit_simulate_counts(const struct EitWaveform *waveform,
                                   double pairing_efficiency,
                                   double noise_rate,
                                   double dark_rate,
                                   double chain_efficiency,
                                   double bs_split,
                                   double window,
                                   double window_start,
                                   uint64_t n_trials,
                                   uint64_t seed,
                                   struct EitCounts *out);

// Runs a JSON configuration file, writing artifacts into `out_dir`.
//
// # Safety
// Both arguments must be NUL-terminated UTF-8 paths.
enum EitStatus eit_run_config(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EITMEM_H */
