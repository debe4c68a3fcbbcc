#ifndef SYMBOHM_H
#define SYMBOHM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SymbohmStatus {
  SYMBOHM_STATUS_OK = 0,
  SYMBOHM_STATUS_NULL_POINTER = 1,
  SYMBOHM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Bad configuration, grid, window or packet.
   */
  SYMBOHM_STATUS_CONFIG = 3,
  /**
   * Failure inside the numerics.
   */
  SYMBOHM_STATUS_NUMERIC = 4,
  SYMBOHM_STATUS_IO = 5,
  SYMBOHM_STATUS_PANIC = 6,
} SymbohmStatus;

typedef struct SymbohmGrid SymbohmGrid;

typedef struct SymbohmGuidance SymbohmGuidance;

typedef struct SymbohmRecord SymbohmRecord;

/**
 * A scenario or verify report, held as JSON.
 */
typedef struct SymbohmReport SymbohmReport;

typedef struct SymbohmWavefunction SymbohmWavefunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *symbohm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *symbohm_version(void);

/**
 * Periodic grid of `points` (a power of two) covering `length` around `center`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum SymbohmStatus symbohm_grid_new(uintptr_t points,
                                    double length,
                                    double center,
                                    struct SymbohmGrid **out);

/**
 * # Safety
 * `grid` must come from `symbohm_grid_new` and not be used afterwards.
 */
void symbohm_grid_free(struct SymbohmGrid *grid);

/**
 * Normalized Gaussian packet with time tag `time`.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` a valid pointer.
 */
enum SymbohmStatus symbohm_gaussian_new(const struct SymbohmGrid *grid,
                                        double center,
                                        double momentum,
                                        double width,
                                        double time,
                                        struct SymbohmWavefunction **out);

/**
 * # Safety
 * `psi` must be a live handle or null.
 */
uintptr_t symbohm_wavefunction_len(const struct SymbohmWavefunction *psi);

/**
 * # Safety
 * `psi` must be a live handle or null.
 */
double symbohm_wavefunction_time(const struct SymbohmWavefunction *psi);

/**
 * Copies the values into `re` and `im`, each of length `len`, which must
 * equal `symbohm_wavefunction_len`.
 *
 * # Safety
 * `re` and `im` must each point to `len` writable doubles.
 */
enum SymbohmStatus symbohm_wavefunction_values(const struct SymbohmWavefunction *psi,
                                               double *re,
                                               double *im,
                                               uintptr_t len);

/**
 * # Safety
 * `psi` must come from this library and not be used afterwards.
 */
void symbohm_wavefunction_free(struct SymbohmWavefunction *psi);

/**
 * Evolves `psi` from its time tag to `t_end` (either direction) under a
 * harmonic potential of frequency `omega`, or freely when `omega` is 0.
 *
 * # Safety
 * `psi` must be a live handle and `out` a valid pointer.
 */
enum SymbohmStatus symbohm_evolve(const struct SymbohmWavefunction *psi,
                                  double omega,
                                  double t_end,
                                  double dt,
                                  uintptr_t stride,
                                  struct SymbohmRecord **out);

/**
 * Number of stored snapshots.
 *
 * # Safety
 * `record` must be a live handle or null.
 */
uintptr_t symbohm_record_len(const struct SymbohmRecord *record);

/**
 * Copies snapshot `index` (in production order) into a new wavefunction handle.
 *
 * # Safety
 * `record` must be a live handle and `out` a valid pointer.
 */
enum SymbohmStatus symbohm_record_snapshot(const struct SymbohmRecord *record,
                                           uintptr_t index,
                                           struct SymbohmWavefunction **out);

/**
 * # Safety
 * `record` must come from this library and not be used afterwards.
 */
void symbohm_record_free(struct SymbohmRecord *record);

/**
 * The overlap <psi_f|psi_i> of two fields with equal grids and time tags.
 *
 * # Safety
 * Both handles must be live; `re` and `im` must be writable.
 */
enum SymbohmStatus symbohm_amplitude(const struct SymbohmWavefunction *psi_f,
                                     const struct SymbohmWavefunction *psi_i,
                                     double *re,
                                     double *im);

/**
 * Signed density, current and velocity of the pair at their common time.
 *
 * # Safety
 * Both handles must be live and `out` a valid pointer.
 */
enum SymbohmStatus symbohm_symmetric_fields(const struct SymbohmWavefunction *psi_i,
                                            const struct SymbohmWavefunction *psi_f,
                                            struct SymbohmGuidance **out);

/**
 * # Safety
 * `field` must be a live handle or null.
 */
uintptr_t symbohm_guidance_len(const struct SymbohmGuidance *field);

/**
 * Copies density, current and velocity (NaN where undefined) into buffers
 * of length `len`; any buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must each hold `len` writable doubles.
 */
enum SymbohmStatus symbohm_guidance_values(const struct SymbohmGuidance *field,
                                           double *density,
                                           double *current,
                                           double *velocity,
                                           uintptr_t len);

/**
 * # Safety
 * `field` must come from this library and not be used afterwards.
 */
void symbohm_guidance_free(struct SymbohmGuidance *field);

/**
 * Runs scenario `id` with its default config, or with `config_json` when
 * non-null. Artifacts go to `out_dir` when non-null. A completed run
 * returns `Ok` whether or not its assertions passed; see
 * `symbohm_report_passed`.
 *
 * # Safety
 * Strings must be NUL-terminated or null where allowed; `out` must be valid.
 */
enum SymbohmStatus symbohm_scenario_run(const char *id,
                                        const char *config_json,
                                        const char *out_dir,
                                        struct SymbohmReport **out);

/**
 * Runs a verify suite (`full` for all) with default parameters, or with
 * `config_json` when non-null.
 *
 * # Safety
 * As for `symbohm_scenario_run`.
 */
enum SymbohmStatus symbohm_verify(const char *suite,
                                  const char *config_json,
                                  const char *out_dir,
                                  struct SymbohmReport **out);

/**
 * 1 if every assertion held, 0 otherwise (also for null).
 *
 * # Safety
 * `report` must be a live handle or null.
 */
int32_t symbohm_report_passed(const struct SymbohmReport *report);

/**
 * The report as JSON, owned by the handle.
 *
 * # Safety
 * `report` must be a live handle or null; the string dies with the handle.
 */
const char *symbohm_report_json(const struct SymbohmReport *report);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void symbohm_report_free(struct SymbohmReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMBOHM_H */
