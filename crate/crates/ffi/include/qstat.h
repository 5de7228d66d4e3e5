#ifndef QSTAT_H
#define QSTAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Particle statistics of an engine ensemble.
typedef enum QstatStatistics {
  QSTAT_STATISTICS_BOSE = 0,
  QSTAT_STATISTICS_DISTINGUISHABLE = 1,
} QstatStatistics;

// Result code of every fallible call.
typedef enum QstatStatus {
  QSTAT_STATUS_OK = 0,
  QSTAT_STATUS_NULL_POINTER = 1,
  QSTAT_STATUS_INVALID_ARGUMENT = 2,
  QSTAT_STATUS_DOMAIN = 3,
  QSTAT_STATUS_RESOURCE_LIMIT = 4,
  QSTAT_STATUS_NUMERICAL_FAILURE = 5,
  QSTAT_STATUS_TRUNCATION_LEAKAGE = 6,
  QSTAT_STATUS_CONFIG = 7,
  QSTAT_STATUS_IO = 8,
  QSTAT_STATUS_PANIC = 9,
} QstatStatus;

// Opaque engine parameters.
typedef struct QstatEngine QstatEngine;

// Opaque coupling schedule.
typedef struct QstatSchedule QstatSchedule;

// Opaque driven system.
typedef struct QstatSystem QstatSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *qstat_last_error(void);

// Library version as a static NUL-terminated string.
const char *qstat_version(void);

// Engine with bath temperatures set through β_c·E_0 and β_h·E_{T/2}.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QstatStatus qstat_engine_new(uint32_t n,
                                  double omega0,
                                  double delta,
                                  double v,
                                  double period,
                                  double beta_c_e0,
                                  double beta_h_ehalf,
                                  enum QstatStatistics statistics,
                                  struct QstatEngine **out);

// # Safety
// `engine` must come from [`qstat_engine_new`] and not be used afterwards.
void qstat_engine_free(struct QstatEngine *engine);

// Instantaneous kick of area `g` at time `t1`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QstatStatus qstat_schedule_impulse(double g, double t1, struct QstatSchedule **out);

// Smooth plateau of total area `g`, duty fraction `delta_t` and edge rate
// `alpha`, fitted to an engine period.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QstatStatus qstat_schedule_plateau(double g,
                                        double delta_t,
                                        double alpha,
                                        double period,
                                        struct QstatSchedule **out);

// # Safety
// `schedule` must come from a `qstat_schedule_*` constructor and not be
// used afterwards.
void qstat_schedule_free(struct QstatSchedule *schedule);

// Harmonic oscillator of frequency `omega` truncated to `dim` levels.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QstatStatus qstat_system_harmonic(double omega, size_t dim, struct QstatSystem **out);

// # Safety
// `system` must come from a `qstat_system_*` constructor and not be used
// afterwards.
void qstat_system_free(struct QstatSystem *system);

// Leading-order average work for one statistics.
//
// # Safety
// Handles must be live; `work` must be writable.
enum QstatStatus qstat_analytic_work(const struct QstatEngine *engine,
                                     const struct QstatSchedule *schedule,
                                     const struct QstatSystem *system,
                                     enum QstatStatistics statistics,
                                     double *work);

// Leading-order work of both statistics and their ratio.
//
// # Safety
// Handles must be live; the three out-pointers must be writable.
enum QstatStatus qstat_compare(const struct QstatEngine *engine,
                               const struct QstatSchedule *schedule,
                               const struct QstatSystem *system,
                               double *work_indist,
                               double *work_dist,
                               double *ratio);

// Exact propagation over one cycle. `dt <= 0` selects the default step.
// `unitarity_drift` may be null.
//
// # Safety
// Handles must be live; `work` must be writable.
enum QstatStatus qstat_run_cycle(const struct QstatEngine *engine,
                                 const struct QstatSchedule *schedule,
                                 const struct QstatSystem *system,
                                 enum QstatStatistics statistics,
                                 double dt,
                                 double *work,
                                 double *unitarity_drift);

// Fermionic work ratio λ for `n` atoms in a trap at β_COM·ω_trap =
// `beta_com_omega`, using the engine's internal parameters.
//
// # Safety
// `engine` must be live; `lambda` must be writable.
enum QstatStatus qstat_fermi_lambda(const struct QstatEngine *engine,
                                    uint32_t n,
                                    double beta_com_omega,
                                    double *lambda);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSTAT_H */
