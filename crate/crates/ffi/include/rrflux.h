/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef RRFLUX_H
#define RRFLUX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RrfluxClass {
    RRFLUX_CLASS_SLOW_DOMINATED = 0,
    RRFLUX_CLASS_WETNESS_DOMINATED = 1,
    RRFLUX_CLASS_INTENSITY_DOMINATED = 2,
    RRFLUX_CLASS_NO_DOMINANT_MODE = 3,
} RrfluxClass;

typedef enum RrfluxInadequateSide {
    RRFLUX_INADEQUATE_SIDE_NEITHER = 0,
    RRFLUX_INADEQUATE_SIDE_ENSEMBLE = 1,
    RRFLUX_INADEQUATE_SIDE_SCE = 2,
} RrfluxInadequateSide;

typedef enum RrfluxMetric {
    RRFLUX_METRIC_NSE = 0,
    RRFLUX_METRIC_KGE_SS = 1,
    RRFLUX_METRIC_WIA = 2,
} RrfluxMetric;

typedef enum RrfluxModel {
    RRFLUX_MODEL_SIMHYD = 0,
    RRFLUX_MODEL_SACRAMENTO = 1,
} RrfluxModel;

typedef enum RrfluxStatus {
    RRFLUX_STATUS_OK = 0,
    RRFLUX_STATUS_NULL_POINTER = 1,
    RRFLUX_STATUS_INVALID_ARGUMENT = 2,
    RRFLUX_STATUS_DATA_ERROR = 3,
    RRFLUX_STATUS_RUNTIME_ERROR = 4,
    RRFLUX_STATUS_BUFFER_TOO_SMALL = 5,
    RRFLUX_STATUS_PANIC = 6,
} RrfluxStatus;

/*
 Result of one model run. Opaque to C.
 */
typedef struct RrfluxSimulation RrfluxSimulation;

typedef struct RrfluxKgeComponents {
    double bias_term;
    double variability_term;
    double correlation_term;
    double kge;
    double kge_ss;
} RrfluxKgeComponents;

typedef struct RrfluxFractions {
    double intensity;
    double wetness;
    double slow;
} RrfluxFractions;

typedef struct RrfluxMassBalance {
    double precip;
    double aet;
    double runoff;
    double deep_loss;
    double storage_change;
} RrfluxMassBalance;

typedef struct RrfluxVerdict {
    double ensemble_hmv;
    double sce_hmv;
    double hmv;
    bool sufficient;
    enum RrfluxInadequateSide inadequate_side;
} RrfluxVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next rrflux call on the same thread.
 */
const char *rrflux_last_error(void);

/*
 Number of parameters of `model`.
 */
size_t rrflux_parameter_count(enum RrfluxModel model);

/*
 Scores `sim` against `obs` (both of length `len`).

 # Safety
 `obs` and `sim` must point to `len` readable doubles; `out` must be writable.
 */
enum RrfluxStatus rrflux_metric(enum RrfluxMetric metric,
                                const double *obs,
                                const double *sim,
                                size_t len,
                                double *out);

/*
 KGE decomposition and skill score.

 # Safety
 As for [`rrflux_metric`].
 */
enum RrfluxStatus rrflux_kge_components(const double *obs,
                                        const double *sim,
                                        size_t len,
                                        struct RrfluxKgeComponents *out);

/*
 Runs `model` from empty stores. Flow and fractions cover the days after
 `warmup`; the mass balance covers every day. On success `*out` owns a
 handle to release with [`rrflux_simulation_free`].

 # Safety
 `params` must hold `n_params` doubles, `precip` and `pet` `days` doubles
 each; `out` must be writable.
 */
enum RrfluxStatus rrflux_simulate(enum RrfluxModel model,
                                  const double *params,
                                  size_t n_params,
                                  const double *precip,
                                  const double *pet,
                                  size_t days,
                                  size_t warmup,
                                  struct RrfluxSimulation **out);

/*
 Number of scored days in a simulation.

 # Safety
 `sim` must be a live handle or NULL.
 */
size_t rrflux_simulation_len(const struct RrfluxSimulation *sim);

/*
 Copies the scored flow into `buf`. `*written` receives the flow length;
 `BufferTooSmall` is returned when `capacity` is less than that.

 # Safety
 `sim` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum RrfluxStatus rrflux_simulation_flow(const struct RrfluxSimulation *sim,
                                         double *buf,
                                         size_t capacity,
                                         size_t *written);

/*
 Runoff-mode shares over the scored window; `RuntimeError` when the run
 produced no runoff.

 # Safety
 `sim` must be a live handle; `out` must be writable.
 */
enum RrfluxStatus rrflux_simulation_fractions(const struct RrfluxSimulation *sim,
                                              struct RrfluxFractions *out);

/*
 Whole-run water budget.

 # Safety
 `sim` must be a live handle; `out` must be writable.
 */
enum RrfluxStatus rrflux_simulation_balance(const struct RrfluxSimulation *sim,
                                            struct RrfluxMassBalance *out);

/*
 Releases a simulation handle. NULL is ignored.

 # Safety
 `sim` must come from [`rrflux_simulate`] and not be used afterwards.
 */
void rrflux_simulation_free(struct RrfluxSimulation *sim);

/*
 Latin hypercube sample over the model's default feasible ranges,
 written row-major (`count` rows of `rrflux_parameter_count(model)`).

 # Safety
 `buf` must hold `capacity` doubles; `written` must be writable.
 */
enum RrfluxStatus rrflux_lhs(enum RrfluxModel model,
                             size_t count,
                             uint64_t seed,
                             double *buf,
                             size_t capacity,
                             size_t *written);

/*
 Dominance class of a fraction triple (strict majority rule).

 # Safety
 `fractions` must be readable and `out` writable.
 */
enum RrfluxStatus rrflux_classify(const struct RrfluxFractions *fractions, enum RrfluxClass *out);

/*
 Plot coordinates: slow at (0, 0), wetness at (1, 0), intensity at
 (0.5, sqrt(3)/2).

 # Safety
 `fractions` must be readable, `x` and `y` writable.
 */
enum RrfluxStatus rrflux_ternary_coords(const struct RrfluxFractions *fractions,
                                        double *x,
                                        double *y);

/*
 Sampling-sufficiency verdict for a pair of HMVs.

 # Safety
 `out` must be writable.
 */
enum RrfluxStatus rrflux_sufficiency(double ensemble_hmv,
                                     double sce_hmv,
                                     struct RrfluxVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RRFLUX_H */
