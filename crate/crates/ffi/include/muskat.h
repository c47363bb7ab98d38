#ifndef MUSKAT_H
#define MUSKAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum MuskatStatus {
  MUSKAT_STATUS_OK = 0,
  MUSKAT_STATUS_NULL_POINTER = 1,
  MUSKAT_STATUS_INVALID_PARAMETER = 2,
  MUSKAT_STATUS_COLLISION = 3,
  MUSKAT_STATUS_RESOLUTION_LOSS = 4,
  MUSKAT_STATUS_WIDTH_COLLAPSE = 5,
  MUSKAT_STATUS_NON_FINITE = 6,
  MUSKAT_STATUS_SHAPE = 7,
  MUSKAT_STATUS_CONFIG = 8,
  /*
   The simulation already reached its horizon or a stop condition.
   */
  MUSKAT_STATUS_FINISHED = 9,
  MUSKAT_STATUS_PANIC = 10,
  MUSKAT_STATUS_OTHER = 11,
} MuskatStatus;

/*
 Which of the four interaction kernels to evaluate.
 */
typedef enum MuskatKernel {
  MUSKAT_KERNEL_P11 = 0,
  MUSKAT_KERNEL_P12 = 1,
  MUSKAT_KERNEL_P21 = 2,
  MUSKAT_KERNEL_P22 = 3,
} MuskatKernel;

/*
 Opaque periodic grid.
 */
typedef struct MuskatGrid MuskatGrid;

/*
 Opaque physical parameters.
 */
typedef struct MuskatParams MuskatParams;

/*
 Opaque running simulation.
 */
typedef struct MuskatSimulation MuskatSimulation;

/*
 Arguments of a kernel evaluation at the pair `(x, x1)`.
 */
typedef struct MuskatKernelArgs {
  double dx;
  double f_x;
  double f_x1;
  double g_x;
  double g_x1;
  double df_x1;
  double dg_x1;
  double sigma;
} MuskatKernelArgs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *muskat_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *muskat_version(void);

/*
 Creates parameters from the three densities and the gap.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum MuskatStatus muskat_params_new(double rho0,
                                    double rho1,
                                    double rho2,
                                    double sigma,
                                    struct MuskatParams **out);

/*
 Writes `delta_rho`, `mu1`, `mu2` of the parameters.

 # Safety
 `params` must come from [`muskat_params_new`]; outputs must be valid or null.
 */
enum MuskatStatus muskat_params_derived(const struct MuskatParams *params,
                                        double *delta_rho,
                                        double *mu1,
                                        double *mu2);

/*
 # Safety
 `params` must come from [`muskat_params_new`] and not be used afterwards.
 */
void muskat_params_free(struct MuskatParams *params);

/*
 Creates a grid with half-length `half_length` and `n` nodes (a power of two).

 # Safety
 `out` must be valid for one handle write.
 */
enum MuskatStatus muskat_grid_new(double half_length, size_t n, struct MuskatGrid **out);

/*
 # Safety
 `grid` must come from [`muskat_grid_new`] and not be used afterwards.
 */
void muskat_grid_free(struct MuskatGrid *grid);

/*
 Evaluates one interaction kernel.

 # Safety
 `args` and `out` must be valid pointers.
 */
enum MuskatStatus muskat_kernel_p(enum MuskatKernel which,
                                  const struct MuskatKernelArgs *args,
                                  double *out);

/*
 Unperturbed dissipation kernels at separation `dx`.

 # Safety
 `params`, `d11` and `d22` must be valid pointers.
 */
enum MuskatStatus muskat_kernel_d0(const struct MuskatParams *params,
                                   double dx,
                                   double *d11,
                                   double *d22);

/*
 Squared `H^k_gamma` norm of a field of `len` samples on `grid`.

 # Safety
 `field` must point to `len` readable doubles; `grid` and `out` must be valid.
 */
enum MuskatStatus muskat_hk_norm_sq(const struct MuskatGrid *grid,
                                    const double *field,
                                    size_t len,
                                    uint32_t k,
                                    double gamma,
                                    double *out);

/*
 Builds a simulation from a JSON run configuration (NUL-terminated UTF-8).

 # Safety
 `json` must be a valid C string and `out` valid for one handle write.
 */
enum MuskatStatus muskat_simulation_from_config_json(const char *json,
                                                     struct MuskatSimulation **out);

/*
 Builds a simulation from sampled interfaces `f`, `g` on `grid`, with
 initial width `gamma0`, horizon `horizon` and default stepping.

 # Safety
 `f` and `g` must point to `len` doubles each; handles and `out` must be valid.
 */
enum MuskatStatus muskat_simulation_new(const struct MuskatParams *params,
                                        const struct MuskatGrid *grid,
                                        const double *f,
                                        const double *g,
                                        size_t len,
                                        double gamma0,
                                        double horizon,
                                        struct MuskatSimulation **out);

/*
 Advances one time step. Returns `Finished` or the stop reason once the
 run cannot continue.

 # Safety
 `sim` must be a live simulation handle.
 */
enum MuskatStatus muskat_simulation_step(struct MuskatSimulation *sim);

/*
 Steps until the horizon or a stop condition. Returns `Ok` on reaching the
 horizon, otherwise the stop reason.

 # Safety
 `sim` must be a live simulation handle.
 */
enum MuskatStatus muskat_simulation_run(struct MuskatSimulation *sim);

/*
 Current time, or NaN for a null handle.

 # Safety
 `sim` must be a live simulation handle or null.
 */
double muskat_simulation_time(const struct MuskatSimulation *sim);

/*
 Current strip width, or NaN for a null handle.

 # Safety
 `sim` must be a live simulation handle or null.
 */
double muskat_simulation_gamma(const struct MuskatSimulation *sim);

/*
 Number of grid nodes, or 0 for a null handle.

 # Safety
 `sim` must be a live simulation handle or null.
 */
size_t muskat_simulation_len(const struct MuskatSimulation *sim);

/*
 Copies the current interfaces into `f` and `g`, each of capacity `len`.

 # Safety
 `f` and `g` must point to `len` writable doubles.
 */
enum MuskatStatus muskat_simulation_copy_fg(const struct MuskatSimulation *sim,
                                            double *f,
                                            double *g,
                                            size_t len);

/*
 Energy of the current state.

 # Safety
 `sim` and `out` must be valid pointers.
 */
enum MuskatStatus muskat_simulation_energy(const struct MuskatSimulation *sim, double *out);

/*
 # Safety
 `sim` must come from a constructor here and not be used afterwards.
 */
void muskat_simulation_free(struct MuskatSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MUSKAT_H */
