#ifndef DMKP_H
#define DMKP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Dissipation symbol selector.
typedef enum DmkpDissipation {
  // `alpha (xi^4 - xi^2)`
  DMKP_DISSIPATION_DMKP = 0,
  // `alpha xi^2`
  DMKP_DISSIPATION_BURGERS = 1,
  DMKP_DISSIPATION_NONE = 2,
} DmkpDissipation;

// Status codes returned by every fallible function.
typedef enum DmkpStatus {
  DMKP_STATUS_OK = 0,
  DMKP_STATUS_NULL_POINTER = 1,
  DMKP_STATUS_INVALID_ARGUMENT = 2,
  DMKP_STATUS_NUMERICAL_FAILURE = 3,
  DMKP_STATUS_IO = 4,
  DMKP_STATUS_PANIC = 5,
} DmkpStatus;

// Real field on a grid, held by its Fourier coefficients.
typedef struct DmkpField DmkpField;

// Periodic grid.
typedef struct DmkpGrid DmkpGrid;

// Model coefficients.
typedef struct DmkpParams DmkpParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dmkp_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns the full message length.
size_t dmkp_last_error_message(char *buf, size_t len);

enum DmkpStatus dmkp_params_new(double alpha,
                                double beta,
                                double epsilon,
                                enum DmkpDissipation dissipation,
                                struct DmkpParams **out);

void dmkp_params_free(struct DmkpParams *params);

// Grid with `nx x ny` points on `[0, lx) x [0, ly)`; `nx` even, `ny` even or 1.
enum DmkpStatus dmkp_grid_new(size_t nx, size_t ny, double lx, double ly, struct DmkpGrid **out);

void dmkp_grid_free(struct DmkpGrid *grid);

// Number of samples `nx * ny`.
enum DmkpStatus dmkp_grid_len(const struct DmkpGrid *grid, size_t *out);

// Field from `len = nx * ny` real samples, row-major with `y` outer.
enum DmkpStatus dmkp_field_from_real(const struct DmkpGrid *grid,
                                     const double *data,
                                     size_t len,
                                     struct DmkpField **out);

// Writes the real samples of `field` into `data`, which must hold `len = nx * ny` values.
enum DmkpStatus dmkp_field_to_real(const struct DmkpField *field, double *data, size_t len);

void dmkp_field_free(struct DmkpField *field);

// `||u||_{H^{s1,s2}}`.
enum DmkpStatus dmkp_field_sobolev_norm(const struct DmkpField *field,
                                        double s1,
                                        double s2,
                                        double *out);

// Evolves `initial` to `t_final` with step `dt`; the result is a new field.
enum DmkpStatus dmkp_simulate(const struct DmkpField *initial,
                              const struct DmkpParams *params,
                              double t_final,
                              double dt,
                              struct DmkpField **out);

// `||u_{2,N}(t_N)||_{H^{s,0}}` of the second iterate of the rectangle data,
// with quadrature order `order` (at least 8) on every axis.
enum DmkpStatus dmkp_illposed_iterate_norm(double n,
                                           double s,
                                           double eps,
                                           size_t order,
                                           const struct DmkpParams *params,
                                           double *out);

// Writes `field` as an FLD1 snapshot with its JSON sidecar.
enum DmkpStatus dmkp_snapshot_write(const struct DmkpField *field, double time, const char *path);

// Reads an FLD1 snapshot; returns a new grid and field, and the stored time.
enum DmkpStatus dmkp_snapshot_read(const char *path,
                                   struct DmkpGrid **grid_out,
                                   struct DmkpField **field_out,
                                   double *time_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMKP_H */
