#ifndef FLUIDS_H
#define FLUIDS_H

/* Generated by cbindgen from fluids-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an ABI call.
 */
typedef enum FlStatus {
  /**
   * The call succeeded.
   */
  FL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FL_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of the supported range.
   */
  FL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The dynamics halted the requested run.
   */
  FL_STATUS_PHYSICS = 3,
  /**
   * A filesystem or serialization failure.
   */
  FL_STATUS_IO = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  FL_STATUS_UTF8 = 5,
  /**
   * An unexpected internal failure; the library state is still sound.
   */
  FL_STATUS_INTERNAL = 6,
} FlStatus;

/**
 * Opaque handle to a periodic profile on the circle.
 */
typedef struct FlField FlField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a field from `n` samples at the uniform grid nodes.
 *
 * # Safety
 *
 * `values` must point to `n` readable doubles and `out` must be a valid
 * destination for one pointer. On success `*out` owns the field and must be
 * released with [`fl_field_free`].
 */
enum FlStatus fl_field_create(const double *values, size_t n, struct FlField **out);

/**
 * Releases a field handle. A null pointer is ignored.
 *
 * # Safety
 *
 * `field` must be null or a pointer previously produced by this library and
 * not yet freed.
 */
void fl_field_free(struct FlField *field);

/**
 * Writes the grid size of a field to `out`.
 *
 * # Safety
 *
 * `field` must be a live handle and `out` a valid destination.
 */
enum FlStatus fl_field_n(const struct FlField *field, size_t *out);

/**
 * Copies the nodal values of a field into `out`, which holds `len` doubles;
 * `len` must equal the grid size.
 *
 * # Safety
 *
 * `field` must be a live handle and `out` must point to `len` writable
 * doubles.
 */
enum FlStatus fl_field_values(const struct FlField *field, double *out, size_t len);

/**
 * Evaluates the trigonometric interpolant of the field at `theta`.
 *
 * # Safety
 *
 * `field` must be a live handle and `out` a valid destination.
 */
enum FlStatus fl_field_eval(const struct FlField *field, double theta, double *out);

/**
 * Spectral derivative of a field, as a new handle.
 *
 * # Safety
 *
 * `field` must be a live handle and `out` a valid destination; the result
 * must be released with [`fl_field_free`].
 */
enum FlStatus fl_field_derivative(const struct FlField *field, struct FlField **out);

/**
 * Hilbert transform of a field, as a new handle.
 *
 * # Safety
 *
 * Same contract as [`fl_field_derivative`].
 */
enum FlStatus fl_field_hilbert(const struct FlField *field, struct FlField **out);

/**
 * Applies `|nabla|^-1` to a mean-free field, as a new handle.
 *
 * # Safety
 *
 * Same contract as [`fl_field_derivative`].
 */
enum FlStatus fl_field_inv_modulus(const struct FlField *field, struct FlField **out);

/**
 * Projects a field onto the order-`m` rotational symmetry class; when
 * `odd_axis` is non-null the odd reflection about that axis is enforced as
 * well.
 *
 * # Safety
 *
 * `field` must be a live handle, `odd_axis` null or a readable double, and
 * `out` a valid destination; the result must be released with
 * [`fl_field_free`].
 */
enum FlStatus fl_field_project(const struct FlField *field,
                               uint32_t m,
                               const double *odd_axis,
                               struct FlField **out);

/**
 * Solves the transport-model stream equation `H` from a vorticity profile.
 * When `mode_two_residual` is non-null it receives the dropped resonant
 * content at wavenumber 2.
 *
 * # Safety
 *
 * `field` must be a live handle, `mode_two_residual` null or writable, and
 * `out` a valid destination; the result must be released with
 * [`fl_field_free`].
 */
enum FlStatus fl_stream_euler(const struct FlField *field,
                              double *mode_two_residual,
                              struct FlField **out);

/**
 * Solves the stretching-model stream equation `G` from a mean-free scalar
 * profile.
 *
 * # Safety
 *
 * Same contract as [`fl_field_derivative`].
 */
enum FlStatus fl_stream_sqg(const struct FlField *field, struct FlField **out);

/**
 * Right-hand side of the two-gap system of three identical vortices.
 *
 * # Safety
 *
 * `out_dz1` and `out_dz2` must be valid destinations.
 */
enum FlStatus fl_gap_rhs(double z1, double z2, double *out_dz1, double *out_dz2);

/**
 * Conserved energy of the two-gap system.
 *
 * # Safety
 *
 * `out` must be a valid destination.
 */
enum FlStatus fl_gap_hamiltonian(double z1, double z2, double *out);

/**
 * Evaluates the plane velocity, stream function, and vorticity of the
 * transport-model lift of `field` at the point `(x1, x2)`.
 *
 * # Safety
 *
 * `field` must be a live handle; the four out pointers must be valid
 * destinations.
 */
enum FlStatus fl_lift_euler(const struct FlField *field,
                            double x1,
                            double x2,
                            double *out_omega,
                            double *out_u1,
                            double *out_u2,
                            double *out_psi);

/**
 * Evaluates the plane velocity, stream function, and scalar of the
 * stretching-model lift of a mean-free `field` at the point `(x1, x2)`.
 *
 * # Safety
 *
 * Same contract as [`fl_lift_euler`].
 */
enum FlStatus fl_lift_sqg(const struct FlField *field,
                          double x1,
                          double x2,
                          double *out_theta,
                          double *out_u1,
                          double *out_u2,
                          double *out_psi);

/**
 * Runs a simulation described by a TOML config string, exactly like the
 * `fluids` CLI subcommands driven by `--config`. On success (and on a
 * dynamics halt, which returns `FL_STATUS_PHYSICS`) `*out_dir` receives the
 * finished run directory as a string owned by the caller; release it with
 * [`fl_string_free`].
 *
 * # Safety
 *
 * `config` must be a NUL-terminated string and `out_dir` a valid
 * destination.
 */
enum FlStatus fl_run_config_str(const char *config, char **out_dir);

/**
 * Returns the message recorded by the last failing call on this thread as
 * a caller-owned string, or null when the last call succeeded. Release it
 * with [`fl_string_free`].
 */
char *fl_last_error_message(void);

/**
 * Releases a string returned by this library. A null pointer is ignored.
 *
 * # Safety
 *
 * `s` must be null or a string previously returned by this library and not
 * yet freed.
 */
void fl_string_free(char *s);

/**
 * Library version as a static NUL-terminated string; do not free it.
 */
const char *fl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLUIDS_H */
