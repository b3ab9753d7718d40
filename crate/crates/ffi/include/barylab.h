#ifndef BARYLAB_H
#define BARYLAB_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>
#include <stddef.h>

#define BARYLAB_OK 0

#define BARYLAB_ERR_INPUT 1

#define BARYLAB_ERR_DOMAIN 2

#define BARYLAB_ERR_UNSUPPORTED 3

#define BARYLAB_ERR_CONVERGENCE 4

#define BARYLAB_ERR_CAPACITY 5

#define BARYLAB_ERR_NULL_POINTER 6

#define BARYLAB_ERR_PANIC 7

// A barycentric map.
typedef struct BarylabMap BarylabMap;

// A finitely supported probability measure.
typedef struct BarylabMeasure BarylabMeasure;

// A metric space.
typedef struct BarylabSpace BarylabSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *barylab_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *barylab_version(void);

// Parses a space descriptor such as `{"geometry":"spd_trace","dim":3}`.
int barylab_space_from_json(const char *json, struct BarylabSpace **space_out);

void barylab_space_free(struct BarylabSpace *space);

// Number of doubles in one point of `space`, or 0 for a null handle.
size_t barylab_space_point_len(const struct BarylabSpace *space);

int barylab_dist(const struct BarylabSpace *space,
                 const double *x,
                 const double *y,
                 size_t len,
                 double *dist_out);

// Writes the point at parameter `t` of the geodesic from `x` to `y`.
int barylab_geodesic(const struct BarylabSpace *space,
                     const double *x,
                     const double *y,
                     size_t len,
                     double t,
                     double *point_out);

// Builds a measure from `n_atoms` points stored back to back in `points`
// and their weights (which must sum to 1).
int barylab_measure_new(const struct BarylabSpace *space,
                        const double *points,
                        const double *weights,
                        size_t n_atoms,
                        struct BarylabMeasure **measure_out);

// Parses `{"space": ..., "atoms": [{"point": ..., "weight": w}, ...]}`.
int barylab_measure_from_json(const char *json, struct BarylabMeasure **measure_out);

void barylab_measure_free(struct BarylabMeasure *measure);

// Number of atoms, or 0 for a null handle.
size_t barylab_measure_len(const struct BarylabMeasure *measure);

// Exact `W_p(mu, nu)`.
int barylab_wasserstein(const struct BarylabMeasure *mu,
                        const struct BarylabMeasure *nu,
                        double p,
                        double *dist_out);

// Parses a map descriptor such as `{"type":"karcher"}`.
int barylab_map_from_json(const char *json, struct BarylabMap **map_out);

void barylab_map_free(struct BarylabMap *map);

// Evaluates `map` at `mu`, writing `len` doubles to `point_out`.
int barylab_map_evaluate(const struct BarylabMap *map,
                         const struct BarylabMeasure *mu,
                         double *point_out,
                         size_t len);

// Frobenius norm of `Σ w_j log(X^{-1/2} A_j X^{-1/2})`.
int barylab_karcher_residual(const struct BarylabMeasure *mu,
                             const double *x,
                             size_t len,
                             double *residual_out);

// `Σ p_j ln(p_j / w_j)`; may be `+inf`.
int barylab_relative_entropy(const double *p, const double *w, size_t len, double *entropy_out);

// Runs an experiment described by a JSON config (with a `"kind"` field)
// and returns the JSON report through `report_out`. Free it with
// `barylab_string_free`. A report whose checks fail is still returned with
// `BARYLAB_OK`; inspect its `"pass"` field.
int barylab_run_experiment(const char *config_json, char **report_out);

// Re-checks a report; writes 1 to `valid_out` if every invariant holds.
// On failure the reasons are available from `barylab_last_error_message`.
int barylab_verify_report(const char *report_json, int *valid_out);

// Releases a string returned by this library.
void barylab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BARYLAB_H */
