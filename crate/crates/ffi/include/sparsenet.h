/* C ABI for the sparsenet sparse neural network toolkit. */

#ifndef SPARSENET_H
#define SPARSENET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call.
typedef enum SnnStatus {
  SNN_STATUS_OK = 0,
  SNN_STATUS_NULL_POINTER = 1,
  SNN_STATUS_INVALID_ARGUMENT = 2,
  SNN_STATUS_INVALID_DEGREE = 3,
  SNN_STATUS_MISSING_SEED = 4,
  SNN_STATUS_DIMENSION_MISMATCH = 5,
  SNN_STATUS_NOT_SYMMETRIC = 6,
  SNN_STATUS_NO_CONVERGENCE = 7,
  SNN_STATUS_IO_ERROR = 8,
  SNN_STATUS_PARSE_ERROR = 9,
  SNN_STATUS_DATA_ERROR = 10,
  SNN_STATUS_BUFFER_TOO_SMALL = 11,
  SNN_STATUS_PANIC = 12,
} SnnStatus;

// Bipartite construction selector, mirroring the core enum.
typedef enum SnnConstruction {
  SNN_CONSTRUCTION_FULLY_CONNECTED = 0,
  SNN_CONSTRUCTION_RANDOM_EDGE = 1,
  SNN_CONSTRUCTION_RANDOM_ROTATING = 2,
  SNN_CONSTRUCTION_RANDOM_D_REGULAR = 3,
  SNN_CONSTRUCTION_REGULAR_ROTATING = 4,
  SNN_CONSTRUCTION_LONG_SHORT_ROTATING = 5,
  SNN_CONSTRUCTION_FIBONACCI_ROTATING = 6,
} SnnConstruction;

// Opaque spectral report handle.
typedef struct SnnSpectralReport SnnSpectralReport;

// Opaque bipartite topology handle.
typedef struct SnnTopology SnnTopology;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread. Never null.
const char *snn_last_error_message(void);

// Library version as a static string.
const char *snn_version(void);

// Build a bipartite topology with `n` left (output-side) and `m` right
// (input-side) vertices. `seed` is consumed only when `has_seed` is
// true; the three random constructions require it. On success writes a
// handle the caller must release with [`snn_topology_free`].
//
// # Safety
// `out` must be a valid pointer.
enum SnnStatus snn_topology_build(enum SnnConstruction kind,
                                  size_t k,
                                  bool has_seed,
                                  uint64_t seed,
                                  size_t n,
                                  size_t m,
                                  struct SnnTopology **out);

// Release a topology handle. Null is a no-op.
//
// # Safety
// `t` must have come from this library and not be freed twice.
void snn_topology_free(struct SnnTopology *t);

// Left vertex count; 0 on null.
//
// # Safety
// `t` must be a live handle or null.
size_t snn_topology_left_count(const struct SnnTopology *t);

// Right vertex count; 0 on null.
//
// # Safety
// `t` must be a live handle or null.
size_t snn_topology_right_count(const struct SnnTopology *t);

// Number of edges; 0 on null.
//
// # Safety
// `t` must be a live handle or null.
size_t snn_topology_edge_count(const struct SnnTopology *t);

// Fraction of possible edges present; 0.0 on null.
//
// # Safety
// `t` must be a live handle or null.
double snn_topology_density(const struct SnnTopology *t);

// Construction that produced the topology; FullyConnected on null.
//
// # Safety
// `t` must be a live handle or null.
enum SnnConstruction snn_topology_construction(const struct SnnTopology *t);

// Recorded degree parameter k; 0 on null.
//
// # Safety
// `t` must be a live handle or null.
size_t snn_topology_k(const struct SnnTopology *t);

// Seed recorded for a randomized construction. Writes through `seed`
// when present and returns whether one exists.
//
// # Safety
// `t` must be a live handle or null; `seed` may be null.
bool snn_topology_seed(const struct SnnTopology *t, uint64_t *seed);

// Degree of one left vertex.
//
// # Safety
// `t` and `out` must be valid pointers.
enum SnnStatus snn_topology_row_degree(const struct SnnTopology *t, size_t row, size_t *out);

// Copy one row's sorted column indices into `buf` (capacity in
// elements); writes the copied count through `written`.
//
// # Safety
// `buf` must point to at least `capacity` elements.
enum SnnStatus snn_topology_copy_row(const struct SnnTopology *t,
                                     size_t row,
                                     size_t *buf,
                                     size_t capacity,
                                     size_t *written);

// Write the plain-text edge list (`n m construction k seed` header,
// one `i j` line per edge).
//
// # Safety
// `t` must be a live handle, `path` a valid NUL-terminated string.
enum SnnStatus snn_topology_write_edge_list(const struct SnnTopology *t, const char *path);

// Read an edge-list file written by [`snn_topology_write_edge_list`].
//
// # Safety
// `path` must be a valid NUL-terminated string, `out` a valid pointer.
enum SnnStatus snn_topology_read_edge_list(const char *path, struct SnnTopology **out);

// Compute the Laplacian spectral report of a topology. The handle must
// be released with [`snn_spectral_free`].
//
// # Safety
// `t` must be a live handle, `out` a valid pointer.
enum SnnStatus snn_spectral_analyze(const struct SnnTopology *t, struct SnnSpectralReport **out);

// Release a spectral report handle. Null is a no-op.
//
// # Safety
// `r` must have come from this library and not be freed twice.
void snn_spectral_free(struct SnnSpectralReport *r);

// Algebraic connectivity (Fiedler value, clamped to 0 when the graph
// is disconnected); NaN on null.
//
// # Safety
// `r` must be a live handle or null.
double snn_spectral_lambda2(const struct SnnSpectralReport *r);

// Largest Laplacian eigenvalue; NaN on null.
//
// # Safety
// `r` must be a live handle or null.
double snn_spectral_largest_nonzero(const struct SnnSpectralReport *r);

// Second-largest eigenvalue above the zero tolerance; NaN on null.
//
// # Safety
// `r` must be a live handle or null.
double snn_spectral_second_largest_nonzero(const struct SnnSpectralReport *r);

// Threshold below which eigenvalues count as zero; NaN on null.
//
// # Safety
// `r` must be a live handle or null.
double snn_spectral_zero_tolerance(const struct SnnSpectralReport *r);

// Connected component count; 0 on null.
//
// # Safety
// `r` must be a live handle or null.
size_t snn_spectral_component_count(const struct SnnSpectralReport *r);

// Number of eigenvalues (n + m); 0 on null.
//
// # Safety
// `r` must be a live handle or null.
size_t snn_spectral_eigenvalue_count(const struct SnnSpectralReport *r);

// Copy the ascending eigenvalue list into `buf`.
//
// # Safety
// `buf` must point to at least `capacity` doubles.
enum SnnStatus snn_spectral_copy_eigenvalues(const struct SnnSpectralReport *r,
                                             double *buf,
                                             size_t capacity,
                                             size_t *written);

// Run one training job from a TOML config file (same format as the
// `sparsenet train` subcommand). `profile` is `"desk"` or `"paper"`;
// artifacts configured in the file land under `out_dir`. Writes the
// final test accuracy through `final_accuracy` when non-null.
//
// # Safety
// String arguments must be valid NUL-terminated strings.
enum SnnStatus snn_train_file(const char *config_path,
                              const char *profile,
                              const char *out_dir,
                              uint64_t base_seed,
                              double *final_accuracy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSENET_H */
