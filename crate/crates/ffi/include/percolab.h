#ifndef PERCOLAB_H
#define PERCOLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Route used by `percolab_pc`.
typedef enum PercolabPcMethod {
  PERCOLAB_PC_METHOD_ALPHA = 0,
  PERCOLAB_PC_METHOD_DIRECT = 1,
} PercolabPcMethod;

// Result codes of every fallible call.
typedef enum PercolabStatus {
  PERCOLAB_STATUS_OK = 0,
  PERCOLAB_STATUS_NULL_POINTER = 1,
  PERCOLAB_STATUS_ENCODING = 2,
  PERCOLAB_STATUS_DOMAIN = 3,
  PERCOLAB_STATUS_RESOURCE = 4,
  PERCOLAB_STATUS_CONFIG = 5,
  PERCOLAB_STATUS_UNDECIDED = 6,
  PERCOLAB_STATUS_IO = 7,
  PERCOLAB_STATUS_PANIC = 8,
} PercolabStatus;

// Opaque handle to a lattice T_d x Z.
typedef struct PercolabLattice PercolabLattice;

// Monte Carlo settings. Zero fields take the library defaults.
typedef struct PercolabMc {
  uint64_t trials;
  uint64_t seed;
  uint64_t site_budget;
} PercolabMc;

// A point estimate with its 95% interval.
typedef struct PercolabEstimate {
  double mean;
  double ci_low;
  double ci_high;
  uint64_t trials;
} PercolabEstimate;

// Bracket for the critical probability.
typedef struct PercolabPcResult {
  double low;
  double high;
  bool converged;
  uint64_t probes;
} PercolabPcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The string stays
// valid until the next failing call on the same thread.
const char *percolab_last_error_message(void);

// Creates a lattice for tree degree `d >= 3`.
enum PercolabStatus percolab_lattice_new(uint32_t d, struct PercolabLattice **out);

// Releases a lattice; NULL is ignored.
void percolab_lattice_free(struct PercolabLattice *lattice);

// Tree degree of a lattice, 0 for NULL.
uint32_t percolab_lattice_degree(const struct PercolabLattice *lattice);

// Level of the tree vertex reached from the root by `len` branch choices.
// The first choice ranges over `0..d`, later ones over `0..d-1`; branch 0
// follows the canonical ray.
enum PercolabStatus percolab_level(const struct PercolabLattice *lattice,
                                   const uint32_t *branches,
                                   uintptr_t len,
                                   int64_t *out);

// a_n(z) for branching number `b = d - 1`, by the closed form.
enum PercolabStatus percolab_a_n(uint32_t n, double z, uint32_t b, double *out);

// a_n(z) summed over the sphere directly.
enum PercolabStatus percolab_a_n_direct(uint32_t n, double z, uint32_t b, double *out);

// tau(o, (v_n, 0)) inside the product ball of radius `k`. `mc` may be NULL.
enum PercolabStatus percolab_tau(const struct PercolabLattice *lattice,
                                 uint32_t n,
                                 double p,
                                 uint32_t k,
                                 const struct PercolabMc *mc,
                                 struct PercolabEstimate *out);

// The horizontal rate alpha(p) from fibers up to depth `n_max`; `mean`
// is the fitted rate and the interval its band.
enum PercolabStatus percolab_alpha(const struct PercolabLattice *lattice,
                                   double p,
                                   uint32_t n_max,
                                   const struct PercolabMc *mc,
                                   struct PercolabEstimate *out);

// Brackets p_c for degree `d` to width `tol`. An undecided bisection
// still fills `out` (with `converged = false`) and returns
// `PERCOLAB_STATUS_UNDECIDED`.
enum PercolabStatus percolab_pc(uint32_t d,
                                enum PercolabPcMethod method,
                                double tol,
                                const struct PercolabMc *mc,
                                struct PercolabPcResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERCOLAB_H */
