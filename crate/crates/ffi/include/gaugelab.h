#ifndef GAUGELAB_H
#define GAUGELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GaugelabStatus {
  GAUGELAB_STATUS_OK = 0,
  GAUGELAB_STATUS_NULL_POINTER = 1,
  GAUGELAB_STATUS_INVALID_ARGUMENT = 2,
  GAUGELAB_STATUS_CONFIG = 3,
  GAUGELAB_STATUS_BUDGET = 4,
  GAUGELAB_STATUS_NUMERICAL = 5,
  GAUGELAB_STATUS_IO = 6,
  /*
   A report was produced but some checks exceeded their tolerance.
   */
  GAUGELAB_STATUS_CHECKS_FAILED = 7,
  GAUGELAB_STATUS_PANIC = 8,
} GaugelabStatus;

/*
 Gibbs state of one coupling realization.
 */
typedef struct GaugelabGibbs GaugelabGibbs;

/*
 Geometry, ensemble and thermal point from an experiment config.
 */
typedef struct GaugelabModel GaugelabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL after a success.
 Valid until the next call on the same thread.
 */
const char *gaugelab_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *gaugelab_version(void);

/*
 Builds a model from the TOML text of an experiment config.

 # Safety
 `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GaugelabStatus gaugelab_model_from_toml(const char *toml, struct GaugelabModel **out);

/*
 # Safety
 `model` must come from `gaugelab_model_from_toml` and not be used again.
 */
void gaugelab_model_free(struct GaugelabModel *model);

/*
 Number of lattice sites.

 # Safety
 Pointers must be valid.
 */
enum GaugelabStatus gaugelab_model_sites(const struct GaugelabModel *model, size_t *out);

/*
 Total number of couplings, i.e. bonds over all families, in the order
 expected by `gaugelab_gibbs_new`: families in config order, bonds in
 lexicographic order within each.

 # Safety
 Pointers must be valid.
 */
enum GaugelabStatus gaugelab_model_couplings(const struct GaugelabModel *model, size_t *out);

/*
 Sites of bond `index` in the flattened coupling order. Writes up to
 `capacity` site indices to `sites` and the bond size to `len`.

 # Safety
 `sites` must hold `capacity` elements; other pointers must be valid.
 */
enum GaugelabStatus gaugelab_model_bond(const struct GaugelabModel *model,
                                        size_t index,
                                        size_t *sites,
                                        size_t capacity,
                                        size_t *len);

/*
 Classical Nishimori inverse temperature of order `p`.

 # Safety
 Pointers must be valid.
 */
enum GaugelabStatus gaugelab_model_nishimori_beta(const struct GaugelabModel *model,
                                                  size_t p,
                                                  double *out);

/*
 Diagonalizes `H(J, h)` at inverse temperature `beta` for the flattened
 couplings `J` (see `gaugelab_model_couplings`).

 # Safety
 `couplings` must hold `len` doubles; other pointers must be valid.
 */
enum GaugelabStatus gaugelab_gibbs_new(const struct GaugelabModel *model,
                                       const double *couplings,
                                       size_t len,
                                       double h,
                                       double beta,
                                       struct GaugelabGibbs **out);

/*
 # Safety
 `gibbs` must come from `gaugelab_gibbs_new` and not be used again.
 */
void gaugelab_gibbs_free(struct GaugelabGibbs *gibbs);

/*
 `log Z`.

 # Safety
 Pointers must be valid.
 */
enum GaugelabStatus gaugelab_gibbs_log_z(const struct GaugelabGibbs *gibbs, double *out);

/*
 `⟨σ^z_X⟩` for the site set `X`.

 # Safety
 `sites` must hold `len` indices; other pointers must be valid.
 */
enum GaugelabStatus gaugelab_gibbs_z_expectation(const struct GaugelabGibbs *gibbs,
                                                 const size_t *sites,
                                                 size_t len,
                                                 double *out);

/*
 Duhamel function `(σ^z_X, σ^z_Y)`, or its truncated form when
 `truncated` is nonzero.

 # Safety
 Site arrays must hold their stated lengths; other pointers must be valid.
 */
enum GaugelabStatus gaugelab_gibbs_z_duhamel(const struct GaugelabGibbs *gibbs,
                                             const size_t *x,
                                             size_t x_len,
                                             const size_t *y,
                                             size_t y_len,
                                             int32_t truncated,
                                             double *out);

/*
 Runs a CLI subcommand (`verify-gauge`, `verify-identities`, `bounds`,
 `susceptibility`, `sweep`) on a config and returns the JSON report in
 `json_out`, to be released with `gaugelab_string_free`. `threads = 0`
 uses all cores. Returns `CHECKS_FAILED` (with the report) when some
 check exceeded its tolerance. Nothing is written to disk.

 # Safety
 Strings must be NUL-terminated; `json_out` must be valid.
 */
enum GaugelabStatus gaugelab_run(const char *subcommand,
                                 const char *toml,
                                 size_t threads,
                                 char **json_out);

/*
 Releases a string returned by this library.

 # Safety
 `s` must come from this library and not be used again.
 */
void gaugelab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUGELAB_H */
