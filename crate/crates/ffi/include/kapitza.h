#ifndef KAPITZA_H
#define KAPITZA_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum KwStability {
  KW_STABILITY_STABLE = 0,
  KW_STABILITY_UNSTABLE = 1,
  KW_STABILITY_MARGINAL = 2,
} KwStability;

typedef enum KwStatus {
  KW_STATUS_OK = 0,
  KW_STATUS_NULL_POINTER = 1,
  KW_STATUS_INVALID_ARGUMENT = 2,
  KW_STATUS_DOMAIN = 3,
  KW_STATUS_INTEGRATION_FAILED = 4,
  KW_STATUS_SINGULAR_JACOBIAN = 5,
  KW_STATUS_NO_CONVERGENCE = 6,
  KW_STATUS_LEFT_DOMAIN = 7,
  KW_STATUS_FALLING_ORBIT = 8,
  KW_STATUS_BRACKET_OR_CONTINUATION = 9,
  KW_STATUS_OUT_OF_RANGE = 10,
  KW_STATUS_PANIC = 99,
} KwStatus;

typedef enum KwSystem {
  KW_SYSTEM_AVERAGED = 0,
  KW_SYSTEM_ORIGINAL = 1,
} KwSystem;

typedef struct KwOrbit KwOrbit;

typedef struct KwOrbitSet KwOrbitSet;

// Parameters μ, a, ε and a forcing.
typedef struct KwProblem KwProblem;

// Plain-data view of a periodic orbit.
typedef struct KwOrbitInfo {
  double phi0;
  double p0;
  double residual;
  // Row-major 2×2 monodromy matrix.
  double monodromy[4];
  double multiplier_re[2];
  double multiplier_im[2];
  // A `KwStability` value.
  int32_t stability;
} KwOrbitInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *kw_version(void);

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length, 0 if
// there is none.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t kw_last_error_message(char *buf, uintptr_t len);

// New problem with F ≡ 0 and no fast time scale.
//
// # Safety
// `out` must be valid for writing one pointer.
enum KwStatus kw_problem_new(double mu, double a, struct KwProblem **out);

// # Safety
// `problem` must be null or a handle from [`kw_problem_new`] not yet freed.
void kw_problem_free(struct KwProblem *problem);

// Sets ε = 1/k for the original system.
//
// # Safety
// `problem` must be a live handle.
enum KwStatus kw_problem_set_k(struct KwProblem *problem, uint32_t k);

// F(t) = amplitude · cos(t + phase).
//
// # Safety
// `problem` must be a live handle.
enum KwStatus kw_problem_set_harmonic(struct KwProblem *problem, double amplitude, double phase);

// F(t) = Σ cos_k cos(kt) + sin_k sin(kt), k from 0.
//
// # Safety
// `problem` must be a live handle; `cos`/`sin` valid for `n_cos`/`n_sin`
// values (may be null when the count is 0).
enum KwStatus kw_problem_set_fourier(struct KwProblem *problem,
                                     const double *cos,
                                     uintptr_t n_cos,
                                     const double *sin,
                                     uintptr_t n_sin);

// Forcing from its JSON description (as written by the CLI).
//
// # Safety
// `problem` must be a live handle and `json` a NUL-terminated string.
enum KwStatus kw_problem_set_forcing_json(struct KwProblem *problem, const char *json);

// F(t) for the problem's forcing.
//
// # Safety
// `problem` must be a live handle, `out` valid for writing.
enum KwStatus kw_problem_forcing_value(const struct KwProblem *problem, double t, double *out);

// Integrates from (φ₀, p₀) at t₀ for `duration`. `tol <= 0` selects the
// default tolerance.
//
// # Safety
// `problem` must be a live handle; the outputs valid for writing.
enum KwStatus kw_flow(const struct KwProblem *problem,
                      int32_t system,
                      double phi0,
                      double p0,
                      double t0,
                      double duration,
                      double tol,
                      double *out_phi,
                      double *out_p);

// Distance between (φ₀, p₀) and its image after one period.
//
// # Safety
// `problem` must be a live handle, `out` valid for writing.
enum KwStatus kw_residual(const struct KwProblem *problem,
                          int32_t system,
                          double phi0,
                          double p0,
                          double tol,
                          double *out);

// Newton refinement of a periodic orbit from a guess.
//
// # Safety
// `problem` must be a live handle, `out` valid for writing one pointer.
enum KwStatus kw_orbit_refine(const struct KwProblem *problem,
                              int32_t system,
                              double phi0,
                              double p0,
                              struct KwOrbit **out);

// # Safety
// `orbit` must be a live handle, `out` valid for writing.
enum KwStatus kw_orbit_info(const struct KwOrbit *orbit, struct KwOrbitInfo *out);

// # Safety
// `orbit` must be null or a live handle.
void kw_orbit_free(struct KwOrbit *orbit);

// All non-falling periodic orbits found from an `n × n` seed grid over the
// momentum-bounded search box (needs μ > 0).
//
// # Safety
// `problem` must be a live handle, `out` valid for writing one pointer.
enum KwStatus kw_orbits_scan(const struct KwProblem *problem,
                             int32_t system,
                             uintptr_t n,
                             struct KwOrbitSet **out);

// Number of orbits in a set; 0 for null.
//
// # Safety
// `set` must be null or a live handle.
uintptr_t kw_orbit_set_len(const struct KwOrbitSet *set);

// # Safety
// `set` must be a live handle, `out` valid for writing.
enum KwStatus kw_orbit_set_get(const struct KwOrbitSet *set,
                               uintptr_t index,
                               struct KwOrbitInfo *out);

// # Safety
// `set` must be null or a live handle.
void kw_orbit_set_free(struct KwOrbitSet *set);

// Critical vibration amplitude for F(t) = A cos t by bisection on
// [a_lo, a_hi], following the orbit seeded at (φ₀, p₀) from a_hi.
//
// # Safety
// `out_a_star` must be valid for writing.
enum KwStatus kw_critical_a(double mu,
                            double amplitude,
                            double a_lo,
                            double a_hi,
                            double phi0,
                            double p0,
                            double *out_a_star);

// Sufficient condition for a stable orbit inside (β, α). `k` is the
// Lebesgue exponent (pass `INFINITY` for the sup norm). α and β are NaN
// when a² ≤ 2.
//
// # Safety
// `problem` must be a live handle; the outputs valid for writing.
enum KwStatus kw_torres_check(const struct KwProblem *problem,
                              double k,
                              bool *out_applies,
                              double *out_alpha,
                              double *out_beta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KAPITZA_H */
