#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hall/errors.hpp"

// Deterministic multiscale-certificate arithmetic. A localization proof at a
// small box size is bootstrapped to all larger sizes by iterating a pair of
// scalar recursions up a ladder of odd integer length scales: the decay rate
// gamma degrades by a controlled factor per rung while the failure
// probability eta is squared (up to polynomial prefactors). Everything here
// is pure arithmetic on fitted constants; no linear algebra is re-run.
namespace hall::msa {

// Constants entering the rate recursion only through log(c0 * K3^2 * |E|):
// an absolute prefactor c0, the resolvent-scale constant K3, and the energy
// magnitude |E|.
struct RecursionConstants {
  double c0 = 1.0;
  double K3 = 1.0;
  double abs_E = 1.0;

  double log_argument() const { return c0 * K3 * K3 * abs_E; }
  void validate() const;
};

// One rung of the scale ladder: the current odd scale ell = ell_k, the decay
// rate gamma_k certified at that scale, and the probability eta_k that the
// decay estimate fails on a box of that scale.
//
// The exponent s controls the (2s+7) log(ell') / ell' correction in the rate
// recursion; it conventionally equals the chain exponent xi and defaults to
// it, but is kept separate because the two play different roles (xi drives
// the probability chain, s only the logarithmic rate correction).
struct MsaState {
  int k = 0;                  // step index
  std::int64_t ell = 5;       // odd length scale ell_k
  double gamma = 0.0;         // certified decay rate at scale ell_k
  double eta = 0.0;           // failure probability in [0, 1]
  double xi = 5.0;            // chain exponent, > 4
  double s = 5.0;             // exponent in the logarithmic rate correction
  RecursionConstants constants{};
  bool eta_underflowed = false;  // eta rounded to zero in double precision

  void validate() const;
};

// Ladder of odd scales ell_{k+1} = ell_k * m_k with m_k the smallest odd
// integer >= sqrt(ell_k); returns [ell_0, ..., ell_{k_max}] (k_max + 1
// entries). Every ratio is odd and >= sqrt(ell_k), so ell_{k+1} >=
// ell_k^{3/2}. Throws EvenInitialScale for even ell0, ConfigInvalid for
// ell0 < 5, negative k_max, or a scale that would overflow 64-bit range.
std::vector<std::int64_t> length_scale_sequence(std::int64_t ell0, int k_max);

// Field-dependent initial scale ell0 = ell0_hat * m with m the largest odd
// integer <= sqrt(b / b_ref): the starting box grows with the field strength
// so that one fixed base scale ell0_hat serves every field above the
// reference strength b_ref. Throws FieldTooWeak when sqrt(b / b_ref) < 1,
// EvenInitialScale for even ell0_hat.
std::int64_t initial_scale(double b, double b_ref, std::int64_t ell0_hat);

// One rung of the recursion, moving from scale ell to ell_prime:
//   eta' = (5 ell'/ell)^4 eta^2 + (ell')^{-xi} / 2
//   gamma' = gamma (1 - 4 ell/ell') - log(c0 K3^2 |E|)/ell
//            - (2s+7) log(ell') / ell'
// eta' is accumulated in extended precision, saturated at 1 (a failure
// probability above 1 carries no information), and clamped to 0 with the
// eta_underflowed flag when the true positive value rounds to zero in
// double precision. Requires ell_prime to be an odd multiple of state.ell
// strictly greater than 4 * state.ell; throws ScaleRelationViolated
// otherwise.
MsaState recursion_step(const MsaState& state, std::int64_t ell_prime);

// Left-hand side of the chain-propagation criterion
//   5^4 * ell0^{2 - xi/2} * (1 + 2/sqrt(ell0))^{4 + xi} <= 1/2.
// When the returned value is <= 1/2 (and eta_0 <= ell0^{-xi}), the bound
// eta_k <= ell_k^{-xi} propagates down the whole ladder.
double eta_chain_condition(std::int64_t ell0, double xi);

// Outcome of iterating the recursion up the canonical ladder from ell0.
struct CertifyResult {
  // Closed-form floor gamma0 * product - d_sum for the limiting rate.
  double gamma_inf_lower = 0.0;
  // Whether eta_k <= ell_k^{-xi} held at every visited scale.
  bool all_eta_bounded = false;

  // Decomposition of the floor: product of the (1 - 4 ell_k / ell_{k+1})
  // rate-survival factors and compensated sum of the d_k corrections.
  double product = 1.0;
  double d_sum = 0.0;

  // Smallest directly iterated rate gamma_k (>= gamma_inf_lower whenever
  // every d_k >= 0).
  double gamma_min = 0.0;

  std::vector<std::int64_t> scales;  // ell_0 .. ell_{k_max}
  std::vector<double> gammas;        // gamma_0 .. gamma_{k_max}
  std::vector<double> etas;          // eta_0 .. eta_{k_max}
  bool eta_underflowed = false;
};

// Iterate the recursion k_max steps up the canonical ladder from ell0,
// seeding gamma_0 = gamma0 and eta_0 = eta0 (default ell0^{-xi}). The rate
// exponent s is taken equal to xi. A false certificate (negative floor or a
// broken eta chain) is reported in the result, not thrown; invalid scales
// or states still throw.
CertifyResult certify(std::int64_t ell0, double gamma0, double xi,
                      const RecursionConstants& constants, int k_max,
                      std::optional<double> eta0 = std::nullopt);

// Verdict on the initial scale: whether the fitted percolation decay is
// strong enough at ell0, and the energy-resolution window delta_E the
// eigenvalue-counting estimate then affords.
struct InitialConditionResult {
  bool perc_ok = false;   // 2 C_perc ell0 exp(-m_p ell0) <= ell0^{-xi} / 2
  double delta_E = 0.0;   // solves C_W K3 ||g||_inf dE |box| = ell0^{-xi}/2
  double perc_lhs = 0.0;  // the two sides of the percolation criterion,
  double perc_rhs = 0.0;  // reported for diagnostics
};

// Check the percolation criterion at scale ell0 with fitted constants
// (c_perc, m_p) and solve for the level-spacing window delta_E given the
// counting constant c_wegner, the resolvent constant K3, the sup norm of
// the coupling density g, and the box area. Pure arithmetic on caller-
// supplied positive constants; never throws.
InitialConditionResult initial_condition_check(std::int64_t ell0, double c_perc,
                                               double m_p, double xi, double K3,
                                               double g_sup_norm, double box_area,
                                               double c_wegner = 1.0);

}  // namespace hall::msa
