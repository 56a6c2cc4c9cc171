#include "hall/msa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hall/stats.hpp"

namespace hall::msa {

namespace {

constexpr std::int64_t kMaxScale = std::numeric_limits<std::int64_t>::max();

__int128 square(std::int64_t x) { return static_cast<__int128>(x) * x; }

// Smallest odd integer >= sqrt(v), exact for the full 64-bit range (the
// floating seed is corrected with integer comparisons).
std::int64_t odd_ceil_sqrt(std::int64_t v) {
  auto c = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (c > 1 && square(c - 1) >= v) --c;
  while (square(c) < v) ++c;
  return (c % 2 == 1) ? c : c + 1;
}

// The per-step rate correction d = log(c0 K3^2 |E|)/ell + (2s+7) log(ell')/ell'.
double d_term(std::int64_t ell, std::int64_t ell_prime, double log_argument, double s) {
  return std::log(log_argument) / static_cast<double>(ell) +
         (2.0 * s + 7.0) * std::log(static_cast<double>(ell_prime)) /
             static_cast<double>(ell_prime);
}

// eta' = (5 ell'/ell)^4 eta^2 + (ell')^{-xi}/2, accumulated in extended
// precision, saturated at 1, clamped to 0 with the flag on double underflow.
double step_eta(std::int64_t ell, std::int64_t ell_prime, double eta, double xi,
                bool& underflowed) {
  const long double ratio =
      5.0L * static_cast<long double>(ell_prime) / static_cast<long double>(ell);
  const long double quartic = ratio * ratio * ratio * ratio;
  const long double eta_l = static_cast<long double>(eta);
  const long double tail =
      0.5L * std::pow(static_cast<long double>(ell_prime), -static_cast<long double>(xi));
  const long double sum = quartic * eta_l * eta_l + tail;
  if (sum >= 1.0L) return 1.0;
  const auto out = static_cast<double>(sum);
  if (out == 0.0) underflowed = true;  // sum > 0 always: the tail is positive
  return out;
}

}  // namespace

void RecursionConstants::validate() const {
  require(std::isfinite(c0) && c0 > 0.0, Err::ConfigInvalid,
          "prefactor c0 must be positive, got " + std::to_string(c0));
  require(std::isfinite(K3) && K3 > 0.0, Err::ConfigInvalid,
          "resolvent constant K3 must be positive, got " + std::to_string(K3));
  require(std::isfinite(abs_E) && abs_E > 0.0, Err::ConfigInvalid,
          "energy magnitude must be positive, got " + std::to_string(abs_E));
}

void MsaState::validate() const {
  require(k >= 0, Err::ConfigInvalid, "step index must be non-negative");
  require(ell >= 1, Err::ConfigInvalid,
          "scale must be positive, got " + std::to_string(ell));
  require(ell % 2 == 1, Err::ConfigInvalid,
          "scale must be odd, got " + std::to_string(ell));
  require(std::isfinite(gamma), Err::ConfigInvalid, "rate must be finite");
  require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0, Err::ConfigInvalid,
          "failure probability must lie in [0,1], got " + std::to_string(eta));
  require(std::isfinite(xi) && xi > 4.0, Err::ConfigInvalid,
          "chain exponent must exceed 4, got " + std::to_string(xi));
  require(std::isfinite(s) && s > 0.0, Err::ConfigInvalid,
          "rate-correction exponent must be positive, got " + std::to_string(s));
  constants.validate();
}

std::vector<std::int64_t> length_scale_sequence(std::int64_t ell0, int k_max) {
  if (ell0 >= 1 && ell0 % 2 == 0)
    fail(Err::EvenInitialScale, "initial scale must be odd, got " + std::to_string(ell0));
  require(ell0 >= 5, Err::ConfigInvalid,
          "initial scale must be at least 5, got " + std::to_string(ell0));
  require(k_max >= 0, Err::ConfigInvalid, "step count must be non-negative");

  std::vector<std::int64_t> scales;
  scales.reserve(static_cast<std::size_t>(k_max) + 1);
  scales.push_back(ell0);
  for (int k = 0; k < k_max; ++k) {
    const std::int64_t m = odd_ceil_sqrt(scales.back());
    const __int128 next = static_cast<__int128>(scales.back()) * m;
    require(next <= kMaxScale, Err::ConfigInvalid,
            "scale ladder overflows 64-bit range at step " + std::to_string(k + 1));
    scales.push_back(static_cast<std::int64_t>(next));
  }
  return scales;
}

std::int64_t initial_scale(double b, double b_ref, std::int64_t ell0_hat) {
  require(std::isfinite(b) && std::isfinite(b_ref) && b > 0.0 && b_ref > 0.0,
          Err::ConfigInvalid, "field strengths must be positive and finite");
  require(ell0_hat >= 1, Err::ConfigInvalid,
          "base scale must be positive, got " + std::to_string(ell0_hat));
  require(ell0_hat % 2 == 1, Err::EvenInitialScale,
          "base scale must be odd, got " + std::to_string(ell0_hat));

  const double ratio = std::sqrt(b / b_ref);
  require(ratio >= 1.0, Err::FieldTooWeak,
          "field " + std::to_string(b) + " is below the reference strength " +
              std::to_string(b_ref));
  auto whole = static_cast<std::int64_t>(ratio);
  while (static_cast<double>(whole) > ratio) --whole;  // guard the cast edge
  const std::int64_t m = (whole % 2 == 1) ? whole : whole - 1;
  const __int128 out = static_cast<__int128>(ell0_hat) * m;
  require(out <= kMaxScale, Err::ConfigInvalid, "initial scale overflows 64-bit range");
  return static_cast<std::int64_t>(out);
}

MsaState recursion_step(const MsaState& state, std::int64_t ell_prime) {
  state.validate();
  require(ell_prime > 0 && ell_prime % state.ell == 0, Err::ScaleRelationViolated,
          "next scale " + std::to_string(ell_prime) + " is not a multiple of " +
              std::to_string(state.ell));
  require(ell_prime / state.ell > 4, Err::ScaleRelationViolated,
          "next scale " + std::to_string(ell_prime) + " must exceed 4 x " +
              std::to_string(state.ell));
  require(ell_prime % 2 == 1, Err::ScaleRelationViolated,
          "next scale must be odd, got " + std::to_string(ell_prime));

  MsaState next = state;
  next.k = state.k + 1;
  next.ell = ell_prime;
  next.gamma = state.gamma *
                   (1.0 - 4.0 * static_cast<double>(state.ell) /
                              static_cast<double>(ell_prime)) -
               d_term(state.ell, ell_prime, state.constants.log_argument(), state.s);
  bool underflowed = state.eta_underflowed;
  next.eta = step_eta(state.ell, ell_prime, state.eta, state.xi, underflowed);
  next.eta_underflowed = underflowed;
  return next;
}

double eta_chain_condition(std::int64_t ell0, double xi) {
  require(ell0 >= 1, Err::ConfigInvalid, "scale must be positive");
  require(std::isfinite(xi), Err::ConfigInvalid, "chain exponent must be finite");
  const auto l = static_cast<double>(ell0);
  return 625.0 * std::pow(l, 2.0 - xi / 2.0) *
         std::pow(1.0 + 2.0 / std::sqrt(l), 4.0 + xi);
}

CertifyResult certify(std::int64_t ell0, double gamma0, double xi,
                      const RecursionConstants& constants, int k_max,
                      std::optional<double> eta0) {
  require(std::isfinite(gamma0), Err::ConfigInvalid, "initial rate must be finite");

  CertifyResult result;
  result.scales = length_scale_sequence(ell0, k_max);

  MsaState state;
  state.k = 0;
  state.ell = ell0;
  state.gamma = gamma0;
  state.eta = eta0 ? *eta0 : std::pow(static_cast<double>(ell0), -xi);
  state.xi = xi;
  state.s = xi;
  state.constants = constants;
  state.validate();

  result.gammas.push_back(state.gamma);
  result.etas.push_back(state.eta);
  for (int k = 0; k < k_max; ++k) {
    state = recursion_step(state, result.scales[static_cast<std::size_t>(k) + 1]);
    result.gammas.push_back(state.gamma);
    result.etas.push_back(state.eta);
  }
  result.eta_underflowed = state.eta_underflowed;

  result.all_eta_bounded = true;
  for (std::size_t k = 0; k < result.scales.size(); ++k) {
    const double bound = std::pow(static_cast<double>(result.scales[k]), -xi);
    if (result.etas[k] > bound) result.all_eta_bounded = false;
  }

  double product = 1.0;
  KahanSum d_sum;
  for (int k = 0; k < k_max; ++k) {
    const auto ell = static_cast<double>(result.scales[static_cast<std::size_t>(k)]);
    const auto ell_next =
        static_cast<double>(result.scales[static_cast<std::size_t>(k) + 1]);
    product *= 1.0 - 4.0 * ell / ell_next;
    d_sum.add(d_term(result.scales[static_cast<std::size_t>(k)],
                     result.scales[static_cast<std::size_t>(k) + 1],
                     constants.log_argument(), xi));
  }
  result.product = product;
  result.d_sum = d_sum.value();
  result.gamma_inf_lower = gamma0 * product - d_sum.value();
  result.gamma_min = *std::min_element(result.gammas.begin(), result.gammas.end());
  return result;
}

InitialConditionResult initial_condition_check(std::int64_t ell0, double c_perc,
                                               double m_p, double xi, double K3,
                                               double g_sup_norm, double box_area,
                                               double c_wegner) {
  InitialConditionResult result;
  const auto l = static_cast<double>(ell0);
  result.perc_lhs = 2.0 * c_perc * l * std::exp(-m_p * l);
  result.perc_rhs = 0.5 * std::pow(l, -xi);
  result.perc_ok = result.perc_lhs <= result.perc_rhs;
  result.delta_E = result.perc_rhs / (c_wegner * K3 * g_sup_norm * box_area);
  return result;
}

}  // namespace hall::msa
