#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "hall/msa.hpp"

using namespace hall;

namespace {

// Canonical recursion constants with log argument e, so every rate step
// subtracts exactly 1/ell in the logarithmic correction's first term.
msa::RecursionConstants unit_log_constants() {
  msa::RecursionConstants c;
  c.c0 = std::exp(1.0);
  c.K3 = 1.0;
  c.abs_E = 1.0;
  return c;
}

msa::MsaState base_state(std::int64_t ell, double gamma, double eta, double xi) {
  msa::MsaState st;
  st.ell = ell;
  st.gamma = gamma;
  st.eta = eta;
  st.xi = xi;
  st.s = xi;
  return st;  // constants default to c0 = K3 = |E| = 1, log argument 1
}

}  // namespace

TEST_CASE("scale ladder multiplies by the smallest odd integer at least the square root") {
  const auto small = msa::length_scale_sequence(5, 3);
  CHECK(small == std::vector<std::int64_t>{5, 15, 75, 675});

  // Seven rungs from 25: multipliers 5, 13, 41, 259, 4155, 267767.
  const auto ladder = msa::length_scale_sequence(25, 6);
  CHECK(ladder == std::vector<std::int64_t>{25, 125, 1625, 66625, 17255875,
                                            71698160625, 19198401376074375});
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
    const std::int64_t m = ladder[k + 1] / ladder[k];
    CHECK(ladder[k + 1] % ladder[k] == 0);
    CHECK(m % 2 == 1);
    CHECK(m * m >= ladder[k]);  // ratio >= sqrt -> next >= ell^{3/2}
  }

  // The ladder law holds across every small odd start, including exact odd
  // squares (25 -> multiplier 5) and the even-ceiling case (ceil sqrt even).
  for (std::int64_t ell0 = 5; ell0 <= 99; ell0 += 2) {
    const auto seq = msa::length_scale_sequence(ell0, 4);
    REQUIRE(seq.size() == 5);
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
      REQUIRE(seq[k + 1] % seq[k] == 0);
      const std::int64_t m = seq[k + 1] / seq[k];
      CHECK(m % 2 == 1);
      CHECK(m * m >= seq[k]);
      CHECK((m - 2) * (m - 2) < seq[k]);  // smallest such odd integer
    }
  }

  CHECK(msa::length_scale_sequence(25, 0) == std::vector<std::int64_t>{25});

  try {
    msa::length_scale_sequence(6, 2);
    FAIL("even initial scale accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::EvenInitialScale);
  }
  try {
    msa::length_scale_sequence(3, 2);
    FAIL("too-small initial scale accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  try {
    msa::length_scale_sequence(25, -1);
    FAIL("negative step count accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  // One more rung from 25 would pass 2^63.
  try {
    msa::length_scale_sequence(25, 7);
    FAIL("overflowing ladder accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
}

TEST_CASE("initial scale takes the largest odd multiplier the field ratio allows") {
  CHECK(msa::initial_scale(9.0, 1.0, 5) == 15);
  CHECK(msa::initial_scale(1.0, 1.0, 5) == 5);
  // Just below a perfect odd square the multiplier drops to the previous odd
  // integer (floor 4.999 = 4, largest odd below is 3); just above it sticks.
  CHECK(msa::initial_scale(24.99, 1.0, 5) == 15);
  CHECK(msa::initial_scale(25.01, 1.0, 5) == 25);
  // Even floor: sqrt(4) = 2 -> largest odd multiplier is 1.
  CHECK(msa::initial_scale(4.0, 1.0, 7) == 7);

  try {
    msa::initial_scale(0.5, 1.0, 5);
    FAIL("sub-reference field accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::FieldTooWeak);
  }
  try {
    msa::initial_scale(9.0, 1.0, 4);
    FAIL("even base scale accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::EvenInitialScale);
  }
  try {
    msa::initial_scale(9.0, 0.0, 5);
    FAIL("zero reference field accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  try {
    msa::initial_scale(-1.0, 1.0, 5);
    FAIL("negative field accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
}

TEST_CASE("probability and rate recursion match hand arithmetic") {
  // eta' = (5*25/5)^4 (5^-5)^2 + 25^-5/2 = 0.04 + 5.12e-8.
  auto st = base_state(5, 1.0, std::pow(5.0, -5.0), 5.0);
  const auto next = msa::recursion_step(st, 25);
  CHECK(next.k == st.k + 1);
  CHECK(next.ell == 25);
  CHECK(next.eta == doctest::Approx(0.040000051200000004).epsilon(1e-12));
  CHECK_FALSE(next.eta_underflowed);

  // Unit log argument kills the 1/ell correction term:
  // gamma' = 1*(1 - 20/25) - 17 log(25)/25.
  CHECK(next.gamma == doctest::Approx(-1.9888355609103765).epsilon(1e-12));

  // log argument e subtracts exactly 1/ell more.
  auto st_e = st;
  st_e.constants = unit_log_constants();
  const auto next_e = msa::recursion_step(st_e, 25);
  CHECK(next.gamma - next_e.gamma == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(next_e.eta == next.eta);  // the probability step never sees c0, K3, |E|

  // The correction exponent s only rescales the log(ell')/ell' term:
  // raising s by 1 subtracts exactly 2 log(25)/25 more.
  auto st_s = st;
  st_s.s = 6.0;
  const auto next_s = msa::recursion_step(st_s, 25);
  CHECK(next.gamma - next_s.gamma == doctest::Approx(0.257510065989456).epsilon(1e-12));
  CHECK(next_s.eta == next.eta);  // the chain exponent xi is untouched

  // Scale-relation gate: equal, 4x, non-multiple, and even-multiple ladders.
  for (std::int64_t bad : {5LL, 20LL, 27LL, 30LL}) {
    try {
      msa::recursion_step(st, bad);
      FAIL("accepted an inadmissible next scale");
    } catch (const Error& e) {
      CHECK(e.code() == Err::ScaleRelationViolated);
    }
  }

  // Invalid input states are rejected before any arithmetic.
  auto bad_eta = st;
  bad_eta.eta = 1.5;
  try {
    msa::recursion_step(bad_eta, 25);
    FAIL("probability above one accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  auto bad_xi = st;
  bad_xi.xi = 4.0;
  try {
    msa::recursion_step(bad_xi, 25);
    FAIL("chain exponent 4 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  auto bad_even = st;
  bad_even.ell = 6;
  try {
    msa::recursion_step(bad_even, 30);
    FAIL("even state scale accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
}

TEST_CASE("probability clamps saturate at one and flag underflow to zero") {
  // eta = 1/2 at ratio 5 drives the quadratic term to ~9.8e4: saturate at 1.
  auto big = base_state(5, 0.0, 0.5, 5.0);
  const auto sat = msa::recursion_step(big, 25);
  CHECK(sat.eta == 1.0);
  CHECK_FALSE(sat.eta_underflowed);

  // A huge chain exponent pushes the tail below the smallest subnormal
  // double (~5e-331 here): clamp to zero and raise the flag.
  auto tiny = base_state(5, 0.0, 0.0, 55.0);
  const auto under = msa::recursion_step(tiny, 1000005);
  CHECK(under.eta == 0.0);
  CHECK(under.eta_underflowed);

  // The flag is sticky across later, perfectly normal steps.
  auto carried = base_state(5, 0.0, 1e-4, 5.0);
  carried.eta_underflowed = true;
  const auto after = msa::recursion_step(carried, 25);
  CHECK(after.eta > 0.0);
  CHECK(after.eta_underflowed);
}

TEST_CASE("certificate reports the product-minus-sum floor and the probability chain") {
  const auto res = msa::certify(25, 10.0, 5.0, unit_log_constants(), 6);
  REQUIRE(res.scales == msa::length_scale_sequence(25, 6));
  REQUIRE(res.gammas.size() == 7);
  REQUIRE(res.etas.size() == 7);

  CHECK(res.product == doctest::Approx(0.12290304814717055).epsilon(1e-12));
  CHECK(res.d_sum == doctest::Approx(0.7854764631781509).epsilon(1e-12));
  CHECK(res.gamma_inf_lower == doctest::Approx(0.44355401829355456).epsilon(1e-12));
  CHECK(res.gamma_inf_lower > 0.0);

  // Directly iterated rates: strictly decreasing here (every correction is
  // positive), settling six digits above the closed-form floor.
  CHECK(res.gammas[1] == doctest::Approx(1.3033493317268867).epsilon(1e-12));
  CHECK(res.gammas[6] == doctest::Approx(0.721748797221975).epsilon(1e-12));
  for (std::size_t k = 0; k + 1 < res.gammas.size(); ++k)
    CHECK(res.gammas[k + 1] < res.gammas[k]);
  CHECK(res.gamma_min == res.gammas.back());
  CHECK(res.gamma_min >= res.gamma_inf_lower);

  // The closed-form floor, re-derived in reverse order and extended
  // precision, agrees to 1e-12.
  long double product = 1.0L;
  long double d_sum = 0.0L;
  const double log_arg = unit_log_constants().log_argument();
  for (std::size_t k = res.scales.size() - 1; k >= 1; --k) {
    const auto ell = static_cast<long double>(res.scales[k - 1]);
    const auto ell_next = static_cast<long double>(res.scales[k]);
    product *= 1.0L - 4.0L * ell / ell_next;
    d_sum += std::log(static_cast<long double>(log_arg)) / ell +
             17.0L * std::log(ell_next) / ell_next;
  }
  const auto reference = static_cast<double>(10.0L * product - d_sum);
  CHECK(res.gamma_inf_lower == doctest::Approx(reference).epsilon(1e-12));

  // Starting from eta_0 = 25^-5 the chain breaks immediately: eta_1 exceeds
  // 125^-5 by two orders, and by the fifth rung the raw recursion is past
  // the saturation clamp.
  CHECK_FALSE(res.all_eta_bounded);
  CHECK(res.etas[0] == std::pow(25.0, -5.0));
  CHECK(res.etas[1] == doctest::Approx(4.112384e-09).epsilon(1e-12));
  CHECK(res.etas[1] > std::pow(125.0, -5.0));
  CHECK(res.etas[5] == 1.0);
  CHECK(res.etas[6] == 1.0);
  CHECK_FALSE(res.eta_underflowed);

  // Zero initial rate goes negative on the first step and the floor is the
  // negated correction sum.
  const auto dead = msa::certify(25, 0.0, 5.0, unit_log_constants(), 6);
  CHECK(dead.gammas[1] == doctest::Approx(-0.696650668273113).epsilon(1e-12));
  CHECK(dead.gamma_inf_lower == doctest::Approx(-0.7854764631781509).epsilon(1e-12));
  CHECK(dead.gamma_inf_lower < 0.0);

  // A supplied eta_0 above the chain bound fails at step zero even though
  // the recursion itself runs fine.
  const auto seeded =
      msa::certify(25, 10.0, 5.0, unit_log_constants(), 6, 2.0 * std::pow(25.0, -5.0));
  CHECK_FALSE(seeded.all_eta_bounded);
  CHECK(seeded.etas[0] == 2.0 * std::pow(25.0, -5.0));

  try {
    msa::certify(25, 10.0, 5.0, unit_log_constants(), 6, 1.5);
    FAIL("probability above one accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  try {
    msa::certify(25, 10.0, 4.0, unit_log_constants(), 6);
    FAIL("chain exponent 4 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigInvalid);
  }
  // From 5 the first canonical rung is 15 = 3 x 5, not beyond 4 x 5.
  try {
    msa::certify(5, 1.0, 5.0, unit_log_constants(), 1);
    FAIL("ladder with ratio 3 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ScaleRelationViolated);
  }

  // k_max = 0 degenerates to the seed: empty product, empty sum.
  const auto seed_only = msa::certify(25, 10.0, 5.0, unit_log_constants(), 0);
  CHECK(seed_only.product == 1.0);
  CHECK(seed_only.d_sum == 0.0);
  CHECK(seed_only.gamma_inf_lower == 10.0);
  CHECK(seed_only.all_eta_bounded);
}

TEST_CASE("probability chain propagates exactly above the closed-form threshold") {
  // The criterion value at the smallest admissible odd scales, both sides of
  // the 1/2 boundary.
  CHECK(msa::eta_chain_condition(105, 8.0) ==
        doctest::Approx(0.48161642320525067).epsilon(1e-12));
  CHECK(msa::eta_chain_condition(103, 8.0) ==
        doctest::Approx(0.5100609660530072).epsilon(1e-12));
  CHECK(msa::eta_chain_condition(107, 8.0) < msa::eta_chain_condition(105, 8.0));
  CHECK(msa::eta_chain_condition(1607467, 5.0) ==
        doctest::Approx(0.49999985055398305).epsilon(1e-12));
  CHECK(msa::eta_chain_condition(1607465, 5.0) > 0.5);

  // xi = 8 from the threshold scale 105: five rungs, every eta_k below its
  // ell_k^{-8} bound (ratios settle at the tail factor 1/2).
  const auto res = msa::certify(105, 1.0, 8.0, unit_log_constants(), 5);
  CHECK(res.scales == std::vector<std::int64_t>{105, 1155, 40425, 8206275,
                                                23510977875, 3605008770507375});
  CHECK(res.all_eta_bounded);
  for (std::size_t k = 0; k < res.scales.size(); ++k)
    CHECK(res.etas[k] <= std::pow(static_cast<double>(res.scales[k]), -8.0));
  CHECK(res.gamma_inf_lower == doctest::Approx(0.3948237180397257).epsilon(1e-12));
  CHECK(res.gamma_min == doctest::Approx(0.4149087748809793).epsilon(1e-12));
  CHECK(res.gamma_min >= res.gamma_inf_lower);

  // xi = 5 needs a seven-digit threshold scale; the chain is tight at the
  // first rung (eta_1 is 99.7% of its bound) yet holds, and two rungs are
  // all that fit in 64-bit range from there.
  const auto deep = msa::certify(1607467, 1.0, 5.0, unit_log_constants(), 2);
  CHECK(deep.scales == std::vector<std::int64_t>{1607467, 2039875623, 92130982512795});
  CHECK(deep.all_eta_bounded);
  CHECK(deep.etas[1] == doctest::Approx(2.8226739508635355e-47).epsilon(1e-12));
  CHECK(deep.etas[1] <= std::pow(2039875623.0, -5.0));
  CHECK(deep.etas[1] > 0.99 * std::pow(2039875623.0, -5.0));

  // Below that threshold the same exponent breaks the chain on rung one
  // (the canonical certificate case), pinning the criterion's sharpness.
  CHECK_FALSE(msa::certify(25, 1.0, 5.0, unit_log_constants(), 2).all_eta_bounded);
}

TEST_CASE("initial-box conditions gate on percolation decay and solve for the level-spacing window") {
  // Strong percolation decay at scale 25: 50 e^{-25} is two orders below
  // the 25^-5/2 budget.
  const auto ok = msa::initial_condition_check(25, 1.0, 1.0, 5.0, 1.0, 1.0, 5625.0);
  CHECK(ok.perc_ok);
  CHECK(ok.perc_lhs == doctest::Approx(6.94397193248201e-10).epsilon(1e-12));
  CHECK(ok.perc_rhs == doctest::Approx(5.12e-08).epsilon(1e-12));
  CHECK(ok.delta_E == doctest::Approx(9.102222222222223e-12).epsilon(1e-12));

  // Weak decay at a small scale fails by five orders.
  const auto weak = msa::initial_condition_check(5, 1.0, 0.01, 5.0, 1.0, 1.0, 225.0);
  CHECK_FALSE(weak.perc_ok);
  CHECK(weak.perc_lhs == doctest::Approx(9.51229424500714).epsilon(1e-12));
  CHECK(weak.perc_lhs > weak.perc_rhs);

  // With the box area growing as 9 ell0^2, the window shrinks as
  // ell0^{-(xi+2)}: tripling the scale divides delta_E by 3^7.
  const auto d25 =
      msa::initial_condition_check(25, 1.0, 1.0, 5.0, 2.0, 1.5, 9.0 * 25 * 25, 0.7);
  const auto d75 =
      msa::initial_condition_check(75, 1.0, 1.0, 5.0, 2.0, 1.5, 9.0 * 75 * 75, 0.7);
  CHECK(d25.delta_E / d75.delta_E == doctest::Approx(2187.0).epsilon(1e-12));

  // The counting constant defaults to 1.
  const auto defaulted = msa::initial_condition_check(25, 1.0, 1.0, 5.0, 1.0, 1.0, 5625.0);
  const auto explicit_one =
      msa::initial_condition_check(25, 1.0, 1.0, 5.0, 1.0, 1.0, 5625.0, 1.0);
  CHECK(defaulted.delta_E == explicit_one.delta_E);

  // Doubling the counting constant halves the window exactly.
  const auto doubled =
      msa::initial_condition_check(25, 1.0, 1.0, 5.0, 1.0, 1.0, 5625.0, 2.0);
  CHECK(doubled.delta_E == doctest::Approx(0.5 * defaulted.delta_E).epsilon(1e-14));
}
