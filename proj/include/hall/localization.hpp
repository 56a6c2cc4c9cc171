#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "hall/errors.hpp"
#include "hall/geometry.hpp"
#include "hall/model.hpp"
#include "hall/op.hpp"
#include "hall/spectral.hpp"
#include "hall/stats.hpp"

namespace hall::loc {

// Inputs of the closed-form decay rate for energies inside a spectral gap
// (E_minus, E_plus).  C0_tilde shifts the operator nonnegative; C0
// lower-bounds the tilted operator H − β²(∇ρ)²/2 + C0_tilde, where ρ is the
// Lipschitz distance profile entering the exponential weight.  ρ itself is
// never constructed — only its gradient bound enters the rate.
struct CTParams {
  double E = 0.0;             // probe energy, strictly inside the gap
  double E_minus = 0.0;       // lower gap edge
  double E_plus = 0.0;        // upper gap edge
  double C0 = 1.0;            // positivity constant of the tilted operator
  double C0_tilde = 1.0;      // nonnegativity shift of the operator
  double grad_rho_norm = 1.0; // sup norm of the weight-profile gradient
  double v_minus_norm = 0.0;  // sup norm of the potential's negative part

  // κ = √( C0(E−E−) / (C0(E−E−) + 16(E+ + C̃0)(E− + C̃0)) ), in (0,1).
  double kappa() const;

  // Throws GapViolated if E is outside (E_minus, E_plus); ConfigInvalid if a
  // positivity constant is nonpositive or if the tilt budget
  // C0_tilde − v_minus_norm − β²‖∇ρ‖²/2 fails to stay positive.
  void validate() const;
};

// Closed-form lower bound on the exponential decay rate of resolvent blocks
// at energy E in the gap:
//   β = √2/‖∇ρ‖ · √( C0(E+−E)(E−E−) / (C0(E−E−) + 16(E+ + C̃0)(E− + C̃0)) ).
// Validates p first (GapViolated / ConfigInvalid).
double combes_thomas_beta(const CTParams& p);

// Positivity constants chosen automatically for a probe energy inside the
// empirical gap (e_minus, e_plus) of an operator with least eigenvalue h_min
// and negative-part bound v_minus_norm.  The choice keeps every CTParams
// invariant satisfied for any energy strictly inside the gap.
CTParams ct_params_from_gap(double e, double e_minus, double e_plus, double h_min,
                            double v_minus_norm = 0.0);

// Exponential fit of block norms against probe separation:
//   ‖block(d)‖ ≈ exp(intercept − rate·d).
struct DecayFit {
  std::vector<double> distances;  // strictly increasing, ≥ 4 probes
  std::vector<double> log_norms;  // fitted ordinates
  double rate = 0.0;              // decay exponent (positive when decaying)
  double intercept = 0.0;
  double rate_stderr = 0.0;
  double r2 = 0.0;

  double ci() const { return 1.96 * rate_stderr; }
};

// Least-squares decay fit; requires ≥ 4 strictly increasing distances and
// finite log norms (ConfigInvalid otherwise).
DecayFit fit_decay(const std::vector<double>& distances, const std::vector<double>& log_norms);

// Operator norm of the masked resolvent block χ_A (H − z)⁻¹ χ_B, evaluated
// through the cached eigendecomposition.  Masks must be grid-domain with
// indicators matching the dimension.  Throws SingularShift when Im z = 0 and
// z lies within 1e-12 of an eigenvalue.
double resolvent_block_norm(const spectral::SpectralData& data, std::complex<double> z,
                            const model::RegionMask& mask_a, const model::RegionMask& mask_b);

// Operator norm of χ_A O χ_B for a fixed grid-basis matrix.
double operator_block_norm(const Eigen::MatrixXcd& op, const model::RegionMask& mask_a,
                           const model::RegionMask& mask_b);

// A pair of x-axis strips of the given width spanning the full y extent,
// separated edge to edge by a prescribed gap.  distance is the exact minimum
// torus distance between the two included point sets — the abscissa the
// decay fits regress against.
struct ProbePair {
  model::RegionMask a;
  model::RegionMask b;
  double distance = 0.0;
};

// Builds one strip pair per gap.  Gaps must be positive and small enough
// that the direct separation, not the wrap-around one, is the torus distance
// (gap ≤ (Lx − 2·width)/2); ConfigInvalid otherwise.
std::vector<ProbePair> strip_probe_pairs(const model::ModelConfig& cfg, double width,
                                         const std::vector<double>& gaps);

// Decay fit of ‖χ_A O χ_B‖ over probe pairs for a fixed operator.
DecayFit operator_block_decay(const Eigen::MatrixXcd& op, const std::vector<ProbePair>& pairs);

// Decay of resolvent blocks at a real energy inside a spectral gap.  The gap
// is checked empirically: eigenvalues must exist on both sides of e and the
// nearest one must be at least min_half_gap away, else NotInGap.  The fitted
// rate is the empirical counterpart of combes_thomas_beta, which lower-bounds
// it on valid parameters.
DecayFit gap_decay_fit(const spectral::SpectralData& data, double e,
                       const std::vector<ProbePair>& pairs, double min_half_gap = 0.1);

// Left and right sides of the three momentum–resolvent norm inequalities,
// evaluated on the grid operator with discrete covariant momenta
// π_s = −i(T_s − 1)/h_s (T_s the phase-twisted unit shift), so that
// (π_x†π_x + π_y†π_y)/2 reproduces the assembled kinetic part exactly.
// With R = (H − z)⁻¹, f = (|Re z| + ‖V⁻‖_∞)·‖R‖, and a C¹ vector field α:
//   ‖Σ_i α_i π_i R‖        ≤ 2√2 ‖R‖^{1/2} (1+f)^{1/2} · max_i ‖α_i‖_∞
//   ‖π_i R Σ_j π_j α_j‖    ≤ 2 ‖|α|‖_∞ (1+f)            (i = x, y)
//   ‖R Σ_j π_j α_j‖        ≤ √2 ‖|α|‖_∞ ‖R‖^{1/2} (1+f)^{1/2}
// The chain behind them uses only K ≥ 0 and K ≤ H + ‖V⁻‖, both exact here.
struct MomentumBoundsReport {
  double grad_into_resolvent_lhs = 0.0;
  double grad_into_resolvent_rhs = 0.0;
  double momentum_sandwich_lhs = 0.0;  // worse of the two momentum components
  double momentum_sandwich_rhs = 0.0;
  double resolvent_into_grad_lhs = 0.0;
  double resolvent_into_grad_rhs = 0.0;
  double resolvent_norm = 0.0;
  double f_value = 0.0;

  bool all_hold() const {
    return grad_into_resolvent_lhs <= grad_into_resolvent_rhs &&
           momentum_sandwich_lhs <= momentum_sandwich_rhs &&
           resolvent_into_grad_lhs <= resolvent_into_grad_rhs;
  }
};

// Evaluates the three inequalities for the operator assembled from parts at
// shift z, with α sampled at the grid points.  Throws SingularShift when
// Im z = 0 and z sits within 1e-12 of an eigenvalue.
MomentumBoundsReport momentum_resolvent_bounds(const ops::HopParts& parts,
                                               std::complex<double> z,
                                               const std::function<Vec2(Vec2)>& alpha_field);

// Disorder-averaged fractional moments 𝔼‖χ_A R(E_F + iε) χ_B‖^s fitted
// against probe distance, one fit per regularization ε.  The ε list is
// reported as a trend — no ε → 0 limit is claimed.  max_sample records the
// largest single ‖block‖^s seen at each ε (bounded by ε^{−s}).
struct FractionalMomentFit {
  double s = 0.0;
  std::vector<double> epsilons;    // as supplied
  std::vector<DecayFit> fits;      // one per epsilon
  std::vector<double> max_sample;  // one per epsilon

  // Fit at the smallest supplied epsilon.
  const DecayFit& headline() const;
};

// Monte Carlo over disorder: one eigendecomposition per trial, reused across
// every distance and every ε.  Strips are one magnetic length wide; the gap
// list supplies the probe separations.  Throws InvalidS unless 0 < s < 1/3.
FractionalMomentFit fractional_moment_fit(const model::ModelConfig& cfg, double e_f, double s,
                                          const std::vector<double>& distances, int trials,
                                          std::uint64_t seed,
                                          const std::vector<double>& epsilons = {1e-2, 3e-3,
                                                                                 1e-3});

// Disorder-averaged Fermi-projection block norms 𝔼‖χ_A P_F χ_B‖ fitted
// against probe distance, for n_electrons filled states per trial.  Strip
// geometry matches fractional_moment_fit; distance-zero probes are excluded
// by construction.
DecayFit projection_decay_fit(const model::ModelConfig& cfg, int n_electrons,
                              const std::vector<double>& distances, int trials,
                              std::uint64_t seed);

}  // namespace hall::loc
