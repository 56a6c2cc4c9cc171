#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "hall/errors.hpp"
#include "hall/model.hpp"
#include "hall/op.hpp"
#include "hall/stats.hpp"

namespace hall::spectral {

// Closed energy interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double e) const { return e >= lo && e <= hi; }
};

// Full dense Hermitian eigendecomposition with its accuracy certificate.
struct SpectralData {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors;  // columns, same order
  double residual = 0.0;          // max_n ‖H φ_n − E_n φ_n‖

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

// Fermi sea at fixed electron count.
struct FermiState {
  int N = 0;
  double E_F = 0.0;
  Eigen::MatrixXcd P_F;
  double nu = 0.0;          // filling factor N/M
  bool degenerate = false;  // spacing at the Fermi cut below resolution
};

// Constants feeding the disorder-averaged eigenvalue-counting bound
//   E[count in Δ] <= C_W · K3 · ‖g‖_∞ · δE · |Λ|,
//   K3 = [𝓜 + 𝓔_max(Δ)/𝓤_min]² · K0·K1·‖u‖_∞·|supp u|^{n0}.
// K1 is a proof constant with no closed form; it must be supplied (see
// upsilon_trace_sum for the calibration aid).
struct WegnerParams {
  double E_min = 1.0;   // resolvent shift, must exceed ‖V_0⁻‖_∞
  double U_min = 0.0;   // covering floor 𝓤_min (u_0)
  double moment = 0.0;  // 𝓜 = sup|λ| over the coupling support
  double K0 = 0.0;
  double n0 = 1.0;
  double u_sup = 0.0;     // ‖u‖_∞
  double supp_area = 0.0;  // |supp u|
  std::optional<double> K1;

  // 𝓔_max(Δ) = sup_{E∈Δ} |E + E_min|.
  double e_max(Interval delta) const;

  static WegnerParams from_config(const model::ModelConfig& cfg, double E_min);
};

// --- operations ---

// Dense Hermitian eigendecomposition; residual contract residual <= 1e-10·‖H‖.
SpectralData eigensolve(const ops::OperatorMatrix& h);

// Rigorous edges of the n-th Landau band broadened by V_0 and A_P:
//   upper = 𝓔_n + √2‖A_P‖√𝓔_n + ‖A_P‖²/2 + ‖V_0⁺‖
//   lower = 𝓔_n − √2‖A_P‖√𝓔_n − ‖V_0⁻‖,   𝓔_n = (n+1/2)ω_c.
// The lower edge requires the monotonicity condition ‖A_P‖ <= √ω_c
// (MonotoneViolated otherwise).
struct BandEdges {
  double upper = 0.0;
  double lower = 0.0;
};
BandEdges band_edge_bounds(const model::ModelConfig& cfg, int n);

// True iff a spectral gap is guaranteed above band n:
//   ω_c > √2‖A_P‖(√𝓔_{n+1}+√𝓔_n) + ‖A_P‖²/2 + ‖V_0⁺‖ + ‖V_0⁻‖.
bool gap_condition(const model::ModelConfig& cfg, int n);

// Monte Carlo scan of E[#eigenvalues in [E−δE, E+δE]] over window widths and
// domain sizes.  Each config in `cfgs` is one domain Λ (its torus area is
// |Λ|); rows of mean_counts follow cfgs, columns follow delta_e.  Linearity
// in δE is fitted through the origin per config, and those slopes are fitted
// against area through the origin to expose the |Λ| scaling.
struct WegnerTable {
  std::vector<double> areas;
  std::vector<double> delta_e;
  Eigen::MatrixXd mean_counts;
  std::vector<LinearFit> slope_vs_delta;  // per config
  LinearFit slope_vs_area;
  double min_r2 = 0.0;  // worst per-config through-origin R²
};
WegnerTable wegner_scan(const std::vector<model::ModelConfig>& cfgs, double e_center,
                        const std::vector<double>& delta_e, int trials, std::uint64_t seed);

// Averaged-spectral-projection bound: with every other coupling frozen,
//   ‖ ∫ dλ_a g(λ_a) · u_a^{1/2} Q_Δ(λ_a) u_a^{1/2} ‖  <=  ‖g‖_∞ |Δ|,
// where Q_Δ is the spectral projection of H with coupling λ_a at site_a.
// The integrand jumps wherever an eigenvalue crosses an endpoint of Δ, so the
// integral runs by the composite midpoint rule over supp g with `nodes` cells
// and is re-evaluated at twice the count; QuadratureUnresolved if the two
// disagree beyond tol.  g_scale multiplies the density (test mode for
// un-normalized g); the reported bound scales with it.
struct KotaniSimonResult {
  double value = 0.0;  // operator norm of the integral
  double bound = 0.0;  // g_scale · ‖g‖_∞ · |Δ|
  int nodes_used = 0;
};
KotaniSimonResult kotani_simon_check(const model::ModelConfig& cfg,
                                     const model::DisorderRealization& realization,
                                     int site_a, Interval delta, int nodes = 48,
                                     double tol = 2e-2, double g_scale = 1.0);

// Fit Tr[(H_0 + E_min)^{-2} χ_Ω] ≈ K0·|Ω|^{n0} over a family of grid-domain
// regions.  |Ω| is the discretized region area (point count · hx·hy).
struct K0Estimate {
  double K0 = 0.0;
  double n0 = 0.0;
  double fit_residual = 0.0;  // max |log T − log fit|
  std::vector<double> areas;
  std::vector<double> traces;
};
K0Estimate estimate_K0_n0(const model::ModelConfig& cfg,
                          const std::vector<model::RegionMask>& omegas, double E_min);

// Trace-norm sums of Υ_{b,a} = u_b^{1/2} (H_0+E_min)^{-2} u_a^{1/2} over all
// ordered site pairs (desk scale: small lattices only).  alpha_hat is the
// fitted exponential decay rate of the trace norms against pair distance,
// restricted to pairs with non-overlapping bump supports.
struct UpsilonSummary {
  double total = 0.0;
  Eigen::MatrixXd norms;  // sites × sites trace norms, [b][a]
  double alpha_hat = 0.0;
  LinearFit decay_fit;  // log norm vs distance
};
UpsilonSummary upsilon_trace_sum(const model::ModelConfig& cfg, double E_min);

// K3 from its closed form; MissingConstant when K1 was never supplied.
double k3_bound(const WegnerParams& params, Interval delta);

// Projection onto the lowest N eigenvectors.  E_F is the midpoint between
// the N-th and (N+1)-th eigenvalues (one level spacing above the top state
// when N = dim); `degenerate` flags a spacing below 1e-12 at the cut.
FermiState fermi_projection(const SpectralData& spec, int N, int M);

}  // namespace hall::spectral
