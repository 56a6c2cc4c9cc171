#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hall/errors.hpp"
#include "hall/geometry.hpp"
#include "hall/model.hpp"
#include "hall/op.hpp"
#include "hall/spectral.hpp"

namespace hall::transport {

// How a conductance value was obtained.
enum class Method { Kubo, Commutator, ChernMarker, RelativeIndex, SwitchIndex, Drive };

const char* method_name(Method m);

// Axis-aligned box on the torus grid, used to restrict diagonal traces.
// Site membership is half-open in probe-centered coordinates: a grid point
// belongs to the box iff its minimum-image offset d from the center obeys
// -w/2 - tol <= d < w/2 - tol per axis, with tol = 1e-9*h.  The tolerance
// makes edge ties deterministic when box edges coincide with grid points.
struct TraceRegion {
  Eigen::ArrayXd weights;     // one 0/1 weight per grid point
  double center_x = 0.0, center_y = 0.0;
  double width_x = 0.0, width_y = 0.0;
  double seam_distance = 0.0;  // box edge to torus seam, min over axes
  std::size_t sites = 0;
  double area = 0.0;           // sites * hx * hy
};

// Vortex probe for the relative index.  The flux insertion point a must lie
// on the eps-lattice (integer multiples of eps per axis); eps values <= 0
// default to the grid pitch.  truncation_radius is the half-width (in the
// max-norm) of the diagonal trace window centered on the probe; <= 0 selects
// the quarter-torus default min(Lx, Ly)/4.  On a finite torus the full trace
// of T^3 vanishes identically (the two projections have equal rank and the
// spectrum of T pairs +λ with -λ), so the index has to be read off from a
// window that contains the vortex but not the compensating winding that
// accumulates along the cut of the wrapped phase field.
struct IndexProbe {
  Vec2 a{};
  double eps1 = 0.0, eps2 = 0.0;
  double truncation_radius = 0.0;
};

struct ConductanceResult {
  double value = 0.0;  // e^2/h
  Method method = Method::Kubo;
  std::optional<TraceRegion> region;
  std::map<std::string, double> diagnostics;
};

struct RelativeIndexResult {
  double value = 0.0;          // windowed trace of T^3
  int nearest_integer = 0;
  double deviation = 0.0;      // |value - nearest_integer|
  double imag_residual = 0.0;  // |Im windowed trace|, should be ~0
  double full_trace = 0.0;     // |Tr T^3| over the whole torus, ~0 identically
  double probe_spread = 0.0;   // max - min over probes in probe-average mode
  std::size_t probes = 1;
};

struct ConnesAreaResult {
  std::complex<double> lattice_sum{0.0, 0.0};
  std::complex<double> closed_form{0.0, 0.0};
  double error = 0.0;  // |lattice_sum - closed_form|
  std::size_t terms = 0;
};

struct AccelerationCoefficients {
  double gamma_xy = 0.0;
  double gamma_yy = 0.0;
  double imag_residual = 0.0;
};

// Time series and fits from one adiabatic switch-on run.
struct DriveResult {
  std::vector<double> times;  // observation samples, t >= 0
  std::vector<double> jx_ind; // induced current density, x component
  std::vector<double> jy_ind; // induced current density, y component
  double sigma_xy = 0.0;      // intercept of 2π j_x,ind/F vs t, e^2/h
  double sigma_yy = 0.0;      // same for the y component
  double drift_xy = 0.0;      // fitted slope of the xy series
  double drift_yy = 0.0;      // fitted slope of the yy series
  double rms_xy = 0.0;        // fit residual rms
  double rms_yy = 0.0;
  double max_norm_drift = 0.0;  // max per-step |‖ψ‖ - 1|
  double max_abs_energy = 0.0;  // spectral radius of the initial Hamiltonian
  std::size_t steps = 0;
};

// ---- conductance from linear response ----

// Kubo double sum over filled/empty eigenpairs:
//   σ_xy = -(i/area) Σ_{m<=N<n} [⟨m|v_x|n⟩⟨n|v_y|m⟩ - (x<->y)] / (E_m-E_n)²
// reported in e²/h (one factor 2π in these units).  Throws DegenerateFermiCut
// when the level spacing at the cut is below 1e-12 (unless N is 0 or dim,
// where the sum is empty and the value is exactly 0).
ConductanceResult kubo_sigma_xy(const spectral::SpectralData& spec,
                                const ops::OperatorMatrix& v_x,
                                const ops::OperatorMatrix& v_y, int N, double area);

// Same conductance as -(i/area)·Tr P_F [P_x, P_y] with P_s assembled from the
// residues of the contour representation: in the eigenbasis the only nonzero
// blocks are (filled,empty) and (empty,filled), with matrix element
// ⟨m|v_s|n⟩/(E_m - E_n).  Agrees with kubo_sigma_xy to machine precision —
// the double contour integral collapses to the same double sum.
ConductanceResult commutator_sigma_xy(const spectral::SpectralData& spec,
                                      const ops::OperatorMatrix& v_x,
                                      const ops::OperatorMatrix& v_y, int N, double area);

// Commutator conductance split into a bulk piece (trace restricted to the
// region) and its complement: σ_in + σ_out = σ_xy exactly, term by term.
// Requires grid-basis velocities (the mask lives on the grid diagonal).
std::pair<ConductanceResult, ConductanceResult> sigma_xy_split(
    const spectral::SpectralData& spec, const ops::OperatorMatrix& v_x,
    const ops::OperatorMatrix& v_y, int N, double area, const TraceRegion& region);

// ---- real-space invariants ----

// Box builder with seam bookkeeping.  Throws RegionTouchesSeam when the box
// crosses the torus cut or comes closer to it than min_seam_distance.
TraceRegion region_box(const model::ModelConfig& cfg, double cx, double cy,
                       double wx, double wy, double min_seam_distance = 0.0);

// Region margin δL = a·(L/a)^κ used when a trace region must keep a
// size-dependent distance from the seam.
double boundary_margin(double L, double a, double kappa = 0.75);

// Diagonal position operators in fundamental-domain coordinates centered on
// (cx, cy): x_op(g) = min_image(x_g - cx).  Centering keeps every in-region
// coordinate far from the wrap discontinuity.
std::pair<Eigen::VectorXd, Eigen::VectorXd> position_operators(
    const model::ModelConfig& cfg, double cx, double cy);

// Local Chern marker over a region:
//   (2πi/|Ω|) Σ_{g∈Ω} ⟨g| P_F [[P_F,x],[P_F,y]] P_F |g⟩  (already in e²/h).
// Positions must be centered on the region (see position_operators).
ConductanceResult chern_marker(const Eigen::MatrixXcd& P_F, const TraceRegion& omega,
                               const Eigen::VectorXd& x_op, const Eigen::VectorXd& y_op,
                               double area_omega);

// Relative index of the pair (P_F, U P_F U†) for a vortex unitary U with
// phases frozen at eps-cell centers and offsets wrapped about the probe:
// value = Σ_{g∈window} (T³)_{gg}, T = P_F - U P_F U†.  probe_average > 1
// averages over an n×n block of probes spaced one eps-cell apart and reports
// the spread as a diagnostic.
RelativeIndexResult relative_index(const model::ModelConfig& cfg,
                                   const Eigen::MatrixXcd& P_F, const IndexProbe& probe,
                                   int probe_average = 1);

// Truncated lattice sum Σ_a t_{u,v} t_{v,w} t_{w,u} over dual-lattice points
// a within `radius` of the triangle centroid, against the closed form
// (2πi/ε₁ε₂)(v-u)×(w-u).  t_{p,q}(a) = 1 - e^{i(θ_a(p)-θ_a(q))} with θ_a the
// polar angle about a.  The sum converges conditionally; the radial
// truncation about the centroid is part of the contract.
ConnesAreaResult connes_area_check(Vec2 u, Vec2 v, Vec2 w, double eps1, double eps2,
                                   double truncation_radius);

// Switch-function index 2πi Σ_{g∈window} ⟨g|P_F[[P_F,λ₁],[P_F,λ₂]]|g⟩ with
// λ₁ = 1{min_image(x-a₁) ≥ 0}, λ₂ = 1{min_image(y-a₂) ≥ 0}.  As with the
// relative index the full-torus trace vanishes identically (it is the trace
// of a commutator of the compressed switches), so the value is read off a
// quarter-torus window centered on the step corner a.
ConductanceResult switch_index(const model::ModelConfig& cfg,
                               const Eigen::MatrixXcd& P_F, Vec2 a);

// Acceleration coefficients
//   γ_uy = (1/area)[N δ_{u,y} + Tr v_u (P_y P_F + P_F P_y)]
// in the same 2π scale as the conductances.  These vanish for the infinite
// system; on the grid γ_yy saturates at an O(h²) lattice-mass offset.
AccelerationCoefficients acceleration_coefficients(const spectral::SpectralData& spec,
                                                   const ops::OperatorMatrix& v_x,
                                                   const ops::OperatorMatrix& v_y, int N,
                                                   double area);

// ---- driven evolution ----

// Propagates the N lowest eigenstates of H(α(-T)) from t = -T to
// t = +observe_T under the switch-on drive with unconditionally unitary
// Cayley (midpoint) steps, records the induced current density for t >= 0,
// and fits intercept+slope of 2π j_ind/F per component.  Preconditions:
// dt·max|E| <= 0.1 and T·η >= 3 (ConfigInvalid otherwise); throws
// UnstableStep if the per-step norm drift exceeds 1e-8 or goes non-finite.
DriveResult drive_experiment(const model::ModelConfig& cfg,
                             const model::DisorderRealization* realization, int N,
                             const ops::DriveParams& drive);

}  // namespace hall::transport
