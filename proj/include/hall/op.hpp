#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>

#include "hall/errors.hpp"
#include "hall/geometry.hpp"
#include "hall/model.hpp"

namespace hall::ops {

// Dense operator on the magnetic torus.  Grid basis: row-major grid points
// g = j*Nx + i at (i*hx, j*hy).  LandauProjected basis: the lowest n_max*M
// eigenvectors of the clean Hamiltonian, ordered by eigenvalue.
struct OperatorMatrix {
  enum class Basis { Grid, LandauProjected };

  Eigen::MatrixXcd mat;
  Basis basis = Basis::Grid;

  // Grid metadata (Basis::Grid).
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;

  // Band metadata (Basis::LandauProjected).
  int n_max = 0;
  int degeneracy = 0;  // states per band = flux integer M

  // Gauge descriptor: twist angles and uniform drive component the operator
  // was assembled with.
  double kappa_x = 0.0, kappa_y = 0.0;
  double alpha = 0.0;

  int dim() const { return static_cast<int>(mat.rows()); }
};

// Optional knobs for Hamiltonian assembly.  kappa_* are the boundary twist
// angles (a twist of 2π along an axis is a gauge transformation); alpha is a
// spatially uniform y-component added to the vector potential, used by the
// adiabatic drive.  gauge_phi, when set, shifts A_P by the gradient of a
// periodic function phi; the line integral of a gradient is the endpoint
// difference, so this insertion is exact rather than midpoint-sampled.
struct AssemblyOptions {
  double kappa_x = 0.0;
  double kappa_y = 0.0;
  double alpha = 0.0;
  std::function<double(Vec2)> gauge_phi;
};

// Switch-on profile of the driving electric field: the vector potential
// gains a uniform y-component alpha(t) = -F*t*e^{ηt} for t <= 0 and -F*t
// afterwards, so E_y(t) = -alpha'(t) ramps up smoothly and is constant F
// once the switching is complete.
struct DriveParams {
  double F = 1e-3;         // field strength after switch-on
  double eta = 0.5;        // adiabatic switching rate
  double T = 60.0;         // switch-on duration: evolution starts at t = -T
  double dt = 0.04;        // time step for propagation
  double observe_T = 20.0; // post-switch window [0, observe_T] used for fits

  void validate() const {
    require(eta > 0.0 && T > 0.0 && dt > 0.0 && observe_T > 0.0, Err::ConfigInvalid,
            "drive parameters eta, T, dt, observe_T must all be positive");
  }
};

double drive_alpha(double t, const DriveParams& drive);
double drive_field(double t, const DriveParams& drive);  // E_y(t) = -alpha'(t)

// Position of grid point g in the fundamental domain.
Vec2 grid_point(const model::ModelConfig& cfg, int g);

// Magnetic Schrödinger operator H = (1/2)(-i∇ + A)² + V_0 + V_ω on the
// cfg.grid_Nx × cfg.grid_Ny torus grid, with A = Landau gauge field of
// strength B plus A_P plus twist/drive terms.  Hops carry unit-modulus
// phases e^{-i∫A·dl} (midpoint rule; exact for the analytic A_P family),
// and the row-wrap hop carries the flux-quantization boundary phase.
// Pass realization = nullptr for the clean operator (V_ω = 0).
// Throws FluxMismatch if the summed plaquette fluxes miss -2πM by more
// than 1e-9, and ConfigInvalid if no grid is configured.
OperatorMatrix build_hamiltonian(const model::ModelConfig& cfg,
                                 const model::DisorderRealization* realization = nullptr,
                                 const AssemblyOptions& opt = {});

// Hop-resolved pieces of the same operator:
//   H(alpha) = diag + (xhop + e^{-i*alpha*hy} * yhop) + h.c.
// so a time-dependent drive only rescales yhop by a scalar phase.  The
// velocity operators are v_x = -i*hx*xhop + h.c. and
// v_y(alpha) = -i*hy*e^{-i*alpha*hy}*yhop + h.c.
struct HopParts {
  Eigen::MatrixXcd diag;  // on-site terms (real, stored complex)
  Eigen::MatrixXcd xhop;  // forward x-hops only
  Eigen::MatrixXcd yhop;  // forward y-hops only
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
};

HopParts build_hop_parts(const model::ModelConfig& cfg,
                         const model::DisorderRealization* realization = nullptr,
                         const AssemblyOptions& opt = {});

// Velocity operators v_s = ∂H/∂κ_s scaled to physical units (κ_x enters
// hops as e^{-i*hx*κ_x/Lx}, so v_x = Lx * ∂H/∂κ_x).  Exactly the central
// covariant difference: matrix elements ±(i/2h) times the hop phase.
std::pair<OperatorMatrix, OperatorMatrix> velocity_operators(
    const model::ModelConfig& cfg,
    const model::DisorderRealization* realization = nullptr,
    const AssemblyOptions& opt = {});

// Magnetic translation by a full torus period, shift ∈ {(Lx,0), (0,Ly)}.
// Built as the composition of single-step translations (with boundary
// phase folding) and the Landau-gauge compensating phase; on the torus both
// full-period translations collapse to the identity, which is the
// single-boundary-condition consistency statement.  Throws UnsupportedShift
// for any other shift.
OperatorMatrix magnetic_translation(const model::ModelConfig& cfg, Vec2 shift);

// Diagonal vortex unitary: U_a(u) = exp(i*arg((u1-a1) + i(u2-a2))), with
// the phase frozen to its value at the center of the eps-cell containing u
// (eps <= 0 evaluates at u itself).  Returned as the diagonal.
Eigen::VectorXcd vortex_unitary(const model::ModelConfig& cfg, Vec2 a, double eps);

// Hamiltonian at time t under the switch-on drive.
OperatorMatrix drive_hamiltonian(const model::ModelConfig& cfg,
                                 const model::DisorderRealization* realization,
                                 double t, const DriveParams& drive);

// Spectral basis of the lowest n_max Landau bands of the clean operator.
struct LandauBasis {
  Eigen::MatrixXcd C;           // grid_dim × (n_max * M), columns orthonormal
  Eigen::VectorXd clean_evals;  // the n_max * M lowest clean eigenvalues
  int n_max = 0;
  int degeneracy = 0;
};

// Diagonalizes the clean operator and collects the lowest n_max bands of M
// states each.  Throws BandsNotResolved unless every band is separated from
// the rest of the spectrum by a gap at least 10× its internal spread.
LandauBasis landau_basis(const model::ModelConfig& cfg, const OperatorMatrix& clean_h,
                         int n_max);

// Compression of a grid-basis operator to the band subspace: C† op C.
OperatorMatrix project_operator(const LandauBasis& basis, const OperatorMatrix& op);

// C† H_ω C for the lowest n_max bands of clean_h.
OperatorMatrix project_to_landau_bands(const model::ModelConfig& cfg,
                                       const OperatorMatrix& clean_h,
                                       const OperatorMatrix& h_omega, int n_max);

}  // namespace hall::ops
