#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include "hall/errors.hpp"
#include "hall/geometry.hpp"

namespace hall::model {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class BumpProfile { CosineCap, PlateauCap };

// Coupling density g. Uniform and Triangular are closed-form; Tabulated is
// piecewise-constant on equal bins over [lo, hi].
enum class DensityKind { Uniform, Triangular, Tabulated };

struct DensitySpec {
  DensityKind kind = DensityKind::Uniform;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> bins;  // Tabulated only: nonnegative bin heights

  double integral() const;                 // total mass (1 when normalized)
  double sup_norm() const;                 // ‖g‖_∞
  double mass(double a, double b) const;   // ∫_a^b g, clipped to support
  double quantile(double u) const;         // inverse CDF, u ∈ [0,1)
  double density(double x) const;          // pointwise g(x), 0 off support
};

// Background potential V_0 and periodic vector potential A_P, kept as small
// analytic families with known sup norms so every bound formula has exact
// inputs.
struct BackgroundSpec {
  double amplitude = 0.0;  // V_0(r) = amplitude * cos(2πx/Lx) * cos(2πy/Ly)
  double v0_plus() const { return amplitude > 0 ? amplitude : -amplitude; }
  double v0_minus() const { return v0_plus(); }
};

struct PeriodicFieldSpec {
  double amplitude = 0.0;  // A_P(r) = amplitude * (cos(2πy/Ly), cos(2πx/Lx))
  double sup_norm() const { return std::abs(amplitude) * std::numbers::sqrt2; }
};

struct ModelConfig {
  // Physics (units ħ = e = m_e = 1, so ω_c = B and ℓ_B = 1/√B).
  double B = 1.0;

  // Impurity lattice and bump.
  double a = 1.0;
  double r_u = 0.7;
  double u_0 = 0.05;
  double u_amp = 0.5;  // ‖u‖_∞
  BumpProfile bump_profile = BumpProfile::CosineCap;

  // Coupling bounds and density.
  double lambda_min = -1.0;
  double lambda_max = 1.0;
  double lambda_minus = 1.0;  // occupation window (-λ_minus, λ_plus)
  double lambda_plus = 1.0;
  DensitySpec g_spec;

  BackgroundSpec V0_spec;
  PeriodicFieldSpec AP_spec;

  // Torus (after adjustment) and discretization.
  double Lx = 0.0;
  double Ly = 0.0;
  int M = 0;  // flux integer: Lx*Ly = 2πM/B
  int grid_Nx = 0;
  int grid_Ny = 0;
  int n_max = 2;  // Landau bands kept by the projected backend

  double omega_c() const { return B; }
  double ell_B() const { return 1.0 / std::sqrt(B); }
  double u_1() const { return 2.0 * u_amp; }
  double hx() const { return Lx / grid_Nx; }
  double hy() const { return Ly / grid_Ny; }
  double area() const { return Lx * Ly; }

  double v0_at(Vec2 r) const {
    if (V0_spec.amplitude == 0.0) return 0.0;
    return V0_spec.amplitude * std::cos(kTwoPi * r.x / Lx) * std::cos(kTwoPi * r.y / Ly);
  }
  Vec2 ap_at(Vec2 r) const {
    if (AP_spec.amplitude == 0.0) return {0.0, 0.0};
    return {AP_spec.amplitude * std::cos(kTwoPi * r.y / Ly),
            AP_spec.amplitude * std::cos(kTwoPi * r.x / Lx)};
  }

  // Throws ConfigInvalid (or a more specific code) on any violated invariant.
  void validate() const;
};

struct TriangularLattice {
  int Nx = 0;          // sites per row (a1 direction)
  int Ny = 0;          // rows (a2 direction)
  double a = 0.0;
  double Lx = 0.0;
  double Ly = 0.0;
  double row_height = 0.0;          // Ly/Ny; √3a/2 before torus adjustment
  std::vector<Vec2> positions;      // size Nx*Ny, fundamental domain [0,Lx)×[0,Ly)
  double cell_area = 0.0;           // per-site dual-hexagon area (= a*row_height)

  int size() const { return Nx * Ny; }
  int index(int m, int n) const {
    m %= Nx; if (m < 0) m += Nx;
    n %= Ny; if (n < 0) n += Ny;
    return n * Nx + m;
  }
  std::pair<int, int> coords(int idx) const { return {idx % Nx, idx / Nx}; }

  // Canonical site for arbitrary axial coordinates. Row n is sheared by
  // n·a/2, so wrapping Ny rows in the rectangular torus shifts the row by
  // Ny/2 lattice constants; Ny is kept even so the lattice closes.
  int site_at(int m, int n) const {
    int k = n >= 0 ? n / Ny : -((-n + Ny - 1) / Ny);
    return index(m + k * (Ny / 2), n - k * Ny);
  }

  // Axial displacement (dm, dn) from s0 to s, minimal in n first and then in
  // m after undoing the seam shear — the representative used by region masks.
  std::pair<int, int> axial_delta(int s, int s0) const {
    auto [m, n] = coords(s);
    auto [m0, n0] = coords(s0);
    int dn_raw = n - n0;
    int dn = dn_raw % Ny;
    if (dn < 0) dn += Ny;
    int k_img = 0;
    if (dn >= (Ny + 1) / 2) { dn -= Ny; }
    k_img = (dn_raw - dn) / Ny;
    int dm = m - m0 - k_img * (Ny / 2);
    dm %= Nx;
    if (dm < 0) dm += Nx;
    if (dm >= (Nx + 1) / 2) dm -= Nx;
    return {dm, dn};
  }

  // 6-neighbor offsets of the triangular adjacency (axial convention).
  static constexpr std::array<std::pair<int, int>, 6> kNeighborOffsets{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}}};
  std::array<int, 6> neighbors(int idx) const {
    auto [m, n] = coords(idx);
    std::array<int, 6> out{};
    for (std::size_t k = 0; k < 6; ++k)
      out[k] = site_at(m + kNeighborOffsets[k].first, n + kNeighborOffsets[k].second);
    return out;
  }
};

struct DisorderRealization {
  std::uint64_t seed = 0;
  std::vector<double> couplings;  // per lattice site, in [lambda_min, lambda_max]
};

enum class MaskKind { Parallelogram, Annulus, Ribbon, Rectangle, HalfplaneSwitch, Custom };
enum class MaskDomain { Sites, Grid };

struct MaskParams {
  // Parallelogram / Annulus (site masks): center site (m0,n0), odd spans.
  int m0 = 0, n0 = 0;
  int ell = 1, ell_p = 1;
  // Rectangle (grid mask): corners in torus coordinates.
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  // Halfplane switch (grid mask): step location and axis (1 = x, 2 = y).
  Vec2 a_loc{};
  int axis = 1;
};

struct RegionMask {
  MaskKind kind = MaskKind::Custom;
  MaskDomain domain = MaskDomain::Sites;
  std::vector<std::uint8_t> indicator;
  MaskParams meta;

  std::size_t count() const {
    std::size_t c = 0;
    for (auto b : indicator) c += b;
    return c;
  }
};

struct TorusAdjustment {
  double Lx = 0.0;
  double Ly = 0.0;
  double dLy = 0.0;
  int M = 0;
};

// --- operations ---

// Flux quantization: shrink Ly so that B·Lx·Ly = 2πM with integer M ≥ 1.
TorusAdjustment adjust_torus(double Lx_P, double Ly_P, double B);

TriangularLattice build_lattice(const ModelConfig& cfg);

DisorderRealization sample_disorder(const ModelConfig& cfg, const TriangularLattice& lat,
                                    std::uint64_t seed);
DisorderRealization sample_disorder(const ModelConfig& cfg, std::uint64_t seed);

// Bump profile u(r) as a function of distance from the impurity site.
double bump_value(const ModelConfig& cfg, double dist);

// V_ω at arbitrary torus points (background V_0 is *not* included here).
std::vector<double> evaluate_potential(const ModelConfig& cfg, const TriangularLattice& lat,
                                       const DisorderRealization& realization,
                                       const std::vector<Vec2>& points);

// Covering condition: with all couplings = 1, min_r Σ_z u(r-z) ≥ u_0 on a
// probe grid 4x finer than the impurity lattice. Throws CoveringViolated.
void check_covering(const ModelConfig& cfg, const TriangularLattice& lat);

RegionMask region_mask(MaskKind kind, const MaskParams& params, const ModelConfig& cfg,
                       const TriangularLattice* lat = nullptr);

// Convenience factories used by tests and the runner.
ModelConfig clean_grid_config(double B, int M, int grid_N);
ModelConfig lattice_config(double B, double a, int Nx_sites, int Ny_rows, int grid_N);

}  // namespace hall::model
