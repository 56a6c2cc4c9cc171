#include "hall/model.hpp"

#include <algorithm>
#include <cmath>

#include "hall/rng.hpp"

namespace hall::model {

namespace {
constexpr double kSqrt3 = std::numbers::sqrt3;
}

// --- DensitySpec ---

double DensitySpec::integral() const {
  switch (kind) {
    case DensityKind::Uniform:
    case DensityKind::Triangular:
      return 1.0;
    case DensityKind::Tabulated: {
      if (bins.empty()) return 0.0;
      double dx = (hi - lo) / static_cast<double>(bins.size());
      double s = 0.0;
      for (double v : bins) s += v * dx;
      return s;
    }
  }
  return 0.0;
}

double DensitySpec::sup_norm() const {
  double w = hi - lo;
  switch (kind) {
    case DensityKind::Uniform:
      return 1.0 / w;
    case DensityKind::Triangular:
      return 2.0 / w;
    case DensityKind::Tabulated: {
      double m = 0.0;
      for (double v : bins) m = std::max(m, v);
      return m;
    }
  }
  return 0.0;
}

double DensitySpec::mass(double a, double b) const {
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (b <= a) return 0.0;
  double w = hi - lo;
  switch (kind) {
    case DensityKind::Uniform:
      return (b - a) / w;
    case DensityKind::Triangular: {
      // cdf of the symmetric triangle on [lo, hi]
      auto cdf = [&](double x) {
        double t = (x - lo) / w;
        return t <= 0.5 ? 2.0 * t * t : 1.0 - 2.0 * (1.0 - t) * (1.0 - t);
      };
      return cdf(b) - cdf(a);
    }
    case DensityKind::Tabulated: {
      double dx = w / static_cast<double>(bins.size());
      double s = 0.0;
      for (std::size_t i = 0; i < bins.size(); ++i) {
        double x0 = lo + dx * static_cast<double>(i);
        double x1 = x0 + dx;
        double ov = std::min(b, x1) - std::max(a, x0);
        if (ov > 0.0) s += bins[i] * ov;
      }
      return s;
    }
  }
  return 0.0;
}

double DensitySpec::density(double x) const {
  if (x < lo || x > hi) return 0.0;
  double w = hi - lo;
  switch (kind) {
    case DensityKind::Uniform:
      return 1.0 / w;
    case DensityKind::Triangular: {
      double t = (x - lo) / w;
      return t <= 0.5 ? 4.0 * t / w : 4.0 * (1.0 - t) / w;
    }
    case DensityKind::Tabulated: {
      if (bins.empty()) return 0.0;
      auto i = static_cast<std::size_t>((x - lo) / w * static_cast<double>(bins.size()));
      if (i >= bins.size()) i = bins.size() - 1;  // x == hi
      return bins[i];
    }
  }
  return 0.0;
}

double DensitySpec::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0 - 1e-16);
  double w = hi - lo;
  switch (kind) {
    case DensityKind::Uniform:
      return lo + u * w;
    case DensityKind::Triangular:
      return u <= 0.5 ? lo + w * std::sqrt(u / 2.0) : hi - w * std::sqrt((1.0 - u) / 2.0);
    case DensityKind::Tabulated: {
      double total = integral();
      double target = u * total;
      double dx = w / static_cast<double>(bins.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < bins.size(); ++i) {
        double cell = bins[i] * dx;
        if (acc + cell >= target && cell > 0.0) {
          double frac = (target - acc) / cell;
          return lo + dx * (static_cast<double>(i) + frac);
        }
        acc += cell;
      }
      return hi;
    }
  }
  return lo;
}

// --- ModelConfig ---

void ModelConfig::validate() const {
  require(B >= 0.0, Err::ConfigInvalid, "B must be nonnegative");
  require(a > 0.0, Err::ConfigInvalid, "a must be positive");
  require(Lx > 0.0 && Ly > 0.0, Err::ConfigInvalid, "torus sides must be positive");
  if (B == 0.0) {
    // zero-field configs are legal (Laplacian limit); no flux to quantize
    require(M == 0, Err::ConfigInvalid, "B = 0 requires M = 0");
  } else {
    require(M >= 1, Err::FluxTooSmall, "flux integer M must be >= 1");
    double flux = B * Lx * Ly;
    require(std::abs(flux - kTwoPi * M) <= 1e-9 * kTwoPi * M, Err::ConfigInvalid,
            "flux quantization Lx*Ly = 2πM/B violated");
  }
  double lo_w = kSqrt3 * a / 3.0, hi_w = kSqrt3 * a / 2.0;
  require(r_u > lo_w && r_u < hi_w, Err::ConfigInvalid,
          "bump radius r_u must lie in (√3a/3, √3a/2)");
  require(u_amp > 0.0 && u_0 > 0.0 && u_0 <= u_amp, Err::ConfigInvalid,
          "bump floor must satisfy 0 < u_0 <= u_amp");
  require(lambda_minus >= 0.0 && lambda_plus >= 0.0, Err::ConfigInvalid,
          "occupation thresholds must be nonnegative");
  require(lambda_min <= lambda_max, Err::ConfigInvalid, "lambda_min > lambda_max");
  require(g_spec.lo >= lambda_min - 1e-12 && g_spec.hi <= lambda_max + 1e-12, Err::ConfigInvalid,
          "coupling density support exceeds [lambda_min, lambda_max]");
  require(std::abs(g_spec.integral() - 1.0) <= 1e-9, Err::ConfigInvalid,
          "coupling density must be normalized to 1");
  require(g_spec.mass(-lambda_minus, lambda_plus) > 0.5, Err::ConfigInvalid,
          "occupation probability ∫_{-λ-}^{λ+} g must exceed 1/2");
  if (grid_Nx > 0 || grid_Ny > 0) {
    require(grid_Nx >= 4 && grid_Ny >= 4, Err::ConfigInvalid, "grid must be at least 4x4");
    double h = std::max(hx(), hy());
    require(B * h * h < kTwoPi, Err::ConfigInvalid,
            "grid spacing violates sub-flux-quantum condition B*h^2 < 2π");
  }
  require(n_max >= 1, Err::ConfigInvalid, "n_max must be >= 1");
}

// --- torus adjustment ---

TorusAdjustment adjust_torus(double Lx_P, double Ly_P, double B) {
  require(Lx_P > 0.0 && Ly_P > 0.0 && B > 0.0, Err::ConfigInvalid,
          "adjust_torus needs positive Lx, Ly, B");
  double x = B * Lx_P * Ly_P / kTwoPi;
  int M = static_cast<int>(std::floor(x + 1e-9));
  require(M >= 1, Err::FluxTooSmall, "B*Lx*Ly < 2π: torus holds no flux quantum");
  TorusAdjustment adj;
  adj.Lx = Lx_P;
  adj.M = M;
  adj.Ly = kTwoPi * M / (B * Lx_P);
  adj.dLy = Ly_P - adj.Ly;
  if (std::abs(adj.dLy) < 1e-12 * Ly_P) adj.dLy = 0.0;
  return adj;
}

// --- lattice ---

TriangularLattice build_lattice(const ModelConfig& cfg) {
  TriangularLattice lat;
  lat.a = cfg.a;
  lat.Lx = cfg.Lx;
  lat.Ly = cfg.Ly;
  double nx = cfg.Lx / cfg.a;
  int Nx = static_cast<int>(std::lround(nx));
  require(Nx >= 1 && std::abs(nx - Nx) <= 1e-9 * std::max(1.0, nx), Err::NonCommensurate,
          "Lx is not a positive integer multiple of a");
  double row_ideal = kSqrt3 * cfg.a / 2.0;
  int Ny = static_cast<int>(std::lround(cfg.Ly / row_ideal));
  double dLy_max = kTwoPi / (cfg.B * cfg.Lx);
  require(Ny >= 1 && std::abs(cfg.Ly - Ny * row_ideal) <= dLy_max + 1e-9, Err::NonCommensurate,
          "Ly is not within one δLy of an integer number of lattice rows");
  require(Ny % 2 == 0, Err::NonCommensurate,
          "row count must be even: rows are sheared by a/2, so only an even "
          "stack closes on the rectangular torus");
  lat.Nx = Nx;
  lat.Ny = Ny;
  lat.row_height = cfg.Ly / Ny;
  lat.cell_area = cfg.a * lat.row_height;
  lat.positions.resize(static_cast<std::size_t>(Nx) * Ny);
  for (int n = 0; n < Ny; ++n)
    for (int m = 0; m < Nx; ++m) {
      double x = wrap((m + 0.5 * n) * cfg.a, cfg.Lx);
      double y = n * lat.row_height;
      lat.positions[static_cast<std::size_t>(lat.index(m, n))] = {x, y};
    }
  return lat;
}

// --- disorder ---

DisorderRealization sample_disorder(const ModelConfig& cfg, const TriangularLattice& lat,
                                    std::uint64_t seed) {
  DisorderRealization real;
  real.seed = seed;
  real.couplings.resize(static_cast<std::size_t>(lat.size()));
  std::mt19937_64 rng(splitmix64(seed));
  for (auto& lambda : real.couplings) {
    double v = cfg.g_spec.quantile(uniform01(rng));
    lambda = std::clamp(v, cfg.lambda_min, cfg.lambda_max);
  }
  return real;
}

DisorderRealization sample_disorder(const ModelConfig& cfg, std::uint64_t seed) {
  return sample_disorder(cfg, build_lattice(cfg), seed);
}

// --- bump and potential ---

double bump_value(const ModelConfig& cfg, double dist) {
  if (dist >= cfg.r_u) return 0.0;
  double cell_r = kSqrt3 * cfg.a / 3.0;
  switch (cfg.bump_profile) {
    case BumpProfile::CosineCap: {
      double c = std::cos(std::numbers::pi * dist / (2.0 * cfg.r_u));
      double v = cfg.u_amp * c * c;
      // floor on the dual hexagon cell, per the bump contract
      if (dist <= cell_r) v = std::max(v, cfg.u_0);
      return v;
    }
    case BumpProfile::PlateauCap: {
      if (dist <= cell_r) return cfg.u_amp;
      return cfg.u_amp * (cfg.r_u - dist) / (cfg.r_u - cell_r);
    }
  }
  return 0.0;
}

std::vector<double> evaluate_potential(const ModelConfig& cfg, const TriangularLattice& lat,
                                       const DisorderRealization& realization,
                                       const std::vector<Vec2>& points) {
  require(realization.couplings.size() == static_cast<std::size_t>(lat.size()),
          Err::ConfigInvalid, "disorder realization does not match lattice size");
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    double v = 0.0;
    for (int s = 0; s < lat.size(); ++s) {
      double d = torus_dist(points[p], lat.positions[static_cast<std::size_t>(s)], lat.Lx, lat.Ly);
      if (d < cfg.r_u) v += realization.couplings[static_cast<std::size_t>(s)] * bump_value(cfg, d);
    }
    out[p] = v;
  }
  return out;
}

void check_covering(const ModelConfig& cfg, const TriangularLattice& lat) {
  DisorderRealization ones;
  ones.couplings.assign(static_cast<std::size_t>(lat.size()), 1.0);
  int px = std::max(4 * lat.Nx, 8);
  int py = std::max(4 * lat.Ny, 8);
  std::vector<Vec2> probes;
  probes.reserve(static_cast<std::size_t>(px) * py);
  for (int j = 0; j < py; ++j)
    for (int i = 0; i < px; ++i)
      probes.push_back({(i + 0.5) * lat.Lx / px, (j + 0.5) * lat.Ly / py});
  auto vals = evaluate_potential(cfg, lat, ones, probes);
  double mn = *std::min_element(vals.begin(), vals.end());
  require(mn >= cfg.u_0 - 1e-12, Err::CoveringViolated,
          "unit-coupling potential drops below u_0 on the probe grid");
}

// --- region masks ---

namespace {

void fill_parallelogram(std::vector<std::uint8_t>& ind, const TriangularLattice& lat, int m0,
                        int n0, int ell, int ell_p) {
  int hm = (ell - 1) / 2, hn = (ell_p - 1) / 2;
  int center = lat.index(m0, n0);
  for (int s = 0; s < lat.size(); ++s) {
    auto [dm, dn] = lat.axial_delta(s, center);
    if (std::abs(dm) <= hm && std::abs(dn) <= hn) ind[static_cast<std::size_t>(s)] = 1;
  }
}

}  // namespace

RegionMask region_mask(MaskKind kind, const MaskParams& params, const ModelConfig& cfg,
                       const TriangularLattice* lat) {
  RegionMask mask;
  mask.kind = kind;
  mask.meta = params;
  switch (kind) {
    case MaskKind::Parallelogram:
    case MaskKind::Annulus: {
      require(lat != nullptr, Err::ConfigInvalid, "site masks need a lattice");
      require(params.ell % 2 == 1 && params.ell_p % 2 == 1, Err::EvenScale,
              "parallelogram spans must be odd");
      int outer = (kind == MaskKind::Annulus) ? 3 : 1;
      require(outer * params.ell <= lat->Nx && outer * params.ell_p <= lat->Ny,
              Err::ConfigInvalid, "mask does not fit in the lattice");
      mask.domain = MaskDomain::Sites;
      mask.indicator.assign(static_cast<std::size_t>(lat->size()), 0);
      fill_parallelogram(mask.indicator, *lat, params.m0, params.n0, outer * params.ell,
                         outer * params.ell_p);
      if (kind == MaskKind::Annulus) {
        std::vector<std::uint8_t> inner(static_cast<std::size_t>(lat->size()), 0);
        fill_parallelogram(inner, *lat, params.m0, params.n0, params.ell, params.ell_p);
        for (std::size_t i = 0; i < mask.indicator.size(); ++i)
          if (inner[i]) mask.indicator[i] = 0;
      }
      return mask;
    }
    case MaskKind::Rectangle: {
      require(cfg.grid_Nx >= 1 && cfg.grid_Ny >= 1, Err::ConfigInvalid,
              "grid masks need a configured grid");
      mask.domain = MaskDomain::Grid;
      mask.indicator.assign(static_cast<std::size_t>(cfg.grid_Nx) * cfg.grid_Ny, 0);
      for (int j = 0; j < cfg.grid_Ny; ++j)
        for (int i = 0; i < cfg.grid_Nx; ++i) {
          double x = i * cfg.hx(), y = j * cfg.hy();
          if (x >= params.x0 && x < params.x1 && y >= params.y0 && y < params.y1)
            mask.indicator[static_cast<std::size_t>(j) * cfg.grid_Nx + i] = 1;
        }
      return mask;
    }
    case MaskKind::HalfplaneSwitch: {
      require(cfg.grid_Nx >= 1 && cfg.grid_Ny >= 1, Err::ConfigInvalid,
              "grid masks need a configured grid");
      require(params.axis == 1 || params.axis == 2, Err::ConfigInvalid, "switch axis must be 1 or 2");
      mask.domain = MaskDomain::Grid;
      mask.indicator.assign(static_cast<std::size_t>(cfg.grid_Nx) * cfg.grid_Ny, 0);
      for (int j = 0; j < cfg.grid_Ny; ++j)
        for (int i = 0; i < cfg.grid_Nx; ++i) {
          double x = i * cfg.hx(), y = j * cfg.hy();
          double d = (params.axis == 1) ? min_image(x - params.a_loc.x, cfg.Lx)
                                        : min_image(y - params.a_loc.y, cfg.Ly);
          if (d >= 0.0) mask.indicator[static_cast<std::size_t>(j) * cfg.grid_Nx + i] = 1;
        }
      return mask;
    }
    case MaskKind::Ribbon:
      fail(Err::ConfigInvalid, "ribbon masks are produced by ribbon_from_circuit");
    case MaskKind::Custom:
      mask.domain = MaskDomain::Sites;
      return mask;
  }
  fail(Err::ConfigInvalid, "unknown mask kind");
}

// --- factories ---

ModelConfig clean_grid_config(double B, int M, int grid_N) {
  ModelConfig cfg;
  cfg.B = B;
  cfg.M = M;
  cfg.Lx = cfg.Ly = std::sqrt(kTwoPi * M / B);
  cfg.a = cfg.Lx / 8.0;
  cfg.r_u = 0.7 * cfg.a;
  cfg.u_amp = 0.5;
  cfg.u_0 = 0.05;
  cfg.grid_Nx = cfg.grid_Ny = grid_N;
  cfg.g_spec = DensitySpec{DensityKind::Uniform, -1.0, 1.0, {}};
  cfg.lambda_min = -1.0;
  cfg.lambda_max = 1.0;
  cfg.lambda_minus = 1.0;
  cfg.lambda_plus = 1.0;
  cfg.validate();
  return cfg;
}

ModelConfig lattice_config(double B, double a, int Nx_sites, int Ny_rows, int grid_N) {
  ModelConfig cfg;
  cfg.B = B;
  cfg.a = a;
  double Lx = Nx_sites * a;
  double Ly_P = Ny_rows * kSqrt3 * a / 2.0;
  auto adj = adjust_torus(Lx, Ly_P, B);
  cfg.Lx = adj.Lx;
  cfg.Ly = adj.Ly;
  cfg.M = adj.M;
  cfg.r_u = 0.7 * a;
  cfg.u_amp = 0.5;
  cfg.u_0 = 0.05;
  cfg.grid_Nx = cfg.grid_Ny = grid_N;
  cfg.g_spec = DensitySpec{DensityKind::Uniform, -1.0, 1.0, {}};
  cfg.lambda_min = -1.0;
  cfg.lambda_max = 1.0;
  cfg.lambda_minus = 1.0;
  cfg.lambda_plus = 1.0;
  cfg.validate();
  return cfg;
}

}  // namespace hall::model
