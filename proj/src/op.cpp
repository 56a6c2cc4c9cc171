#include "hall/op.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

namespace hall::ops {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

cd unit_phase(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Per-hop phase angles θ such that the forward hop amplitude is
// -1/(2h²)·e^{-iθ}, plus the on-site diagonal.  Index layout g = j*nx + i.
// The seam fold on the top-row y-hop is already absorbed into ty.
struct PhaseTables {
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  std::vector<double> tx;      // θ for (i,j) -> (i+1 mod nx, j)
  std::vector<double> ty;      // θ for (i,j) -> (i, j+1 mod ny)
  std::vector<double> onsite;  // 1/hx² + 1/hy² + V_0 + V_ω
};

double gauge_diff(const std::function<double(Vec2)>& phi, Vec2 to, Vec2 from) {
  return phi ? phi(to) - phi(from) : 0.0;
}

PhaseTables make_tables(const model::ModelConfig& cfg,
                        const model::DisorderRealization* realization,
                        const AssemblyOptions& opt) {
  cfg.validate();
  require(cfg.grid_Nx >= 4 && cfg.grid_Ny >= 4, Err::ConfigInvalid,
          "operator assembly requires a configured grid (grid_Nx, grid_Ny >= 4)");

  PhaseTables t;
  t.nx = cfg.grid_Nx;
  t.ny = cfg.grid_Ny;
  t.hx = cfg.hx();
  t.hy = cfg.hy();
  const int dim = t.nx * t.ny;
  t.tx.resize(dim);
  t.ty.resize(dim);
  t.onsite.assign(dim, 1.0 / (t.hx * t.hx) + 1.0 / (t.hy * t.hy));

  for (int j = 0; j < t.ny; ++j) {
    double y = j * t.hy;
    for (int i = 0; i < t.nx; ++i) {
      double x = i * t.hx;
      int g = j * t.nx + i;
      Vec2 here{x, y};
      t.onsite[g] += cfg.v0_at(here);

      // x-hop: A_x = -B·y + A_P,x, sampled at the midpoint (exact here since
      // A_P,x does not vary along x), plus the twist and any gauge shift.
      Vec2 xmid{x + 0.5 * t.hx, y};
      Vec2 xto{(i + 1 == t.nx) ? 0.0 : x + t.hx, y};
      t.tx[g] = t.hx * (-cfg.B * y + cfg.ap_at(xmid).x + opt.kappa_x / cfg.Lx) +
                gauge_diff(opt.gauge_phi, xto, here);

      // y-hop: A_y = A_P,y + alpha, same treatment.
      Vec2 ymid{x, y + 0.5 * t.hy};
      Vec2 yto{x, (j + 1 == t.ny) ? 0.0 : y + t.hy};
      t.ty[g] = t.hy * (cfg.ap_at(ymid).y + opt.alpha + opt.kappa_y / cfg.Ly) +
                gauge_diff(opt.gauge_phi, yto, here);

      // Crossing the y-seam costs the boundary phase of single-valued
      // magnetic wavefunctions, φ(x, y+Ly) = e^{+iB·Ly·x} φ(x,y); with it
      // every plaquette carries the same flux B·hx·hy, summing to 2πM.
      if (j + 1 == t.ny) t.ty[g] += cfg.B * cfg.Ly * x;
    }
  }

  if (realization != nullptr) {
    auto lat = model::build_lattice(cfg);
    std::vector<Vec2> pts(dim);
    for (int j = 0; j < t.ny; ++j)
      for (int i = 0; i < t.nx; ++i) pts[j * t.nx + i] = {i * t.hx, j * t.hy};
    auto v = model::evaluate_potential(cfg, lat, *realization, pts);
    for (int g = 0; g < dim; ++g) t.onsite[g] += v[g];
  }

  // Counterclockwise plaquette fluxes, each reduced to (-π, π], must sum to
  // -2πM (our hops carry e^{-i∫A·dl}, so positive B gives negative curl).
  double total = 0.0;
  for (int j = 0; j < t.ny; ++j) {
    for (int i = 0; i < t.nx; ++i) {
      int g = j * t.nx + i;
      int gx = j * t.nx + (i + 1) % t.nx;        // east neighbor
      int gy = ((j + 1) % t.ny) * t.nx + i;      // north neighbor
      double curl = (t.tx[gy] - t.tx[g]) - (t.ty[gx] - t.ty[g]);
      total += std::remainder(curl, kTwoPi);
    }
  }
  double expected = -kTwoPi * cfg.M;
  require(std::abs(total - expected) <= 1e-9 * std::max(1.0, kTwoPi * cfg.M),
          Err::FluxMismatch,
          "total plaquette flux " + std::to_string(-total) +
              " does not match 2πM = " + std::to_string(-expected) +
              " (grid too coarse for the flux density?)");
  return t;
}

void stamp_grid_meta(OperatorMatrix& op, const PhaseTables& t, const AssemblyOptions& opt) {
  op.basis = OperatorMatrix::Basis::Grid;
  op.nx = t.nx;
  op.ny = t.ny;
  op.hx = t.hx;
  op.hy = t.hy;
  op.kappa_x = opt.kappa_x;
  op.kappa_y = opt.kappa_y;
  op.alpha = opt.alpha;
}

int east(const PhaseTables& t, int g) {
  int i = g % t.nx, j = g / t.nx;
  return j * t.nx + (i + 1) % t.nx;
}

int north(const PhaseTables& t, int g) {
  int i = g % t.nx, j = g / t.nx;
  return ((j + 1) % t.ny) * t.nx + i;
}

}  // namespace

double drive_alpha(double t, const DriveParams& drive) {
  return t <= 0.0 ? -drive.F * t * std::exp(drive.eta * t) : -drive.F * t;
}

double drive_field(double t, const DriveParams& drive) {
  return t <= 0.0 ? drive.F * (1.0 + drive.eta * t) * std::exp(drive.eta * t) : drive.F;
}

Vec2 grid_point(const model::ModelConfig& cfg, int g) {
  int i = g % cfg.grid_Nx, j = g / cfg.grid_Nx;
  return {i * cfg.hx(), j * cfg.hy()};
}

OperatorMatrix build_hamiltonian(const model::ModelConfig& cfg,
                                 const model::DisorderRealization* realization,
                                 const AssemblyOptions& opt) {
  auto t = make_tables(cfg, realization, opt);
  const int dim = t.nx * t.ny;
  OperatorMatrix h;
  h.mat = Eigen::MatrixXcd::Zero(dim, dim);
  stamp_grid_meta(h, t, opt);
  double cx = -0.5 / (t.hx * t.hx), cy = -0.5 / (t.hy * t.hy);
  for (int g = 0; g < dim; ++g) {
    h.mat(g, g) = t.onsite[g];
    int ge = east(t, g), gn = north(t, g);
    cd ax = cx * unit_phase(-t.tx[g]);
    cd ay = cy * unit_phase(-t.ty[g]);
    h.mat(ge, g) += ax;
    h.mat(g, ge) += std::conj(ax);
    h.mat(gn, g) += ay;
    h.mat(g, gn) += std::conj(ay);
  }
  return h;
}

HopParts build_hop_parts(const model::ModelConfig& cfg,
                         const model::DisorderRealization* realization,
                         const AssemblyOptions& opt) {
  auto t = make_tables(cfg, realization, opt);
  const int dim = t.nx * t.ny;
  HopParts parts;
  parts.nx = t.nx;
  parts.ny = t.ny;
  parts.hx = t.hx;
  parts.hy = t.hy;
  parts.diag = Eigen::MatrixXcd::Zero(dim, dim);
  parts.xhop = Eigen::MatrixXcd::Zero(dim, dim);
  parts.yhop = Eigen::MatrixXcd::Zero(dim, dim);
  double cx = -0.5 / (t.hx * t.hx), cy = -0.5 / (t.hy * t.hy);
  for (int g = 0; g < dim; ++g) {
    parts.diag(g, g) = t.onsite[g];
    parts.xhop(east(t, g), g) = cx * unit_phase(-t.tx[g]);
    parts.yhop(north(t, g), g) = cy * unit_phase(-t.ty[g]);
  }
  return parts;
}

std::pair<OperatorMatrix, OperatorMatrix> velocity_operators(
    const model::ModelConfig& cfg, const model::DisorderRealization* realization,
    const AssemblyOptions& opt) {
  auto t = make_tables(cfg, realization, opt);
  const int dim = t.nx * t.ny;
  OperatorMatrix vx, vy;
  vx.mat = Eigen::MatrixXcd::Zero(dim, dim);
  vy.mat = Eigen::MatrixXcd::Zero(dim, dim);
  stamp_grid_meta(vx, t, opt);
  stamp_grid_meta(vy, t, opt);
  // v_s = ∂H/∂κ_s in physical units: the central covariant difference, with
  // matrix element +i/(2h) times the hop phase on the forward hop.
  cd ix{0.0, 1.0};
  for (int g = 0; g < dim; ++g) {
    cd ax = ix / (2.0 * t.hx) * unit_phase(-t.tx[g]);
    cd ay = ix / (2.0 * t.hy) * unit_phase(-t.ty[g]);
    int ge = east(t, g), gn = north(t, g);
    vx.mat(ge, g) += ax;
    vx.mat(g, ge) += std::conj(ax);
    vy.mat(gn, g) += ay;
    vy.mat(g, gn) += std::conj(ay);
  }
  return {std::move(vx), std::move(vy)};
}

OperatorMatrix magnetic_translation(const model::ModelConfig& cfg, Vec2 shift) {
  cfg.validate();
  require(cfg.grid_Nx >= 4 && cfg.grid_Ny >= 4, Err::ConfigInvalid,
          "magnetic translation requires a configured grid");
  const int nx = cfg.grid_Nx, ny = cfg.grid_Ny;
  const int dim = nx * ny;
  double tol_x = 1e-12 * cfg.Lx, tol_y = 1e-12 * cfg.Ly;
  bool full_x = std::abs(shift.x - cfg.Lx) <= tol_x && std::abs(shift.y) <= tol_y;
  bool full_y = std::abs(shift.x) <= tol_x && std::abs(shift.y - cfg.Ly) <= tol_y;
  require(full_x || full_y, Err::UnsupportedShift,
          "only the full-period shifts (Lx,0) and (0,Ly) act within the grid basis");

  // Represent the operator as (Tf)(g) = phase[g]·f(src[g]) and build it by
  // composing single-step translations, so the boundary folding is applied
  // once per seam crossing exactly as the wavefunction convention demands.
  std::vector<int> src(dim);
  std::vector<cd> phase(dim, cd{1.0, 0.0});
  for (int g = 0; g < dim; ++g) src[g] = g;

  auto compose_step = [&](auto&& step_src, auto&& step_phase) {
    std::vector<int> nsrc(dim);
    std::vector<cd> nphase(dim);
    for (int g = 0; g < dim; ++g) {
      int mid = step_src(g);
      nsrc[g] = src[mid];
      nphase[g] = step_phase(g) * phase[mid];
    }
    src.swap(nsrc);
    phase.swap(nphase);
  };

  if (full_x) {
    // Landau gauge A depends only on y, so x-translation is ordinary: each
    // step is the plain cyclic shift and the composition is the identity.
    for (int s = 0; s < nx; ++s)
      compose_step([&](int g) { int i = g % nx, j = g / nx; return j * nx + (i + nx - 1) % nx; },
                   [&](int) { return cd{1.0, 0.0}; });
  } else {
    // One step down in source space: (T1 f)(i,j) = f(i,j-1), and pulling row
    // -1 up to row ny-1 costs the boundary phase e^{-iB·Ly·x_i}.
    for (int s = 0; s < ny; ++s)
      compose_step(
          [&](int g) { int i = g % nx, j = g / nx; return ((j + ny - 1) % ny) * nx + i; },
          [&](int g) {
            int i = g % nx, j = g / nx;
            return j == 0 ? unit_phase(-cfg.B * cfg.Ly * i * cfg.hx()) : cd{1.0, 0.0};
          });
    // Compensating Landau-gauge phase that makes the translation magnetic.
    for (int g = 0; g < dim; ++g)
      phase[g] *= unit_phase(cfg.B * cfg.Ly * (g % nx) * cfg.hx());
  }

  OperatorMatrix t;
  t.mat = Eigen::MatrixXcd::Zero(dim, dim);
  t.basis = OperatorMatrix::Basis::Grid;
  t.nx = nx;
  t.ny = ny;
  t.hx = cfg.hx();
  t.hy = cfg.hy();
  for (int g = 0; g < dim; ++g) t.mat(g, src[g]) = phase[g];
  return t;
}

Eigen::VectorXcd vortex_unitary(const model::ModelConfig& cfg, Vec2 a, double eps) {
  cfg.validate();
  require(cfg.grid_Nx >= 4 && cfg.grid_Ny >= 4, Err::ConfigInvalid,
          "vortex unitary requires a configured grid");
  const int dim = cfg.grid_Nx * cfg.grid_Ny;
  Eigen::VectorXcd u(dim);
  for (int g = 0; g < dim; ++g) {
    Vec2 r = grid_point(cfg, g);
    if (eps > 0.0) {
      // Freeze the phase on eps-cells: evaluate at the cell center.
      r.x = (std::floor(r.x / eps) + 0.5) * eps;
      r.y = (std::floor(r.y / eps) + 0.5) * eps;
    }
    u[g] = unit_phase(std::atan2(r.y - a.y, r.x - a.x));
  }
  return u;
}

OperatorMatrix drive_hamiltonian(const model::ModelConfig& cfg,
                                 const model::DisorderRealization* realization,
                                 double t, const DriveParams& drive) {
  drive.validate();
  AssemblyOptions opt;
  opt.alpha = drive_alpha(t, drive);
  return build_hamiltonian(cfg, realization, opt);
}

LandauBasis landau_basis(const model::ModelConfig& cfg, const OperatorMatrix& clean_h,
                         int n_max) {
  require(clean_h.basis == OperatorMatrix::Basis::Grid, Err::ConfigInvalid,
          "band projection expects a grid-basis operator");
  require(n_max >= 1, Err::ConfigInvalid, "n_max must be >= 1");
  require(cfg.M >= 1, Err::FluxTooSmall, "band projection needs a positive flux integer");
  const int dim = clean_h.dim();
  const int m = n_max * cfg.M;
  require(m < dim, Err::ConfigInvalid, "band subspace must be a proper subspace of the grid");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(clean_h.mat);
  require(es.info() == Eigen::Success, Err::ConvergenceFailure,
          "eigensolver failed on the clean Hamiltonian");
  const auto& evals = es.eigenvalues();

  for (int k = 0; k < n_max; ++k) {
    double lo = evals[k * cfg.M];
    double hi = evals[k * cfg.M + cfg.M - 1];
    double gap = evals[(k + 1) * cfg.M] - hi;
    double spread = hi - lo;
    require(gap > 0.0 && gap >= 10.0 * spread, Err::BandsNotResolved,
            "band " + std::to_string(k) + " is not resolved: gap " + std::to_string(gap) +
                " < 10 x spread " + std::to_string(spread));
  }

  LandauBasis basis;
  basis.C = es.eigenvectors().leftCols(m);
  basis.clean_evals = evals.head(m);
  basis.n_max = n_max;
  basis.degeneracy = cfg.M;
  return basis;
}

OperatorMatrix project_operator(const LandauBasis& basis, const OperatorMatrix& op) {
  require(op.basis == OperatorMatrix::Basis::Grid, Err::ConfigInvalid,
          "projection expects a grid-basis operator");
  require(op.dim() == static_cast<int>(basis.C.rows()), Err::ConfigInvalid,
          "operator dimension does not match the band basis");
  OperatorMatrix out;
  out.mat = basis.C.adjoint() * op.mat * basis.C;
  out.basis = OperatorMatrix::Basis::LandauProjected;
  out.n_max = basis.n_max;
  out.degeneracy = basis.degeneracy;
  return out;
}

OperatorMatrix project_to_landau_bands(const model::ModelConfig& cfg,
                                       const OperatorMatrix& clean_h,
                                       const OperatorMatrix& h_omega, int n_max) {
  auto basis = landau_basis(cfg, clean_h, n_max);
  return project_operator(basis, h_omega);
}

}  // namespace hall::ops
