#include "hall/transport.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "hall/stats.hpp"

namespace hall::transport {

namespace {

using std::complex;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr complex<double> kI{0.0, 1.0};

// Level spacing at the Fermi cut must resolve, except for the empty and the
// full sea where the response sums are empty.
void check_cut(const spectral::SpectralData& spec, int N) {
  require(N >= 0 && N <= spec.dim(), Err::ConfigInvalid,
          "electron count outside [0, dim]");
  if (N == 0 || N == spec.dim()) return;
  double spacing = spec.eigenvalues(N) - spec.eigenvalues(N - 1);
  require(spacing >= 1e-12, Err::DegenerateFermiCut,
          "level spacing at the Fermi cut below 1e-12: " + std::to_string(spacing));
}

Eigen::MatrixXcd to_eigenbasis(const spectral::SpectralData& spec,
                               const Eigen::MatrixXcd& op) {
  return spec.eigenvectors.adjoint() * op * spec.eigenvectors;
}

// P_s in the eigenbasis: residues of the contour representation leave only
// the (filled,empty) and (empty,filled) blocks, each divided by the energy
// difference E_filled - E_empty to the first power.
Eigen::MatrixXcd residue_blocks(const Eigen::VectorXd& evals, const Eigen::MatrixXcd& V,
                                int N) {
  int d = static_cast<int>(evals.size());
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m < N; ++m)
    for (int n = N; n < d; ++n) {
      double de = evals(m) - evals(n);
      P(m, n) = V(m, n) / de;
      P(n, m) = V(n, m) / de;
    }
  return P;
}

struct CommutatorTrace {
  complex<double> inside;
  complex<double> total;
};

// Tr P_F [P_x, P_y], optionally also restricted to a grid-basis diagonal
// mask.  The commutator is formed as A - B with A = P_x P_y and B = P_y P_x,
// so swapping the velocity arguments reproduces the exact negation.
CommutatorTrace commutator_trace(const spectral::SpectralData& spec,
                                 const Eigen::MatrixXcd& v_x, const Eigen::MatrixXcd& v_y,
                                 int N, const Eigen::ArrayXd* mask) {
  Eigen::MatrixXcd Vx = to_eigenbasis(spec, v_x);
  Eigen::MatrixXcd Vy = to_eigenbasis(spec, v_y);
  Eigen::MatrixXcd Px = residue_blocks(spec.eigenvalues, Vx, N);
  Eigen::MatrixXcd Py = residue_blocks(spec.eigenvalues, Vy, N);
  Eigen::MatrixXcd comm = Px * Py - Py * Px;
  comm.bottomRows(spec.dim() - N).setZero();  // P_F from the left
  CommutatorTrace out;
  KahanSum tot_re, tot_im;
  for (int m = 0; m < N; ++m) {
    tot_re.add(comm(m, m).real());
    tot_im.add(comm(m, m).imag());
  }
  out.total = {tot_re.value(), tot_im.value()};
  if (mask != nullptr) {
    Eigen::MatrixXcd grid = spec.eigenvectors * comm * spec.eigenvectors.adjoint();
    KahanSum in_re, in_im;
    for (int g = 0; g < grid.rows(); ++g) {
      in_re.add((*mask)(g) * grid(g, g).real());
      in_im.add((*mask)(g) * grid(g, g).imag());
    }
    out.inside = {in_re.value(), in_im.value()};
  }
  return out;
}

double box_tol(double h) { return 1e-9 * h; }

// Half-open membership in probe-centered coordinates (see TraceRegion).
bool in_box(double dx, double dy, double wx, double wy, double tx, double ty) {
  return -wx / 2 - tx <= dx && dx < wx / 2 - tx && -wy / 2 - ty <= dy && dy < wy / 2 - ty;
}

// Diagonal of the vortex unitary: phase of the eps-cell center containing
// each grid point, with the offset from the probe wrapped to the minimum
// image so the phase field is carried along when the probe moves.
Eigen::VectorXcd vortex_diag(const model::ModelConfig& cfg, Vec2 a, double eps1,
                             double eps2) {
  int dim = cfg.grid_Nx * cfg.grid_Ny;
  Eigen::VectorXcd U(dim);
  for (int g = 0; g < dim; ++g) {
    Vec2 r = ops::grid_point(cfg, g);
    double cx = (std::floor(r.x / eps1) + 0.5) * eps1;
    double cy = (std::floor(r.y / eps2) + 0.5) * eps2;
    double theta = std::atan2(min_image(cy - a.y, cfg.Ly), min_image(cx - a.x, cfg.Lx));
    U(g) = std::exp(kI * theta);
  }
  return U;
}

// Σ_g mask(g)·Re/Im of the diagonal, compensated.
complex<double> masked_diagonal_sum(const Eigen::MatrixXcd& K, const Eigen::ArrayXd& mask) {
  KahanSum re, im;
  for (int g = 0; g < K.rows(); ++g) {
    re.add(mask(g) * K(g, g).real());
    im.add(mask(g) * K(g, g).imag());
  }
  return {re.value(), im.value()};
}

complex<double> full_diagonal_sum(const Eigen::MatrixXcd& K) {
  KahanSum re, im;
  for (int g = 0; g < K.rows(); ++g) {
    re.add(K(g, g).real());
    im.add(K(g, g).imag());
  }
  return {re.value(), im.value()};
}

void require_grid(const model::ModelConfig& cfg) {
  require(cfg.grid_Nx >= 1 && cfg.grid_Ny >= 1, Err::ConfigInvalid,
          "transport trace regions need a configured grid");
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Kubo: return "kubo";
    case Method::Commutator: return "commutator";
    case Method::ChernMarker: return "chern_marker";
    case Method::RelativeIndex: return "relative_index";
    case Method::SwitchIndex: return "switch_index";
    case Method::Drive: return "drive";
  }
  return "unknown";
}

ConductanceResult kubo_sigma_xy(const spectral::SpectralData& spec,
                                const ops::OperatorMatrix& v_x,
                                const ops::OperatorMatrix& v_y, int N, double area) {
  require(area > 0.0, Err::ConfigInvalid, "kubo_sigma_xy needs a positive area");
  check_cut(spec, N);
  ConductanceResult out;
  out.method = Method::Kubo;
  if (N == 0 || N == spec.dim()) {
    out.diagnostics["imag_residual"] = 0.0;
    return out;
  }
  Eigen::MatrixXcd Vx = to_eigenbasis(spec, v_x.mat);
  Eigen::MatrixXcd Vy = to_eigenbasis(spec, v_y.mat);
  KahanSum re, im;
  for (int m = 0; m < N; ++m)
    for (int n = N; n < spec.dim(); ++n) {
      double de = spec.eigenvalues(m) - spec.eigenvalues(n);
      complex<double> term =
          (Vx(m, n) * Vy(n, m) - Vy(m, n) * Vx(n, m)) / (de * de);
      re.add(term.real());
      im.add(term.imag());
    }
  complex<double> sigma = kTwoPi * (-kI / area) * complex<double>{re.value(), im.value()};
  out.value = sigma.real();
  out.diagnostics["imag_residual"] = std::abs(sigma.imag());
  return out;
}

ConductanceResult commutator_sigma_xy(const spectral::SpectralData& spec,
                                      const ops::OperatorMatrix& v_x,
                                      const ops::OperatorMatrix& v_y, int N, double area) {
  require(area > 0.0, Err::ConfigInvalid, "commutator_sigma_xy needs a positive area");
  check_cut(spec, N);
  ConductanceResult out;
  out.method = Method::Commutator;
  if (N == 0 || N == spec.dim()) {
    out.diagnostics["imag_residual"] = 0.0;
    return out;
  }
  complex<double> tr = commutator_trace(spec, v_x.mat, v_y.mat, N, nullptr).total;
  complex<double> sigma = kTwoPi * (-kI / area) * tr;
  out.value = sigma.real();
  out.diagnostics["imag_residual"] = std::abs(sigma.imag());
  return out;
}

std::pair<ConductanceResult, ConductanceResult> sigma_xy_split(
    const spectral::SpectralData& spec, const ops::OperatorMatrix& v_x,
    const ops::OperatorMatrix& v_y, int N, double area, const TraceRegion& region) {
  require(area > 0.0, Err::ConfigInvalid, "sigma_xy_split needs a positive area");
  require(v_x.basis == ops::OperatorMatrix::Basis::Grid &&
              v_y.basis == ops::OperatorMatrix::Basis::Grid,
          Err::ConfigInvalid, "sigma_xy_split needs grid-basis velocity operators");
  require(region.weights.size() == spec.dim(), Err::ConfigInvalid,
          "region mask length does not match the operator dimension");
  check_cut(spec, N);
  ConductanceResult in, outp;
  in.method = outp.method = Method::Commutator;
  in.region = region;
  if (N == 0 || N == spec.dim()) return {in, outp};
  CommutatorTrace tr = commutator_trace(spec, v_x.mat, v_y.mat, N, &region.weights);
  complex<double> pref = kTwoPi * (-kI / area);
  complex<double> s_in = pref * tr.inside;
  complex<double> s_tot = pref * tr.total;
  in.value = s_in.real();
  in.diagnostics["imag_residual"] = std::abs(s_in.imag());
  outp.value = s_tot.real() - s_in.real();
  outp.diagnostics["imag_residual"] = std::abs(s_tot.imag() - s_in.imag());
  outp.diagnostics["sigma_total"] = s_tot.real();
  return {in, outp};
}

TraceRegion region_box(const model::ModelConfig& cfg, double cx, double cy, double wx,
                       double wy, double min_seam_distance) {
  require_grid(cfg);
  require(wx > 0.0 && wy > 0.0 && wx <= cfg.Lx && wy <= cfg.Ly, Err::ConfigInvalid,
          "box widths must be positive and fit in the torus");
  TraceRegion r;
  r.center_x = cx;
  r.center_y = cy;
  r.width_x = wx;
  r.width_y = wy;
  double dx_seam = std::abs(min_image(cx, cfg.Lx)) - wx / 2;
  double dy_seam = std::abs(min_image(cy, cfg.Ly)) - wy / 2;
  r.seam_distance = std::min(dx_seam, dy_seam);
  double tiny = 1e-9 * std::min(cfg.hx(), cfg.hy());
  require(r.seam_distance > tiny && r.seam_distance + tiny >= min_seam_distance,
          Err::RegionTouchesSeam,
          "trace region touches the torus seam or violates the required margin");
  int dim = cfg.grid_Nx * cfg.grid_Ny;
  r.weights = Eigen::ArrayXd::Zero(dim);
  double tx = box_tol(cfg.hx()), ty = box_tol(cfg.hy());
  for (int g = 0; g < dim; ++g) {
    Vec2 p = ops::grid_point(cfg, g);
    double dx = min_image(p.x - cx, cfg.Lx);
    double dy = min_image(p.y - cy, cfg.Ly);
    if (in_box(dx, dy, wx, wy, tx, ty)) {
      r.weights(g) = 1.0;
      ++r.sites;
    }
  }
  require(r.sites > 0, Err::ConfigInvalid, "trace region contains no grid points");
  r.area = static_cast<double>(r.sites) * cfg.hx() * cfg.hy();
  return r;
}

double boundary_margin(double L, double a, double kappa) {
  require(L > 0.0 && a > 0.0 && kappa > 0.5 && kappa < 1.0, Err::ConfigInvalid,
          "boundary_margin needs L, a > 0 and kappa in (1/2, 1)");
  return a * std::pow(L / a, kappa);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> position_operators(
    const model::ModelConfig& cfg, double cx, double cy) {
  require_grid(cfg);
  int dim = cfg.grid_Nx * cfg.grid_Ny;
  Eigen::VectorXd X(dim), Y(dim);
  for (int g = 0; g < dim; ++g) {
    Vec2 p = ops::grid_point(cfg, g);
    X(g) = min_image(p.x - cx, cfg.Lx);
    Y(g) = min_image(p.y - cy, cfg.Ly);
  }
  return {X, Y};
}

ConductanceResult chern_marker(const Eigen::MatrixXcd& P_F, const TraceRegion& omega,
                               const Eigen::VectorXd& x_op, const Eigen::VectorXd& y_op,
                               double area_omega) {
  require(area_omega > 0.0, Err::ConfigInvalid, "chern_marker needs a positive area");
  require(omega.weights.size() == P_F.rows() && x_op.size() == P_F.rows() &&
              y_op.size() == P_F.rows(),
          Err::ConfigInvalid, "chern_marker operand dimensions disagree");
  require(omega.seam_distance > 0.0, Err::RegionTouchesSeam,
          "chern_marker region touches the torus seam");
  // [[P,x],[P,y]] with diagonal positions: Cs = P D - D P.
  Eigen::VectorXcd xc = x_op.cast<complex<double>>();
  Eigen::VectorXcd yc = y_op.cast<complex<double>>();
  Eigen::MatrixXcd Cx = P_F * xc.asDiagonal();
  Cx.noalias() -= xc.asDiagonal() * P_F;
  Eigen::MatrixXcd Cy = P_F * yc.asDiagonal();
  Cy.noalias() -= yc.asDiagonal() * P_F;
  Eigen::MatrixXcd K = P_F * (Cx * Cy - Cy * Cx);
  complex<double> tr = masked_diagonal_sum(K, omega.weights);
  complex<double> val = kTwoPi * kI / area_omega * tr;
  ConductanceResult out;
  out.method = Method::ChernMarker;
  out.value = val.real();
  out.region = omega;
  out.diagnostics["imag_residual"] = std::abs(val.imag());
  out.diagnostics["sites"] = static_cast<double>(omega.sites);
  return out;
}

RelativeIndexResult relative_index(const model::ModelConfig& cfg,
                                   const Eigen::MatrixXcd& P_F, const IndexProbe& probe,
                                   int probe_average) {
  require_grid(cfg);
  require(P_F.rows() == cfg.grid_Nx * cfg.grid_Ny, Err::ConfigInvalid,
          "relative_index needs a grid-basis projection");
  require(probe_average >= 1 && probe_average % 2 == 1, Err::ConfigInvalid,
          "probe_average must be odd (an n×n block of probes)");
  double eps1 = probe.eps1 > 0.0 ? probe.eps1 : cfg.hx();
  double eps2 = probe.eps2 > 0.0 ? probe.eps2 : cfg.hy();
  require(std::abs(std::remainder(probe.a.x, eps1)) <= 1e-9 * eps1 &&
              std::abs(std::remainder(probe.a.y, eps2)) <= 1e-9 * eps2,
          Err::ConfigInvalid, "probe must sit on the eps-lattice");
  double radius = probe.truncation_radius > 0.0 ? probe.truncation_radius
                                                : std::min(cfg.Lx, cfg.Ly) / 4.0;

  RelativeIndexResult out;
  out.probes = static_cast<std::size_t>(probe_average) * probe_average;
  int half = probe_average / 2;
  KahanSum val_sum;
  double vmin = 0.0, vmax = 0.0;
  bool first = true;
  for (int di = -half; di <= half; ++di)
    for (int dj = -half; dj <= half; ++dj) {
      Vec2 a{probe.a.x + di * eps1, probe.a.y + dj * eps2};
      Eigen::VectorXcd U = vortex_diag(cfg, a, eps1, eps2);
      Eigen::MatrixXcd T = P_F - U.asDiagonal() * P_F * U.conjugate().asDiagonal();
      Eigen::MatrixXcd T3 = T * T * T;
      TraceRegion window = region_box(cfg, a.x, a.y, 2 * radius, 2 * radius);
      complex<double> tr = masked_diagonal_sum(T3, window.weights);
      if (first || tr.real() < vmin) vmin = tr.real();
      if (first || tr.real() > vmax) vmax = tr.real();
      first = false;
      val_sum.add(tr.real());
      out.imag_residual = std::max(out.imag_residual, std::abs(tr.imag()));
      out.full_trace = std::max(out.full_trace, std::abs(full_diagonal_sum(T3)));
    }
  out.value = val_sum.value() / static_cast<double>(out.probes);
  out.probe_spread = vmax - vmin;
  out.nearest_integer = static_cast<int>(std::llround(out.value));
  out.deviation = std::abs(out.value - out.nearest_integer);
  return out;
}

ConnesAreaResult connes_area_check(Vec2 u, Vec2 v, Vec2 w, double eps1, double eps2,
                                   double truncation_radius) {
  require(eps1 > 0.0 && eps2 > 0.0 && truncation_radius > 0.0, Err::ConfigInvalid,
          "connes_area_check needs positive cell sizes and radius");
  double minsep = std::min({norm(u - v), norm(v - w), norm(w - u)});
  require(minsep > 0.0, Err::ConfigInvalid, "u, v, w must be distinct");
  double cx = (u.x + v.x + w.x) / 3.0;
  double cy = (u.y + v.y + w.y) / 3.0;
  long p0 = static_cast<long>(std::floor((cx - truncation_radius) / eps1));
  long p1 = static_cast<long>(std::ceil((cx + truncation_radius) / eps1));
  long q0 = static_cast<long>(std::floor((cy - truncation_radius) / eps2));
  long q1 = static_cast<long>(std::ceil((cy + truncation_radius) / eps2));
  ConnesAreaResult out;
  KahanSum re, im;
  double r2 = truncation_radius * truncation_radius;
  for (long p = p0; p <= p1; ++p)
    for (long q = q0; q <= q1; ++q) {
      double a1 = static_cast<double>(p) * eps1;
      double a2 = static_cast<double>(q) * eps2;
      if ((a1 - cx) * (a1 - cx) + (a2 - cy) * (a2 - cy) > r2) continue;
      double tu = std::atan2(u.y - a2, u.x - a1);
      double tv = std::atan2(v.y - a2, v.x - a1);
      double tw = std::atan2(w.y - a2, w.x - a1);
      complex<double> t_uv = 1.0 - std::exp(kI * (tu - tv));
      complex<double> t_vw = 1.0 - std::exp(kI * (tv - tw));
      complex<double> t_wu = 1.0 - std::exp(kI * (tw - tu));
      complex<double> term = t_uv * t_vw * t_wu;
      re.add(term.real());
      im.add(term.imag());
      ++out.terms;
    }
  out.lattice_sum = {re.value(), im.value()};
  double cross_uvw = cross(v - u, w - u);
  out.closed_form = kTwoPi * kI / (eps1 * eps2) * cross_uvw;
  out.error = std::abs(out.lattice_sum - out.closed_form);
  return out;
}

ConductanceResult switch_index(const model::ModelConfig& cfg, const Eigen::MatrixXcd& P_F,
                               Vec2 a) {
  require_grid(cfg);
  int dim = cfg.grid_Nx * cfg.grid_Ny;
  require(P_F.rows() == dim, Err::ConfigInvalid,
          "switch_index needs a grid-basis projection");
  Eigen::VectorXcd l1(dim), l2(dim);
  for (int g = 0; g < dim; ++g) {
    Vec2 p = ops::grid_point(cfg, g);
    l1(g) = min_image(p.x - a.x, cfg.Lx) >= 0.0 ? 1.0 : 0.0;
    l2(g) = min_image(p.y - a.y, cfg.Ly) >= 0.0 ? 1.0 : 0.0;
  }
  Eigen::MatrixXcd C1 = P_F * l1.asDiagonal();
  C1.noalias() -= l1.asDiagonal() * P_F;
  Eigen::MatrixXcd C2 = P_F * l2.asDiagonal();
  C2.noalias() -= l2.asDiagonal() * P_F;
  Eigen::MatrixXcd K = P_F * (C1 * C2 - C2 * C1);
  TraceRegion window = region_box(cfg, a.x, a.y, cfg.Lx / 2, cfg.Ly / 2);
  complex<double> tr = masked_diagonal_sum(K, window.weights);
  complex<double> full = full_diagonal_sum(K);
  complex<double> val = kTwoPi * kI * tr;
  ConductanceResult out;
  out.method = Method::SwitchIndex;
  out.value = val.real();
  out.region = window;
  out.diagnostics["imag_residual"] = std::abs(val.imag());
  out.diagnostics["full_trace"] = std::abs(kTwoPi * full);
  return out;
}

AccelerationCoefficients acceleration_coefficients(const spectral::SpectralData& spec,
                                                   const ops::OperatorMatrix& v_x,
                                                   const ops::OperatorMatrix& v_y, int N,
                                                   double area) {
  require(area > 0.0, Err::ConfigInvalid,
          "acceleration_coefficients needs a positive area");
  check_cut(spec, N);
  AccelerationCoefficients out;
  if (N == 0 || N == spec.dim()) return out;
  Eigen::MatrixXcd Vx = to_eigenbasis(spec, v_x.mat);
  Eigen::MatrixXcd Vy = to_eigenbasis(spec, v_y.mat);
  Eigen::MatrixXcd Py = residue_blocks(spec.eigenvalues, Vy, N);
  // P_y P_F + P_F P_y in the eigenbasis: P_F zeroes columns/rows past N.
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(spec.dim(), spec.dim());
  S.leftCols(N) = Py.leftCols(N);
  S.topRows(N) += Py.topRows(N);
  complex<double> tx = (Vx * S).trace();
  complex<double> ty = (Vy * S).trace();
  complex<double> gxy = kTwoPi * tx / area;
  complex<double> gyy = kTwoPi * (static_cast<double>(N) + ty) / area;
  out.gamma_xy = gxy.real();
  out.gamma_yy = gyy.real();
  out.imag_residual = std::max(std::abs(gxy.imag()), std::abs(gyy.imag()));
  return out;
}

DriveResult drive_experiment(const model::ModelConfig& cfg,
                             const model::DisorderRealization* realization, int N,
                             const ops::DriveParams& drive) {
  drive.validate();
  require(drive.T * drive.eta >= 3.0, Err::ConfigInvalid,
          "switch-on too abrupt: need T*eta >= 3");
  require(N >= 1, Err::ConfigInvalid, "drive_experiment needs at least one state");
  double area = cfg.area();

  // Hop decomposition: H(alpha) = base + ph*Y + conj(ph)*Y†, ph = e^{-i α hy},
  // and v_y(alpha) = ph*(-i hy Y) + h.c.; only scalars change during the run.
  ops::HopParts parts = ops::build_hop_parts(cfg, realization);
  int dim = static_cast<int>(parts.diag.rows());
  require(N <= dim, Err::ConfigInvalid, "more states than grid dimensions");
  Eigen::MatrixXcd base = parts.diag + parts.xhop + parts.xhop.adjoint();
  const Eigen::MatrixXcd& Y = parts.yhop;
  Eigen::MatrixXcd Yd = Y.adjoint();
  Eigen::MatrixXcd Vx = -kI * parts.hx * parts.xhop;
  Vx += Vx.adjoint().eval();
  Eigen::MatrixXcd Vy1 = -kI * parts.hy * Y;  // forward half of v_y at alpha = 0

  auto H_at = [&](double alpha) -> Eigen::MatrixXcd {
    complex<double> ph = std::exp(-kI * alpha * parts.hy);
    return base + ph * Y + std::conj(ph) * Yd;
  };
  auto Vy_at = [&](double alpha) -> Eigen::MatrixXcd {
    complex<double> ph = std::exp(-kI * alpha * parts.hy);
    Eigen::MatrixXcd half = ph * Vy1;
    return half + half.adjoint().eval();
  };

  double alpha0 = ops::drive_alpha(-drive.T, drive);
  ops::OperatorMatrix h0;
  h0.mat = H_at(alpha0);
  h0.basis = ops::OperatorMatrix::Basis::Grid;
  h0.nx = parts.nx;
  h0.ny = parts.ny;
  h0.hx = parts.hx;
  h0.hy = parts.hy;
  h0.alpha = alpha0;
  spectral::SpectralData spec0 = spectral::eigensolve(h0);
  require(std::isfinite(spec0.eigenvalues(0)) && std::isfinite(spec0.eigenvalues(dim - 1)),
          Err::UnstableStep, "initial spectrum is not finite");

  DriveResult out;
  out.max_abs_energy =
      std::max(std::abs(spec0.eigenvalues(0)), std::abs(spec0.eigenvalues(dim - 1)));
  require(drive.dt * out.max_abs_energy <= 0.1, Err::ConfigInvalid,
          "time step too coarse: need dt*max|E| <= 0.1");

  Eigen::MatrixXcd psi = spec0.eigenvectors.leftCols(N);
  auto current = [&](const Eigen::MatrixXcd& states, double alpha, double& jx,
                     double& jy) {
    Eigen::MatrixXcd vy = Vy_at(alpha);
    KahanSum sx, sy;
    for (int m = 0; m < N; ++m) {
      sx.add((states.col(m).adjoint() * (Vx * states.col(m)))(0, 0).real());
      sy.add((states.col(m).adjoint() * (vy * states.col(m)))(0, 0).real());
    }
    jx = -sx.value() / area;
    jy = -sy.value() / area;
  };

  double j0x = 0.0, j0y = 0.0;
  current(psi, alpha0, j0x, j0y);

  long steps = std::lround((drive.T + drive.observe_T) / drive.dt);
  require(steps >= 1, Err::ConfigInvalid, "observation window shorter than one step");
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(dim, dim);
  std::vector<double> sx_series, sy_series;
  double t = -drive.T;
  for (long n = 0; n < steps; ++n) {
    double tm = t + drive.dt / 2;
    Eigen::MatrixXcd Hm = H_at(ops::drive_alpha(tm, drive));
    Eigen::MatrixXcd rhs = psi - (0.5 * kI * drive.dt) * (Hm * psi);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(I + (0.5 * kI * drive.dt) * Hm);
    psi = lu.solve(rhs);
    t = -drive.T + static_cast<double>(n + 1) * drive.dt;
    for (int m = 0; m < N; ++m) {
      double drift = std::abs(psi.col(m).norm() - 1.0);
      if (!std::isfinite(drift) || drift > 1e-8)
        fail(Err::UnstableStep, "propagation lost unitarity: norm drift " +
                                    std::to_string(drift) + " at t = " + std::to_string(t));
      if (drift > out.max_norm_drift) out.max_norm_drift = drift;
    }
    if (t >= -1e-12) {
      double alpha = ops::drive_alpha(t, drive);
      double jx = 0.0, jy = 0.0;
      current(psi, alpha, jx, jy);
      out.times.push_back(t);
      out.jx_ind.push_back(jx - j0x);
      out.jy_ind.push_back(jy - j0y);
      if (drive.F != 0.0) {
        sx_series.push_back(kTwoPi * (jx - j0x) / drive.F);
        sy_series.push_back(kTwoPi * (jy - j0y) / drive.F);
      }
    }
  }
  out.steps = static_cast<std::size_t>(steps);
  if (drive.F != 0.0 && out.times.size() >= 2) {
    LinearFit fx = fit_line(out.times, sx_series);
    LinearFit fy = fit_line(out.times, sy_series);
    out.sigma_xy = fx.intercept;
    out.sigma_yy = fy.intercept;
    out.drift_xy = fx.slope;
    out.drift_yy = fy.slope;
    KahanSum rx, ry;
    for (std::size_t k = 0; k < out.times.size(); ++k) {
      double ex = sx_series[k] - (fx.intercept + fx.slope * out.times[k]);
      double ey = sy_series[k] - (fy.intercept + fy.slope * out.times[k]);
      rx.add(ex * ex);
      ry.add(ey * ey);
    }
    out.rms_xy = std::sqrt(rx.value() / static_cast<double>(out.times.size()));
    out.rms_yy = std::sqrt(ry.value() / static_cast<double>(out.times.size()));
  }
  return out;
}

}  // namespace hall::transport
