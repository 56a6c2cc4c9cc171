#include "hall/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hall/rng.hpp"

namespace hall::spectral {

namespace {

using cd = std::complex<double>;

// Grid points of a configured cfg, in operator index order.
std::vector<Vec2> grid_points(const model::ModelConfig& cfg) {
  std::vector<Vec2> pts(static_cast<std::size_t>(cfg.grid_Nx) * cfg.grid_Ny);
  for (int j = 0; j < cfg.grid_Ny; ++j)
    for (int i = 0; i < cfg.grid_Nx; ++i)
      pts[static_cast<std::size_t>(j) * cfg.grid_Nx + i] = {i * cfg.hx(), j * cfg.hy()};
  return pts;
}

// Diagonal of the single-site bump u_a as a multiplication operator.
Eigen::VectorXd bump_diagonal(const model::ModelConfig& cfg, Vec2 site_pos,
                              const std::vector<Vec2>& pts) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t g = 0; g < pts.size(); ++g)
    v[static_cast<Eigen::Index>(g)] =
        model::bump_value(cfg, torus_dist(pts[g], site_pos, cfg.Lx, cfg.Ly));
  return v;
}

// (H_0 + E_min)^{-2} from a full clean decomposition.
Eigen::MatrixXcd shifted_inverse_square(const SpectralData& spec, double e_min) {
  Eigen::VectorXd w = (spec.eigenvalues.array() + e_min).inverse().square();
  return spec.eigenvectors * w.asDiagonal() * spec.eigenvectors.adjoint();
}

int count_in_window(const Eigen::VectorXd& evals, double lo, double hi) {
  int c = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals[i] >= lo && evals[i] <= hi) ++c;
  return c;
}

}  // namespace

double WegnerParams::e_max(Interval delta) const {
  return std::max(std::abs(delta.lo + E_min), std::abs(delta.hi + E_min));
}

WegnerParams WegnerParams::from_config(const model::ModelConfig& cfg, double E_min) {
  require(E_min > cfg.V0_spec.v0_minus(), Err::ConfigInvalid,
          "resolvent shift E_min must exceed the negative background norm");
  WegnerParams p;
  p.E_min = E_min;
  p.U_min = cfg.u_0;
  p.moment = std::max(std::abs(cfg.g_spec.lo), std::abs(cfg.g_spec.hi));
  p.u_sup = cfg.u_amp;
  p.supp_area = std::numbers::pi * cfg.r_u * cfg.r_u;
  return p;
}

SpectralData eigensolve(const ops::OperatorMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.mat);
  require(es.info() == Eigen::Success, Err::ConvergenceFailure,
          "dense Hermitian eigensolver did not converge");
  SpectralData out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  Eigen::MatrixXcd r =
      h.mat * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
  out.residual = r.colwise().norm().maxCoeff();
  double scale = std::max(out.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
  require(out.residual <= 1e-10 * scale, Err::ConvergenceFailure,
          "eigen residual exceeds the accuracy contract");
  return out;
}

BandEdges band_edge_bounds(const model::ModelConfig& cfg, int n) {
  require(cfg.B > 0.0, Err::ConfigInvalid, "band edges need a magnetic field");
  require(n >= 0, Err::ConfigInvalid, "band index must be nonnegative");
  double ap = cfg.AP_spec.sup_norm();
  require(ap <= std::sqrt(cfg.omega_c()), Err::MonotoneViolated,
          "lower-edge bound needs the monotonicity condition ‖A_P‖ <= sqrt(omega_c)");
  double en = (n + 0.5) * cfg.omega_c();
  BandEdges be;
  be.upper = en + std::numbers::sqrt2 * ap * std::sqrt(en) + 0.5 * ap * ap +
             cfg.V0_spec.v0_plus();
  be.lower = en - std::numbers::sqrt2 * ap * std::sqrt(en) - cfg.V0_spec.v0_minus();
  return be;
}

bool gap_condition(const model::ModelConfig& cfg, int n) {
  require(cfg.B > 0.0, Err::ConfigInvalid, "gap condition needs a magnetic field");
  require(n >= 0, Err::ConfigInvalid, "band index must be nonnegative");
  double ap = cfg.AP_spec.sup_norm();
  double en = (n + 0.5) * cfg.omega_c();
  double en1 = (n + 1.5) * cfg.omega_c();
  double rhs = std::numbers::sqrt2 * ap * (std::sqrt(en1) + std::sqrt(en)) +
               0.5 * ap * ap + cfg.V0_spec.v0_plus() + cfg.V0_spec.v0_minus();
  return cfg.omega_c() > rhs;
}

WegnerTable wegner_scan(const std::vector<model::ModelConfig>& cfgs, double e_center,
                        const std::vector<double>& delta_e, int trials,
                        std::uint64_t seed) {
  require(!cfgs.empty() && !delta_e.empty(), Err::ConfigInvalid,
          "scan needs at least one config and one window width");
  require(trials >= 1, Err::ConfigInvalid, "scan needs at least one trial");
  for (double d : delta_e)
    require(d > 0.0, Err::ConfigInvalid, "window half-widths must be positive");

  WegnerTable table;
  table.delta_e = delta_e;
  table.mean_counts.resize(static_cast<Eigen::Index>(cfgs.size()),
                           static_cast<Eigen::Index>(delta_e.size()));

  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    const auto& cfg = cfgs[c];
    table.areas.push_back(cfg.area());
    auto clean = ops::build_hamiltonian(cfg);
    auto lat = model::build_lattice(cfg);
    auto pts = grid_points(cfg);

    std::vector<KahanSum> sums(delta_e.size());
    for (int t = 0; t < trials; ++t) {
      auto realization =
          model::sample_disorder(cfg, lat, trial_seed(trial_seed(seed, c), t));
      auto v = model::evaluate_potential(cfg, lat, realization, pts);
      Eigen::MatrixXcd h = clean.mat;
      for (std::size_t g = 0; g < v.size(); ++g)
        h(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g)) += v[g];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
      require(es.info() == Eigen::Success, Err::ConvergenceFailure,
              "eigensolver failed during the counting scan");
      for (std::size_t k = 0; k < delta_e.size(); ++k)
        sums[k].add(count_in_window(es.eigenvalues(), e_center - delta_e[k],
                                    e_center + delta_e[k]));
    }
    std::vector<double> means(delta_e.size());
    for (std::size_t k = 0; k < delta_e.size(); ++k) {
      means[k] = sums[k].value() / trials;
      table.mean_counts(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
          means[k];
    }
    table.slope_vs_delta.push_back(fit_through_origin(delta_e, means));
  }

  std::vector<double> slopes;
  for (const auto& f : table.slope_vs_delta) slopes.push_back(f.slope);
  table.slope_vs_area = fit_through_origin(table.areas, slopes);
  table.min_r2 = 1.0;
  for (const auto& f : table.slope_vs_delta) table.min_r2 = std::min(table.min_r2, f.r2);
  return table;
}

KotaniSimonResult kotani_simon_check(const model::ModelConfig& cfg,
                                     const model::DisorderRealization& realization,
                                     int site_a, Interval delta, int nodes, double tol,
                                     double g_scale) {
  require(nodes >= 2, Err::ConfigInvalid, "quadrature needs at least 2 nodes");
  require(delta.hi >= delta.lo, Err::ConfigInvalid, "empty interval is lo > hi");
  require(g_scale > 0.0, Err::ConfigInvalid, "density scale must be positive");
  auto lat = model::build_lattice(cfg);
  require(site_a >= 0 && site_a < static_cast<int>(lat.positions.size()),
          Err::ConfigInvalid, "site index out of range");
  require(realization.couplings.size() == lat.positions.size(), Err::ConfigInvalid,
          "realization does not match the lattice");

  auto pts = grid_points(cfg);
  Eigen::VectorXd v = bump_diagonal(cfg, lat.positions[static_cast<std::size_t>(site_a)], pts);
  Eigen::VectorXd v_half = v.cwiseSqrt();

  // Freeze every other coupling; the integration variable replaces λ_a.
  model::DisorderRealization frozen = realization;
  frozen.couplings[static_cast<std::size_t>(site_a)] = 0.0;
  auto base = ops::build_hamiltonian(cfg, &frozen);

  // Composite midpoint rule over supp g.  The integrand jumps whenever an
  // eigenvalue crosses an endpoint of Δ, so a low-order rule plus the
  // node-doubling comparison is the honest convergence gate.
  auto integrate = [&](int n) {
    double lo = cfg.g_spec.lo, w = cfg.g_spec.hi - cfg.g_spec.lo;
    double step = w / n;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(base.dim(), base.dim());
    for (int k = 0; k < n; ++k) {
      double lambda = lo + (k + 0.5) * step;
      double weight = g_scale * cfg.g_spec.density(lambda) * step;
      if (weight == 0.0) continue;
      Eigen::MatrixXcd h = base.mat;
      for (Eigen::Index g = 0; g < v.size(); ++g) h(g, g) += lambda * v[g];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
      require(es.info() == Eigen::Success, Err::ConvergenceFailure,
              "eigensolver failed at a quadrature node");
      std::vector<Eigen::Index> in;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (delta.contains(es.eigenvalues()[i])) in.push_back(i);
      if (in.empty()) continue;
      Eigen::MatrixXcd cols(base.dim(), static_cast<Eigen::Index>(in.size()));
      for (std::size_t i = 0; i < in.size(); ++i)
        cols.col(static_cast<Eigen::Index>(i)) =
            v_half.asDiagonal() * es.eigenvectors().col(in[i]);
      acc.noalias() += weight * (cols * cols.adjoint());
    }
    // The accumulated operator is Hermitian PSD: norm = top eigenvalue.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> en(acc, Eigen::EigenvaluesOnly);
    return en.eigenvalues().maxCoeff();
  };

  double coarse = integrate(nodes);
  double fine = integrate(2 * nodes);
  KotaniSimonResult out;
  out.bound = g_scale * cfg.g_spec.sup_norm() * delta.width();
  out.nodes_used = 2 * nodes;
  out.value = fine;
  require(std::abs(fine - coarse) <= tol * std::max(out.bound, 1e-12),
          Err::QuadratureUnresolved,
          "quadrature not converged: " + std::to_string(coarse) + " vs " +
              std::to_string(fine) + " at " + std::to_string(2 * nodes) + " nodes");
  return out;
}

K0Estimate estimate_K0_n0(const model::ModelConfig& cfg,
                          const std::vector<model::RegionMask>& omegas, double E_min) {
  require(E_min > cfg.V0_spec.v0_minus(), Err::ConfigInvalid,
          "resolvent shift E_min must exceed the negative background norm");
  require(omegas.size() >= 2, Err::ConfigInvalid, "need at least two regions to fit");

  auto clean = ops::build_hamiltonian(cfg);
  auto spec = eigensolve(clean);
  // Diagonal of (H_0+E_min)^{-2}: row norms of V·diag(1/(E+E_min)).
  Eigen::MatrixXcd w =
      spec.eigenvectors * (spec.eigenvalues.array() + E_min).inverse().matrix().asDiagonal();
  Eigen::VectorXd diag = w.rowwise().squaredNorm();

  K0Estimate est;
  std::vector<double> log_a, log_t;
  for (const auto& mask : omegas) {
    require(mask.domain == model::MaskDomain::Grid, Err::ConfigInvalid,
            "counting regions must be grid-domain masks");
    require(mask.indicator.size() == static_cast<std::size_t>(clean.dim()),
            Err::ConfigInvalid, "mask does not match the grid");
    double trace = 0.0;
    std::size_t count = 0;
    for (std::size_t g = 0; g < mask.indicator.size(); ++g)
      if (mask.indicator[g]) {
        trace += diag[static_cast<Eigen::Index>(g)];
        ++count;
      }
    require(count > 0 && trace > 0.0, Err::ConfigInvalid,
            "empty region in the scaling fit");
    double area = static_cast<double>(count) * cfg.hx() * cfg.hy();
    est.areas.push_back(area);
    est.traces.push_back(trace);
    log_a.push_back(std::log(area));
    log_t.push_back(std::log(trace));
  }
  auto fit = fit_line(log_a, log_t);
  est.n0 = fit.slope;
  est.K0 = std::exp(fit.intercept);
  for (std::size_t i = 0; i < log_a.size(); ++i)
    est.fit_residual = std::max(
        est.fit_residual, std::abs(log_t[i] - (fit.intercept + fit.slope * log_a[i])));
  return est;
}

UpsilonSummary upsilon_trace_sum(const model::ModelConfig& cfg, double E_min) {
  require(E_min > cfg.V0_spec.v0_minus(), Err::ConfigInvalid,
          "resolvent shift E_min must exceed the negative background norm");
  auto lat = model::build_lattice(cfg);
  auto n_sites = static_cast<int>(lat.positions.size());
  require(n_sites <= 256, Err::ConfigInvalid,
          "trace-norm sums are a desk-scale diagnostic; use <= 256 sites");

  auto spec = eigensolve(ops::build_hamiltonian(cfg));
  Eigen::MatrixXcd r2 = shifted_inverse_square(spec, E_min);
  auto pts = grid_points(cfg);

  // Per-site support: grid indices under the bump, with √u weights.
  std::vector<std::vector<Eigen::Index>> supp(n_sites);
  std::vector<std::vector<double>> wts(n_sites);
  for (int s = 0; s < n_sites; ++s) {
    auto v = bump_diagonal(cfg, lat.positions[static_cast<std::size_t>(s)], pts);
    for (Eigen::Index g = 0; g < v.size(); ++g)
      if (v[g] > 0.0) {
        supp[s].push_back(g);
        wts[s].push_back(std::sqrt(v[g]));
      }
    require(!supp[s].empty(), Err::ConfigInvalid,
            "bump support resolves to no grid points; grid too coarse");
  }

  UpsilonSummary out;
  out.norms.setZero(n_sites, n_sites);
  std::vector<double> dist_fit, log_fit;
  KahanSum total;
  for (int b = 0; b < n_sites; ++b) {
    for (int a = 0; a < n_sites; ++a) {
      Eigen::MatrixXcd block(static_cast<Eigen::Index>(supp[b].size()),
                             static_cast<Eigen::Index>(supp[a].size()));
      for (std::size_t i = 0; i < supp[b].size(); ++i)
        for (std::size_t j = 0; j < supp[a].size(); ++j)
          block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              wts[b][i] * r2(supp[b][i], supp[a][j]) * wts[a][j];
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
      double norm1 = svd.singularValues().sum();
      out.norms(b, a) = norm1;
      total.add(norm1);
      double d = torus_dist(lat.positions[static_cast<std::size_t>(b)],
                            lat.positions[static_cast<std::size_t>(a)], cfg.Lx, cfg.Ly);
      if (d > 2.0 * cfg.r_u && norm1 > 0.0) {
        dist_fit.push_back(d);
        log_fit.push_back(std::log(norm1));
      }
    }
  }
  out.total = total.value();
  if (dist_fit.size() >= 2) {
    out.decay_fit = fit_line(dist_fit, log_fit);
    out.alpha_hat = -out.decay_fit.slope;
  }
  return out;
}

double k3_bound(const WegnerParams& params, Interval delta) {
  require(params.K1.has_value(), Err::MissingConstant,
          "K1 must be supplied (calibrate with the trace-norm sums)");
  require(params.U_min > 0.0, Err::ConfigInvalid, "potential floor must be positive");
  double front = params.moment + params.e_max(delta) / params.U_min;
  return front * front * params.K0 * *params.K1 * params.u_sup *
         std::pow(params.supp_area, params.n0);
}

FermiState fermi_projection(const SpectralData& spec, int N, int M) {
  require(N >= 1 && N <= spec.dim(), Err::ConfigInvalid,
          "electron count must lie in [1, dim]");
  require(M >= 1, Err::ConfigInvalid, "filling factor needs the flux integer M");
  FermiState f;
  f.N = N;
  f.nu = static_cast<double>(N) / M;
  f.P_F = spec.eigenvectors.leftCols(N) * spec.eigenvectors.leftCols(N).adjoint();
  if (N < spec.dim()) {
    f.E_F = 0.5 * (spec.eigenvalues[N - 1] + spec.eigenvalues[N]);
    f.degenerate = (spec.eigenvalues[N] - spec.eigenvalues[N - 1]) < 1e-12;
  } else {
    double spacing = N >= 2 ? spec.eigenvalues[N - 1] - spec.eigenvalues[N - 2] : 1.0;
    f.E_F = spec.eigenvalues[N - 1] + 0.5 * std::max(spacing, 1e-12);
  }
  return f;
}

}  // namespace hall::spectral
