#include "hall/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hall/rng.hpp"

namespace hall::loc {

namespace {

using cplx = std::complex<double>;

// Operator 2-norm (top singular value) via the Gram matrix of the thin side.
double spectral_norm(const Eigen::MatrixXcd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::MatrixXcd gram = (m.rows() >= m.cols()) ? Eigen::MatrixXcd(m.adjoint() * m)
                                                 : Eigen::MatrixXcd(m * m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, Err::ConvergenceFailure,
          "Gram eigensolve failed while taking a block norm");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

std::vector<int> mask_indices(const model::RegionMask& mask, int dim) {
  require(mask.domain == model::MaskDomain::Grid, Err::ConfigInvalid,
          "block norms need grid-domain masks");
  require(static_cast<int>(mask.indicator.size()) == dim, Err::ConfigInvalid,
          "mask length does not match the operator dimension");
  std::vector<int> idx;
  for (int g = 0; g < dim; ++g) {
    if (mask.indicator[static_cast<std::size_t>(g)]) idx.push_back(g);
  }
  require(!idx.empty(), Err::ConfigInvalid, "mask selects no grid points");
  return idx;
}

void check_shift(const Eigen::VectorXd& eigenvalues, cplx z) {
  if (z.imag() != 0.0) return;
  double dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < eigenvalues.size(); ++k) {
    dist = std::min(dist, std::abs(eigenvalues[k] - z.real()));
  }
  require(dist > 1e-12, Err::SingularShift,
          "real shift sits on the spectrum; move z off the eigenvalues");
}

// Columns of the eigenvector matrix scaled by 1/(λ_k − z); the resolvent is
// scaled * V†, so a masked block is scaled(rows A) * V(rows B)†.
Eigen::MatrixXcd scaled_eigenvectors(const spectral::SpectralData& data, cplx z) {
  Eigen::VectorXcd inv(data.dim());
  for (int k = 0; k < data.dim(); ++k) {
    inv[k] = 1.0 / (cplx(data.eigenvalues[k], 0.0) - z);
  }
  return data.eigenvectors * inv.asDiagonal();
}

double masked_norm(const Eigen::MatrixXcd& scaled, const Eigen::MatrixXcd& vectors,
                   const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXcd block =
      scaled(rows, Eigen::all) * vectors(cols, Eigen::all).adjoint();
  return spectral_norm(block);
}

// Inner ratio of the rate formula; also the energy shift the tilt term
// subtracts from the operator (β²‖∇ρ‖²/2 — the gradient norm cancels).
double rate_ratio(const CTParams& p) {
  double lower = p.E - p.E_minus;
  double denom = p.C0 * lower + 16.0 * (p.E_plus + p.C0_tilde) * (p.E_minus + p.C0_tilde);
  return p.C0 * (p.E_plus - p.E) * lower / denom;
}

struct StripSamples {
  std::vector<ProbePair> pairs;
  std::vector<double> distances;
};

StripSamples strips_one_magnetic_length(const model::ModelConfig& cfg,
                                        const std::vector<double>& gaps) {
  StripSamples s;
  s.pairs = strip_probe_pairs(cfg, 1.0 / std::sqrt(cfg.B), gaps);
  for (const ProbePair& pair : s.pairs) s.distances.push_back(pair.distance);
  return s;
}

}  // namespace

double CTParams::kappa() const {
  double lower = E - E_minus;
  double denom = C0 * lower + 16.0 * (E_plus + C0_tilde) * (E_minus + C0_tilde);
  return std::sqrt(C0 * lower / denom);
}

void CTParams::validate() const {
  require(E_minus < E && E < E_plus, Err::GapViolated,
          "probe energy must lie strictly inside the gap");
  require(C0 > 0.0 && C0_tilde > 0.0, Err::ConfigInvalid,
          "positivity constants must be positive");
  require(grad_rho_norm > 0.0, Err::ConfigInvalid,
          "weight-profile gradient bound must be positive");
  require(v_minus_norm >= 0.0, Err::ConfigInvalid,
          "negative-part bound cannot be negative");
  require(E_minus + C0_tilde > 0.0, Err::ConfigInvalid,
          "shift must move the lower gap edge strictly above zero");
  // Tilt budget: the shifted operator must stay positive after subtracting
  // the β²(∇ρ)²/2 tilt, whose size is exactly the rate ratio.
  require(C0_tilde - v_minus_norm - rate_ratio(*this) > 0.0, Err::ConfigInvalid,
          "tilt budget violated: increase C0_tilde or narrow the probe window");
  double k = kappa();
  require(k > 0.0 && k < 1.0, Err::ConfigInvalid, "derived kappa left (0,1)");
}

double combes_thomas_beta(const CTParams& p) {
  p.validate();
  return std::sqrt(2.0) / p.grad_rho_norm * std::sqrt(rate_ratio(p));
}

CTParams ct_params_from_gap(double e, double e_minus, double e_plus, double h_min,
                            double v_minus_norm) {
  CTParams p;
  p.E = e;
  p.E_minus = e_minus;
  p.E_plus = e_plus;
  p.grad_rho_norm = 1.0;
  p.v_minus_norm = v_minus_norm;
  // Shift by the negative part plus the remaining gap width: the tilt never
  // exceeds (E_plus − E), so the budget holds with 0.01 to spare.
  p.C0_tilde = v_minus_norm + (e_plus - e) + 0.01;
  // The tilted operator is bounded below by h_min − (E_plus − E), so this C0
  // keeps it positive after the C0_tilde shift.
  p.C0 = h_min + v_minus_norm + 0.01;
  p.validate();
  return p;
}

DecayFit fit_decay(const std::vector<double>& distances,
                   const std::vector<double>& log_norms) {
  require(distances.size() == log_norms.size(), Err::ConfigInvalid,
          "decay fit needs one ordinate per distance");
  require(distances.size() >= 4, Err::ConfigInvalid, "decay fit needs at least 4 probes");
  for (std::size_t i = 0; i + 1 < distances.size(); ++i) {
    require(distances[i] < distances[i + 1], Err::ConfigInvalid,
            "probe distances must be strictly increasing");
  }
  for (double v : log_norms) {
    require(std::isfinite(v), Err::ConfigInvalid,
            "decay fit ordinates must be finite (a block norm vanished?)");
  }
  LinearFit lf = fit_line(distances, log_norms);
  DecayFit fit;
  fit.distances = distances;
  fit.log_norms = log_norms;
  fit.rate = -lf.slope;
  fit.intercept = lf.intercept;
  fit.rate_stderr = lf.slope_stderr;
  fit.r2 = lf.r2;
  return fit;
}

double resolvent_block_norm(const spectral::SpectralData& data, cplx z,
                            const model::RegionMask& mask_a, const model::RegionMask& mask_b) {
  std::vector<int> rows = mask_indices(mask_a, data.dim());
  std::vector<int> cols = mask_indices(mask_b, data.dim());
  check_shift(data.eigenvalues, z);
  return masked_norm(scaled_eigenvectors(data, z), data.eigenvectors, rows, cols);
}

double operator_block_norm(const Eigen::MatrixXcd& op, const model::RegionMask& mask_a,
                           const model::RegionMask& mask_b) {
  require(op.rows() == op.cols(), Err::ConfigInvalid, "block norms expect a square operator");
  int dim = static_cast<int>(op.rows());
  std::vector<int> rows = mask_indices(mask_a, dim);
  std::vector<int> cols = mask_indices(mask_b, dim);
  return spectral_norm(op(rows, cols));
}

std::vector<ProbePair> strip_probe_pairs(const model::ModelConfig& cfg, double width,
                                         const std::vector<double>& gaps) {
  require(cfg.grid_Nx > 0 && cfg.grid_Ny > 0, Err::ConfigInvalid,
          "strip probes need a configured grid");
  require(width > 0.0, Err::ConfigInvalid, "strip width must be positive");
  require(gaps.size() >= 1, Err::ConfigInvalid, "supply at least one probe gap");
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    require(gaps[i] > 0.0, Err::ConfigInvalid, "probe gaps must be positive");
    if (i + 1 < gaps.size()) {
      require(gaps[i] < gaps[i + 1], Err::ConfigInvalid,
              "probe gaps must be strictly increasing");
    }
    require(gaps[i] <= 0.5 * (cfg.Lx - 2.0 * width) + 1e-12, Err::ConfigInvalid,
            "probe separation exceeds the seam-free half-period");
  }

  std::vector<ProbePair> pairs;
  for (double gap : gaps) {
    model::MaskParams pa;
    pa.x0 = 0.0;
    pa.y0 = 0.0;
    pa.x1 = width;
    pa.y1 = cfg.Ly;
    model::MaskParams pb = pa;
    pb.x0 = width + gap;
    pb.x1 = 2.0 * width + gap;

    ProbePair pair;
    pair.a = model::region_mask(model::MaskKind::Rectangle, pa, cfg);
    pair.b = model::region_mask(model::MaskKind::Rectangle, pb, cfg);

    // Exact minimum torus distance between the two included point sets; the
    // grid snaps strip edges, so this — not the nominal gap — is the fit
    // abscissa.
    std::vector<Vec2> pts_a, pts_b;
    int dim = cfg.grid_Nx * cfg.grid_Ny;
    for (int g = 0; g < dim; ++g) {
      if (pair.a.indicator[static_cast<std::size_t>(g)])
        pts_a.push_back(ops::grid_point(cfg, g));
      if (pair.b.indicator[static_cast<std::size_t>(g)])
        pts_b.push_back(ops::grid_point(cfg, g));
    }
    require(!pts_a.empty() && !pts_b.empty(), Err::ConfigInvalid,
            "strip selects no grid points; widen it past one grid step");
    double dist = std::numeric_limits<double>::infinity();
    for (const Vec2& qa : pts_a) {
      for (const Vec2& qb : pts_b) {
        dist = std::min(dist, torus_dist(qa, qb, cfg.Lx, cfg.Ly));
      }
    }
    require(dist > 0.0, Err::ConfigInvalid, "probe strips overlap");
    pair.distance = dist;
    pairs.push_back(std::move(pair));
  }
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    require(pairs[i].distance < pairs[i + 1].distance, Err::ConfigInvalid,
            "probe gaps snap to identical grid separations; space them by a grid step");
  }
  return pairs;
}

DecayFit operator_block_decay(const Eigen::MatrixXcd& op, const std::vector<ProbePair>& pairs) {
  std::vector<double> distances, logs;
  for (const ProbePair& pair : pairs) {
    distances.push_back(pair.distance);
    logs.push_back(std::log(operator_block_norm(op, pair.a, pair.b)));
  }
  return fit_decay(distances, logs);
}

DecayFit gap_decay_fit(const spectral::SpectralData& data, double e,
                       const std::vector<ProbePair>& pairs, double min_half_gap) {
  require(min_half_gap > 0.0, Err::ConfigInvalid, "gap margin must be positive");
  double below = -std::numeric_limits<double>::infinity();
  double above = std::numeric_limits<double>::infinity();
  for (int k = 0; k < data.dim(); ++k) {
    double ev = data.eigenvalues[k];
    if (ev < e) below = std::max(below, ev);
    if (ev > e) above = std::min(above, ev);
  }
  require(std::isfinite(below) && std::isfinite(above), Err::NotInGap,
          "energy lies past the edge of the spectrum, not inside a gap");
  require(e - below >= min_half_gap && above - e >= min_half_gap, Err::NotInGap,
          "spectrum within the gap margin of the probe energy");

  Eigen::MatrixXcd scaled = scaled_eigenvectors(data, cplx(e, 0.0));
  std::vector<double> distances, logs;
  for (const ProbePair& pair : pairs) {
    std::vector<int> rows = mask_indices(pair.a, data.dim());
    std::vector<int> cols = mask_indices(pair.b, data.dim());
    distances.push_back(pair.distance);
    logs.push_back(std::log(masked_norm(scaled, data.eigenvectors, rows, cols)));
  }
  return fit_decay(distances, logs);
}

MomentumBoundsReport momentum_resolvent_bounds(const ops::HopParts& parts, cplx z,
                                               const std::function<Vec2(Vec2)>& alpha_field) {
  require(static_cast<bool>(alpha_field), Err::ConfigInvalid,
          "momentum bounds need a vector field");
  const int dim = static_cast<int>(parts.diag.rows());
  require(dim > 0 && parts.nx > 0 && parts.ny > 0, Err::ConfigInvalid,
          "momentum bounds need assembled hop parts");

  // Reassemble the operator and the covariant momenta from the hop pieces:
  // π_s = −i(T_s − 1)/h_s with T_s = −2h_s²·(forward s-hops), so the kinetic
  // part equals (π_x†π_x + π_y†π_y)/2 identically.
  Eigen::MatrixXcd h = parts.diag + parts.xhop + parts.yhop;
  h += Eigen::MatrixXcd((parts.xhop + parts.yhop).adjoint());
  Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(dim, dim);
  Eigen::MatrixXcd pix =
      cplx(0.0, -1.0) / parts.hx * (-2.0 * parts.hx * parts.hx * parts.xhop - eye);
  Eigen::MatrixXcd piy =
      cplx(0.0, -1.0) / parts.hy * (-2.0 * parts.hy * parts.hy * parts.yhop - eye);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  require(es.info() == Eigen::Success, Err::ConvergenceFailure,
          "eigensolve failed while preparing the resolvent");
  check_shift(es.eigenvalues(), z);

  Eigen::VectorXcd inv(dim);
  double min_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k) {
    cplx d = cplx(es.eigenvalues()[k], 0.0) - z;
    inv[k] = 1.0 / d;
    min_dist = std::min(min_dist, std::abs(d));
  }
  Eigen::MatrixXcd resolvent =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();

  // Potential = on-site terms minus the kinetic diagonal; its negative part
  // feeds f = (|Re z| + ‖V⁻‖)·‖R‖.
  double kinetic_onsite = 1.0 / (parts.hx * parts.hx) + 1.0 / (parts.hy * parts.hy);
  double v_min = 0.0;
  for (int g = 0; g < dim; ++g) {
    v_min = std::min(v_min, parts.diag(g, g).real() - kinetic_onsite);
  }
  double neg_part = -v_min;

  Eigen::VectorXcd ax(dim), ay(dim);
  double max_ax = 0.0, max_ay = 0.0, max_mag = 0.0;
  for (int g = 0; g < dim; ++g) {
    int i = g % parts.nx;
    int j = g / parts.nx;
    Vec2 a = alpha_field(Vec2{i * parts.hx, j * parts.hy});
    ax[g] = a.x;
    ay[g] = a.y;
    max_ax = std::max(max_ax, std::abs(a.x));
    max_ay = std::max(max_ay, std::abs(a.y));
    max_mag = std::max(max_mag, std::hypot(a.x, a.y));
  }

  MomentumBoundsReport report;
  report.resolvent_norm = 1.0 / min_dist;
  report.f_value = (std::abs(z.real()) + neg_part) * report.resolvent_norm;
  double root = std::sqrt(report.resolvent_norm) * std::sqrt(1.0 + report.f_value);

  Eigen::MatrixXcd mult_after = ax.asDiagonal() * pix + ay.asDiagonal() * piy;
  Eigen::MatrixXcd diff_after = pix * ax.asDiagonal() + piy * ay.asDiagonal();

  report.grad_into_resolvent_lhs = spectral_norm(mult_after * resolvent);
  report.grad_into_resolvent_rhs = 2.0 * std::sqrt(2.0) * root * std::max(max_ax, max_ay);

  Eigen::MatrixXcd middle = resolvent * diff_after;
  report.momentum_sandwich_lhs =
      std::max(spectral_norm(pix * middle), spectral_norm(piy * middle));
  report.momentum_sandwich_rhs = 2.0 * max_mag * (1.0 + report.f_value);

  report.resolvent_into_grad_lhs = spectral_norm(middle);
  report.resolvent_into_grad_rhs = std::sqrt(2.0) * max_mag * root;
  return report;
}

const DecayFit& FractionalMomentFit::headline() const {
  require(!fits.empty() && fits.size() == epsilons.size(), Err::ConfigInvalid,
          "no fits recorded");
  std::size_t best = 0;
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    if (epsilons[i] < epsilons[best]) best = i;
  }
  return fits[best];
}

FractionalMomentFit fractional_moment_fit(const model::ModelConfig& cfg, double e_f, double s,
                                          const std::vector<double>& distances, int trials,
                                          std::uint64_t seed,
                                          const std::vector<double>& epsilons) {
  require(s > 0.0 && s < 1.0 / 3.0, Err::InvalidS,
          "fractional exponent must lie in (0, 1/3)");
  require(trials >= 1, Err::ConfigInvalid, "need at least one disorder trial");
  require(!epsilons.empty(), Err::ConfigInvalid, "supply a regularization list");
  for (double eps : epsilons) {
    require(eps > 0.0, Err::ConfigInvalid, "regularizations must be positive");
  }

  StripSamples strips = strips_one_magnetic_length(cfg, distances);
  const std::size_t n_pairs = strips.pairs.size();
  const int dim = cfg.grid_Nx * cfg.grid_Ny;
  std::vector<std::vector<int>> rows(n_pairs), cols(n_pairs);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    rows[p] = mask_indices(strips.pairs[p].a, dim);
    cols[p] = mask_indices(strips.pairs[p].b, dim);
  }

  std::vector<std::vector<KahanSum>> sums(epsilons.size(),
                                          std::vector<KahanSum>(n_pairs));
  std::vector<double> max_sample(epsilons.size(), 0.0);

  for (int t = 0; t < trials; ++t) {
    model::DisorderRealization omega = model::sample_disorder(cfg, trial_seed(seed, t));
    ops::OperatorMatrix h = ops::build_hamiltonian(cfg, &omega);
    spectral::SpectralData data = spectral::eigensolve(h);
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      Eigen::MatrixXcd scaled = scaled_eigenvectors(data, cplx(e_f, epsilons[e]));
      for (std::size_t p = 0; p < n_pairs; ++p) {
        double norm = masked_norm(scaled, data.eigenvectors, rows[p], cols[p]);
        double moment = std::pow(norm, s);
        sums[e][p].add(moment);
        max_sample[e] = std::max(max_sample[e], moment);
      }
    }
  }

  FractionalMomentFit result;
  result.s = s;
  result.epsilons = epsilons;
  result.max_sample = max_sample;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    std::vector<double> logs;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      logs.push_back(std::log(sums[e][p].value() / trials));
    }
    result.fits.push_back(fit_decay(strips.distances, logs));
  }
  return result;
}

DecayFit projection_decay_fit(const model::ModelConfig& cfg, int n_electrons,
                              const std::vector<double>& distances, int trials,
                              std::uint64_t seed) {
  require(trials >= 1, Err::ConfigInvalid, "need at least one disorder trial");
  StripSamples strips = strips_one_magnetic_length(cfg, distances);
  std::vector<KahanSum> sums(strips.pairs.size());

  for (int t = 0; t < trials; ++t) {
    model::DisorderRealization omega = model::sample_disorder(cfg, trial_seed(seed, t));
    ops::OperatorMatrix h = ops::build_hamiltonian(cfg, &omega);
    spectral::SpectralData data = spectral::eigensolve(h);
    spectral::FermiState fermi = spectral::fermi_projection(data, n_electrons, cfg.M);
    for (std::size_t p = 0; p < strips.pairs.size(); ++p) {
      sums[p].add(operator_block_norm(fermi.P_F, strips.pairs[p].a, strips.pairs[p].b));
    }
  }

  std::vector<double> logs;
  for (std::size_t p = 0; p < strips.pairs.size(); ++p) {
    logs.push_back(std::log(sums[p].value() / trials));
  }
  return fit_decay(strips.distances, logs);
}

}  // namespace hall::loc
