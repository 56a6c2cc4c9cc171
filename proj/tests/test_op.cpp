#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "hall/model.hpp"
#include "hall/op.hpp"

using namespace hall;
using ops::AssemblyOptions;
using ops::OperatorMatrix;
using cd = std::complex<double>;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Zero-field square torus: the operator degenerates to the discrete
// Laplacian, whose spectrum is known in closed form.
model::ModelConfig zero_field_cfg(int grid_n, double side) {
  model::ModelConfig cfg;
  cfg.B = 0.0;
  cfg.M = 0;
  cfg.Lx = cfg.Ly = side;
  cfg.a = 1.0;
  cfg.r_u = 0.7;
  cfg.grid_Nx = cfg.grid_Ny = grid_n;
  cfg.validate();
  return cfg;
}

// Disordered-capable config: commensurate impurity lattice plus grid.
model::ModelConfig disordered_cfg(int grid_n) {
  auto cfg = model::lattice_config(4.0, 1.0, 6, 6, grid_n);
  return cfg;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd eigenvalues_of(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  REQUIRE(es.info() == Eigen::Success);
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("zero-field spectrum matches the discrete Laplacian closed form") {
  auto cfg = zero_field_cfg(8, 4.0);
  auto h = ops::build_hamiltonian(cfg);
  REQUIRE(h.dim() == 64);

  double hg = cfg.hx();
  std::vector<double> expected;
  for (int m = 0; m < 8; ++m)
    for (int n = 0; n < 8; ++n)
      expected.push_back((2.0 * (1.0 - std::cos(kTwoPi * m / 8)) +
                          2.0 * (1.0 - std::cos(kTwoPi * n / 8))) /
                         (2.0 * hg * hg));
  std::sort(expected.begin(), expected.end());

  auto evals = eigenvalues_of(h.mat);
  for (int k = 0; k < 64; ++k) CHECK(evals[k] == doctest::Approx(expected[k]).epsilon(1e-10));
}

TEST_CASE("plane waves carry the lattice group velocity at zero field") {
  auto cfg = zero_field_cfg(8, 4.0);
  auto [vx, vy] = ops::velocity_operators(cfg);
  double hg = cfg.hx();
  for (int m : {1, 2, 3}) {
    double kx = kTwoPi * m / cfg.Lx;
    Eigen::VectorXcd psi(64);
    for (int g = 0; g < 64; ++g) {
      Vec2 r = ops::grid_point(cfg, g);
      psi[g] = std::polar(1.0 / 8.0, kx * r.x);
    }
    cd vxx = psi.dot(vx.mat * psi);
    cd vyy = psi.dot(vy.mat * psi);
    CHECK(vxx.real() == doctest::Approx(std::sin(kx * hg) / hg).epsilon(1e-12));
    CHECK(std::abs(vxx.imag()) < 1e-12);
    CHECK(std::abs(vyy) < 1e-12);
  }
}

TEST_CASE("every assembled operator is exactly Hermitian") {
  auto clean = model::clean_grid_config(1.0, 9, 16);
  auto h0 = ops::build_hamiltonian(clean);
  CHECK(max_abs(h0.mat - h0.mat.adjoint()) == 0.0);

  auto cfg = disordered_cfg(16);
  auto realization = model::sample_disorder(cfg, 42);
  auto hw = ops::build_hamiltonian(cfg, &realization);
  CHECK(max_abs(hw.mat - hw.mat.adjoint()) == 0.0);

  auto [vx, vy] = ops::velocity_operators(cfg, &realization);
  CHECK(max_abs(vx.mat - vx.mat.adjoint()) == 0.0);
  CHECK(max_abs(vy.mat - vy.mat.adjoint()) == 0.0);

  auto ht = ops::drive_hamiltonian(cfg, &realization, -3.0, {});
  CHECK(max_abs(ht.mat - ht.mat.adjoint()) == 0.0);
}

TEST_CASE("disorder enters only through the diagonal potential") {
  auto cfg = disordered_cfg(16);
  auto realization = model::sample_disorder(cfg, 7);
  auto h0 = ops::build_hamiltonian(cfg);
  auto hw = ops::build_hamiltonian(cfg, &realization);

  Eigen::MatrixXcd diff = hw.mat - h0.mat;
  auto lat = model::build_lattice(cfg);
  std::vector<Vec2> pts(hw.dim());
  for (int g = 0; g < hw.dim(); ++g) pts[g] = ops::grid_point(cfg, g);
  auto v = model::evaluate_potential(cfg, lat, realization, pts);

  for (int g = 0; g < hw.dim(); ++g) {
    CHECK(std::abs(diff(g, g).real() - v[g]) < 1e-10);
    CHECK(diff(g, g).imag() == 0.0);
  }
  diff.diagonal().setZero();
  CHECK(max_abs(diff) == 0.0);  // hopping phases untouched by disorder
}

TEST_CASE("lowest Landau level appears at omega_c/2 with M-fold degeneracy") {
  auto cfg = model::clean_grid_config(1.0, 9, 24);
  double bh2 = cfg.B * cfg.hx() * cfg.hy();
  REQUIRE(bh2 <= 0.15);

  auto h = ops::build_hamiltonian(cfg);
  auto evals = eigenvalues_of(h.mat);
  for (int k = 0; k < cfg.M; ++k) CHECK(std::abs(evals[k] - 0.5) <= 0.02 * 0.5);

  // The cluster really has M states: gap above dwarfs the internal spread.
  double spread = evals[cfg.M - 1] - evals[0];
  double gap = evals[cfg.M] - evals[cfg.M - 1];
  CHECK(gap > 10.0 * spread);
}

TEST_CASE("grids too coarse to resolve the flux density are rejected") {
  // B*h^2 between pi and 2*pi passes the config bound, but the per-plaquette
  // phase can no longer be told apart from its 2*pi complement.
  auto cfg = model::clean_grid_config(1.0, 9, 4);
  CHECK_THROWS_AS(ops::build_hamiltonian(cfg), Error);
  try {
    ops::build_hamiltonian(cfg);
  } catch (const Error& e) {
    CHECK(e.code() == Err::FluxMismatch);
  }
}

TEST_CASE("gradient shifts of the vector potential leave the spectrum fixed") {
  auto cfg = model::clean_grid_config(1.0, 9, 16);
  cfg.AP_spec.amplitude = 0.3;
  cfg.validate();

  auto phi = [&cfg](Vec2 r) {
    return 0.4 * std::sin(kTwoPi * r.x / cfg.Lx) * std::cos(2.0 * kTwoPi * r.y / cfg.Ly) -
           0.13 * std::cos(kTwoPi * r.y / cfg.Ly);
  };
  auto h = ops::build_hamiltonian(cfg);
  AssemblyOptions opt;
  opt.gauge_phi = phi;
  auto hg = ops::build_hamiltonian(cfg, nullptr, opt);

  // Unitary equivalence: conjugating by the local phase undoes the shift.
  Eigen::VectorXcd d(h.dim());
  for (int g = 0; g < h.dim(); ++g) d[g] = std::polar(1.0, -phi(ops::grid_point(cfg, g)));
  Eigen::MatrixXcd conj_h = d.asDiagonal() * h.mat * d.asDiagonal().inverse();
  CHECK(max_abs(conj_h - hg.mat) < 1e-12 * max_abs(h.mat));

  auto e0 = eigenvalues_of(h.mat);
  auto e1 = eigenvalues_of(hg.mat);
  CHECK((e1 - e0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("velocity operators are the exact twist derivatives") {
  auto cfg = model::clean_grid_config(1.0, 9, 16);
  cfg.AP_spec.amplitude = 0.2;
  auto [vx, vy] = ops::velocity_operators(cfg);

  double delta = 1e-3;
  auto at = [&](double kx, double ky) {
    AssemblyOptions opt;
    opt.kappa_x = kx;
    opt.kappa_y = ky;
    return ops::build_hamiltonian(cfg, nullptr, opt);
  };
  auto h0 = at(0, 0);
  auto hxp = at(delta, 0), hxm = at(-delta, 0);
  auto hyp = at(0, delta), hym = at(0, -delta);

  Eigen::MatrixXcd fd_vx = cfg.Lx * (hxp.mat - hxm.mat) / (2.0 * delta);
  Eigen::MatrixXcd fd_vy = cfg.Ly * (hyp.mat - hym.mat) / (2.0 * delta);
  CHECK(max_abs(fd_vx - vx.mat) < 1e-6);
  CHECK(max_abs(fd_vy - vy.mat) < 1e-6);

  // Second twist derivative against its closed form from the hop pieces.
  auto parts = ops::build_hop_parts(cfg);
  double sx = cfg.hx() / cfg.Lx;
  Eigen::MatrixXcd d2 = -sx * sx * (parts.xhop + parts.xhop.adjoint());
  Eigen::MatrixXcd fd2 = (hxp.mat - 2.0 * h0.mat + hxm.mat) / (delta * delta);
  CHECK(max_abs(fd2 - d2) < 1e-6);
}

TEST_CASE("velocity matches the position commutator away from the seam") {
  auto cfg = model::clean_grid_config(1.0, 9, 16);
  auto h = ops::build_hamiltonian(cfg);
  auto [vx, vy] = ops::velocity_operators(cfg);

  Eigen::VectorXcd ydiag(h.dim());
  for (int g = 0; g < h.dim(); ++g) ydiag[g] = ops::grid_point(cfg, g).y;
  Eigen::MatrixXcd commutator =
      cd{0.0, 1.0} * (h.mat * ydiag.asDiagonal() - ydiag.asDiagonal() * h.mat);

  // i[H, y] equals v_y except on hops that cross the y-seam, so it agrees
  // exactly on states supported away from the boundary rows.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(h.dim());
  for (int j = 3; j < 13; ++j)
    for (int i = 0; i < 16; ++i) psi[j * 16 + i] = cd{gauss(rng), gauss(rng)};
  psi.normalize();
  CHECK(((commutator - vy.mat) * psi).norm() < 1e-8);
}

TEST_CASE("hop decomposition reassembles the Hamiltonian for any drive value") {
  auto cfg = disordered_cfg(16);
  auto realization = model::sample_disorder(cfg, 3);
  auto parts = ops::build_hop_parts(cfg, &realization);

  for (double alpha : {0.0, 0.37, -1.2}) {
    AssemblyOptions opt;
    opt.alpha = alpha;
    auto h = ops::build_hamiltonian(cfg, &realization, opt);
    cd phase = std::polar(1.0, -alpha * parts.hy);
    Eigen::MatrixXcd rebuilt = parts.diag + parts.xhop + phase * parts.yhop;
    rebuilt += (parts.xhop + phase * parts.yhop).adjoint().eval();
    CHECK(max_abs(rebuilt - h.mat) < 1e-12);
  }

  // Velocities from the same pieces.
  auto [vx, vy] = ops::velocity_operators(cfg, &realization);
  Eigen::MatrixXcd vx_parts = cd{0.0, -parts.hx} * parts.xhop;
  vx_parts += vx_parts.adjoint().eval();
  Eigen::MatrixXcd vy_parts = cd{0.0, -parts.hy} * parts.yhop;
  vy_parts += vy_parts.adjoint().eval();
  CHECK(max_abs(vx_parts - vx.mat) < 1e-15);
  CHECK(max_abs(vy_parts - vy.mat) < 1e-15);
}

TEST_CASE("full-period magnetic translations act as the boundary condition demands") {
  auto cfg = model::clean_grid_config(1.0, 9, 16);
  auto h = ops::build_hamiltonian(cfg);
  auto tx = ops::magnetic_translation(cfg, {cfg.Lx, 0.0});
  auto ty = ops::magnetic_translation(cfg, {0.0, cfg.Ly});
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(h.dim(), h.dim());

  for (const auto* t : {&tx, &ty}) {
    CHECK(max_abs(t->mat * t->mat.adjoint() - id) < 1e-12);          // unitary
    double comm = (t->mat * h.mat - h.mat * t->mat).norm() / h.mat.norm();
    CHECK(comm <= 1e-10);                                            // symmetry
    CHECK(max_abs(t->mat - id) < 1e-12);  // single-valued wavefunctions
  }
  // Full-period translations commute outright: the e^{2πiM} exchange phase
  // is trivial precisely because the flux is quantized.
  CHECK(max_abs(tx.mat * ty.mat - ty.mat * tx.mat) < 1e-12);

  CHECK_THROWS_AS(ops::magnetic_translation(cfg, {cfg.Lx / 2, 0.0}), Error);
  try {
    ops::magnetic_translation(cfg, {cfg.Lx, cfg.Ly});
  } catch (const Error& e) {
    CHECK(e.code() == Err::UnsupportedShift);
  }
}

TEST_CASE("vortex phases are unit modulus and obey the chord bound") {
  auto cfg = model::clean_grid_config(1.0, 9, 16);
  Vec2 a{cfg.Lx / 2 + 0.3 * cfg.hx(), cfg.Ly / 2 + 0.17 * cfg.hy()};

  auto u = ops::vortex_unitary(cfg, a, 0.0);
  for (int g = 0; g < u.size(); ++g) CHECK(std::abs(std::abs(u[g]) - 1.0) < 1e-14);

  // |e^{iθ(u)} - e^{iθ(v)}| <= 2|u-v| / |u-a| for every ordered pair.
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(u.size()) - 1);
  for (int trial = 0; trial < 400; ++trial) {
    int gu = pick(rng), gv = pick(rng);
    Vec2 ru = ops::grid_point(cfg, gu), rv = ops::grid_point(cfg, gv);
    double lhs = std::abs(u[gu] - u[gv]);
    CHECK(lhs <= 2.0 * norm(ru - rv) / norm(ru - a) + 1e-12);
  }
}

TEST_CASE("vortex phase is frozen on cells and converges to the point limit") {
  auto cfg = model::clean_grid_config(1.0, 9, 16);
  Vec2 a{cfg.Lx / 2 + 0.3 * cfg.hx(), cfg.Ly / 2 + 0.17 * cfg.hy()};

  // Neighboring grid points inside one eps-cell share the frozen phase.
  double eps = cfg.Lx / 5.0;
  auto u_cell = ops::vortex_unitary(cfg, a, eps);
  CHECK(u_cell[0 * 16 + 1] == u_cell[1 * 16 + 2]);
  CHECK(u_cell[0 * 16 + 0] == u_cell[1 * 16 + 1]);

  auto u_point = ops::vortex_unitary(cfg, a, 0.0);
  for (double e : {1e-5, 1e-7}) {
    auto u_eps = ops::vortex_unitary(cfg, a, e * cfg.Lx);
    double dev = (u_eps - u_point).cwiseAbs().maxCoeff();
    CHECK(dev < 40.0 * e * cfg.Lx);  // 2·(cell diameter)/min|r-a| with margin
  }
}

TEST_CASE("switch-on drive ramps the field continuously to its plateau") {
  ops::DriveParams drive;
  drive.F = 0.02;
  drive.eta = 0.4;

  CHECK(ops::drive_alpha(0.0, drive) == 0.0);
  CHECK(ops::drive_alpha(2.5, drive) == -drive.F * 2.5);
  CHECK(ops::drive_field(0.0, drive) == drive.F);
  CHECK(ops::drive_field(1e-12, drive) == drive.F);
  CHECK(ops::drive_field(-1e-12, drive) == doctest::Approx(drive.F).epsilon(1e-9));
  CHECK(ops::drive_field(3.0, drive) == drive.F);

  // E_y = -dα/dt on both branches.
  for (double t : {-2.0, -0.5, 0.7}) {
    double d = 1e-6;
    double fd = -(ops::drive_alpha(t + d, drive) - ops::drive_alpha(t - d, drive)) / (2 * d);
    CHECK(fd == doctest::Approx(ops::drive_field(t, drive)).epsilon(1e-6));
  }

  ops::DriveParams bad = drive;
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("driven Hamiltonian equals the undriven one at time zero") {
  auto cfg = disordered_cfg(16);
  auto realization = model::sample_disorder(cfg, 9);
  auto h0 = ops::build_hamiltonian(cfg, &realization);
  auto ht0 = ops::drive_hamiltonian(cfg, &realization, 0.0, {});
  CHECK(max_abs(ht0.mat - h0.mat) == 0.0);

  // At t < 0 only the y-hops move, by the scalar phase e^{-i α(t) hy}.
  ops::DriveParams drive;
  double t = -1.0;
  auto ht = ops::drive_hamiltonian(cfg, &realization, t, drive);
  auto parts = ops::build_hop_parts(cfg, &realization);
  cd phase = std::polar(1.0, -ops::drive_alpha(t, drive) * parts.hy);
  Eigen::MatrixXcd rebuilt = parts.diag + parts.xhop + phase * parts.yhop;
  rebuilt += (parts.xhop + phase * parts.yhop).adjoint().eval();
  CHECK(max_abs(rebuilt - ht.mat) < 1e-12);
}

TEST_CASE("band basis is orthonormal and reproduces the clean spectrum") {
  auto cfg = model::clean_grid_config(1.0, 9, 24);
  auto h0 = ops::build_hamiltonian(cfg);
  auto basis = ops::landau_basis(cfg, h0, 2);

  REQUIRE(basis.C.cols() == 18);
  Eigen::MatrixXcd gram = basis.C.adjoint() * basis.C;
  CHECK(max_abs(gram - Eigen::MatrixXcd::Identity(18, 18)) < 1e-12);

  for (int k = 0; k < 9; ++k) CHECK(std::abs(basis.clean_evals[k] - 0.5) < 0.02 * 0.5);
  for (int k = 9; k < 18; ++k) CHECK(std::abs(basis.clean_evals[k] - 1.5) < 0.05 * 1.5);

  // Projecting the clean operator onto its own bands is exactly diagonal.
  auto projected = ops::project_to_landau_bands(cfg, h0, h0, 2);
  REQUIRE(projected.dim() == 18);  // n_max * M
  CHECK(projected.basis == OperatorMatrix::Basis::LandauProjected);
  Eigen::MatrixXcd expect = basis.clean_evals.cast<cd>().asDiagonal();
  CHECK(max_abs(projected.mat - expect) < 1e-10);
}

TEST_CASE("weak disorder moves projected levels by less than its sup norm") {
  auto cfg = disordered_cfg(24);
  cfg.u_amp = 0.02;
  cfg.u_0 = 0.002;
  cfg.validate();
  auto realization = model::sample_disorder(cfg, 17);

  auto h0 = ops::build_hamiltonian(cfg);
  auto hw = ops::build_hamiltonian(cfg, &realization);
  auto projected = ops::project_to_landau_bands(cfg, h0, hw, 2);
  auto basis = ops::landau_basis(cfg, h0, 2);

  double v_sup = max_abs(hw.mat - h0.mat);  // disorder is diagonal
  auto proj_evals = eigenvalues_of(projected.mat);
  for (int k = 0; k < proj_evals.size(); ++k)
    CHECK(std::abs(proj_evals[k] - basis.clean_evals[k]) <= v_sup + 1e-12);

  // With a gap-sized cushion the projection agrees with the full operator.
  auto full_evals = eigenvalues_of(hw.mat);
  double worst = 0.0;
  for (int k = 0; k < proj_evals.size(); ++k)
    worst = std::max(worst, std::abs(proj_evals[k] - full_evals[k]));
  CHECK(worst < 5e-3);
}

TEST_CASE("band projection refuses unresolved or oversized band sets") {
  auto cfg = disordered_cfg(16);

  // A heavily disordered matrix passed off as clean: bands smear together.
  cfg.u_amp = 3.0;
  cfg.validate();
  auto realization = model::sample_disorder(cfg, 29);
  auto hw = ops::build_hamiltonian(cfg, &realization);
  try {
    ops::landau_basis(cfg, hw, 2);
    FAIL("smeared spectrum must not pass the band-resolution gate");
  } catch (const Error& e) {
    CHECK(e.code() == Err::BandsNotResolved);
  }

  // Requesting more band states than grid dimensions is a config error.
  auto clean = ops::build_hamiltonian(cfg);
  CHECK_THROWS_AS(ops::landau_basis(cfg, clean, 1 + 256 / cfg.M), Error);
}
