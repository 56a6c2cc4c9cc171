#include "hall/model.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"

using namespace hall;
using namespace hall::model;

namespace {

// A geometry-only config: 4x4 triangular lattice on an exactly commensurate
// torus (Ly = 4 rows of √3a/2), with B chosen so the flux is quantized.
ModelConfig four_by_four() {
  ModelConfig cfg;
  cfg.a = 1.0;
  cfg.Lx = 4.0;
  cfg.Ly = 2.0 * std::numbers::sqrt3;
  cfg.M = 4;
  cfg.B = kTwoPi * cfg.M / (cfg.Lx * cfg.Ly);
  cfg.grid_Nx = cfg.grid_Ny = 0;  // no grid needed for lattice-only tests
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("adjust_torus shrinks Ly to the nearest enclosed flux quantum") {
  auto adj = adjust_torus(10.0, 10.0, 1.0);
  CHECK(adj.M == 15);
  CHECK(adj.Ly == doctest::Approx(3.0 * std::numbers::pi).epsilon(1e-14));
  CHECK(adj.dLy == doctest::Approx(10.0 - 3.0 * std::numbers::pi).epsilon(1e-12));
  // postcondition: 0 <= dLy < 2π/(B Lx)
  CHECK(adj.dLy >= 0.0);
  CHECK(adj.dLy < kTwoPi / (1.0 * 10.0));
  // exact quantization is kept exactly (up to roundoff)
  CHECK(1.0 * adj.Lx * adj.Ly == doctest::Approx(kTwoPi * adj.M).epsilon(1e-14));
}

TEST_CASE("adjust_torus keeps an already-quantized torus unchanged") {
  double Ly = kTwoPi * 7 / (2.0 * 5.0);
  auto adj = adjust_torus(5.0, Ly, 2.0);
  CHECK(adj.M == 7);
  CHECK(adj.dLy == 0.0);
}

TEST_CASE("adjust_torus rejects a torus too small for one flux quantum") {
  CHECK_THROWS_AS(adjust_torus(1.0, 1.0, 0.1), Error);
  try {
    adjust_torus(1.0, 1.0, 0.1);
  } catch (const Error& e) {
    CHECK(e.code() == Err::FluxTooSmall);
  }
}

TEST_CASE("build_lattice tiles the torus with Nx*Ny sites") {
  auto cfg = four_by_four();
  auto lat = build_lattice(cfg);
  CHECK(lat.Nx == 4);
  CHECK(lat.Ny == 4);
  CHECK(lat.size() == 16);
  CHECK(lat.row_height == doctest::Approx(std::numbers::sqrt3 / 2.0).epsilon(1e-14));
  // dual cells tile the torus exactly
  CHECK(lat.size() * lat.cell_area == doctest::Approx(cfg.Lx * cfg.Ly).epsilon(1e-13));
}

TEST_CASE("triangular adjacency: six distinct neighbors, all at distance a") {
  auto cfg = four_by_four();
  auto lat = build_lattice(cfg);
  for (int s = 0; s < lat.size(); ++s) {
    auto nb = lat.neighbors(s);
    std::set<int> uniq(nb.begin(), nb.end());
    CHECK(uniq.size() == 6);
    CHECK(uniq.count(s) == 0);
    for (int t : nb) {
      double d = torus_dist(lat.positions[s], lat.positions[t], lat.Lx, lat.Ly);
      CHECK(d == doctest::Approx(cfg.a).epsilon(1e-12));
    }
  }
  // adjacency is symmetric
  for (int s = 0; s < lat.size(); ++s)
    for (int t : lat.neighbors(s)) {
      auto back = lat.neighbors(t);
      CHECK(std::count(back.begin(), back.end(), s) == 1);
    }
}

TEST_CASE("build_lattice rejects incommensurate spans") {
  auto cfg = four_by_four();
  cfg.Lx = 4.5;
  CHECK_THROWS_AS(build_lattice(cfg), Error);

  // large B*Lx makes the allowed Ly slack small enough to reject
  ModelConfig tight = four_by_four();
  tight.B = 4.0 * std::numbers::pi / std::numbers::sqrt3;
  tight.Ly = 2.0 * std::numbers::sqrt3 + 0.3;
  try {
    build_lattice(tight);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::NonCommensurate);
  }
}

TEST_CASE("bump profile: cap height, compact support, and hexagon floor") {
  auto cfg = four_by_four();  // a = 1, r_u = 0.7, u_amp = 0.5, u_0 = 0.05
  CHECK(bump_value(cfg, 0.0) == doctest::Approx(0.5));
  CHECK(bump_value(cfg, 0.7) == 0.0);
  CHECK(bump_value(cfg, 0.75) == 0.0);
  // cos^2 tail at the hexagon corner is below u_0, so the floor is active
  double corner = std::numbers::sqrt3 / 3.0;
  double raw = 0.5 * std::pow(std::cos(std::numbers::pi * corner / 1.4), 2);
  CHECK(raw < cfg.u_0);
  CHECK(bump_value(cfg, corner) == doctest::Approx(cfg.u_0));
  CHECK(bump_value(cfg, corner + 1e-6) < cfg.u_0);
  // monotone decrease outside the floor region
  CHECK(bump_value(cfg, 0.60) > bump_value(cfg, 0.65));

  cfg.bump_profile = BumpProfile::PlateauCap;
  CHECK(bump_value(cfg, 0.0) == doctest::Approx(0.5));
  CHECK(bump_value(cfg, corner) == doctest::Approx(0.5));
  CHECK(bump_value(cfg, 0.7) == 0.0);
  double mid = 0.5 * (corner + 0.7);
  CHECK(bump_value(cfg, mid) == doctest::Approx(0.25));
}

TEST_CASE("covering: unit couplings keep the potential above u_0 everywhere") {
  auto cfg = four_by_four();
  auto lat = build_lattice(cfg);
  CHECK_NOTHROW(check_covering(cfg, lat));
}

TEST_CASE("evaluate_potential is supported on bump disks and linear in couplings") {
  auto cfg = four_by_four();
  auto lat = build_lattice(cfg);
  DisorderRealization one;
  one.couplings.assign(16, 0.0);
  one.couplings[0] = 1.0;

  std::vector<Vec2> pts = {lat.positions[0],
                           {wrap(lat.positions[0].x + 2.0, cfg.Lx), lat.positions[0].y},
                           {wrap(lat.positions[0].x + 0.3, cfg.Lx), lat.positions[0].y}};
  auto v = evaluate_potential(cfg, lat, one, pts);
  CHECK(v[0] == doctest::Approx(0.5));  // on the site: cap height
  CHECK(v[1] == 0.0);                   // two lattice spacings away: outside every disk
  CHECK(v[2] == doctest::Approx(bump_value(cfg, 0.3)));

  // doubling the coupling doubles the potential
  DisorderRealization two = one;
  two.couplings[0] = 2.0;
  auto v2 = evaluate_potential(cfg, lat, two, pts);
  CHECK(v2[2] == doctest::Approx(2.0 * v[2]));
}

TEST_CASE("sample_disorder is deterministic in the seed and respects bounds") {
  auto cfg = four_by_four();
  auto lat = build_lattice(cfg);
  auto r1 = sample_disorder(cfg, lat, 42);
  auto r2 = sample_disorder(cfg, lat, 42);
  auto r3 = sample_disorder(cfg, lat, 43);
  CHECK(r1.couplings == r2.couplings);
  CHECK(r1.couplings != r3.couplings);
  for (double l : r1.couplings) {
    CHECK(l >= cfg.lambda_min);
    CHECK(l <= cfg.lambda_max);
  }
}

TEST_CASE("coupling densities: normalization, mass, and quantiles") {
  DensitySpec uni{DensityKind::Uniform, -1.0, 1.0, {}};
  CHECK(uni.integral() == doctest::Approx(1.0));
  CHECK(uni.sup_norm() == doctest::Approx(0.5));
  CHECK(uni.mass(-1.0, 0.0) == doctest::Approx(0.5));
  CHECK(uni.quantile(0.25) == doctest::Approx(-0.5));

  DensitySpec tri{DensityKind::Triangular, -1.0, 1.0, {}};
  CHECK(tri.integral() == doctest::Approx(1.0));
  CHECK(tri.sup_norm() == doctest::Approx(1.0));
  CHECK(tri.quantile(0.5) == doctest::Approx(0.0));
  CHECK(tri.mass(-0.5, 0.5) == doctest::Approx(0.75));
  CHECK(tri.mass(-1.0, tri.quantile(0.3)) == doctest::Approx(0.3));

  // tabulated densities may be un-normalized; integral reports actual mass
  DensitySpec tab{DensityKind::Tabulated, 0.0, 1.0, {2.0, 2.0}};
  CHECK(tab.integral() == doctest::Approx(2.0));
  CHECK(tab.sup_norm() == doctest::Approx(2.0));
  CHECK(tab.mass(0.0, 0.25) == doctest::Approx(0.5));
  CHECK(tab.quantile(0.5) == doctest::Approx(0.5));
}

TEST_CASE("config validation rejects broken invariants") {
  auto cfg = four_by_four();

  auto expect = [](ModelConfig c, Err code) {
    try {
      c.validate();
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };

  ModelConfig bad = cfg;
  bad.Ly *= 1.01;  // breaks flux quantization
  expect(bad, Err::ConfigInvalid);

  bad = cfg;
  bad.r_u = 0.9;  // outside (√3a/3, √3a/2)
  expect(bad, Err::ConfigInvalid);

  bad = cfg;
  bad.r_u = 0.5;
  expect(bad, Err::ConfigInvalid);

  bad = cfg;
  bad.u_0 = 0.0;
  expect(bad, Err::ConfigInvalid);

  bad = cfg;
  bad.g_spec = DensitySpec{DensityKind::Tabulated, -1.0, 1.0, {1.0, 1.0}};  // mass 2
  expect(bad, Err::ConfigInvalid);

  bad = cfg;
  bad.lambda_minus = 0.2;  // ∫_{-0.2}^{1} of uniform on [-1,1] = 0.6 > 1/2 — fine
  CHECK_NOTHROW(bad.validate());
  bad.lambda_plus = 0.2;  // now mass 0.2 < 1/2
  expect(bad, Err::ConfigInvalid);

  bad = cfg;
  bad.M = 0;
  expect(bad, Err::FluxTooSmall);
}

TEST_CASE("region masks: parallelogram and annulus partition the outer block") {
  auto cfg = four_by_four();
  ModelConfig big = cfg;
  // need at least 9x9 sites for a 3x3 annulus: use 9x10 rows
  big.Lx = 9.0;
  big.Ly = 10.0 * std::numbers::sqrt3 / 2.0;
  big.M = 9;
  big.B = kTwoPi * big.M / (big.Lx * big.Ly);
  auto lat = build_lattice(big);
  REQUIRE(lat.Nx == 9);
  REQUIRE(lat.Ny == 10);

  MaskParams p;
  p.m0 = 4;
  p.n0 = 5;
  p.ell = 3;
  p.ell_p = 3;
  auto inner = region_mask(MaskKind::Parallelogram, p, big, &lat);
  CHECK(inner.count() == 9);
  auto annu = region_mask(MaskKind::Annulus, p, big, &lat);
  CHECK(annu.count() == 81 - 9);
  // disjoint union equals the 3x-scaled parallelogram
  MaskParams q = p;
  q.ell = 9;
  q.ell_p = 9;
  auto outer = region_mask(MaskKind::Parallelogram, q, big, &lat);
  for (std::size_t i = 0; i < outer.indicator.size(); ++i) {
    CHECK(static_cast<int>(outer.indicator[i]) ==
          static_cast<int>(inner.indicator[i]) + static_cast<int>(annu.indicator[i]));
  }

  // even spans are rejected
  MaskParams even = p;
  even.ell = 2;
  try {
    region_mask(MaskKind::Parallelogram, even, big, &lat);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::EvenScale);
  }

  // masks that do not fit are rejected
  MaskParams toobig = p;
  toobig.ell = 5;  // annulus needs 15 > Nx = 9
  CHECK_THROWS_AS(region_mask(MaskKind::Annulus, toobig, big, &lat), Error);
}

TEST_CASE("grid masks: halfplane switch covers exactly half the grid") {
  auto cfg = clean_grid_config(1.0, 16, 16);
  MaskParams p;
  p.a_loc = {cfg.Lx / 2.0, 0.0};
  p.axis = 1;
  auto sw = region_mask(MaskKind::HalfplaneSwitch, p, cfg);
  CHECK(sw.domain == MaskDomain::Grid);
  CHECK(sw.count() == 16 * 16 / 2);

  MaskParams r;
  r.x0 = 0.0;
  r.x1 = cfg.Lx / 4.0;
  r.y0 = 0.0;
  r.y1 = cfg.Ly;
  auto rect = region_mask(MaskKind::Rectangle, r, cfg);
  CHECK(rect.count() == 16 * 16 / 4);
}

TEST_CASE("factories produce validated configs") {
  auto grid = clean_grid_config(1.0, 16, 36);
  CHECK(grid.M == 16);
  CHECK(grid.area() == doctest::Approx(kTwoPi * 16));
  CHECK(grid.ell_B() == doctest::Approx(1.0));

  auto latc = lattice_config(2.0, 1.0, 8, 8, 24);
  CHECK(latc.M >= 1);
  CHECK(latc.B * latc.Lx * latc.Ly == doctest::Approx(kTwoPi * latc.M));
  auto lat = build_lattice(latc);
  CHECK(lat.Nx == 8);
  CHECK(lat.Ny == 8);
}
