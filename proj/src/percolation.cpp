#include "hall/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>

#include "hall/rng.hpp"

namespace hall::perc {

namespace {

constexpr double kSqrt3 = std::numbers::sqrt3;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[a] = b;
  }
  bool same(int a, int b) { return find(a) == find(b); }
};

// Local planar view of a parallelogram patch: cell (i, j) covers axial offset
// (i - hm, j - hn) from the center site. Crossing and circuit searches use
// planar adjacency between cells, never the torus wrap.
struct Patch {
  int ell = 0, ell_p = 0;
  int hm = 0, hn = 0;
  int m0 = 0, n0 = 0;
  const model::TriangularLattice* lat = nullptr;

  int cells() const { return ell * ell_p; }
  int cell(int i, int j) const { return j * ell + i; }
  bool inside(int i, int j) const { return 0 <= i && i < ell && 0 <= j && j < ell_p; }
  int site(int i, int j) const { return lat->site_at(m0 + (i - hm), n0 + (j - hn)); }
  // planar coordinates of the cell in units of a (row j is sheared by j/2)
  double qx(int i, int j) const { return (i - hm) + 0.5 * (j - hn); }
  double qy(int, int j) const { return (j - hn) * (kSqrt3 / 2.0); }
};

Patch make_patch(const model::RegionMask& mask, const model::TriangularLattice& lat, int scale) {
  Patch p;
  p.ell = scale * mask.meta.ell;
  p.ell_p = scale * mask.meta.ell_p;
  p.hm = (p.ell - 1) / 2;
  p.hn = (p.ell_p - 1) / 2;
  p.m0 = mask.meta.m0;
  p.n0 = mask.meta.n0;
  p.lat = &lat;
  return p;
}

constexpr std::array<std::pair<int, int>, 6> kOffsets =
    model::TriangularLattice::kNeighborOffsets;

}  // namespace

OccupationMap occupy(const model::TriangularLattice& lat,
                     const model::DisorderRealization& realization, double lambda_minus,
                     double lambda_plus) {
  require(realization.couplings.size() == static_cast<std::size_t>(lat.size()),
          Err::ConfigInvalid, "occupation map needs one coupling per site");
  OccupationMap occ;
  occ.lat = &lat;
  occ.source = &realization;
  occ.lambda_minus = lambda_minus;
  occ.lambda_plus = lambda_plus;
  occ.occupied.resize(realization.couplings.size());
  for (std::size_t i = 0; i < realization.couplings.size(); ++i) {
    double l = realization.couplings[i];
    occ.occupied[i] = (l > -lambda_minus && l < lambda_plus) ? 1 : 0;
  }
  return occ;
}

double occupation_probability(const model::ModelConfig& cfg) {
  return cfg.g_spec.mass(-cfg.lambda_minus, cfg.lambda_plus) / cfg.g_spec.integral();
}

bool is_supercritical(const model::ModelConfig& cfg) {
  return occupation_probability(cfg) > kPcTriangular;
}

bool crossing_exists(const OccupationMap& occ, const model::RegionMask& parallelogram,
                     CrossDir dir, Phase phase) {
  require(parallelogram.kind == model::MaskKind::Parallelogram, Err::ConfigInvalid,
          "crossing_exists expects a parallelogram mask");
  const auto& lat = *occ.lat;
  Patch P = make_patch(parallelogram, lat, 1);

  auto want = [&](int i, int j) {
    bool o = occ.is_occupied(P.site(i, j));
    return phase == Phase::Occupied ? o : !o;
  };

  int n = P.cells();
  UnionFind uf(n + 2);
  int SRC = n, DST = n + 1;
  for (int j = 0; j < P.ell_p; ++j)
    for (int i = 0; i < P.ell; ++i) {
      if (!want(i, j)) continue;
      int c = P.cell(i, j);
      for (auto [di, dj] : kOffsets) {
        int i2 = i + di, j2 = j + dj;
        if (P.inside(i2, j2) && want(i2, j2)) uf.unite(c, P.cell(i2, j2));
      }
      if (dir == CrossDir::LeftRight) {
        if (i == 0) uf.unite(c, SRC);
        if (i == P.ell - 1) uf.unite(c, DST);
      } else {
        if (j == 0) uf.unite(c, SRC);
        if (j == P.ell_p - 1) uf.unite(c, DST);
      }
    }
  return uf.same(SRC, DST);
}

std::optional<Circuit> find_occupied_circuit(const OccupationMap& occ,
                                             const model::RegionMask& annulus) {
  require(annulus.kind == model::MaskKind::Annulus, Err::ConfigInvalid,
          "find_occupied_circuit expects an annulus mask");
  const auto& lat = *occ.lat;
  Patch P = make_patch(annulus, lat, 3);
  int hole_hm = (annulus.meta.ell - 1) / 2;
  int hole_hn = (annulus.meta.ell_p - 1) / 2;

  auto in_hole = [&](int i, int j) {
    return std::abs(i - P.hm) <= hole_hm && std::abs(j - P.hn) <= hole_hn;
  };
  auto in_annulus = [&](int i, int j) { return P.inside(i, j) && !in_hole(i, j); };

  // Duality: an occupied circuit encircling the hole exists iff the vacant
  // set does not connect the hole's rim to the outside through the annulus.
  int n = P.cells();
  UnionFind uf(n + 2);
  int INNER = n, OUTER = n + 1;
  for (int j = 0; j < P.ell_p; ++j)
    for (int i = 0; i < P.ell; ++i) {
      if (!in_annulus(i, j) || occ.is_occupied(P.site(i, j))) continue;
      int c = P.cell(i, j);
      for (auto [di, dj] : kOffsets) {
        int i2 = i + di, j2 = j + dj;
        if (!P.inside(i2, j2))
          uf.unite(c, OUTER);
        else if (in_hole(i2, j2))
          uf.unite(c, INNER);
        else if (!occ.is_occupied(P.site(i2, j2)))
          uf.unite(c, P.cell(i2, j2));
      }
    }
  if (uf.same(INNER, OUTER)) return std::nullopt;

  // Extraction: shortest occupied closed walk with net winding ±1 about the
  // center, via BFS over (cell, winding-progress). Winding progress changes
  // when an edge crosses the horizontal ray y = √3/4, x > 0 (anchored inside
  // the hole, crossing positions never hit a site or x = 0 exactly).
  const double y0 = kSqrt3 / 4.0;
  auto increment = [&](int i1, int j1, int i2, int j2) {
    double yu = P.qy(i1, j1), yv = P.qy(i2, j2);
    if ((yu - y0) * (yv - y0) >= 0.0) return 0;
    double t = (y0 - yu) / (yv - yu);
    double xc = P.qx(i1, j1) + t * (P.qx(i2, j2) - P.qx(i1, j1));
    if (xc <= 0.0) return 0;
    return yv > yu ? 1 : -1;
  };

  constexpr int W = 8;  // winding-progress window [-W, W]
  const int layers = 2 * W + 1;
  auto state = [&](int c, int w) { return c * layers + (w + W); };

  for (int i0 = P.hm + hole_hm + 1; i0 < P.ell; ++i0) {
    int j0 = P.hn;  // row dn = 0, right of the hole: every circuit hits one
    if (!in_annulus(i0, j0) || !occ.is_occupied(P.site(i0, j0))) continue;
    int start_cell = P.cell(i0, j0);
    std::vector<int> parent(static_cast<std::size_t>(n) * layers, -1);
    std::queue<int> q;
    int s0 = state(start_cell, 0);
    parent[static_cast<std::size_t>(s0)] = s0;
    q.push(s0);
    int goal = -1;
    while (!q.empty() && goal < 0) {
      int s = q.front();
      q.pop();
      int c = s / layers, w = s % layers - W;
      int i = c % P.ell, j = c / P.ell;
      for (auto [di, dj] : kOffsets) {
        int i2 = i + di, j2 = j + dj;
        if (!in_annulus(i2, j2) || !occ.is_occupied(P.site(i2, j2))) continue;
        int w2 = w + increment(i, j, i2, j2);
        if (w2 < -W || w2 > W) continue;
        int s2 = state(P.cell(i2, j2), w2);
        if (parent[static_cast<std::size_t>(s2)] >= 0) continue;
        parent[static_cast<std::size_t>(s2)] = s;
        if (P.cell(i2, j2) == start_cell && (w2 == 1 || w2 == -1)) {
          goal = s2;
          break;
        }
        q.push(s2);
      }
    }
    if (goal < 0) continue;
    Circuit circ;
    circ.winding = goal % layers - W;
    circ.center_site = lat.index(P.m0, P.n0);
    std::vector<int> cells;
    for (int s = goal; s != state(start_cell, 0); s = parent[static_cast<std::size_t>(s)])
      cells.push_back(s / layers);
    cells.push_back(start_cell);
    std::reverse(cells.begin(), cells.end());
    circ.sites.reserve(cells.size());
    for (int c : cells) circ.sites.push_back(P.site(c % P.ell, c / P.ell));
    return circ;
  }
  fail(Err::GeometryViolated,
       "internal: vacant set does not cut the annulus, yet no winding walk was found");
}

double circuit_edge_distance(const Circuit& circuit, const model::TriangularLattice& lat,
                             Vec2 point) {
  require(circuit.sites.size() >= 2, Err::ConfigInvalid, "circuit has no edges");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < circuit.sites.size(); ++k) {
    Vec2 z0 = lat.positions[static_cast<std::size_t>(circuit.sites[k])];
    Vec2 z1 = lat.positions[static_cast<std::size_t>(circuit.sites[k + 1])];
    // unwrap the edge into the chart centered at the probe point
    Vec2 q0 = point + torus_delta(z0, point, lat.Lx, lat.Ly);
    Vec2 q1 = q0 + torus_delta(z1, z0, lat.Lx, lat.Ly);
    best = std::min(best, dist_point_segment(point, q0, q1));
  }
  return best;
}

RibbonRegion ribbon_from_circuit(const Circuit& circuit, const model::ModelConfig& cfg,
                                 const OccupationMap& occ) {
  const auto& lat = *occ.lat;
  require(occ.source != nullptr, Err::ConfigInvalid,
          "ribbon verification needs the disorder realization behind the occupation map");
  RibbonRegion rib;
  rib.circuit = circuit;
  rib.r1 = kSqrt3 * cfg.a / 2.0 - cfg.r_u;
  rib.r2 = cfg.r_u - kSqrt3 * cfg.a / 3.0;
  require(rib.r1 > 0.0 && rib.r2 > 0.0, Err::GeometryViolated,
          "ribbon widths require r_u in (√3a/3, √3a/2)");

  std::vector<std::uint8_t> on_circuit(static_cast<std::size_t>(lat.size()), 0);
  for (int s : circuit.sites) on_circuit[static_cast<std::size_t>(s)] = 1;

  // Probe the tube: points within r_1 of a circuit edge. Geometry promises
  // every non-circuit site is at least √3a/2 from every edge, hence at least
  // r_u from every probe; equivalently the hexagon cells of non-circuit
  // sites keep a clearance of r_2 from the tube.
  std::vector<Vec2> probes;
  for (std::size_t k = 0; k + 1 < circuit.sites.size(); ++k) {
    Vec2 z0 = lat.positions[static_cast<std::size_t>(circuit.sites[k])];
    Vec2 z1v = z0 + torus_delta(lat.positions[static_cast<std::size_t>(circuit.sites[k + 1])],
                                z0, lat.Lx, lat.Ly);
    Vec2 d = z1v - z0;
    Vec2 nrm = {-d.y / norm(d), d.x / norm(d)};
    for (int ti = 0; ti <= 8; ++ti) {
      double t = ti / 8.0;
      Vec2 base = z0 + t * d;
      for (double off : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        Vec2 p = base + (off * rib.r1) * nrm;
        probes.push_back({wrap(p.x, lat.Lx), wrap(p.y, lat.Ly)});
      }
    }
  }

  double hex_circum = kSqrt3 * cfg.a / 3.0;
  for (const Vec2& p : probes) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int s = 0; s < lat.size(); ++s) {
      if (on_circuit[static_cast<std::size_t>(s)]) continue;
      nearest = std::min(nearest,
                         torus_dist(p, lat.positions[static_cast<std::size_t>(s)], lat.Lx, lat.Ly));
    }
    require(nearest - hex_circum >= rib.r2 - 1e-9, Err::GeometryViolated,
            "ribbon clearance to non-circuit hexagon cells fell below r_2");
  }

  // On the tube the potential is a sum of at most two circuit-site bumps, so
  // it must stay inside [-λ_minus u_1, λ_plus u_1].
  auto vals = model::evaluate_potential(cfg, lat, *occ.source, probes);
  double lo = -occ.lambda_minus * cfg.u_1() - 1e-9;
  double hi = occ.lambda_plus * cfg.u_1() + 1e-9;
  for (double v : vals)
    require(v >= lo && v <= hi, Err::GeometryViolated,
            "potential on the ribbon left the coupling window");

  if (cfg.grid_Nx >= 4 && cfg.grid_Ny >= 4) {
    rib.mask.kind = model::MaskKind::Ribbon;
    rib.mask.domain = model::MaskDomain::Grid;
    rib.mask.indicator.assign(static_cast<std::size_t>(cfg.grid_Nx) * cfg.grid_Ny, 0);
    for (int j = 0; j < cfg.grid_Ny; ++j)
      for (int i = 0; i < cfg.grid_Nx; ++i) {
        Vec2 p{i * cfg.hx(), j * cfg.hy()};
        if (circuit_edge_distance(circuit, lat, p) <= rib.r1)
          rib.mask.indicator[static_cast<std::size_t>(j) * cfg.grid_Nx + i] = 1;
      }
  } else {
    rib.mask.kind = model::MaskKind::Ribbon;
    rib.mask.domain = model::MaskDomain::Sites;
  }
  return rib;
}

BinomialEstimate estimate_event_probability(const Event& event, const model::ModelConfig& cfg,
                                            const model::TriangularLattice& lat, int trials,
                                            std::uint64_t seed) {
  require(trials >= 1, Err::ConfigInvalid, "need at least one trial");
  std::size_t hits = 0;
  for (int t = 0; t < trials; ++t) {
    auto realization = model::sample_disorder(cfg, lat, trial_seed(seed, static_cast<std::uint64_t>(t)));
    auto occ = occupy(lat, realization, cfg.lambda_minus, cfg.lambda_plus);
    if (event(occ)) ++hits;
  }
  return binomial_estimate(hits, static_cast<std::size_t>(trials));
}

DecayFit connectivity_decay_fit(const model::ModelConfig& cfg, double p,
                                const std::vector<int>& distances, int trials,
                                std::uint64_t seed) {
  require(p > 0.5 && p <= 1.0, Err::ConfigInvalid, "decay fit needs a supercritical p");
  require(std::is_sorted(distances.begin(), distances.end()) &&
              std::adjacent_find(distances.begin(), distances.end()) == distances.end(),
          Err::ConfigInvalid, "distances must be strictly increasing");

  // symmetric coupling window (-t, t) with occupation mass p
  double lo = 0.0, hi = std::max(std::abs(cfg.g_spec.lo), std::abs(cfg.g_spec.hi));
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (cfg.g_spec.mass(-mid, mid) / cfg.g_spec.integral() < p ? lo : hi) = mid;
  }
  model::ModelConfig run = cfg;
  run.lambda_minus = run.lambda_plus = 0.5 * (lo + hi);

  auto lat = model::build_lattice(run);
  std::vector<double> xs, ys, ps;
  for (std::size_t di = 0; di < distances.size(); ++di) {
    int ell = distances[di];
    require(ell <= lat.Nx && ell <= lat.Ny, Err::ConfigInvalid,
            "spanning patch does not fit in the lattice");
    model::MaskParams mp;
    mp.m0 = lat.Nx / 2;
    mp.n0 = lat.Ny / 2;
    mp.ell = ell;
    mp.ell_p = ell;
    auto mask = model::region_mask(model::MaskKind::Parallelogram, mp, run, &lat);
    auto est = estimate_event_probability(
        [&](const OccupationMap& occ) {
          return crossing_exists(occ, mask, CrossDir::TopBottom, Phase::Vacant);
        },
        run, lat, trials, splitmix64(seed) + di);
    ps.push_back(est.p_hat);
    if (est.p_hat > 0.0) {
      xs.push_back(static_cast<double>(ell));
      ys.push_back(-std::log(est.p_hat));
    }
  }
  require(xs.size() >= 2, Err::InsufficientDecay,
          "vacant spanning probabilities are below Monte Carlo resolution");
  auto fit = fit_line(xs, ys);
  DecayFit out;
  out.m_p = fit.slope;
  out.ci_half = fit.slope_ci();
  out.intercept = fit.intercept;
  out.distances.assign(distances.begin(), distances.end());
  out.probabilities = ps;
  return out;
}

}  // namespace hall::perc
