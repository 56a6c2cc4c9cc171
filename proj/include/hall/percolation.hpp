#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hall/model.hpp"
#include "hall/stats.hpp"

namespace hall::perc {

// Site percolation threshold of the triangular lattice (exact).
inline constexpr double kPcTriangular = 0.5;

// A site is occupied iff its coupling lies in the open window (-λ_minus, λ_plus).
struct OccupationMap {
  const model::TriangularLattice* lat = nullptr;
  const model::DisorderRealization* source = nullptr;  // couplings behind the bits
  std::vector<std::uint8_t> occupied;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;

  bool is_occupied(int site) const { return occupied[static_cast<std::size_t>(site)] != 0; }
};

OccupationMap occupy(const model::TriangularLattice& lat,
                     const model::DisorderRealization& realization, double lambda_minus,
                     double lambda_plus);

// p = ∫_{-λ_minus}^{λ_plus} g; the occupation probability of a single site.
double occupation_probability(const model::ModelConfig& cfg);
bool is_supercritical(const model::ModelConfig& cfg);

enum class CrossDir { LeftRight, TopBottom };
enum class Phase { Occupied, Vacant };

// Occupied (or vacant) 6-adjacent path joining the two named sides of the
// parallelogram patch, with *planar* adjacency inside the patch (crossings
// never use the torus wrap).
bool crossing_exists(const OccupationMap& occ, const model::RegionMask& parallelogram,
                     CrossDir dir, Phase phase = Phase::Occupied);

// A closed walk of adjacent occupied sites encircling the annulus hole.
// Consecutive sites are adjacent, all are occupied, and the winding number
// about the center is ±1; a site may repeat at different winding progress
// (downstream ribbon geometry is per-edge, so walks serve as well as paths).
struct Circuit {
  std::vector<int> sites;  // sites.front() == sites.back()
  int winding = 0;
  int center_site = -1;
};

// Duality-based detection (union-find over the vacant set: a circuit exists
// iff the vacant set does not cut the annulus radially), then explicit
// extraction by shortest winding walk when a witness exists.
std::optional<Circuit> find_occupied_circuit(const OccupationMap& occ,
                                             const model::RegionMask& annulus);

// Tube of half-width r_1 around the circuit's edges. Every point of the tube
// is farther than r_u from every non-circuit site, so the potential there is
// controlled by the (occupied) circuit couplings alone.
struct RibbonRegion {
  Circuit circuit;
  double r1 = 0.0;  // √3a/2 - r_u
  double r2 = 0.0;  // r_u - √3a/3
  model::RegionMask mask;  // grid-domain indicator when cfg has a grid
};

RibbonRegion ribbon_from_circuit(const Circuit& circuit, const model::ModelConfig& cfg,
                                 const OccupationMap& occ);

// Distance from a torus point to the nearest circuit edge (segment metric).
double circuit_edge_distance(const Circuit& circuit, const model::TriangularLattice& lat,
                             Vec2 point);

// Monte Carlo harness: fresh disorder per trial from a per-trial seed stream.
using Event = std::function<bool(const OccupationMap&)>;
BinomialEstimate estimate_event_probability(const Event& event, const model::ModelConfig& cfg,
                                            const model::TriangularLattice& lat, int trials,
                                            std::uint64_t seed);

// Exponential-decay fit of vacant spanning probabilities: slope of
// -log P(vacant path spans an ℓ'×ℓ' patch) against ℓ'.
struct DecayFit {
  double m_p = 0.0;        // fitted decay rate
  double ci_half = 0.0;    // 95% half-width on m_p
  double intercept = 0.0;
  std::vector<double> distances;
  std::vector<double> probabilities;
};

DecayFit connectivity_decay_fit(const model::ModelConfig& cfg, double p,
                                const std::vector<int>& distances, int trials,
                                std::uint64_t seed);

}  // namespace hall::perc
