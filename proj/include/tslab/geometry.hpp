#pragma once

#include <cstdint>
#include <vector>

#include "tslab/core.hpp"

namespace tslab {

struct SurfaceDensity;
struct BallGrid;

struct CapSpec {
  int d = 2;
  Point center{};
  double radius = 0.0;

  CapSpec() = default;
  CapSpec(int dim, const Point& z, double r);
};

// Orthonormal basis of the hyperplane orthogonal to z; realises the isometry L_z.
struct Frame {
  int d = 2;
  Point z{};
  std::array<Point, kMaxAmbient - 1> basis{};

  // L_z(pi_H p): coordinates of p in the basis.
  void to_plane(const Point& p, double* u) const;
  // u in the plane (|u| < 1) lifted to the hemisphere of z.
  Point lift(const double* u) const;
};

Frame make_frame(int d, const Point& z);

bool cap_contains(const CapSpec& cap, const Point& p);
// Same test without the unit-norm check; used in inner loops on trusted points.
bool cap_contains_unchecked(const CapSpec& cap, const Point& p);

// sigma-measure of the full cap C(z, r) on S^d.
double cap_measure(int d, double r);

// Phi_C(y) = Psi_z^{-1}(y).
Point rescaled_map(const CapSpec& cap, const double* y);
// Psi_z(p) = r^{-1} L_z(pi_H p); writes d coordinates.
void inverse_rescaled_map(const CapSpec& cap, const Point& p, double* y);

// Phi_C^* f(y) = r^{d/2} f(Phi_C(y)) at the nodes of a ball grid of radius < 1/r.
std::vector<cplx> pullback(const CapSpec& cap, const SurfaceDensity& f, const BallGrid& grid);

struct CapNet {
  int d = 2;
  int level = 0;
  double separation = 1.0;
  std::vector<Point> centers;

  // Radius of the doubled caps C(z, 2^{-k+1}), clipped to the admissible range.
  double cap_radius() const;
  CapSpec cap(std::size_t j) const { return CapSpec(d, centers[j], cap_radius()); }
};

struct NetConfig {
  // Candidates per unit of (separation)^{-d} sphere measure.
  double candidate_density = 24.0;
  std::size_t max_candidates = 4000000;
};

CapNet build_cap_net(int d, int k, const NetConfig& cfg = {});

struct NetCertificate {
  double min_separation = 0.0;
  double covering_radius = 0.0;
  int max_overlap = 0;
};

std::vector<Point> random_sphere_points(int d, std::size_t n, std::uint64_t seed);
NetCertificate certify_net(const CapNet& net, const std::vector<Point>& samples);

struct DyadicCube {
  int level = 0;
  std::array<int, 3> index{};
};

struct WhitneyPair {
  DyadicCube first;
  DyadicCube second;
  int level = 0;
};

struct WhitneyDecomposition {
  int d = 1;
  int depth = 1;
  int finest_level = 2;
  // Pairs (a, b) with max_i |a_i - b_i| < unresolved_width may be left uncovered.
  double unresolved_width = 0.5;
  std::vector<WhitneyPair> pairs;
};

bool cubes_adjacent(const DyadicCube& a, const DyadicCube& b, int d);
DyadicCube parent(const DyadicCube& c, int d);
bool whitney_related(const DyadicCube& a, const DyadicCube& b, int d);
bool cube_contains(const DyadicCube& c, const double* a, int d);

WhitneyDecomposition whitney_pairs(int d, int depth);

struct WhitneyCensus {
  std::size_t samples = 0;
  std::size_t resolved = 0;    // pairs with max_i |a_i - b_i| >= unresolved_width
  std::size_t uncovered = 0;   // resolved samples in no pair
  std::size_t multiple = 0;    // samples in more than one pair
  std::size_t coarse_only = 0;  // unresolved samples that still landed in a pair
};

// Brute-force point location of random (a, b) in [-1/2, 1/2)^{2d} against every pair.
WhitneyCensus whitney_census(const WhitneyDecomposition& w, std::size_t samples, std::uint64_t seed);

}  // namespace tslab
