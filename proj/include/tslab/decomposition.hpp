#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tslab/extension.hpp"
#include "tslab/refinement.hpp"

namespace tslab {

// ── cap extraction ──────────────────────────────────────────────────

struct ThresholdConfig {
  double c0 = 0.5;
  double alpha = 0.5;
};

// Level R with R^{-1} = (c0 / 2) delta^{1/alpha} |C|^{1/2}, in units of ||f||.
double threshold_level(const CapSpec& cap, double delta, const ThresholdConfig& cfg);

struct SplitResult {
  SurfaceDensity g;  // f on {x in C : |f| <= R}
  SurfaceDensity h;  // f - g
  double level = 0.0;
};

SplitResult threshold_split(const SurfaceDensity& f, const CapSpec& cap, double delta, const ThresholdConfig& cfg = {});

struct CapPiece {
  CapSpec cap;
  int level = 0;
  SurfaceDensity density;
  double bound_constant = 0.0;  // |density| <= bound_constant |C|^{-1/2}
  double l2 = 0.0;
};

struct FirstDecompositionConfig {
  ThresholdConfig threshold;
  int max_level = 4;
  // Reference extension constant; the loop stops once ||ext remainder|| <= delta R_est.
  double R_est = 0.0;
  ConventionTag convention = ConventionTag::unitary(2);
  QuotientConfig quotient;
};

struct FirstDecomposition {
  std::vector<CapPiece> pieces;
  SurfaceDensity remainder;
  double remainder_extension = 0.0;
  double remainder_uncertainty = 0.0;
  double eta = 0.0;  // smallest piece norm relative to ||f||
  double pythagoras_residual = 0.0;
  bool reached_threshold = false;
};

FirstDecomposition first_decomposition(const SurfaceDensity& f, double delta, int max_pieces,
                                       const FirstDecompositionConfig& cfg);

// ── modulation profiles ─────────────────────────────────────────────

enum class Direction { forward, inverse };

// forward: e^{-it|y|^2/2} e^{ix.y} g(y); inverse: the conjugate factor.
std::vector<cplx> modulate(const BallGrid& grid, const std::vector<cplx>& g, const ModulationParams& m, Direction dir);

struct SearchLattice {
  double hx = 0.5;
  double ht = 0.5;
  double X = 10.0;
  double T = 10.0;
};

struct ExtractionConfig {
  double epsilon = 0.05;
  int max_profiles = 4;
  SearchLattice lattice;
  // Scales of the tensor B-spline test bumps.
  std::vector<double> bump_scales{1.0, 0.5, 0.25};
  // Parameter trajectories closer than this many cells at every nu are merged.
  double merge_cells = 2.0;
  int backfit_sweeps = 12;
  // Strongest lattice points per trajectory kept in the joint pair search.
  std::size_t pair_candidates = 128;
};

struct ExtractedProfile {
  std::vector<cplx> phi;
  std::vector<ModulationParams> params;  // one per element of the sequence
  double strength = 0.0;                 // tail-averaged search functional when found
};

struct Extraction {
  std::shared_ptr<const BallGrid> grid;
  std::vector<ExtractedProfile> profiles;
  std::vector<std::vector<cplx>> errors;
  std::vector<std::string> flags;
  int merged = 0;
};

// Sequence elements are samples on the unit-ball grid.
Extraction extract_profiles(std::shared_ptr<const BallGrid> grid, const std::vector<std::vector<cplx>>& sequence,
                            const ExtractionConfig& cfg = {});

double ball_l2(const BallGrid& grid, const std::vector<cplx>& g);

// ── synthesis and reports ───────────────────────────────────────────

// phi on the unit-ball grid, with cap and modulation indexed by nu (a single entry is held fixed).
struct Profile {
  std::shared_ptr<const BallGrid> grid;
  std::vector<cplx> phi;
  std::vector<CapSpec> caps;
  std::vector<ModulationParams> modulation;

  const CapSpec& cap_at(std::size_t nu) const { return caps[std::min(nu, caps.size() - 1)]; }
  const ModulationParams& modulation_at(std::size_t nu) const {
    return modulation[std::min(nu, modulation.size() - 1)];
  }
};

// Density of profile j at index nu as an exact function on the sphere.
SphereFn profile_function(const Profile& p, std::size_t nu);
SurfaceDensity synthesize(const std::vector<Profile>& profiles, std::size_t nu, std::shared_ptr<const DiskGrid> grid);
bool supports_overlap(const std::vector<Profile>& profiles, std::size_t nu);

struct OrthogonalityConfig {
  ConventionTag convention = ConventionTag::unitary(2);
  int grid_resolution = 48;
  // Horizon in rescaled time units beyond the spread of the modulation parameters.
  double horizon = 40.0;
};

struct NuReport {
  std::size_t nu = 0;
  std::vector<std::vector<double>> product_norms;  // L^{1+2/d} norm of ext_j ext_k
  std::vector<std::vector<double>> divergence;     // cap and modulation divergence
  double superadditivity_lhs = 0.0;               // || sum_j ext_j ||_p^p
  double superadditivity_rhs = 0.0;               // sum_j || ext_j ||_p^p
  double superadditivity_gap = 0.0;               // lhs - rhs
};

struct DecompositionReport {
  std::vector<NuReport> per_nu;
  double pythagoras_residual = 0.0;
  double remainder_l2 = 0.0;
  double remainder_extension = 0.0;
  double remainder_uncertainty = 0.0;
};

// Pair divergence r_j/r_k + r_k/r_j + |z_j - z_k|/r_j, plus |x_j - x_k| + |t_j - t_k| on a shared cap.
double parameter_divergence(const Profile& a, const Profile& b, std::size_t nu);

NuReport orthogonality_at(const std::vector<Profile>& profiles, std::size_t nu, const OrthogonalityConfig& cfg);
DecompositionReport orthogonality_report(const std::vector<Profile>& profiles, const std::vector<std::size_t>& nus,
                                         const OrthogonalityConfig& cfg);

// |‖g‖^2 - sum ‖phi_j‖^2 - ‖e‖^2| on the ball grid.
double profile_pythagoras(const BallGrid& grid, const std::vector<cplx>& g, const std::vector<ExtractedProfile>& profiles,
                          const std::vector<cplx>& error);

// ── planted sequences ───────────────────────────────────────────────

struct PlantedProfile {
  CapSpec cap;
  double amplitude = 1.0;
  int power = 4;
  std::vector<cplx> coeffs{1.0};
  ModulationParams start;     // parameters at nu = 0
  ModulationParams velocity;  // added once per unit of nu
};

struct PlantConfig {
  int d = 1;
  std::vector<PlantedProfile> profiles;
  int nu_count = 8;
  int ball_resolution = 64;
  double noise = 0.0;
  unsigned long long seed = 7;
};

// Planted parameters at index nu (nu counted from 1).
ModulationParams planted_params(const PlantedProfile& p, int nu);
// Shape on the unit ball, |phi| <= amplitude.
std::vector<cplx> planted_shape(const BallGrid& grid, const PlantedProfile& p);
// g_nu = sum_j T^{-1}_{nu, j} phi_j (+ noise) on the unit-ball grid, nu = 1..nu_count.
std::vector<std::vector<cplx>> planted_sequence(const BallGrid& grid, const PlantConfig& cfg);
std::vector<Profile> planted_profiles(std::shared_ptr<const BallGrid> grid, const PlantConfig& cfg);
// Default configuration: profile count and separation pattern of the two-profile example.
PlantConfig default_plant(int d, int profiles, unsigned long long seed);

// ── sphere pipeline ─────────────────────────────────────────────────

struct SphereSequenceConfig {
  double delta = 0.5;
  int max_pieces = 4;
  FirstDecompositionConfig first;
  ExtractionConfig extraction;
  int ball_resolution = 0;  // 0 selects 64 for d = 1 and 24 for d = 2
};

struct SphereDecomposition {
  std::vector<FirstDecomposition> first;  // one per element, after normalisation
  std::vector<CapSpec> caps;              // cap of the largest piece per element
  bool shared_cap = false;
  std::shared_ptr<const BallGrid> grid;
  std::vector<std::vector<cplx>> rescaled;  // g_nu of the dominant piece, at the input scale
  Extraction extraction;
  std::vector<Profile> profiles;  // extracted shapes with their caps and parameters
};

// Cap decomposition of every element, rescaling of the dominant piece to the unit ball, then profile
// extraction on the rescaled sequence.
SphereDecomposition decompose_sequence(const std::vector<SurfaceDensity>& sequence, const SphereSequenceConfig& cfg);

}  // namespace tslab
