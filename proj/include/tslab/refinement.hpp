#pragma once

#include <utility>
#include <vector>

#include "tslab/extension.hpp"
#include "tslab/geometry.hpp"
#include "tslab/quadrature.hpp"

namespace tslab {

// Cached cap net for (d, k); nets are deterministic so one copy per level suffices.
const CapNet& cached_cap_net(int d, int k);

struct CapIntegralTerm {
  int level = 0;
  std::size_t index = 0;
  double measure = 0.0;
  double integral = 0.0;  // int_C |f|^p d sigma
};

// Integrals over every net cap of the given level that meets the support window of f.
std::vector<CapIntegralTerm> cap_integrals(const SurfaceDensity& f, int level, double p);

struct XpqLevel {
  int level = 0;
  double contribution = 0.0;  // sum over the level, before the 1/q root
};

struct XpqResult {
  double value = 0.0;
  std::vector<XpqLevel> levels;
};

XpqResult xpq_norm_report(const SurfaceDensity& f, double p, double q, int max_level);
double xpq_norm(const SurfaceDensity& f, double p, double q, int max_level);
// 2(d+2)/d
inline double default_xpq_q(int d) { return 2.0 * (d + 2) / d; }

struct ConcentrationLevel {
  int level = 0;
  double value = 0.0;
  CapSpec cap;
};

struct ConcentrationReport {
  CapSpec best_cap;
  int best_level = -1;
  double value = 0.0;
  std::vector<ConcentrationLevel> levels;
};

// sup over net caps of levels 0..max_level of |C|^{-1/2} int_C |f|.
ConcentrationReport cap_concentration(const SurfaceDensity& f, int max_level);

struct RefinedTriple {
  double extension_norm = 0.0;
  double extension_uncertainty = 0.0;
  double concentration = 0.0;
  double l2 = 0.0;
};

struct RefinedReport {
  std::vector<RefinedTriple> members;
  std::vector<double> alphas;
  // Smallest admissible C for each alpha over the corpus.
  std::vector<double> constants;
  std::size_t best_alpha = 0;  // index minimising the constant
};

RefinedTriple refined_triple(const SurfaceDensity& f, int max_level, const ConventionTag& conv,
                             const QuotientConfig& qcfg = {});
// Envelope over a corpus of triples on the alpha grid k / (n + 1), k = 1..n.
RefinedReport refined_envelope(std::vector<RefinedTriple> members, int n_alpha = 19);
// Both the admissible C for one alpha and the inequality check against it.
double admissible_constant(const RefinedTriple& t, double alpha);

struct BilinearConfig {
  double q = 0.0;  // 0 selects (d + 2) / d
  int resolution = 32;
  double T = 0.0;  // space-time horizon when the Plancherel route does not apply
};

// || ext(f1) ext(f2) ||_{L^q}; f1, f2 supported in the caps c1, c2 of equal radius.
Estimate bilinear_interaction(const SurfaceDensity& f1, const CapSpec& c1, const SurfaceDensity& f2,
                              const CapSpec& c2, const ConventionTag& conv, const BilinearConfig& cfg = {});

struct BilinearDecayFit {
  std::vector<double> separations;
  std::vector<double> norms;
  double alpha_hat = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

BilinearDecayFit decay_fit(const std::vector<std::pair<double, double>>& points);

// Two normalised bumps of radius r on S^d at chordal distance N r, symmetric about the north pole.
std::pair<BumpSpec, BumpSpec> separated_bump_pair(int d, double r, double N, int power = 4);

}  // namespace tslab
