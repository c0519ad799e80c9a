#pragma once

#include <string>
#include <vector>

#include "tslab/extension.hpp"

namespace tslab {

// A constant together with the normalisation it was computed under.
struct TaggedValue {
  Estimate estimate;
  ConventionTag convention;
};

// Norm-type constants scale linearly with the prefactor; the sign of the phase does not enter.
TaggedValue convert(const TaggedValue& v, const ConventionTag& to);

// ── Gaussian constant ───────────────────────────────────────────────

struct RPConfig {
  // Truncation box of the quadrature cross-check.
  double T = 40.0;
  double X = 40.0;
  double ht = 0.25;
  double hx = 0.2;
  double ball_radius = 9.0;
  int ball_nodes = 2400;
};

// Defaults sized for d = 1; the d = 2 check runs on a smaller box.
RPConfig default_rp_config(int d);

struct RPEstimate {
  int d = 1;
  double p = 6.0;
  double power_ratio = 0.0;  // int |e^{it Delta/2} phi_G|^p / ||phi_G||^p, closed form
  double truncated_analytic = 0.0;
  double truncated_quadrature = 0.0;
  double cross_check = 0.0;  // relative disagreement of the two truncated integrals
  // prefactor * power_ratio^{1/p}: comparable with sphere quotients under the same convention.
  TaggedValue value;
  // (2 pi)^{-(d+2)/d} * power_ratio, the p-th power normalisation of the Gaussian constant.
  double p_power_form = 0.0;
};

RPEstimate estimate_R_P(int d, const ConventionTag& conv, const RPConfig& cfg);
RPEstimate estimate_R_P(int d, const ConventionTag& conv);

// Power ratio of lambda^{d/2} phi_G(lambda .) from the modulus formula, with the time integral done by
// quadrature after t = lambda^2 tan(theta).
double scaled_gaussian_power_ratio(int d, double lambda);

// ── ascent ──────────────────────────────────────────────────────────

enum class AscentObjective { automatic, convolution, space_time };

struct AscentConfig {
  int steps = 50;
  // automatic selects the convolution route; space_time uses the truncated lattice quotient.
  AscentObjective objective = AscentObjective::automatic;
  // Convolution resolution of the objective (0: 32 for d = 1, 12 for d = 2); the final density is
  // certified at conv_resolution.
  int objective_resolution = 0;
  double tau0 = 1.0;
  int max_backtracks = 12;
  // Converged once the relative change stays below tol over `window` consecutive accepted steps.
  double tol = 1e-7;
  int window = 5;
  // Lattice horizon for the ascent direction; 0 selects default_horizon(d).
  double T = 0.0;
  int conv_resolution = 32;
};

struct AscentStep {
  double step = 0.0;
  double quotient = 0.0;
};

struct AscentState {
  SurfaceDensity density;
  // Objective value; never decreases along the history.
  double quotient = 0.0;
  bool convolution_objective = true;
  // Final density through its interpolant on the convolution route.
  double certified = 0.0;
  double uncertainty = 0.0;
  int iteration = 0;
  bool converged = false;
  std::vector<AscentStep> history;
};

// Lattice on which the ascent direction is computed.
SpaceTimeGrid ascent_lattice(const DiskGrid& grid, const AscentConfig& cfg);
AscentState ascend_R(const SurfaceDensity& init, const ConventionTag& conv, const AscentConfig& cfg = {});

// ── concentration curve and comparison ──────────────────────────────

struct CurvePoint {
  double r = 0.0;
  double quotient = 0.0;
  double uncertainty = 0.0;
};

struct CurveConfig {
  int grid_resolution = 48;
  int conv_resolution = 32;
  Point center = Point{};  // zero selects the north pole
};

// Rescaled Gaussian exp(-8 |u / r|^2) (1 - |u|^2)^{1/4} r^{-d/2} on C(center, min(1/2, 2.12 r)).
SphereFn gaussian_trial(int d, double r, const Point& center);
std::vector<CurvePoint> concentration_curve(int d, const std::vector<double>& radii, const ConventionTag& conv,
                                            const CurveConfig& cfg = {});

enum class Verdict { R_greater, inconclusive, R_P_greater };
std::string verdict_name(Verdict v);
// Throws when the two values carry different conventions.
Verdict compare_constants(const TaggedValue& R, const TaggedValue& R_P);

struct ComparisonConfig {
  int grid_resolution = 0;  // 0 selects 128 for d = 1 and 48 for d = 2
  AscentConfig ascent{.steps = 200};
  std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  CurveConfig curve;
  unsigned long long seed = 7;
};

struct ComparisonReport {
  int d = 1;
  ConventionTag convention;
  RPEstimate rp;
  std::vector<std::string> init_names;
  std::vector<AscentState> ascents;
  // Best certified value over the ascents and the curve points.
  TaggedValue R;
  std::string R_source;
  std::vector<CurvePoint> curve;
  Verdict verdict = Verdict::inconclusive;
};

ComparisonReport comparison_report(int d, const ConventionTag& conv, const ComparisonConfig& cfg = {});

}  // namespace tslab
