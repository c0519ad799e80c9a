#include "tslab/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace tslab {

namespace {

// Largest chord from the centre of C(z, r) to a point of the cap.
double cap_chord(double r) {
  const double th = std::asin(std::min(1.0, r));
  return 2.0 * std::sin(0.5 * th);
}

double chord(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

SphereFn function_of(const SurfaceDensity& f) {
  if (f.source) return f.source;
  return interpolant_function(f);
}

}  // namespace

const CapNet& cached_cap_net(int d, int k) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<CapNet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{d, k}];
  if (!slot) slot = std::make_unique<CapNet>(build_cap_net(d, k));
  return *slot;
}

std::vector<CapIntegralTerm> cap_integrals(const SurfaceDensity& f, int level, double p) {
  const int d = f.d();
  const CapNet& net = cached_cap_net(d, level);
  const double r = net.cap_radius();
  const DiskGrid& G = *f.grid;
  const double reach = cap_chord(r) + cap_chord(G.radius()) + 1e-12;
  const double meas = cap_measure(d, r);

  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < G.size(); ++i)
    if (f.values[i] != 0.0) live.push_back(i);

  std::vector<CapIntegralTerm> out;
  for (std::size_t j = 0; j < net.centers.size(); ++j) {
    if (chord(net.centers[j], G.frame.z, d + 1) > reach) continue;
    const CapSpec cap = net.cap(j);
    double acc = 0.0;
    for (std::size_t i : live)
      if (cap_contains_unchecked(cap, G.points[i])) acc += G.sigma_weights[i] * std::pow(std::abs(f.values[i]), p);
    out.push_back({level, j, meas, acc});
  }
  return out;
}

XpqResult xpq_norm_report(const SurfaceDensity& f, double p, double q, int max_level) {
  if (!(p > 1.0 && p < 2.0)) throw DomainError("xpq_norm: p must lie in (1, 2)");
  if (!(q > 0.0)) throw DomainError("xpq_norm: q must be positive");
  if (max_level < 0) throw DomainError("xpq_norm: negative level");
  XpqResult res;
  double total = 0.0;
  for (int k = 0; k <= max_level; ++k) {
    double s = 0.0;
    for (const auto& t : cap_integrals(f, k, p)) {
      if (t.integral <= 0.0) continue;
      s += std::pow(t.measure, q / 2.0) * std::pow(t.integral / t.measure, q / p);
    }
    res.levels.push_back({k, s});
    total += s;
  }
  res.value = std::pow(total, 1.0 / q);
  return res;
}

double xpq_norm(const SurfaceDensity& f, double p, double q, int max_level) {
  return xpq_norm_report(f, p, q, max_level).value;
}

ConcentrationReport cap_concentration(const SurfaceDensity& f, int max_level) {
  if (max_level < 0) throw DomainError("cap_concentration: negative level");
  const int d = f.d();
  ConcentrationReport rep;
  rep.best_cap = CapSpec(d, north_pole(d), 1.0);
  for (int k = 0; k <= max_level; ++k) {
    const CapNet& net = cached_cap_net(d, k);
    ConcentrationLevel lv;
    lv.level = k;
    lv.cap = CapSpec(d, net.centers.front(), net.cap_radius());
    for (const auto& t : cap_integrals(f, k, 1.0)) {
      const double v = t.integral / std::sqrt(t.measure);
      if (v > lv.value) {
        lv.value = v;
        lv.cap = net.cap(t.index);
      }
    }
    // Ties go to the coarser level.
    if (lv.value > rep.value) {
      rep.value = lv.value;
      rep.best_cap = lv.cap;
      rep.best_level = k;
    }
    rep.levels.push_back(lv);
  }
  return rep;
}

RefinedTriple refined_triple(const SurfaceDensity& f, int max_level, const ConventionTag& conv,
                             const QuotientConfig& qcfg) {
  RefinedTriple t;
  t.l2 = l2_sigma_norm(f);
  if (!(t.l2 > 0.0)) throw DomainError("refined_inequality_report: zero density");
  const QuotientResult q = sphere_quotient(f, conv, qcfg);
  t.extension_norm = q.value * t.l2;
  t.extension_uncertainty = q.uncertainty * t.l2;
  t.concentration = cap_concentration(f, max_level).value;
  return t;
}

double admissible_constant(const RefinedTriple& t, double alpha) {
  return t.extension_norm / (std::pow(t.concentration, alpha) * std::pow(t.l2, 1.0 - alpha));
}

RefinedReport refined_envelope(std::vector<RefinedTriple> members, int n_alpha) {
  if (members.empty()) throw DomainError("refined_envelope: empty corpus");
  RefinedReport rep;
  rep.members = std::move(members);
  for (int k = 1; k <= n_alpha; ++k) {
    const double a = double(k) / (n_alpha + 1);
    double c = 0.0;
    for (const auto& t : rep.members) c = std::max(c, admissible_constant(t, a));
    rep.alphas.push_back(a);
    rep.constants.push_back(c);
  }
  rep.best_alpha = std::size_t(std::min_element(rep.constants.begin(), rep.constants.end()) - rep.constants.begin());
  return rep;
}

Estimate bilinear_interaction(const SurfaceDensity& f1, const CapSpec& c1, const SurfaceDensity& f2,
                              const CapSpec& c2, const ConventionTag& conv, const BilinearConfig& cfg) {
  const int d = f1.d();
  if (f2.d() != d || c1.d != d || c2.d != d) throw DomainError("bilinear_interaction: dimension mismatch");
  if (std::abs(c1.radius - c2.radius) > 1e-12) throw DomainError("bilinear_interaction: caps must share the radius");
  const double ang = std::acos(std::clamp(dot(c1.center, c2.center, d + 1), -1.0, 1.0));
  const double th = std::asin(std::min(1.0, c1.radius));
  if (ang < 2.0 * th * (1.0 - 1e-12)) throw DomainError("bilinear_interaction: caps overlap");
  const double q = cfg.q > 0.0 ? cfg.q : (d + 2.0) / d;

  if (l2_sigma_norm(f1) == 0.0 || l2_sigma_norm(f2) == 0.0) return {0.0, 0.0};

  if (d == 2 && std::abs(q - 2.0) < 1e-14) {
    const SphereFn g1 = function_of(f1), g2 = function_of(f2);
    auto eval = [&](int res) {
      const double l2 = fiber_l2_pair(g1, c1, g2, c2, res);
      return std::sqrt(std::pow(conv.prefactor, 4) * std::pow(2.0 * kPi, 3) * l2);
    };
    const double coarse = eval(cfg.resolution);
    const double fine = eval(cfg.resolution + cfg.resolution / 2);
    return {fine, std::abs(fine - coarse)};
  }

  // Space-time route on a lattice resolving both caps.
  Point zc{};
  for (int i = 0; i <= d; ++i) zc[i] = c1.center[i] + c2.center[i];
  const double zn = norm(zc, d + 1);
  if (zn < 1e-9) throw DomainError("bilinear_interaction: antipodal caps");
  for (int i = 0; i <= d; ++i) zc[i] /= zn;
  const double wr = std::sin(std::min(0.5 * kPi - 1e-3, 0.5 * ang + th));
  const CapSpec window(d, zc, wr);
  const double T = cfg.T > 0.0 ? cfg.T : default_horizon(d);
  const SpaceTimeGrid g = default_lattice(d, T, window, 2.0 * q);
  const SpaceTimeField F1 = extend_sphere(f1, g, conv);
  const SpaceTimeField F2 = extend_sphere(f2, g, conv);
  SpaceTimeField P;
  P.grid = g;
  P.values.resize(F1.values.size());
  for (std::size_t i = 0; i < P.values.size(); ++i) P.values[i] = F1.values[i] * F2.values[i];
  P.tail_estimate = 1.0;
  const NormEstimate n = lp_norm(P, q, d * (q - 1.0));
  return {n.corrected(), 0.5 * n.tail};
}

BilinearDecayFit decay_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DomainError("decay_fit: need at least three points");
  BilinearDecayFit fit;
  double sx = 0.0, sy = 0.0;
  for (const auto& [N, v] : points) {
    if (!(N > 1.0)) throw DomainError("decay_fit: separations must exceed 1");
    if (!(v > 0.0)) throw DomainError("decay_fit: norms must be positive");
    fit.separations.push_back(N);
    fit.norms.push_back(v);
    sx += std::log(N);
    sy += std::log(v);
  }
  const double n = double(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [N, v] : points) {
    const double a = std::log(N) - mx, b = std::log(v) - my;
    sxx += a * a;
    sxy += a * b;
    syy += b * b;
  }
  if (sxx <= 1e-24 * n) throw DomainError("decay_fit: separations are all equal");
  const double slope = sxy / sxx;
  fit.alpha_hat = -slope;
  fit.intercept = my - slope * mx;
  double ss = 0.0;
  for (const auto& [N, v] : points) {
    const double e = std::log(v) - (fit.intercept + slope * std::log(N));
    ss += e * e;
  }
  fit.r2 = syy > 1e-28 * n ? 1.0 - ss / syy : 1.0;
  return fit;
}

std::pair<BumpSpec, BumpSpec> separated_bump_pair(int d, double r, double N, int power) {
  if (!(r > 0.0 && r <= 0.5)) throw DomainError("separated_bump_pair: radius must lie in (0, 1/2]");
  if (!(N * r < 2.0)) throw DomainError("separated_bump_pair: separation exceeds the diameter");
  const double half = std::asin(0.5 * N * r);
  Point z1{}, z2{};
  z1[0] = std::sin(half);
  z1[d] = std::cos(half);
  z2[0] = -std::sin(half);
  z2[d] = std::cos(half);
  BumpSpec a, b;
  a.cap = CapSpec(d, z1, r);
  b.cap = CapSpec(d, z2, r);
  a.power = b.power = power;
  a.coeffs = b.coeffs = {1.0};
  return {a, b};
}

}  // namespace tslab
