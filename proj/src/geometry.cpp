#include "tslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "tslab/quadrature.hpp"

namespace tslab {

CapSpec::CapSpec(int dim, const Point& z, double r) : d(dim), center(z), radius(r) {
  if (d < 1 || d > kMaxAmbient - 1) throw DomainError("cap: unsupported dimension");
  if (std::abs(norm(center, d + 1) - 1.0) > 1e-12) throw DomainError("cap: center is not a unit vector");
  if (!(radius > 0.0 && radius <= 1.0)) throw DomainError("cap: radius outside (0,1]");
}

void Frame::to_plane(const Point& p, double* u) const {
  for (int j = 0; j < d; ++j) u[j] = dot(basis[j], p, d + 1);
}

Point Frame::lift(const double* u) const {
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += u[j] * u[j];
  const double h = std::sqrt(std::max(0.0, 1.0 - s));
  Point p{};
  for (int i = 0; i <= d; ++i) {
    double v = h * z[i];
    for (int j = 0; j < d; ++j) v += u[j] * basis[j][i];
    p[i] = v;
  }
  return p;
}

Frame make_frame(int d, const Point& z) {
  Frame f;
  f.d = d;
  f.z = z;
  // Gram-Schmidt of the standard basis against z, skipping the axis most aligned with z.
  int skip = 0;
  for (int i = 1; i <= d; ++i)
    if (std::abs(z[i]) > std::abs(z[skip])) skip = i;
  int m = 0;
  for (int i = 0; i <= d && m < d; ++i) {
    if (i == skip) continue;
    Point v{};
    v[i] = 1.0;
    const double a = dot(v, z, d + 1);
    for (int k = 0; k <= d; ++k) v[k] -= a * z[k];
    for (int j = 0; j < m; ++j) {
      const double b = dot(v, f.basis[j], d + 1);
      for (int k = 0; k <= d; ++k) v[k] -= b * f.basis[j][k];
    }
    const double n = norm(v, d + 1);
    for (int k = 0; k <= d; ++k) v[k] /= n;
    f.basis[m++] = v;
  }
  return f;
}

bool cap_contains_unchecked(const CapSpec& cap, const Point& p) {
  const int n = cap.d + 1;
  const double a = dot(p, cap.center, n);
  if (a < 0.0) return false;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = p[i] - a * cap.center[i];
    s += q * q;
  }
  return std::sqrt(s) < cap.radius;
}

bool cap_contains(const CapSpec& cap, const Point& p) {
  if (std::abs(norm(p, cap.d + 1) - 1.0) > 1e-9) throw DomainError("cap_contains: point is not on the sphere");
  return cap_contains_unchecked(cap, p);
}

double cap_measure(int d, double r) {
  const double a = std::asin(std::min(1.0, r));
  switch (d) {
    case 1: return 2.0 * a;
    case 2: return 2.0 * kPi * (1.0 - std::cos(a));
    case 3: return 4.0 * kPi * (a / 2.0 - std::sin(2.0 * a) / 4.0);
    default: throw DomainError("cap_measure: unsupported dimension");
  }
}

Point rescaled_map(const CapSpec& cap, const double* y) {
  double s = 0.0;
  for (int j = 0; j < cap.d; ++j) s += y[j] * y[j];
  if (std::sqrt(s) * cap.radius >= 1.0) throw DomainError("rescaled_map: |y| >= 1/r");
  const Frame f = make_frame(cap.d, cap.center);
  double u[kMaxAmbient];
  for (int j = 0; j < cap.d; ++j) u[j] = cap.radius * y[j];
  return f.lift(u);
}

void inverse_rescaled_map(const CapSpec& cap, const Point& p, double* y) {
  const Frame f = make_frame(cap.d, cap.center);
  f.to_plane(p, y);
  for (int j = 0; j < cap.d; ++j) y[j] /= cap.radius;
}

std::vector<cplx> pullback(const CapSpec& cap, const SurfaceDensity& f, const BallGrid& grid) {
  if (grid.d != cap.d) throw DomainError("pullback: dimension mismatch");
  const Frame fr = make_frame(cap.d, cap.center);
  const double scale = std::pow(cap.radius, cap.d / 2.0);
  std::vector<cplx> out(grid.size(), 0.0);
  double u[kMaxAmbient];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double* y = grid.node(i);
    double s = 0.0;
    for (int j = 0; j < cap.d; ++j) {
      u[j] = cap.radius * y[j];
      s += u[j] * u[j];
    }
    if (s >= 1.0) continue;
    out[i] = scale * f.at(fr.lift(u));
  }
  return out;
}

// ── nets ─────────────────────────────────────────────────────────────

double CapNet::cap_radius() const { return std::min(1.0, 2.0 * separation); }

namespace {

struct SpatialHash {
  double cell;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;

  explicit SpatialHash(double c) : cell(c) {}

  static std::int64_t key(std::int64_t a, std::int64_t b, std::int64_t c) {
    return (a + (1 << 20)) * (std::int64_t(1) << 42) + (b + (1 << 20)) * (std::int64_t(1) << 21) + (c + (1 << 20));
  }
  std::array<std::int64_t, 3> coords(const Point& p) const {
    return {std::int64_t(std::floor(p[0] / cell)), std::int64_t(std::floor(p[1] / cell)),
            std::int64_t(std::floor(p[2] / cell))};
  }
  void insert(const Point& p, std::size_t id) {
    const auto c = coords(p);
    buckets[key(c[0], c[1], c[2])].push_back(id);
  }
  template <class Fn>
  void visit(const Point& p, int reach, Fn&& fn) const {
    const auto c = coords(p);
    for (int a = -reach; a <= reach; ++a)
      for (int b = -reach; b <= reach; ++b)
        for (int e = -reach; e <= reach; ++e) {
          auto it = buckets.find(key(c[0] + a, c[1] + b, c[2] + e));
          if (it == buckets.end()) continue;
          for (std::size_t id : it->second) fn(id);
        }
  }
};

double dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < kMaxAmbient; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<Point> net_candidates(int d, std::size_t count) {
  std::vector<Point> out;
  out.reserve(count);
  if (d == 1) {
    for (std::size_t j = 0; j < count; ++j) {
      const double th = 2.0 * kPi * double(j) / double(count);
      Point p{};
      p[0] = std::sin(th);
      p[1] = std::cos(th);
      out.push_back(p);
    }
  } else {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double zc = 1.0 - (2.0 * i + 1.0) / double(count);
      const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      const double ph = golden * double(i);
      Point p{};
      p[0] = rr * std::cos(ph);
      p[1] = rr * std::sin(ph);
      p[2] = zc;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

CapNet build_cap_net(int d, int k, const NetConfig& cfg) {
  if (d != 1 && d != 2) throw DomainError("build_cap_net: d must be 1 or 2");
  if (k < 0) throw DomainError("build_cap_net: negative level");
  CapNet net;
  net.d = d;
  net.level = k;
  net.separation = std::ldexp(1.0, -k);
  const double sep = net.separation;
  const double measure = d == 1 ? 2.0 * kPi : 4.0 * kPi;
  const double coarse = std::ceil(cfg.candidate_density * measure / std::pow(sep, d));
  // A second, finer pass fills the residual holes left by the coarse sweep.
  const double fine = coarse * (d == 1 ? 4.0 : 4.0);
  if (coarse + fine > double(cfg.max_candidates))
    throw ResolutionError("build_cap_net: level " + std::to_string(k) + " too deep for the configured candidate density");

  SpatialHash hash(sep);
  for (const auto& batch : {net_candidates(d, std::size_t(coarse)), net_candidates(d, std::size_t(fine))}) {
    for (const Point& p : batch) {
      bool ok = true;
      hash.visit(p, 1, [&](std::size_t id) {
        if (ok && dist(p, net.centers[id]) <= sep) ok = false;
      });
      if (!ok) continue;
      hash.insert(p, net.centers.size());
      net.centers.push_back(p);
    }
  }
  return net;
}

std::vector<Point> random_sphere_points(int d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point> out(n);
  for (auto& p : out) {
    double s = 0.0;
    for (int i = 0; i <= d; ++i) {
      p[i] = g(rng);
      s += p[i] * p[i];
    }
    s = std::sqrt(s);
    for (int i = 0; i <= d; ++i) p[i] /= s;
  }
  return out;
}

NetCertificate certify_net(const CapNet& net, const std::vector<Point>& samples) {
  NetCertificate c;
  const double sep = net.separation;
  SpatialHash hash(sep);
  for (std::size_t i = 0; i < net.centers.size(); ++i) hash.insert(net.centers[i], i);

  c.min_separation = 4.0;
  for (std::size_t i = 0; i < net.centers.size(); ++i)
    hash.visit(net.centers[i], 1, [&](std::size_t j) {
      if (j != i) c.min_separation = std::min(c.min_separation, dist(net.centers[i], net.centers[j]));
    });

  const double rad = net.cap_radius();
  // Caps of radius rad lie within chord sqrt(2) * rad of their centre.
  SpatialHash wide(std::sqrt(2.0) * rad);
  for (std::size_t i = 0; i < net.centers.size(); ++i) wide.insert(net.centers[i], i);
  for (const Point& p : samples) {
    double best = 4.0;
    hash.visit(p, 2, [&](std::size_t j) { best = std::min(best, dist(p, net.centers[j])); });
    if (best > 2.0 * sep) {
      for (const Point& z : net.centers) best = std::min(best, dist(p, z));
    }
    c.covering_radius = std::max(c.covering_radius, best);
    int count = 0;
    wide.visit(p, 1, [&](std::size_t j) { count += cap_contains_unchecked(net.cap(j), p) ? 1 : 0; });
    c.max_overlap = std::max(c.max_overlap, count);
  }
  return c;
}

// ── Whitney pairs ────────────────────────────────────────────────────

namespace {
int floor_half(int i) { return i >= 0 ? i / 2 : -((-i + 1) / 2); }
}  // namespace

bool cubes_adjacent(const DyadicCube& a, const DyadicCube& b, int d) {
  if (a.level != b.level) return false;
  for (int i = 0; i < d; ++i)
    if (std::abs(a.index[i] - b.index[i]) > 1) return false;
  return true;
}

DyadicCube parent(const DyadicCube& c, int d) {
  DyadicCube p;
  p.level = c.level - 1;
  for (int i = 0; i < d; ++i) p.index[i] = floor_half(c.index[i]);
  return p;
}

bool whitney_related(const DyadicCube& a, const DyadicCube& b, int d) {
  if (a.level != b.level || a.level < 1) return false;
  return !cubes_adjacent(a, b, d) && cubes_adjacent(parent(a, d), parent(b, d), d);
}

bool cube_contains(const DyadicCube& c, const double* a, int d) {
  const double h = std::ldexp(1.0, -c.level);
  for (int i = 0; i < d; ++i) {
    const double lo = c.index[i] * h;
    if (a[i] < lo || a[i] >= lo + h) return false;
  }
  return true;
}

WhitneyDecomposition whitney_pairs(int d, int depth) {
  if (depth < 1) throw DomainError("whitney_pairs: depth must be >= 1");
  if (d < 1 || d > 3) throw DomainError("whitney_pairs: unsupported dimension");
  WhitneyDecomposition w;
  w.d = d;
  w.depth = depth;
  // Level depth+1 is needed so that every pair with max_i |a_i - b_i| >= 2^{-depth} is covered.
  w.finest_level = depth + 1;
  w.unresolved_width = std::ldexp(1.0, -depth);
  for (int j = 1; j <= w.finest_level; ++j) {
    const int half = 1 << (j - 1);
    const int side = 2 * half;
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= side;
    std::vector<DyadicCube> cubes(count);
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t rem = c;
      cubes[c].level = j;
      for (int i = 0; i < d; ++i) {
        cubes[c].index[i] = int(rem % side) - half;
        rem /= side;
      }
    }
    for (const auto& a : cubes)
      for (const auto& b : cubes)
        if (whitney_related(a, b, d)) w.pairs.push_back({a, b, j});
  }
  return w;
}

WhitneyCensus whitney_census(const WhitneyDecomposition& w, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  const int d = w.d;
  WhitneyCensus c;
  c.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    double a[3] = {0, 0, 0}, b[3] = {0, 0, 0};
    double gap = 0.0;
    for (int i = 0; i < d; ++i) {
      a[i] = U(rng);
      b[i] = U(rng);
      gap = std::max(gap, std::abs(a[i] - b[i]));
    }
    std::size_t hits = 0;
    for (const auto& p : w.pairs)
      if (cube_contains(p.first, a, d) && cube_contains(p.second, b, d)) ++hits;
    const bool resolved = gap >= w.unresolved_width;
    if (resolved) ++c.resolved;
    if (resolved && hits == 0) ++c.uncovered;
    if (!resolved && hits > 0) ++c.coarse_only;
    if (hits > 1) ++c.multiple;
  }
  return c;
}

}  // namespace tslab
