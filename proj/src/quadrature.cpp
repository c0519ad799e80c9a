#include "tslab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tslab {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ResolutionError("gauss_legendre: n < 1");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = z;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = wi;
  }
  const double c = 0.5 * (b - a), m = 0.5 * (b + a);
  for (int i = 0; i < n; ++i) {
    x[i] = m + c * x[i];
    w[i] *= c;
  }
  return {x, w};
}

double BallGrid::node_norm2(std::size_t i) const {
  const double* y = node(i);
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += y[j] * y[j];
  return s;
}

namespace {

cplx lagrange(const double* xs, const cplx* vs, int n, double x) {
  cplx num = 0.0;
  double den = 0.0;
  for (int j = 0; j < n; ++j) {
    const double diff = x - xs[j];
    if (diff == 0.0) return vs[j];
    double wj = 1.0;
    for (int k = 0; k < n; ++k)
      if (k != j) wj /= (xs[j] - xs[k]);
    const double c = wj / diff;
    num += c * vs[j];
    den += c;
  }
  return num / den;
}

}  // namespace

cplx BallGrid::interpolate(const std::vector<cplx>& values, const double* y) const {
  if (d == 1) {
    if (std::abs(y[0]) > radius) return 0.0;
    const int panels = nr / kPanel;
    const double h = 2.0 * radius / panels;
    int p = int(std::floor((y[0] + radius) / h));
    p = std::clamp(p, 0, panels - 1);
    return lagrange(nodes.data() + p * kPanel, values.data() + p * kPanel, kPanel, y[0]);
  }
  if (d != 2) throw DomainError("interpolate: unsupported dimension");
  const double rho = std::hypot(y[0], y[1]);
  if (rho > radius) return 0.0;
  const double th = std::atan2(y[1], y[0]);
  std::vector<cplx> ring(nr);
  for (int i = 0; i < nr; ++i) {
    const cplx* v = values.data() + std::size_t(i) * nth;
    cplx s = 0.0;
    bool hit = false;
    for (int j = 0; j < nth && !hit; ++j) {
      const double x = th - 2.0 * kPi * j / nth;
      const double sh = std::sin(0.5 * x);
      if (std::abs(sh) < 1e-15) {
        s = v[j];
        hit = true;
        break;
      }
      s += v[j] * (std::sin(0.5 * nth * x) * std::cos(0.5 * x) / sh / nth);
    }
    ring[i] = s;
  }
  // Radial barycentric interpolation on the Gauss-Legendre radii.
  cplx num = 0.0;
  double den = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double ri = std::sqrt(node_norm2(std::size_t(i) * nth));
    const double diff = rho - ri;
    if (diff == 0.0) return ring[i];
    const double xi = 2.0 * ri / radius - 1.0;
    const double gw = weights[std::size_t(i) * nth] / (ri * 2.0 * kPi / nth) * 2.0 / radius;
    const double bw = ((i % 2) ? -1.0 : 1.0) * std::sqrt((1.0 - xi * xi) * gw);
    const double c = bw / diff;
    num += c * ring[i];
    den += c;
  }
  return num / den;
}

BallInterpolant::BallInterpolant(const BallGrid& g, const std::vector<cplx>& values)
    : d_(g.d), nr_(g.nr), nth_(g.nth), radius_(g.radius) {
  if (values.size() != g.size()) throw DomainError("BallInterpolant: sample count does not match the grid");
  if (d_ == 1) {
    nodes_ = g.nodes;
    values_ = values;
    return;
  }
  if (d_ != 2) throw DomainError("BallInterpolant: unsupported dimension");
  const int m = nth_ / 2;
  const int width = 2 * m;  // 2m - 1 exponentials and the Nyquist cosine
  coeffs_.assign(std::size_t(nr_) * width, 0.0);
  for (int i = 0; i < nr_; ++i) {
    const cplx* v = values.data() + std::size_t(i) * nth_;
    cplx* c = coeffs_.data() + std::size_t(i) * width;
    for (int k = -(m - 1); k <= m - 1; ++k) {
      cplx acc = 0.0;
      for (int j = 0; j < nth_; ++j) acc += v[j] * std::polar(1.0, -2.0 * kPi * k * j / nth_);
      c[k + m - 1] = acc / double(nth_);
    }
    cplx alt = 0.0;
    for (int j = 0; j < nth_; ++j) alt += (j % 2 ? -1.0 : 1.0) * v[j];
    c[width - 1] = alt / double(nth_);
    const double ri = std::sqrt(g.node_norm2(std::size_t(i) * nth_));
    const double xi = 2.0 * ri / radius_ - 1.0;
    const double gw = g.weights[std::size_t(i) * nth_] / (ri * 2.0 * kPi / nth_) * 2.0 / radius_;
    radii_.push_back(ri);
    bary_.push_back(((i % 2) ? -1.0 : 1.0) * std::sqrt((1.0 - xi * xi) * gw));
  }
}

cplx BallInterpolant::operator()(const double* y) const {
  if (d_ == 1) {
    if (std::abs(y[0]) > radius_) return 0.0;
    const int panels = nr_ / BallGrid::kPanel;
    const double h = 2.0 * radius_ / panels;
    const int p = std::clamp(int(std::floor((y[0] + radius_) / h)), 0, panels - 1);
    return lagrange(nodes_.data() + p * BallGrid::kPanel, values_.data() + p * BallGrid::kPanel, BallGrid::kPanel, y[0]);
  }
  const double rho = std::hypot(y[0], y[1]);
  if (rho > radius_) return 0.0;
  const int m = nth_ / 2;
  const int width = 2 * m;
  const double th = std::atan2(y[1], y[0]);
  // e^{ik theta} for k = -(m-1)..(m-1)
  thread_local std::vector<cplx> e;
  e.resize(std::size_t(width - 1));
  const cplx step = std::polar(1.0, th);
  e[m - 1] = 1.0;
  for (int k = 1; k < m; ++k) {
    e[m - 1 + k] = e[m - 2 + k] * step;
    e[m - 1 - k] = std::conj(e[m - 1 + k]);
  }
  const double nyq = std::cos(m * th);
  cplx num = 0.0;
  double den = 0.0;
  for (int i = 0; i < nr_; ++i) {
    const cplx* c = coeffs_.data() + std::size_t(i) * width;
    cplx ring = c[width - 1] * nyq;
    for (int k = 0; k < width - 1; ++k) ring += c[k] * e[k];
    const double diff = rho - radii_[i];
    if (diff == 0.0) return ring;
    const double w = bary_[i] / diff;
    num += w * ring;
    den += w;
  }
  return num / den;
}

BallGrid build_ball_grid(int d, int n, double radius) {
  if (n < 8) throw ResolutionError("build_ball_grid: resolution n must be >= 8");
  if (!(radius > 0.0)) throw DomainError("build_ball_grid: radius must be positive");
  BallGrid g;
  g.d = d;
  g.radius = radius;
  if (d == 1) {
    const int panels = (n + BallGrid::kPanel - 1) / BallGrid::kPanel;
    const double h = 2.0 * radius / panels;
    for (int p = 0; p < panels; ++p) {
      auto [x, w] = gauss_legendre(BallGrid::kPanel, -radius + p * h, -radius + (p + 1) * h);
      g.nodes.insert(g.nodes.end(), x.begin(), x.end());
      g.weights.insert(g.weights.end(), w.begin(), w.end());
    }
    g.nr = panels * BallGrid::kPanel;
    g.nth = 1;
  } else if (d == 2) {
    g.nr = std::max(4, n / 2);
    g.nth = std::max(8, n + (n % 2));
    auto [r, w] = gauss_legendre(g.nr, 0.0, radius);
    for (int i = 0; i < g.nr; ++i)
      for (int j = 0; j < g.nth; ++j) {
        const double th = 2.0 * kPi * j / g.nth;
        g.nodes.push_back(r[i] * std::cos(th));
        g.nodes.push_back(r[i] * std::sin(th));
        g.weights.push_back(w[i] * r[i] * 2.0 * kPi / g.nth);
      }
  } else {
    throw DomainError("build_ball_grid: unsupported dimension");
  }
  return g;
}

double DiskGrid::sigma_mass() const {
  double s = 0.0;
  for (double w : sigma_weights) s += w;
  return s;
}

bool DiskGrid::locate(const Point& p, double* u) const {
  if (dot(p, frame.z, d + 1) < 0.0) return false;
  frame.to_plane(p, u);
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += u[j] * u[j];
  return std::sqrt(s) <= radius();
}

namespace {

DiskGrid build_patch(const Frame& frame, int n, double radius) {
  if (!(radius > 0.0 && radius < 1.0)) throw DomainError("disk grid: patch radius must lie in (0,1)");
  DiskGrid g;
  g.d = frame.d;
  g.frame = frame;
  g.ball = build_ball_grid(frame.d, n, radius);
  g.sigma_weights.resize(g.ball.size());
  g.points.resize(g.ball.size());
  for (std::size_t i = 0; i < g.ball.size(); ++i) {
    g.sigma_weights[i] = g.ball.weights[i] / std::sqrt(1.0 - g.ball.node_norm2(i));
    g.points[i] = frame.lift(g.ball.node(i));
  }
  return g;
}

}  // namespace

DiskGrid build_disk_grid(int d, int n) { return build_patch(make_frame(d, north_pole(d)), n, 0.5); }

DiskGrid build_cap_grid(const CapSpec& cap, int n) {
  return build_patch(make_frame(cap.d, cap.center), n, std::min(cap.radius, 0.999));
}

cplx SurfaceDensity::at(const Point& p) const {
  if (source) return source(p);
  double u[kMaxAmbient];
  if (!grid->locate(p, u)) return 0.0;
  return grid->ball.interpolate(values, u);
}

CapSpec SurfaceDensity::window() const {
  if (support) return *support;
  return CapSpec(grid->d, grid->frame.z, std::min(1.0, grid->radius()));
}

SphereFn interpolant_function(const SurfaceDensity& f) {
  auto grid = f.grid;
  auto in = std::make_shared<const BallInterpolant>(grid->ball, f.values);
  return [grid, in](const Point& p) -> cplx {
    double u[kMaxAmbient];
    if (!grid->locate(p, u)) return 0.0;
    return (*in)(u);
  };
}

SurfaceDensity sample_density(std::shared_ptr<const DiskGrid> grid, SphereFn fn, std::optional<CapSpec> support) {
  SurfaceDensity f;
  f.values.resize(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) f.values[i] = fn(grid->points[i]);
  f.grid = std::move(grid);
  f.source = std::move(fn);
  f.support = support;
  return f;
}

SurfaceDensity reflect_to_pole(const SurfaceDensity& f) {
  const int d = f.d();
  const CapSpec w = f.window();
  Point v = w.center;
  v[d] -= 1.0;
  const double vv = dot(v, v, d + 1);
  if (vv < 1e-28) return f;
  // Householder reflection swapping the window center and the north pole.
  auto H = [v, vv, d](const Point& p) {
    Point q = p;
    const double a = 2.0 * dot(v, p, d + 1) / vv;
    for (int i = 0; i <= d; ++i) q[i] -= a * v[i];
    return q;
  };
  auto g = std::make_shared<DiskGrid>(*f.grid);
  g->frame.z = H(g->frame.z);
  for (int j = 0; j < d; ++j) g->frame.basis[j] = H(g->frame.basis[j]);
  for (auto& p : g->points) p = H(p);
  SurfaceDensity out;
  out.grid = g;
  out.values = f.values;
  if (f.source) out.source = [src = f.source, H](const Point& p) { return src(H(p)); };
  out.support = CapSpec(d, north_pole(d), w.radius);
  return out;
}

SurfaceDensity zero_density(std::shared_ptr<const DiskGrid> grid) {
  SurfaceDensity f;
  f.values.assign(grid->size(), 0.0);
  f.grid = std::move(grid);
  f.source = [](const Point&) { return cplx(0.0); };
  return f;
}

SurfaceDensity scaled(const SurfaceDensity& f, cplx c) {
  SurfaceDensity g = f;
  for (auto& v : g.values) v *= c;
  if (f.source) {
    auto src = f.source;
    g.source = [src, c](const Point& p) { return c * src(p); };
  }
  return g;
}

double l2_sigma_norm(const SurfaceDensity& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.grid->sigma_weights[i] * std::norm(f.values[i]);
  return std::sqrt(s);
}

double l1_sigma_norm(const SurfaceDensity& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.grid->sigma_weights[i] * std::abs(f.values[i]);
  return s;
}

// ── space-time lattices ──────────────────────────────────────────────

std::size_t SpaceTimeGrid::slab_size() const {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= std::size_t(nx);
  return s;
}

double SpaceTimeGrid::time_weight(int kt) const {
  return (kt == 0 || kt == nt - 1) ? 0.5 * ht() : ht();
}

double SpaceTimeGrid::space_weight(std::size_t ix) const {
  double w = 1.0;
  const double h = hx();
  for (int i = 0; i < d; ++i) {
    const int k = int(ix % nx);
    ix /= nx;
    w *= (k == 0 || k == nx - 1) ? 0.5 * h : h;
  }
  return w;
}

void SpaceTimeGrid::space_point(std::size_t ix, double* xs) const {
  for (int i = 0; i < d; ++i) {
    xs[i] = x(int(ix % nx));
    ix /= nx;
  }
}

SpaceTimeGrid make_lattice(int d, double T, double X, int nt, int nx) {
  if (d < 1 || d > 3) throw DomainError("lattice: unsupported dimension");
  if (nt < 2 || nx < 2 || !(T > 0.0) || !(X > 0.0)) throw ResolutionError("lattice: degenerate truncation box");
  SpaceTimeGrid g;
  g.d = d;
  g.T = T;
  g.X = X;
  g.nt = nt;
  g.nx = nx;
  g.cell_weight = g.ht() * std::pow(g.hx(), d);
  return g;
}

SpaceTimeGrid lattice_from_spacing(int d, double T, double X, double ht, double hx) {
  const int mt = std::max(1, int(std::ceil(T / ht - 1e-9)));
  const int mx = std::max(1, int(std::ceil(X / hx - 1e-9)));
  return make_lattice(d, mt * ht, mx * hx, 2 * mt + 1, 2 * mx + 1);
}

std::vector<double> slab_integrals(const SpaceTimeField& field, double p) {
  const auto& g = field.grid;
  const std::size_t m = g.slab_size();
  std::vector<double> sw(m);
  for (std::size_t ix = 0; ix < m; ++ix) sw[ix] = g.space_weight(ix);
  std::vector<double> s(g.nt, 0.0);
  for (int kt = 0; kt < g.nt; ++kt) {
    const cplx* v = field.values.data() + kt * m;
    double acc = 0.0;
    for (std::size_t ix = 0; ix < m; ++ix) acc += sw[ix] * std::pow(std::abs(v[ix]), p);
    s[kt] = acc;
  }
  return s;
}

double slab_tail(const SpaceTimeGrid& g, const std::vector<double>& slabs, double gamma) {
  if (gamma <= 1.0) return std::numeric_limits<double>::infinity();
  // Per side, least squares S(t) ~ C |t|^{-gamma} + D |t|^{-gamma-2} over |t| in [T/2, T].
  double tail = 0.0;
  for (int side : {-1, 1}) {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
    int count = 0;
    for (int kt = 0; kt < g.nt; ++kt) {
      const double t = g.t(kt);
      if (t * side < 0.5 * g.T) continue;
      const double at = std::abs(t);
      const double p1 = std::pow(at, -gamma), p2 = std::pow(at, -gamma - 2.0);
      // Relative least squares: weight each slab by S^{-2}.
      const double w = slabs[kt] > 0.0 ? 1.0 / (slabs[kt] * slabs[kt]) : 0.0;
      a11 += w * p1 * p1;
      a12 += w * p1 * p2;
      a22 += w * p2 * p2;
      b1 += w * p1 * slabs[kt];
      b2 += w * p2 * slabs[kt];
      ++count;
    }
    if (count == 0) continue;
    double C = 0.0, D = 0.0;
    const double det = a11 * a22 - a12 * a12;
    if (count >= 3 && std::abs(det) > 1e-14 * a11 * a22) {
      C = (b1 * a22 - b2 * a12) / det;
      D = (a11 * b2 - a12 * b1) / det;
    } else if (a11 > 0.0) {
      C = b1 / a11;
    }
    double part = C * std::pow(g.T, 1.0 - gamma) / (gamma - 1.0) + D * std::pow(g.T, -1.0 - gamma) / (gamma + 1.0);
    // The leading-order envelope alone serves as a fallback when the two-term fit is not credible.
    if (!(part > 0.0)) part = std::max(0.0, (a11 > 0.0 ? b1 / a11 : 0.0) * std::pow(g.T, 1.0 - gamma) / (gamma - 1.0));
    tail += part;
  }
  return tail;
}

NormEstimate lp_norm(const SpaceTimeField& field, double p, double tail_gamma) {
  if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1");
  if (field.values.empty() || field.values.size() != field.grid.size()) throw DomainError("lp_norm: empty field");
  const auto slabs = slab_integrals(field, p);
  double total = 0.0;
  for (int kt = 0; kt < field.grid.nt; ++kt) total += field.grid.time_weight(kt) * slabs[kt];
  NormEstimate e;
  e.value = std::pow(total, 1.0 / p);
  e.resolution = std::max(field.grid.ht(), field.grid.hx());
  if (field.tail_estimate > 0.0) {
    const double gamma = tail_gamma > 0.0 ? tail_gamma : field.grid.d * (p - 2.0) / 2.0;
    const double tp = slab_tail(field.grid, slabs, gamma);
    e.tail = std::isfinite(tp) ? std::pow(total + tp, 1.0 / p) - e.value : tp;
  }
  return e;
}

double envelope_amplitude(const SpaceTimeField& field) {
  const auto& g = field.grid;
  const std::size_t m = g.slab_size();
  double a = 0.0;
  for (int kt = 0; kt < g.nt; ++kt) {
    const double t = g.t(kt);
    if (std::abs(t) < 0.75 * g.T) continue;
    double mx = 0.0;
    for (std::size_t ix = 0; ix < m; ++ix) mx = std::max(mx, std::abs(field.values[kt * m + ix]));
    a = std::max(a, mx * std::pow(std::abs(t), g.d / 2.0));
  }
  return a;
}

}  // namespace tslab
