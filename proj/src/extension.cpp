#include "tslab/extension.hpp"

#include <algorithm>
#include <cmath>

namespace tslab {

namespace {

// out[kt, x] += sum_n coef_n(kt) exp(i s (x . y_n + t h_n)); y given by d coordinates per node.
template <class CoefFn>
void lattice_sum(int d, const std::vector<double>& ys, const std::vector<double>& hs, CoefFn&& coef, int s,
                 const SpaceTimeGrid& g, std::vector<cplx>& out) {
  const std::size_t nn = hs.size();
  const std::size_t m = g.slab_size();
  const double hx = g.hx();
  const int nx = g.nx;
  out.assign(g.size(), 0.0);
  std::vector<cplx> c(nn);
  for (int kt = 0; kt < g.nt; ++kt) {
    const double t = g.t(kt);
    coef(kt, c);
    cplx* o = out.data() + kt * m;
    for (std::size_t n = 0; n < nn; ++n) {
      if (c[n] == 0.0) continue;
      const double* y = ys.data() + n * d;
      double ph = t * hs[n];
      for (int j = 0; j < d; ++j) ph += -g.X * y[j];
      const cplx a0 = c[n] * std::polar(1.0, s * ph);
      if (d == 1) {
        const cplx e1 = std::polar(1.0, s * hx * y[0]);
        cplx a = a0;
        for (int k = 0; k < nx; ++k) {
          o[k] += a;
          a *= e1;
        }
      } else if (d == 2) {
        const cplx e1 = std::polar(1.0, s * hx * y[0]);
        const cplx e2 = std::polar(1.0, s * hx * y[1]);
        cplx a = a0;
        for (int k2 = 0; k2 < nx; ++k2) {
          cplx row = a;
          cplx* orow = o + std::size_t(k2) * nx;
          for (int k1 = 0; k1 < nx; ++k1) {
            orow[k1] += row;
            row *= e1;
          }
          a *= e2;
        }
      } else {
        double xs[kMaxAmbient];
        for (std::size_t ix = 0; ix < m; ++ix) {
          g.space_point(ix, xs);
          double q = t * hs[n];
          for (int j = 0; j < d; ++j) q += xs[j] * y[j];
          o[ix] += c[n] * std::polar(1.0, s * q);
        }
      }
    }
  }
}

double chord_of(double r) { return std::sqrt(std::max(0.0, 2.0 - 2.0 * std::sqrt(1.0 - r * r))); }

}  // namespace

SpaceTimeField extend_sphere(const SurfaceDensity& f, const SpaceTimeGrid& grid, const ConventionTag& conv) {
  const int d = f.d();
  if (grid.d != d) throw DomainError("extend_sphere: dimension mismatch");
  const auto& G = *f.grid;
  std::vector<double> ys(G.size() * d), hs(G.size());
  std::vector<cplx> base(G.size());
  for (std::size_t n = 0; n < G.size(); ++n) {
    for (int j = 0; j < d; ++j) ys[n * d + j] = G.points[n][j];
    hs[n] = G.points[n][d];
    base[n] = conv.prefactor * G.sigma_weights[n] * f.values[n];
  }
  SpaceTimeField out;
  out.grid = grid;
  lattice_sum(d, ys, hs, [&](int, std::vector<cplx>& c) { c = base; }, conv.sign, grid, out.values);
  out.tail_estimate = envelope_amplitude(out);
  return out;
}

cplx extend_at(const SurfaceDensity& f, const Point& xi, const ConventionTag& conv) {
  const auto& G = *f.grid;
  const int n = f.d() + 1;
  cplx acc = 0.0;
  for (std::size_t i = 0; i < G.size(); ++i)
    acc += G.sigma_weights[i] * f.values[i] * std::polar(1.0, conv.sign * dot(xi, G.points[i], n));
  return conv.prefactor * acc;
}

std::vector<cplx> restrict_field(const SpaceTimeField& field, const DiskGrid& G, const ConventionTag& conv) {
  const auto& g = field.grid;
  const int d = g.d;
  const std::size_t m = g.slab_size();
  const int nx = g.nx;
  const double hx = g.hx();
  std::vector<cplx> wg(field.values.size());
  for (int kt = 0; kt < g.nt; ++kt) {
    const double tw = g.time_weight(kt);
    for (std::size_t ix = 0; ix < m; ++ix) wg[kt * m + ix] = tw * g.space_weight(ix) * field.values[kt * m + ix];
  }
  const int s = -conv.sign;
  std::vector<cplx> out(G.size());
  for (std::size_t n = 0; n < G.size(); ++n) {
    const Point& w = G.points[n];
    cplx acc = 0.0;
    for (int kt = 0; kt < g.nt; ++kt) {
      double ph = g.t(kt) * w[d];
      for (int j = 0; j < d; ++j) ph += -g.X * w[j];
      const cplx a0 = std::polar(1.0, s * ph);
      const cplx* v = wg.data() + kt * m;
      if (d == 1) {
        const cplx e1 = std::polar(1.0, s * hx * w[0]);
        cplx a = a0;
        for (int k = 0; k < nx; ++k) {
          acc += a * v[k];
          a *= e1;
        }
      } else if (d == 2) {
        const cplx e1 = std::polar(1.0, s * hx * w[0]);
        const cplx e2 = std::polar(1.0, s * hx * w[1]);
        cplx a = a0;
        for (int k2 = 0; k2 < nx; ++k2) {
          cplx row = a;
          const cplx* vr = v + std::size_t(k2) * nx;
          cplx racc = 0.0;
          for (int k1 = 0; k1 < nx; ++k1) {
            racc += row * vr[k1];
            row *= e1;
          }
          acc += racc;
          a *= e2;
        }
      } else {
        double xs[kMaxAmbient];
        for (std::size_t ix = 0; ix < m; ++ix) {
          g.space_point(ix, xs);
          double q = g.t(kt) * w[d];
          for (int j = 0; j < d; ++j) q += xs[j] * w[j];
          acc += std::polar(1.0, s * q) * v[ix];
        }
      }
    }
    out[n] = std::conj(conv.prefactor) * acc;
  }
  return out;
}

SpaceTimeField schrodinger_evolve(const BallGrid& grid, const std::vector<cplx>& phi, const SpaceTimeGrid& lattice) {
  const int d = grid.d;
  if (lattice.d != d) throw DomainError("schrodinger_evolve: dimension mismatch");
  std::vector<double> hs(grid.size());
  std::vector<cplx> base(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    hs[n] = -0.5 * grid.node_norm2(n);
    base[n] = grid.weights[n] * phi[n];
  }
  SpaceTimeField out;
  out.grid = lattice;
  lattice_sum(d, grid.nodes, hs, [&](int, std::vector<cplx>& c) { c = base; }, +1, lattice, out.values);
  out.tail_estimate = envelope_amplitude(out);
  return out;
}

cplx schrodinger_at(const BallGrid& grid, const std::vector<cplx>& phi, double t, const double* x) {
  cplx acc = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const double* y = grid.node(n);
    double ph = -0.5 * t * grid.node_norm2(n);
    for (int j = 0; j < grid.d; ++j) ph += x[j] * y[j];
    acc += grid.weights[n] * phi[n] * std::polar(1.0, ph);
  }
  return acc;
}

// Completing the square: int e^{i x y - (1 + i t) y^2 / 2} dy = sqrt(2 pi / (1 + i t)) e^{-x^2 / (2 (1 + i t))}
// per coordinate, with the principal branch of the square root.
cplx gaussian_evolution_analytic(int d, double t, const double* x) {
  const cplx a(1.0, t);
  double r2 = 0.0;
  for (int j = 0; j < d; ++j) r2 += x[j] * x[j];
  return std::pow(std::sqrt(2.0 * kPi / a), d) * std::exp(-r2 / (2.0 * a));
}

// |U|^p = (2 pi)^{dp/2} (1+t^2)^{-dp/4} exp(-p |x|^2 / (2 (1+t^2))), integrated coordinatewise.
double gaussian_slab_integral(int d, double p, double t, double X) {
  const double s = 1.0 + t * t;
  const double one = std::sqrt(2.0 * kPi * s / p) * std::erf(X * std::sqrt(p / (2.0 * s)));
  return std::pow(2.0 * kPi, d * p / 2.0) * std::pow(s, -d * p / 4.0) * std::pow(one, d);
}

double gaussian_truncated_integral(int d, double p, double T, double X) {
  // Composite Gauss-Legendre in t; the integrand is analytic in a strip around the real axis.
  const int panels = std::max(64, int(std::ceil(T * 4.0)));
  const double h = T / panels;
  auto [x, w] = gauss_legendre(20, 0.0, 1.0);
  double acc = 0.0;
  for (int k = 0; k < panels; ++k)
    for (std::size_t i = 0; i < x.size(); ++i) acc += h * w[i] * gaussian_slab_integral(d, p, (k + x[i]) * h, X);
  return 2.0 * acc;
}

// int (1+t^2)^{-a} dt = sqrt(pi) Gamma(a - 1/2) / Gamma(a), a = d (p - 2) / 4.
double gaussian_total_integral(int d, double p) {
  const double a = d * (p - 2.0) / 4.0;
  if (a <= 0.5) throw DomainError("gaussian_total_integral: divergent time integral");
  const double time = std::sqrt(kPi) * std::exp(std::lgamma(a - 0.5) - std::lgamma(a));
  return std::pow(2.0 * kPi, d * p / 2.0) * std::pow(2.0 * kPi / p, d / 2.0) * time;
}

// ── rescaling factorisation ─────────────────────────────────────────

cplx RescaleFactors::h(double tau, const double* y) const {
  double y2 = 0.0;
  for (int j = 0; j < cap.d; ++j) y2 += y[j] * y[j];
  const double a = cap.radius * cap.radius * y2;
  const double sq = std::sqrt(1.0 - a);
  // (sqrt(1 - r^2|y|^2) - 1)/r^2 + |y|^2/2 without cancellation.
  const double bracket = y2 * (0.5 - 1.0 / (1.0 + sq));
  return std::polar(std::pow(1.0 - a, -0.25), tau * bracket);
}

RescaleFactors rescale_factorize(const SurfaceDensity& f, const CapSpec& cap, int n) {
  if (cap.radius > 0.5) throw DomainError("rescale_factorize: cap radius exceeds 1/2");
  RescaleFactors rf;
  rf.cap = cap;
  rf.grid = std::make_shared<const BallGrid>(build_ball_grid(cap.d, n, 1.0));
  const auto pb = pullback(cap, f, *rf.grid);
  rf.g.resize(pb.size());
  const double r2 = cap.radius * cap.radius;
  for (std::size_t i = 0; i < pb.size(); ++i) rf.g[i] = pb[i] * std::pow(1.0 - r2 * rf.grid->node_norm2(i), -0.25);
  return rf;
}

cplx rescaled_extension(const RescaleFactors& rf, const Point& xi, const ConventionTag& conv) {
  const int d = rf.cap.d;
  const Frame fr = make_frame(d, rf.cap.center);
  Point sx{};
  for (int i = 0; i <= d; ++i) sx[i] = conv.sign * xi[i];
  double xc[kMaxAmbient];
  fr.to_plane(sx, xc);
  const double tc = dot(sx, rf.cap.center, d + 1);
  const double r = rf.cap.radius;
  const double tau = r * r * tc;
  double X[kMaxAmbient];
  for (int j = 0; j < d; ++j) X[j] = r * xc[j];
  const auto& G = *rf.grid;
  cplx acc = 0.0;
  for (std::size_t n = 0; n < G.size(); ++n) {
    if (rf.g[n] == 0.0) continue;
    const double* y = G.node(n);
    double ph = -0.5 * tau * G.node_norm2(n);
    for (int j = 0; j < d; ++j) ph += X[j] * y[j];
    acc += G.weights[n] * rf.h(tau, y) * rf.g[n] * std::polar(1.0, ph);
  }
  return conv.prefactor * std::pow(r, d / 2.0) * std::polar(1.0, tc) * acc;
}

// ── Plancherel route ─────────────────────────────────────────────────

// For unit spheres, (f1 sigma * f2 sigma)(s n) = s^{-1} int_0^{2 pi} f1(w(theta)) f2(s n - w(theta)) d theta
// over the circle w = sqrt(1-a^2) n + a e(theta), s = 2 sqrt(1-a^2); in (n, a) coordinates
// int |rho|^2 d nu = int_{S^2} int |I(n,a)|^2 (2a / sqrt(1-a^2)) da dsigma(n).
double fiber_l2_pair(const SphereFn& f1, const CapSpec& c1, const SphereFn& f2, const CapSpec& c2, int res) {
  const int d = 2;
  const double ch1 = chord_of(c1.radius), ch2 = chord_of(c2.radius);
  Point zs{};
  for (int i = 0; i <= d; ++i) zs[i] = c1.center[i] + c2.center[i];
  const double zn = norm(zs, 3);
  if (zn < 1e-6) throw DomainError("fiber_l2_pair: antipodal caps");
  for (int i = 0; i <= d; ++i) zs[i] /= zn;
  Point zd{};
  for (int i = 0; i <= d; ++i) zd[i] = c1.center[i] - c2.center[i];
  const double ac = 0.5 * norm(zd, 3);
  const bool same = ac < 1e-14 && std::abs(c1.radius - c2.radius) < 1e-14;
  const double rho_n = same ? std::min(0.999, 1.02 * std::max(ch1, c1.radius))
                            : std::min(0.999, 1.05 * (ch1 + ch2) / (0.5 * zn));
  const DiskGrid ng = build_cap_grid(CapSpec(d, zs, rho_n), res);
  const double alo = std::max(0.0, ac - 0.51 * (ch1 + ch2));
  const double ahi = std::min(0.999, ac + 0.51 * (ch1 + ch2));
  if (ahi <= alo) return 0.0;
  auto [as, aw] = gauss_legendre(res, alo, ahi);
  const int nth = 2 * res;
  auto [ts, tw] = gauss_legendre(nth, -1.0, 1.0);

  double total = 0.0;
  for (std::size_t in = 0; in < ng.size(); ++in) {
    const Point& n = ng.points[in];
    const Frame fr = make_frame(d, n);
    const double u1 = dot(c1.center, fr.basis[0], 3), u2 = dot(c1.center, fr.basis[1], 3);
    const double th1 = std::atan2(u2, u1);
    double acc_n = 0.0;
    for (int ia = 0; ia < res; ++ia) {
      const double a = as[ia];
      const double b = std::sqrt(1.0 - a * a);
      auto pair_at = [&](double th) {
        const double c = std::cos(th), s = std::sin(th);
        Point wp{}, wm{};
        for (int i = 0; i <= d; ++i) {
          const double e = c * fr.basis[0][i] + s * fr.basis[1][i];
          wp[i] = b * n[i] + a * e;
          wm[i] = b * n[i] - a * e;
        }
        return f1(wp) * f2(wm);
      };
      cplx I = 0.0;
      if (a <= 1.02 * ch1 + 1e-12) {
        for (int k = 0; k < nth; ++k) I += (2.0 * kPi / nth) * pair_at(2.0 * kPi * k / nth);
      } else {
        const double half = std::min(kPi, 1.05 * std::asin(std::min(1.0, ch1 / a)) + 1e-9);
        for (int k = 0; k < nth; ++k) I += half * tw[k] * pair_at(th1 + half * ts[k]);
      }
      acc_n += aw[ia] * (2.0 * a / b) * std::norm(I);
    }
    total += ng.sigma_weights[in] * acc_n;
  }
  return total;
}

// Threefold autoconvolution on S^1 with w(psi) = (sin psi, cos psi).
// rho_2(nu') = 2 f(w+) f(w-) / (s a) with s = |nu'|, a = sqrt(1 - s^2/4);
// rho_3(nu) = int rho_2(nu - w(psi)) f(w(psi)) dpsi, substituting psi = alpha + beta0 sin(gamma) to remove
// the inverse square-root endpoint singularity.
double fiber_l2_triple(const SphereFn& f, const CapSpec& cap, int res) {
  const double ac = std::atan2(cap.center[0], cap.center[1]);
  const double w = std::asin(std::min(1.0, cap.radius));
  auto [al, alw] = gauss_legendre(res, ac - w, ac + w);
  auto [Rs, Rw] = gauss_legendre(res, 3.0 * std::cos(w), 3.0);
  auto [gs, gw] = gauss_legendre(res, 0.0, 1.0);
  double total = 0.0;
  for (int ia = 0; ia < res; ++ia) {
    const double alpha = al[ia];
    for (int ir = 0; ir < res; ++ir) {
      const double R = Rs[ir];
      const double cb = std::clamp((R * R - 3.0) / (2.0 * R), -1.0, 1.0);
      const double beta0 = std::acos(cb);
      if (beta0 < 1e-13) continue;
      const double lo = std::max(alpha - beta0, ac - w);
      const double hi = std::min(alpha + beta0, ac + w);
      if (hi <= lo) continue;
      const double glo = std::asin(std::clamp((lo - alpha) / beta0, -1.0, 1.0));
      const double ghi = std::asin(std::clamp((hi - alpha) / beta0, -1.0, 1.0));
      const double nu0 = R * std::sin(alpha), nu1 = R * std::cos(alpha);
      cplx rho3 = 0.0;
      for (int ig = 0; ig < res; ++ig) {
        const double gam = glo + (ghi - glo) * gs[ig];
        const double sg = std::sin(gam);
        const double psi = alpha + beta0 * sg;
        Point om{};
        om[0] = std::sin(psi);
        om[1] = std::cos(psi);
        const cplx fo = f(om);
        if (fo == 0.0) continue;
        const double v0 = nu0 - om[0], v1 = nu1 - om[1];
        const double s = std::hypot(v0, v1);
        const double a2 = R * std::sin(0.5 * beta0 * (1.0 + sg)) * std::sin(0.5 * beta0 * (1.0 - sg));
        if (a2 <= 0.0) continue;
        const double a = std::sqrt(a2);
        const double n0 = v0 / s, n1 = v1 / s;
        Point wp{}, wm{};
        wp[0] = 0.5 * s * n0 - a * n1;
        wp[1] = 0.5 * s * n1 + a * n0;
        wm[0] = 0.5 * s * n0 + a * n1;
        wm[1] = 0.5 * s * n1 - a * n0;
        const cplx rho2 = 2.0 * f(wp) * f(wm) / (s * a);
        rho3 += (ghi - glo) * gw[ig] * beta0 * std::cos(gam) * rho2 * fo;
      }
      total += alw[ia] * Rw[ir] * R * std::norm(rho3);
    }
  }
  return total;
}

Estimate even_norm_via_convolution(const SurfaceDensity& f, int d, const ConventionTag& conv, int res) {
  if (d != 1 && d != 2) throw DomainError("even_norm_via_convolution: d must be 1 or 2");
  const SphereFn fn = f.source ? f.source : interpolant_function(f);
  const CapSpec win = f.window();
  auto eval = [&](int n) {
    if (d == 2) {
      const double l2 = fiber_l2_pair(fn, win, fn, win, n);
      return std::pow(std::pow(conv.prefactor, 4) * std::pow(2.0 * kPi, 3) * l2, 0.25);
    }
    const double l2 = fiber_l2_triple(fn, win, n);
    return std::pow(std::pow(conv.prefactor, 6) * std::pow(2.0 * kPi, 2) * l2, 1.0 / 6.0);
  };
  const double coarse = eval(res);
  const double fine = eval(res + res / 2);
  return {fine, std::abs(fine - coarse)};
}

double default_horizon(int d) { return d == 1 ? 400.0 : 120.0; }

// Dispersion sets in at t ~ r^{-2}, and the tail fit needs the slabs well past that.
double default_horizon(int d, const CapSpec& window) {
  const double r = std::max(window.radius, 0.02);
  return (d == 1 ? 100.0 : 60.0) / (r * r);
}

SpaceTimeGrid default_lattice(int d, double T, const CapSpec& window, double p) {
  const Point& z = window.center;
  double zp = 0.0;
  for (int j = 0; j < d; ++j) zp += z[j] * z[j];
  zp = std::sqrt(zp);
  const double ang_c = std::asin(std::min(1.0, zp));
  const double ang_r = std::asin(std::min(1.0, window.radius));
  const double ang_max = std::min(kPi / 2 - 1e-3, ang_c + ang_r);
  const double ang_min = std::max(0.0, ang_c - ang_r);
  const double umax = std::sin(ang_max);
  const double dh = std::cos(ang_min) - std::cos(ang_max);
  const double hx = 0.9 * 2.0 * kPi / (p * umax);
  const double ht = std::min(0.9 * 2.0 * kPi / (0.5 * p * std::max(dh, 1e-12)), T / 24.0);
  const double vmax = std::tan(ang_max);
  const double X = T * vmax + 8.0 / std::max(window.radius, 0.02) + 2.0 * hx;
  return lattice_from_spacing(d, T, X, ht, hx);
}

QuotientResult sphere_quotient(const SurfaceDensity& f, const ConventionTag& conv, const QuotientConfig& cfg) {
  const double l2 = l2_sigma_norm(f);
  if (!(l2 > 0.0)) throw DomainError("sphere_quotient: zero density");
  const int d = f.d();
  QuotientResult q;
  if (!cfg.force_space_time && f.source && (d == 1 || d == 2)) {
    const Estimate e = even_norm_via_convolution(f, d, conv, cfg.conv_resolution);
    q.value = e.value / l2;
    q.uncertainty = e.uncertainty / l2;
    q.path = "convolution";
    q.resolution = cfg.conv_resolution;
    return q;
  }
  const double p = tomas_stein_exponent(d);
  // Centered at the pole the packet moves along the t axis, so the box stays narrow and the sampled
  // extension stays resolved across it.
  const SurfaceDensity fp = reflect_to_pole(f);
  const double T = cfg.T > 0.0 ? cfg.T : default_horizon(d, fp.window());
  const SpaceTimeGrid g = default_lattice(d, T, fp.window(), p);
  const SpaceTimeField F = extend_sphere(fp, g, conv);
  const NormEstimate n = lp_norm(F, p);
  q.value = n.corrected() / l2;
  q.uncertainty = 0.5 * n.tail / l2;
  q.path = "space-time";
  q.resolution = n.resolution;
  return q;
}

StrichartzValue strichartz_quotient(const BallGrid& grid, const std::vector<cplx>& phi, const SpaceTimeGrid& lattice) {
  double l2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) l2 += grid.weights[i] * std::norm(phi[i]);
  l2 = std::sqrt(l2);
  if (!(l2 > 0.0)) throw DomainError("strichartz_quotient: zero profile");
  const double p = tomas_stein_exponent(grid.d);
  const SpaceTimeField U = schrodinger_evolve(grid, phi, lattice);
  const NormEstimate n = lp_norm(U, p);
  StrichartzValue v;
  v.integral = std::pow(n.value, p);
  v.l2 = l2;
  v.power_ratio = v.integral / std::pow(l2, p);
  v.norm_ratio = std::pow(v.power_ratio, 1.0 / p);
  return v;
}

// ── test densities ───────────────────────────────────────────────────

SphereFn bump_function(const BumpSpec& spec) {
  const CapSpec cap = spec.cap;
  const Frame fr = make_frame(cap.d, cap.center);
  const int k = spec.power;
  const auto coeffs = spec.coeffs;
  const Point xi = spec.modulation;
  return [cap, fr, k, coeffs, xi](const Point& p) -> cplx {
    const int d = cap.d;
    if (dot(p, cap.center, d + 1) < 0.0) return 0.0;
    double y[kMaxAmbient];
    fr.to_plane(p, y);
    double y2 = 0.0;
    for (int j = 0; j < d; ++j) {
      y[j] /= cap.radius;
      y2 += y[j] * y[j];
    }
    if (y2 >= 1.0) return 0.0;
    // Monomials 1, y_1, .., y_d, then degree-two terms.
    cplx poly = 0.0;
    std::size_t idx = 0;
    if (idx < coeffs.size()) poly += coeffs[idx++];
    for (int j = 0; j < d && idx < coeffs.size(); ++j) poly += coeffs[idx++] * y[j];
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d && idx < coeffs.size(); ++j) poly += coeffs[idx++] * y[i] * y[j];
    const double env = std::pow(1.0 - y2, k);
    return env * poly * std::polar(1.0, dot(xi, p, d + 1));
  };
}

BumpSpec random_bump_spec(int d, std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  const double r = rmin + (rmax - rmin) * U(rng);
  // Keep the cap inside Gamma: angle(z) + asin(r) <= pi/6.
  const double umax = std::sin(std::max(0.0, kPi / 6.0 - std::asin(r)));
  double u[kMaxAmbient] = {0.0, 0.0, 0.0, 0.0};
  if (d == 1) {
    u[0] = umax * (2.0 * U(rng) - 1.0);
  } else {
    const double rr = umax * std::sqrt(U(rng));
    const double th = 2.0 * kPi * U(rng);
    u[0] = rr * std::cos(th);
    u[1] = rr * std::sin(th);
  }
  const Frame north = make_frame(d, north_pole(d));
  Point z = north.lift(u);
  const double zn = norm(z, d + 1);
  for (int i = 0; i <= d; ++i) z[i] /= zn;
  BumpSpec b;
  b.cap = CapSpec(d, z, r);
  b.power = 6;
  const int nc = d == 1 ? 3 : 6;
  b.coeffs.resize(nc);
  for (auto& c : b.coeffs) c = cplx(N(rng), N(rng)) * 0.5;
  b.coeffs[0] += 2.0;
  return b;
}

SurfaceDensity bump_density(std::shared_ptr<const DiskGrid> grid, const BumpSpec& spec) {
  SurfaceDensity f = sample_density(grid, bump_function(spec), spec.cap);
  const double n = l2_sigma_norm(f);
  if (!(n > 0.0)) throw ResolutionError("bump_density: bump not resolved by the grid");
  return scaled(f, 1.0 / n);
}

SphereFn gamma_indicator(int d) {
  return [d](const Point& p) -> cplx {
    if (p[d] < 0.0) return 0.0;
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += p[j] * p[j];
    return s <= 0.25 ? 1.0 : 0.0;
  };
}

CapSpec gamma_cap(int d) { return CapSpec(d, north_pole(d), 0.5); }

}  // namespace tslab
