#include <doctest.h>

#include <random>

#include "tslab/extension.hpp"
#include "tslab/quadrature.hpp"

using namespace tslab;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n : {2, 5, 12, 24}) {
    auto [x, w] = gauss_legendre(n, -0.3, 1.7);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], k);
      const double exact = (std::pow(1.7, k + 1) - std::pow(-0.3, k + 1)) / (k + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}

TEST_CASE("ball grid weights give the Lebesgue measure") {
  const BallGrid g1 = build_ball_grid(1, 64, 0.8);
  double s = 0.0;
  for (double w : g1.weights) s += w;
  CHECK(s == doctest::Approx(1.6).epsilon(1e-14));
  const BallGrid g2 = build_ball_grid(2, 32, 0.5);
  s = 0.0;
  for (double w : g2.weights) s += w;
  CHECK(s == doctest::Approx(kPi / 4).epsilon(1e-13));
  CHECK_THROWS_AS(build_ball_grid(2, 4, 1.0), ResolutionError);
}

TEST_CASE("sigma mass of Gamma") {
  // d = 1: int_{-1/2}^{1/2} du / sqrt(1 - u^2) = 2 arcsin(1/2) = pi/3.
  const DiskGrid g1 = build_disk_grid(1, 1024);
  CHECK(std::abs(g1.sigma_mass() - kPi / 3) < 1e-8);
  const DiskGrid g1b = build_disk_grid(1, 512);
  CHECK(std::abs(g1.sigma_mass() - g1b.sigma_mass()) < 1e-8);
  // d = 2: the ball weights sum to the disk area, the sigma weights to 2 pi (1 - sqrt(3)/2).
  const DiskGrid g2 = build_disk_grid(2, 64);
  double area = 0.0;
  for (double w : g2.ball.weights) area += w;
  CHECK(std::abs(area - kPi / 4) < 1e-6);
  CHECK(std::abs(g2.sigma_mass() - 2 * kPi * (1 - std::sqrt(3.0) / 2)) < 1e-10);
  for (std::size_t i = 0; i < g2.size(); ++i) CHECK(g2.ball.node_norm2(i) <= 0.25 + 1e-15);
}

TEST_CASE("L2(sigma) norms") {
  auto g = std::make_shared<const DiskGrid>(build_disk_grid(1, 256));
  CHECK(l2_sigma_norm(zero_density(g)) == 0.0);
  const SurfaceDensity one = sample_density(g, [](const Point&) { return cplx(1.0); });
  CHECK(l2_sigma_norm(one) == doctest::Approx(std::sqrt(kPi / 3)).epsilon(1e-10));
  // A unimodular phase does not change the norm.
  const SurfaceDensity ph = sample_density(g, [](const Point& p) { return std::exp(cplx(0, 7.0 * p[0] - 2.0 * p[1])); });
  CHECK(l2_sigma_norm(ph) == doctest::Approx(l2_sigma_norm(one)).epsilon(1e-14));
}

TEST_CASE("lp_norm on simple fields") {
  SpaceTimeField z;
  z.grid = make_lattice(1, 1.0, 1.0, 11, 11);
  z.values.assign(z.grid.size(), 0.0);
  CHECK(lp_norm(z, 4.0).value == 0.0);

  SpaceTimeField one = z;
  one.values.assign(one.grid.size(), 1.0);
  CHECK(lp_norm(one, 2.0).value == doctest::Approx(2.0).epsilon(1e-14));

  SpaceTimeField empty;
  CHECK_THROWS_AS(lp_norm(empty, 2.0), DomainError);
  CHECK_THROWS_AS(lp_norm(one, 0.5), DomainError);

  // Modulus invariance under a phase.
  SpaceTimeField mod = one;
  for (std::size_t i = 0; i < mod.values.size(); ++i) mod.values[i] = std::exp(cplx(0, 0.37 * double(i)));
  CHECK(lp_norm(mod, 3.0).value == doctest::Approx(lp_norm(one, 3.0).value).epsilon(1e-14));
}

namespace {

SpaceTimeField analytic_gaussian_field(int d, double T, double X, int nt, int nx) {
  SpaceTimeField F;
  F.grid = make_lattice(d, T, X, nt, nx);
  F.values.resize(F.grid.size());
  for (int kt = 0; kt < nt; ++kt)
    for (std::size_t ix = 0; ix < F.grid.slab_size(); ++ix) {
      double x[3];
      F.grid.space_point(ix, x);
      F.values[kt * F.grid.slab_size() + ix] = gaussian_evolution_analytic(d, F.grid.t(kt), x);
    }
  return F;
}

}  // namespace

TEST_CASE("Gaussian evolution field, d = 1: lattice norm matches the truncated integral") {
  const SpaceTimeField F = analytic_gaussian_field(1, 40.0, 40.0, 321, 401);
  const double lat = std::pow(lp_norm(F, 6.0).value, 6.0);
  const double exact = gaussian_truncated_integral(1, 6.0, 40.0, 40.0);
  CHECK(std::abs(lat - exact) / exact < 1e-4);
}

TEST_CASE("truncation monotonicity") {
  double prev = 0.0;
  for (double T : {2.0, 4.0, 8.0, 16.0}) {
    const SpaceTimeField F = analytic_gaussian_field(1, T, 12.0, int(8 * T) + 1, 97);
    const double v = lp_norm(F, 6.0).value;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("slab tail recovers an exact power law") {
  // S(t) = C |t|^{-gamma} beyond the core: the fitted tail is C T^{1-gamma} / (gamma - 1) per side.
  const SpaceTimeGrid g = make_lattice(1, 50.0, 1.0, 201, 3);
  const double C = 3.0, gamma = 2.0;
  std::vector<double> s(g.nt);
  for (int k = 0; k < g.nt; ++k) s[k] = C * std::pow(std::max(1.0, std::abs(g.t(k))), -gamma);
  const double tail = slab_tail(g, s, gamma);
  CHECK(tail == doctest::Approx(2.0 * C / 50.0).epsilon(1e-10));
  CHECK(std::isinf(slab_tail(g, s, 1.0)));
}

TEST_CASE("ball interpolant matches BallGrid::interpolate") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int d : {1, 2}) {
    const BallGrid g = build_ball_grid(d, d == 1 ? 64 : 24, 1.0);
    std::vector<cplx> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double* y = g.node(i);
      const double r2 = g.node_norm2(i);
      v[i] = std::exp(cplx(-2.0 * r2, 1.5 * y[0])) * (1.0 - r2);
    }
    const BallInterpolant in(g, v);
    for (int t = 0; t < 200; ++t) {
      double y[2] = {U(rng), d == 2 ? U(rng) : 0.0};
      CHECK(std::abs(in(y) - g.interpolate(v, y)) < 1e-12);
    }
    // Both reproduce the nodal values.
    for (std::size_t i = 0; i < g.size(); i += 7) CHECK(std::abs(in(g.node(i)) - v[i]) < 1e-12);
  }
}

TEST_CASE("interpolant function agrees with the source on a smooth density") {
  const CapSpec cap(2, north_pole(2), 0.3);
  auto g = std::make_shared<const DiskGrid>(build_cap_grid(cap, 32));
  SphereFn fn = [](const Point& p) { return std::exp(cplx(-3.0 * p[0] * p[0], 2.0 * p[1])); };
  const SurfaceDensity f = sample_density(g, fn, cap);
  const SphereFn in = interpolant_function(f);
  const auto pts = random_sphere_points(2, 4000, 5);
  for (const auto& p : pts)
    if (cap_contains(cap, p) && norm(p, 2) < 0.28) CHECK(std::abs(in(p) - fn(p)) < 1e-9);
}

TEST_CASE("reflection to the pole keeps norms and moves the window") {
  std::mt19937_64 rng(4);
  const BumpSpec spec = random_bump_spec(2, rng, 0.2, 0.3);
  auto g = std::make_shared<const DiskGrid>(build_cap_grid(spec.cap, 24));
  const SurfaceDensity f = bump_density(g, spec);
  const SurfaceDensity r = reflect_to_pole(f);
  CHECK(r.window().center[2] == doctest::Approx(1.0));
  CHECK(l2_sigma_norm(r) == doctest::Approx(l2_sigma_norm(f)).epsilon(1e-14));
  // ext of the reflected density at xi equals ext f at the reflected point.
  const ConventionTag conv = ConventionTag::unitary(2);
  Point v = f.window().center;
  v[2] -= 1.0;
  const double vv = dot(v, v, 3);
  for (int k = 0; k < 5; ++k) {
    Point xi{1.5 * k - 3.0, 0.7 * k, 4.0 - k};
    Point hx = xi;
    const double a = 2 * dot(v, xi, 3) / vv;
    for (int i = 0; i < 3; ++i) hx[i] -= a * v[i];
    CHECK(std::abs(extend_at(r, xi, conv) - extend_at(f, hx, conv)) < 1e-13);
  }
}
