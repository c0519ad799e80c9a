#include <doctest.h>

#include <random>

#include "tslab/extension.hpp"

using namespace tslab;

namespace {

// ext of the indicator of Gamma on S^1 by composite Simpson in the angle; w = (sin th, cos th).
cplx arc_extension(double x, double t, const ConventionTag& conv) {
  const int n = 20000;
  const double a = -kPi / 6, b = kPi / 6, h = (b - a) / n;
  cplx s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double th = a + k * h;
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * std::exp(cplx(0.0, conv.sign * (x * std::sin(th) + t * std::cos(th))));
  }
  return conv.prefactor * s * h / 3.0;
}

SurfaceDensity unit_bump(int d, std::uint64_t seed, double rmin, double rmax, int n) {
  std::mt19937_64 rng(seed);
  const BumpSpec spec = random_bump_spec(d, rng, rmin, rmax);
  return bump_density(std::make_shared<const DiskGrid>(build_cap_grid(spec.cap, n)), spec);
}

}  // namespace

TEST_CASE("extension of the arc indicator against angular quadrature") {
  auto g = std::make_shared<const DiskGrid>(build_disk_grid(1, 256));
  const SurfaceDensity f = sample_density(g, gamma_indicator(1), gamma_cap(1));
  for (const auto& conv : {ConventionTag::unitary(1), ConventionTag::bare()}) {
    Point zero{};
    CHECK(std::abs(extend_at(f, zero, conv) - conv.prefactor * kPi / 3) < 1e-10);
    for (auto [x, t] : {std::pair{3.0, 0.0}, {0.0, 5.0}, {-7.5, 12.0}, {20.0, -3.0}}) {
      Point xi{x, t};
      CHECK(std::abs(extend_at(f, xi, conv) - arc_extension(x, t, conv)) < 1e-9);
    }
  }
}

TEST_CASE("extend_sphere is linear and matches pointwise evaluation") {
  const SurfaceDensity f = unit_bump(2, 1, 0.2, 0.3, 24);
  SurfaceDensity h = f;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  for (auto& v : h.values) v = cplx(N(rng), N(rng));
  SurfaceDensity comb = f;
  const cplx a(0.3, -1.1), b(2.0, 0.5);
  for (std::size_t i = 0; i < comb.values.size(); ++i) comb.values[i] = a * f.values[i] + b * h.values[i];
  comb.source = nullptr;
  const ConventionTag conv = ConventionTag::unitary(2);
  const SpaceTimeGrid L = make_lattice(2, 6.0, 8.0, 7, 9);
  const SpaceTimeField Ff = extend_sphere(f, L, conv), Fh = extend_sphere(h, L, conv), Fc = extend_sphere(comb, L, conv);
  double scale = 0.0;
  for (const auto& v : Fc.values) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < Fc.values.size(); ++i)
    CHECK(std::abs(Fc.values[i] - (a * Ff.values[i] + b * Fh.values[i])) < 1e-13 * scale);
  for (std::size_t i = 0; i < Ff.values.size(); i += 37) {
    double x[3];
    L.space_point(i % L.slab_size(), x);
    const Point xi{x[0], x[1], L.t(int(i / L.slab_size()))};
    CHECK(std::abs(extend_at(f, xi, conv) - Ff.values[i]) < 1e-13);
  }
}

TEST_CASE("restrict_field is the adjoint of extend_sphere") {
  for (int d : {1, 2}) {
    const SurfaceDensity f = unit_bump(d, 3, 0.2, 0.4, d == 1 ? 64 : 24);
    const ConventionTag conv = ConventionTag::unitary(d);
    const SpaceTimeGrid L = make_lattice(d, 5.0, 5.0, 9, 11);
    SpaceTimeField G;
    G.grid = L;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N;
    G.values.resize(L.size());
    for (auto& v : G.values) v = cplx(N(rng), N(rng));
    const SpaceTimeField F = extend_sphere(f, L, conv);
    cplx lhs = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i)
      lhs += L.time_weight(int(i / L.slab_size())) * L.space_weight(i % L.slab_size()) * F.values[i] * std::conj(G.values[i]);
    const auto R = restrict_field(G, *f.grid, conv);
    cplx rhs = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) rhs += f.grid->sigma_weights[i] * f.values[i] * std::conj(R[i]);
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("Gaussian propagator: quadrature against the analytic formula") {
  for (int d : {1, 2}) {
    const BallGrid g = build_ball_grid(d, d == 1 ? 2400 : 120, d == 1 ? 9.0 : 6.5);
    std::vector<cplx> phi(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) phi[i] = std::exp(-0.5 * g.node_norm2(i));
    for (double t : {0.0, 0.5, 2.0}) {
      for (double x0 : {0.0, 0.7, -1.9}) {
        const double x[2] = {x0, -0.5 * x0};
        CHECK(std::abs(schrodinger_at(g, phi, t, x) - gaussian_evolution_analytic(d, t, x)) < 1e-8);
      }
    }
  }
}

TEST_CASE("Gaussian space-time integrals in closed form") {
  // d = 1, p = 6: int dt (2 pi)^3 (1 + t^2)^{-3/2} sqrt(pi (1 + t^2) / 3) = (2 pi)^3 pi sqrt(pi / 3).
  CHECK(gaussian_total_integral(1, 6.0) == doctest::Approx(std::pow(2 * kPi, 3) * kPi * std::sqrt(kPi / 3)).epsilon(1e-12));
  // d = 2, p = 4: int dt (2 pi)^4 (1 + t^2)^{-2} pi (1 + t^2) / 2 = (2 pi)^4 pi^2 / 2.
  CHECK(gaussian_total_integral(2, 4.0) == doctest::Approx(std::pow(2 * kPi, 4) * kPi * kPi / 2).epsilon(1e-12));
  CHECK(gaussian_truncated_integral(1, 6.0, 40.0, 40.0) < gaussian_total_integral(1, 6.0));
}

TEST_CASE("Strichartz quotient of the Gaussian: propagator quadrature vs analytic field") {
  const BallGrid g = build_ball_grid(1, 2400, 9.0);
  std::vector<cplx> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = std::exp(-0.5 * g.node_norm2(i));
  const SpaceTimeGrid L = make_lattice(1, 10.0, 10.0, 81, 101);
  const StrichartzValue v = strichartz_quotient(g, phi, L);
  SpaceTimeField A;
  A.grid = L;
  A.values.resize(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    double x[1];
    L.space_point(i % L.slab_size(), x);
    A.values[i] = gaussian_evolution_analytic(1, L.t(int(i / L.slab_size())), x);
  }
  const double exact = std::pow(lp_norm(A, 6.0).value, 6.0);
  CHECK(std::abs(v.integral - exact) / exact < 1e-8);
  CHECK(v.l2 == doctest::Approx(std::pow(kPi, 0.25)).epsilon(1e-12));
}

TEST_CASE("convolution path: homogeneity and agreement with the space-time path") {
  for (int d : {1, 2}) {
    const SurfaceDensity f = unit_bump(d, 10 + d, 0.2, 0.35, d == 1 ? 128 : 48);
    const ConventionTag conv = ConventionTag::unitary(d);
    const Estimate a = even_norm_via_convolution(f, d, conv);
    const Estimate b = even_norm_via_convolution(scaled(f, 2.0), d, conv);
    CHECK(b.value == doctest::Approx(2.0 * a.value).epsilon(1e-12));
    QuotientConfig st;
    st.force_space_time = true;
    const QuotientResult q = sphere_quotient(f, conv, st);
    CHECK(q.path == "space-time");
    CHECK(std::abs(q.value - a.value) <= q.uncertainty + a.uncertainty + 1e-12);
    CHECK(std::abs(q.value - a.value) / a.value < 1e-2);
  }
  CHECK_THROWS_AS(even_norm_via_convolution(unit_bump(1, 1, 0.2, 0.3, 32), 3, ConventionTag::bare()), DomainError);
}

TEST_CASE("sphere quotient symmetries") {
  std::mt19937_64 rng(6);
  BumpSpec spec = random_bump_spec(2, rng, 0.2, 0.3);
  auto g = std::make_shared<const DiskGrid>(build_cap_grid(spec.cap, 32));
  const ConventionTag conv = ConventionTag::unitary(2);
  const SurfaceDensity f = bump_density(g, spec);
  const double q = sphere_quotient(f, conv).value;
  CHECK(sphere_quotient(scaled(f, cplx(-3.0, 2.0)), conv).value == doctest::Approx(q).epsilon(1e-12));
  // Modulation by e^{i x.xi} translates the extension.
  spec.modulation = Point{4.0, -2.0, 3.0};
  const double qm = sphere_quotient(bump_density(g, spec), conv).value;
  CHECK(qm == doctest::Approx(q).epsilon(1e-6));
  CHECK_THROWS_AS(sphere_quotient(zero_density(g), conv), DomainError);
}

TEST_CASE("rescaling identity at a few points") {
  for (int d : {1, 2}) {
    std::mt19937_64 rng(30 + d);
    const BumpSpec spec = random_bump_spec(d, rng, 0.25, 0.25);
    auto g = std::make_shared<const DiskGrid>(build_cap_grid(spec.cap, d == 1 ? 128 : 48));
    const SurfaceDensity f = bump_density(g, spec);
    const ConventionTag conv = ConventionTag::unitary(d);
    const RescaleFactors rf = rescale_factorize(f, spec.cap, d == 1 ? 128 : 48);
    for (int k = 0; k < 6; ++k) {
      Point xi{};
      for (int i = 0; i <= d; ++i) xi[i] = 3.0 * std::sin(1.7 * k + i);
      CHECK(std::abs(rescaled_extension(rf, xi, conv) - extend_at(f, xi, conv)) < 1e-8);
    }
  }
}
