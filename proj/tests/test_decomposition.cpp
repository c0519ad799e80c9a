#include <doctest.h>

#include <random>

#include "tslab/decomposition.hpp"

using namespace tslab;

namespace {

double param_distance_cells(const ModulationParams& a, const ModulationParams& b, int d, const SearchLattice& L) {
  double s = std::abs(a.t - b.t) / L.ht;
  for (int i = 0; i < d; ++i) s = std::max(s, std::abs(a.x[i] - b.x[i]) / L.hx);
  return std::max(s, std::abs(a.t - b.t) / L.ht);
}

}  // namespace

TEST_CASE("threshold split: Pythagoras, disjoint supports, bounded piece") {
  std::mt19937_64 rng(12);
  for (int d : {1, 2}) {
    const BumpSpec spec = random_bump_spec(d, rng, 0.1, 0.2);
    auto grid = std::make_shared<const DiskGrid>(build_cap_grid(CapSpec(d, spec.cap.center, 0.45), d == 1 ? 128 : 40));
    const SurfaceDensity f = bump_density(grid, spec);
    const CapSpec cap(d, spec.cap.center, 0.6 * spec.cap.radius);
    for (double delta : {0.3, 0.6, 0.95}) {
      const SplitResult s = threshold_split(f, cap, delta);
      const double a = l2_sigma_norm(f), b = l2_sigma_norm(s.g), c = l2_sigma_norm(s.h);
      CHECK(std::abs(a * a - b * b - c * c) < 1e-12);
      for (std::size_t i = 0; i < grid->size(); ++i) {
        CHECK(std::abs(s.g.values[i] * s.h.values[i]) == 0.0);
        CHECK(std::abs(s.g.values[i]) <= s.level);
        if (s.g.values[i] != 0.0) CHECK(cap_contains(cap, grid->points[i]));
      }
      CHECK(s.level == doctest::Approx(2.0 / (0.5 * std::pow(delta, 2.0) * std::sqrt(cap_measure(d, cap.radius)))));
    }
  }
  auto g1 = std::make_shared<const DiskGrid>(build_disk_grid(1, 32));
  CHECK_THROWS_AS(threshold_split(zero_density(g1), gamma_cap(1), 1.5), DomainError);
}

TEST_CASE("modulation round trip and unitarity") {
  const BallGrid G = build_ball_grid(2, 24, 1.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  std::vector<cplx> g(G.size());
  for (auto& v : g) v = cplx(N(rng), N(rng));
  ModulationParams m;
  m.x = {1.5, -2.0, 0.0};
  m.t = 3.25;
  const auto fwd = modulate(G, g, m, Direction::forward);
  const auto back = modulate(G, fwd, m, Direction::inverse);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(back[i] - g[i]) < 1e-13);
  CHECK(ball_l2(G, fwd) == doctest::Approx(ball_l2(G, g)).epsilon(1e-13));
  // Forward factor e^{-it|y|^2/2} e^{ix.y} at one node.
  const double* y = G.node(17);
  const cplx expect = g[17] * std::exp(cplx(0.0, -m.t * (y[0] * y[0] + y[1] * y[1]) / 2 + m.x[0] * y[0] + m.x[1] * y[1]));
  CHECK(std::abs(fwd[17] - expect) < 1e-12);
  CHECK_THROWS_AS(modulate(G, std::vector<cplx>(3), m, Direction::forward), DomainError);
}

TEST_CASE("planted two-profile extraction in d = 1") {
  const PlantConfig pc = default_plant(1, 2, 7);
  auto G = std::make_shared<const BallGrid>(build_ball_grid(1, pc.ball_resolution, 1.0));
  const auto seq = planted_sequence(*G, pc);
  REQUIRE(int(seq.size()) == pc.nu_count);
  const ExtractionConfig ec;
  const Extraction ex = extract_profiles(G, seq, ec);
  REQUIRE(ex.profiles.size() == 2);
  for (const auto& planted : pc.profiles) {
    double best = 1e300;
    for (const auto& p : ex.profiles) {
      double worst = 0.0;
      for (int nu = 1; nu <= pc.nu_count; ++nu)
        worst = std::max(worst, param_distance_cells(p.params[nu - 1], planted_params(planted, nu), 1, ec.lattice));
      best = std::min(best, worst);
    }
    CHECK(best <= 1.0);
  }
  // Cross terms between the profiles only vanish as the parameters diverge.
  std::vector<double> res;
  for (std::size_t nu = 0; nu < seq.size(); ++nu) {
    res.push_back(profile_pythagoras(*G, seq[nu], ex.profiles, ex.errors[nu]));
    CHECK(ball_l2(*G, ex.errors[nu]) < ec.epsilon * ball_l2(*G, seq[nu]) + 1e-12);
  }
  CHECK(res.back() < 1e-2);
  CHECK(res.back() < 0.1 * res.front());
}

TEST_CASE("first decomposition of a single concentrated cap") {
  std::mt19937_64 rng(21);
  BumpSpec spec = random_bump_spec(1, rng, 0.05, 0.05);
  auto grid = std::make_shared<const DiskGrid>(build_disk_grid(1, 512));
  SurfaceDensity f = bump_density(grid, spec);
  f = scaled(f, 1.0 / l2_sigma_norm(f));
  FirstDecompositionConfig cfg;
  cfg.convention = ConventionTag::unitary(1);
  cfg.R_est = 0.36404072;
  cfg.max_level = 5;
  const FirstDecomposition fd = first_decomposition(f, 0.5, 4, cfg);
  REQUIRE(fd.pieces.size() >= 1);
  CHECK(fd.reached_threshold);
  CHECK(fd.pythagoras_residual < 1e-12);
  const double ang = std::acos(std::clamp(dot(fd.pieces[0].cap.center, spec.cap.center, 2), -1.0, 1.0));
  CHECK(ang <= std::pow(2.0, -fd.pieces[0].level) + 1e-12);
  CHECK_THROWS_AS(first_decomposition(scaled(f, 2.0), 0.5, 4, cfg), DomainError);
}

TEST_CASE("sphere sequence decomposition recovers the planted amplitudes in d = 1") {
  const PlantConfig pc = default_plant(1, 2, 7);
  auto B = std::make_shared<const BallGrid>(build_ball_grid(1, pc.ball_resolution, 1.0));
  const auto profiles = planted_profiles(B, pc);
  auto grid = std::make_shared<const DiskGrid>(build_cap_grid(CapSpec(1, profiles[0].cap_at(0).center, 0.45), 256));
  std::vector<SurfaceDensity> seq;
  for (int nu = 0; nu < pc.nu_count; ++nu) seq.push_back(synthesize(profiles, nu, grid));
  SphereSequenceConfig cfg;
  cfg.first.convention = ConventionTag::unitary(1);
  cfg.first.R_est = 0.36404072;
  cfg.first.max_level = 3;
  const SphereDecomposition sd = decompose_sequence(seq, cfg);
  CHECK(sd.shared_cap);
  CHECK(sd.extraction.profiles.size() == 2);
  const std::size_t last = sd.rescaled.size() - 1;
  CHECK(profile_pythagoras(*sd.grid, sd.rescaled[last], sd.extraction.profiles, sd.extraction.errors[last]) < 1e-2);
  // Rescaled elements carry the planted amplitudes.
  const auto planted = planted_sequence(*B, pc);
  for (std::size_t nu = 0; nu < sd.rescaled.size(); ++nu)
    CHECK(ball_l2(*sd.grid, sd.rescaled[nu]) == doctest::Approx(ball_l2(*B, planted[nu])).epsilon(1e-3));
}
