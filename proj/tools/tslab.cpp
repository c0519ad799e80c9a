// tslab: batch driver for the sphere-extension experiments.
//
//   tslab <subcommand> [--config FILE] [--dim D] [--convention NAME] [--seed S] [--out DIR] [--set key=value]...
//
// Artifacts go to <out>/<subcommand>/, where <out> is --out, else $TSLAB_OUT, else ./tslab_out.
// Exit status: 0 ok, 1 usage, 2 invalid configuration or input, 3 numerical or resolution failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "tslab/constants.hpp"
#include "tslab/decomposition.hpp"
#include "tslab/geometry.hpp"
#include "tslab/refinement.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tslab;
using tslab::cli::ConfigError;
using tslab::cli::ExperimentConfig;

namespace {

constexpr const char* kVersion = "0.3.0";

struct Run {
  std::string command;
  ExperimentConfig cfg;
  fs::path dir;
  std::string hash;
  int d = 1;
  ConventionTag conv;
  std::vector<std::string> written;

  json header() const {
    json j;
    j["config_hash"] = hash;
    j["subcommand"] = command;
    j["d"] = d;
    j["convention"] = conv.name;
    return j;
  }
  void write_json(const std::string& name, const json& j) {
    std::ofstream out(dir / name);
    out << j.dump(2) << "\n";
    written.push_back(name);
  }
  // CSV with a leading comment line carrying the config hash.
  void write_csv(const std::string& name, const std::string& columns, const std::vector<std::vector<double>>& rows) {
    std::ofstream out(dir / name);
    out << "# config_hash=" << hash << "\n" << columns << "\n";
    char buf[40];
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", r[i]);
        out << (i ? "," : "") << buf;
      }
      out << "\n";
    }
    written.push_back(name);
  }
};

json point_json(const Point& p, int n) {
  json a = json::array();
  for (int i = 0; i < n; ++i) a.push_back(p[i]);
  return a;
}

Point point_from(const json& a) {
  Point p{};
  for (std::size_t i = 0; i < a.size() && i < p.size(); ++i) p[i] = a[i].get<double>();
  return p;
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"uncertainty", e.uncertainty}}; }

json modulation_json(const ModulationParams& m, int d) {
  json x = json::array();
  for (int i = 0; i < d; ++i) x.push_back(m.x[i]);
  return {{"x", x}, {"t", m.t}};
}

ModulationParams modulation_from(const json& j) {
  ModulationParams m;
  const auto& x = j.at("x");
  for (std::size_t i = 0; i < x.size() && i < 3; ++i) m.x[i] = x[i].get<double>();
  m.t = j.at("t").get<double>();
  return m;
}

json cap_json(const CapSpec& c) { return {{"center", point_json(c.center, c.d + 1)}, {"radius", c.radius}}; }

json convention_table(int d) {
  json t = json::array();
  for (const auto& c : {ConventionTag::unitary(d), ConventionTag::bare()})
    t.push_back({{"name", c.name}, {"prefactor", c.prefactor}, {"sign", c.sign}});
  return {{"rule", "norm constants scale linearly with the prefactor; the phase sign does not enter"},
          {"conventions", t},
          {"unitary_over_bare", ConventionTag::unitary(d).prefactor}};
}

// Density on Gamma or on a cap grid, chosen by the `density` key.
SurfaceDensity config_density(const Run& run, std::mt19937_64& rng) {
  const int d = run.d;
  const int n = run.cfg.integer("grid") > 0 ? run.cfg.integer("grid") : (d == 1 ? 128 : 48);
  const std::string kind = run.cfg.str("density");
  SurfaceDensity f;
  if (kind == "constant") {
    auto g = std::make_shared<const DiskGrid>(build_disk_grid(d, n));
    f = sample_density(g, gamma_indicator(d), gamma_cap(d));
  } else if (kind == "gaussian") {
    const double r = run.cfg.real("radius");
    const CapSpec cap(d, north_pole(d), std::min(0.5, 2.12 * r));
    auto g = std::make_shared<const DiskGrid>(build_cap_grid(cap, n));
    f = sample_density(g, gaussian_trial(d, r, north_pole(d)), cap);
  } else {
    const BumpSpec spec = random_bump_spec(d, rng, 0.1, 0.4);
    auto g = std::make_shared<const DiskGrid>(build_cap_grid(spec.cap, n));
    f = bump_density(g, spec);
  }
  return scaled(f, 1.0 / l2_sigma_norm(f));
}

// ── subcommands ─────────────────────────────────────────────────────

void cmd_net(Run& run) {
  const int k = run.cfg.integer("level");
  const CapNet net = build_cap_net(run.d, k);
  const auto samples = random_sphere_points(run.d, run.cfg.integer("samples"), run.cfg.integer("seed"));
  const NetCertificate cert = certify_net(net, samples);
  json j = run.header();
  j["level"] = k;
  j["separation"] = net.separation;
  j["cap_radius"] = net.cap_radius();
  j["size"] = net.centers.size();
  j["certificate"] = {{"samples", samples.size()},
                      {"min_separation", cert.min_separation},
                      {"covering_radius", cert.covering_radius},
                      {"max_overlap", cert.max_overlap},
                      {"separated", cert.min_separation >= net.separation * (1.0 - 1e-12)},
                      {"covering", cert.covering_radius <= net.separation}};
  json c = json::array();
  for (const auto& z : net.centers) c.push_back(point_json(z, run.d + 1));
  j["centers"] = c;
  run.write_json("net.json", j);
}

void cmd_whitney(Run& run) {
  const WhitneyDecomposition w = whitney_pairs(run.d, run.cfg.integer("depth"));
  const WhitneyCensus c = whitney_census(w, run.cfg.integer("samples"), run.cfg.integer("seed"));
  json j = run.header();
  j["depth"] = w.depth;
  j["finest_level"] = w.finest_level;
  j["unresolved_width"] = w.unresolved_width;
  j["pairs"] = w.pairs.size();
  j["census"] = {{"samples", c.samples},     {"resolved", c.resolved},   {"uncovered", c.uncovered},
                 {"multiple", c.multiple},   {"coarse_only", c.coarse_only}};
  j["partition"] = c.uncovered == 0 && c.multiple == 0;
  run.write_json("whitney.json", j);
  std::vector<std::vector<double>> rows;
  for (const auto& p : w.pairs) {
    std::vector<double> r{double(p.level)};
    for (int i = 0; i < run.d; ++i) r.push_back(p.first.index[i]);
    for (int i = 0; i < run.d; ++i) r.push_back(p.second.index[i]);
    rows.push_back(r);
  }
  run.write_csv("pairs.csv", run.d == 1 ? "level,a1,b1" : "level,a1,a2,b1,b2", rows);
}

void cmd_extend(Run& run) {
  const int d = run.d;
  std::mt19937_64 rng(run.cfg.integer("seed"));
  const SurfaceDensity f = config_density(run, rng);
  const double T = run.cfg.real("T") > 0 ? run.cfg.real("T") : (d == 1 ? 20.0 : 10.0);
  const double X = run.cfg.real("X") > 0 ? run.cfg.real("X") : T;
  const int nt = run.cfg.integer("nt") > 0 ? run.cfg.integer("nt") : (d == 1 ? 161 : 41);
  const int nx = run.cfg.integer("nx") > 0 ? run.cfg.integer("nx") : nt;
  const SpaceTimeGrid L = make_lattice(d, T, X, nt, nx);
  const SpaceTimeField F = extend_sphere(f, L, run.conv);
  const double p = tomas_stein_exponent(d);
  const NormEstimate ne = lp_norm(F, p);

  // Spot check of the lattice against direct evaluation.
  double spot = 0.0;
  for (std::size_t i = 0; i < F.values.size(); i += F.values.size() / 7 + 1) {
    const std::size_t kt = i / L.slab_size(), ix = i % L.slab_size();
    double x[3];
    L.space_point(ix, x);
    Point xi{};
    for (int j = 0; j < d; ++j) xi[j] = x[j];
    xi[d] = L.t(int(kt));
    spot = std::max(spot, std::abs(extend_at(f, xi, run.conv) - F.values[i]));
  }
  json j = run.header();
  j["density"] = run.cfg.str("density");
  j["lattice"] = {{"T", L.T}, {"X", L.X}, {"nt", L.nt}, {"nx", L.nx}};
  j["p"] = p;
  j["lattice_norm"] = {{"truncated", ne.value}, {"tail", ne.tail}, {"corrected", ne.corrected()}};
  j["convolution_norm"] = estimate_json(even_norm_via_convolution(f, d, run.conv, run.cfg.integer("conv_res")));
  j["direct_evaluation_max_error"] = spot;
  run.write_json("extend.json", j);

  std::vector<std::vector<double>> rows;
  rows.reserve(F.values.size());
  for (std::size_t i = 0; i < F.values.size(); ++i) {
    const std::size_t kt = i / L.slab_size(), ix = i % L.slab_size();
    double x[3];
    L.space_point(ix, x);
    std::vector<double> r{L.t(int(kt))};
    for (int k = 0; k < d; ++k) r.push_back(x[k]);
    r.push_back(F.values[i].real());
    r.push_back(F.values[i].imag());
    rows.push_back(r);
  }
  run.write_csv("field.csv", d == 1 ? "t,x1,re,im" : "t,x1,x2,re,im", rows);
}

void cmd_norms(Run& run) {
  const int d = run.d;
  std::mt19937_64 rng(run.cfg.integer("seed"));
  const int count = run.cfg.integer("count");
  json items = json::array();
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const SurfaceDensity f = config_density(run, rng);
    QuotientConfig st;
    st.force_space_time = true;
    st.T = run.cfg.real("T");
    const QuotientResult a = sphere_quotient(f, run.conv, st);
    const Estimate b = even_norm_via_convolution(f, d, run.conv, run.cfg.integer("conv_res"));
    const double rel = std::abs(a.value - b.value) / b.value;
    worst = std::max(worst, rel);
    items.push_back({{"space_time", a.value}, {"space_time_uncertainty", a.uncertainty},
                     {"convolution", b.value}, {"convolution_uncertainty", b.uncertainty}, {"relative_gap", rel}});
    rows.push_back({double(i), a.value, b.value, rel});
  }
  const RPEstimate rp = estimate_R_P(d, run.conv);
  json j = run.header();
  j["density"] = run.cfg.str("density");
  j["p"] = tomas_stein_exponent(d);
  j["densities"] = items;
  j["max_relative_gap"] = worst;
  j["gaussian_paths"] = {{"analytic", rp.truncated_analytic},
                         {"quadrature", rp.truncated_quadrature},
                         {"relative_gap", rp.cross_check}};
  run.write_json("norms.json", j);
  run.write_csv("norms.csv", "index,space_time,convolution,relative_gap", rows);
}

void cmd_refine(Run& run) {
  const int d = run.d;
  const int level = run.cfg.integer("level");
  const int n = run.cfg.integer("grid") > 0 ? run.cfg.integer("grid") : (d == 1 ? 96 : 32);
  std::mt19937_64 rng(run.cfg.integer("seed"));
  QuotientConfig qc;
  qc.conv_resolution = run.cfg.integer("conv_res");
  std::vector<RefinedTriple> members;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < run.cfg.integer("members"); ++i) {
    const BumpSpec spec = random_bump_spec(d, rng, 0.05, 0.45);
    auto g = std::make_shared<const DiskGrid>(build_cap_grid(spec.cap, n));
    const RefinedTriple t = refined_triple(bump_density(g, spec), level, run.conv, qc);
    members.push_back(t);
    rows.push_back({spec.cap.radius, t.l2, t.extension_norm, t.extension_uncertainty, t.concentration});
  }
  const RefinedReport rep = refined_envelope(members);
  json j = run.header();
  j["max_level"] = level;
  j["members"] = members.size();
  json env = json::array();
  for (std::size_t a = 0; a < rep.alphas.size(); ++a)
    env.push_back({{"alpha", rep.alphas[a]}, {"constant", rep.constants[a]}});
  j["envelope"] = env;
  j["best_alpha"] = rep.alphas[rep.best_alpha];
  j["best_constant"] = rep.constants[rep.best_alpha];
  run.write_json("refine.json", j);
  run.write_csv("triples.csv", "cap_radius,l2,extension_norm,extension_uncertainty,concentration", rows);
}

void cmd_bilinear(Run& run) {
  const int d = run.d;
  const double r = run.cfg.real("pair_radius");
  const int n = run.cfg.integer("grid") > 0 ? run.cfg.integer("grid") : (d == 1 ? 64 : 24);
  BilinearConfig bc;
  bc.resolution = run.cfg.integer("conv_res");
  bc.T = run.cfg.real("T");
  std::vector<std::pair<double, double>> pts;
  std::vector<std::vector<double>> rows;
  for (double N : run.cfg.reals("separations")) {
    if (N * r > 1.5) throw DomainError("bilinear: separation * pair_radius must stay below 1.5");
    const auto [b1, b2] = separated_bump_pair(d, r, N);
    auto g1 = std::make_shared<const DiskGrid>(build_cap_grid(b1.cap, n));
    auto g2 = std::make_shared<const DiskGrid>(build_cap_grid(b2.cap, n));
    const Estimate e = bilinear_interaction(bump_density(g1, b1), b1.cap, bump_density(g2, b2), b2.cap, run.conv, bc);
    pts.push_back({N, e.value});
    rows.push_back({N, e.value, e.uncertainty});
  }
  const BilinearDecayFit fit = decay_fit(pts);
  json j = run.header();
  j["pair_radius"] = r;
  j["q"] = (d + 2.0) / d;
  j["alpha_hat"] = fit.alpha_hat;
  j["intercept"] = fit.intercept;
  j["r2"] = fit.r2;
  run.write_json("bilinear.json", j);
  run.write_csv("decay.csv", "separation,norm,uncertainty", rows);
}

json plant_to_json(const PlantConfig& pc) {
  json prof = json::array();
  for (const auto& p : pc.profiles) {
    json co = json::array();
    for (const auto& c : p.coeffs) co.push_back({c.real(), c.imag()});
    prof.push_back({{"cap", cap_json(p.cap)},
                    {"amplitude", p.amplitude},
                    {"power", p.power},
                    {"coeffs", co},
                    {"start", modulation_json(p.start, pc.d)},
                    {"velocity", modulation_json(p.velocity, pc.d)}});
  }
  return {{"d", pc.d}, {"nu_count", pc.nu_count}, {"ball_resolution", pc.ball_resolution},
          {"noise", pc.noise}, {"seed", pc.seed}, {"profiles", prof}};
}

PlantConfig plant_from_json(const json& j) {
  PlantConfig pc;
  pc.d = j.at("d").get<int>();
  if (pc.d != 1 && pc.d != 2) throw DomainError("plant file: d must be 1 or 2");
  pc.nu_count = j.at("nu_count").get<int>();
  pc.ball_resolution = j.at("ball_resolution").get<int>();
  pc.noise = j.at("noise").get<double>();
  pc.seed = j.at("seed").get<unsigned long long>();
  for (const auto& pj : j.at("profiles")) {
    PlantedProfile p;
    p.cap = CapSpec(pc.d, point_from(pj.at("cap").at("center")), pj.at("cap").at("radius").get<double>());
    p.amplitude = pj.at("amplitude").get<double>();
    p.power = pj.at("power").get<int>();
    p.coeffs.clear();
    for (const auto& c : pj.at("coeffs")) p.coeffs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    p.start = modulation_from(pj.at("start"));
    p.velocity = modulation_from(pj.at("velocity"));
    pc.profiles.push_back(p);
  }
  if (pc.profiles.empty() || pc.nu_count < 2) throw DomainError("plant file: needs profiles and nu_count >= 2");
  return pc;
}

void cmd_plant(Run& run) {
  PlantConfig pc = default_plant(run.d, run.cfg.integer("profiles"), run.cfg.integer("seed"));
  pc.nu_count = run.cfg.integer("nu");
  pc.noise = run.cfg.real("noise");
  if (run.cfg.integer("ball") > 0) pc.ball_resolution = run.cfg.integer("ball");
  json j = run.header();
  j["plant"] = plant_to_json(pc);
  run.write_json("plant.json", j);
}

// Cap containing every planted cap; shared caps give the cap itself.
CapSpec sequence_window(const PlantConfig& pc) {
  const int d = pc.d;
  Point z{};
  for (const auto& p : pc.profiles)
    for (int i = 0; i <= d; ++i) z[i] += p.cap.center[i];
  const double zn = norm(z, d + 1);
  if (zn < 1e-9) throw DomainError("decompose: planted caps balance around the origin");
  for (int i = 0; i <= d; ++i) z[i] /= zn;
  double w = 0.0;
  for (const auto& p : pc.profiles) {
    const double ang = std::acos(std::clamp(dot(p.cap.center, z, d + 1), -1.0, 1.0));
    w = std::max(w, std::sin(std::min(0.5 * kPi - 0.05, ang + std::asin(p.cap.radius))));
  }
  return CapSpec(d, z, w);
}

void cmd_decompose(Run& run) {
  std::string path = run.cfg.str("plant_file");
  if (path.empty()) path = (run.dir.parent_path() / "plant" / "plant.json").string();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read plant file " + path);
  json pj;
  try {
    pj = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plant file: ") + e.what());
  }
  PlantConfig pc;
  try {
    pc = plant_from_json(pj.contains("plant") ? pj.at("plant") : pj);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plant file: ") + e.what());
  }
  const int d = pc.d;
  if (d != run.d) throw ConfigError("plant file has d = " + std::to_string(d) + " but dim = " + std::to_string(run.d));

  auto bgrid = std::make_shared<const BallGrid>(build_ball_grid(d, pc.ball_resolution, 1.0));
  const auto planted = planted_profiles(bgrid, pc);
  const int n = run.cfg.integer("grid") > 0 ? run.cfg.integer("grid") : (d == 1 ? 128 : 48);
  auto dg = std::make_shared<const DiskGrid>(build_cap_grid(sequence_window(pc), n));
  std::vector<SurfaceDensity> seq;
  std::mt19937_64 rng(pc.seed + 1);
  std::normal_distribution<double> N;
  for (int nu = 0; nu < pc.nu_count; ++nu) {
    SurfaceDensity f = synthesize(planted, nu, dg);
    if (pc.noise > 0.0)
      for (auto& v : f.values) v += pc.noise * cplx(N(rng), N(rng));
    seq.push_back(std::move(f));
  }

  int max_level = 0;
  for (const auto& p : pc.profiles) max_level = std::max(max_level, int(std::lround(-std::log2(p.cap.radius)) - 1));
  SphereSequenceConfig sc;
  sc.delta = run.cfg.real("delta");
  sc.max_pieces = run.cfg.integer("max_pieces");
  sc.ball_resolution = pc.ball_resolution;
  sc.first.max_level = std::max(max_level, run.cfg.integer("level"));
  sc.first.R_est = estimate_R_P(d, run.conv).value.estimate.value;
  sc.first.convention = run.conv;
  sc.first.quotient.conv_resolution = run.cfg.integer("conv_res");
  sc.extraction.epsilon = run.cfg.real("epsilon");
  sc.extraction.lattice = {run.cfg.real("lattice_hx"), run.cfg.real("lattice_ht"), run.cfg.real("lattice_X"),
                           run.cfg.real("lattice_T")};
  const SphereDecomposition sd = decompose_sequence(seq, sc);

  json j = run.header();
  j["plant_file"] = fs::path(path).filename().string();
  j["nu_count"] = pc.nu_count;
  j["shared_cap"] = sd.shared_cap;
  json firsts = json::array();
  for (std::size_t nu = 0; nu < sd.first.size(); ++nu) {
    const auto& fd = sd.first[nu];
    json pieces = json::array();
    for (const auto& pc2 : fd.pieces) pieces.push_back({{"level", pc2.level}, {"cap", cap_json(pc2.cap)}, {"l2", pc2.l2}});
    firsts.push_back({{"nu", nu + 1}, {"pieces", pieces}, {"pythagoras_residual", fd.pythagoras_residual},
                      {"remainder_extension", fd.remainder_extension}, {"reached_threshold", fd.reached_threshold}});
  }
  j["first_decomposition"] = firsts;

  // Match every extracted trajectory to the closest planted one, distances in lattice cells.
  const double hx = sc.extraction.lattice.hx, ht = sc.extraction.lattice.ht;
  auto cells = [&](const ModulationParams& a, const ModulationParams& b) {
    double c = std::abs(a.t - b.t) / ht;
    for (int i = 0; i < d; ++i) c = std::max(c, std::abs(a.x[i] - b.x[i]) / hx);
    return c;
  };
  json table = json::array();
  std::vector<std::vector<double>> rec_rows;
  double worst_cells = 0.0;
  std::vector<bool> taken(planted.size(), false);
  for (std::size_t e = 0; e < sd.extraction.profiles.size(); ++e) {
    const auto& ep = sd.extraction.profiles[e];
    std::size_t best = planted.size();
    double best_cost = 1e300;
    for (std::size_t k = 0; k < planted.size(); ++k) {
      if (taken[k]) continue;
      double cost = 0.0;
      for (int nu = 0; nu < pc.nu_count; ++nu) cost += cells(ep.params[nu], planted[k].modulation[nu]);
      if (cost < best_cost) best_cost = cost, best = k;
    }
    json rows = json::array();
    double mx = 0.0;
    if (best < planted.size()) {
      taken[best] = true;
      for (int nu = 0; nu < pc.nu_count; ++nu) {
        const double c = cells(ep.params[nu], planted[best].modulation[nu]);
        mx = std::max(mx, c);
        rows.push_back({{"nu", nu + 1}, {"extracted", modulation_json(ep.params[nu], d)},
                        {"planted", modulation_json(planted[best].modulation[nu], d)}, {"cells", c}});
        std::vector<double> r{double(e), double(best), double(nu + 1)};
        for (int i = 0; i < d; ++i) r.push_back(ep.params[nu].x[i]);
        r.push_back(ep.params[nu].t);
        for (int i = 0; i < d; ++i) r.push_back(planted[best].modulation[nu].x[i]);
        r.push_back(planted[best].modulation[nu].t);
        r.push_back(c);
        rec_rows.push_back(r);
      }
      worst_cells = std::max(worst_cells, mx);
    }
    table.push_back({{"extracted", e}, {"planted", best < planted.size() ? json(best) : json(nullptr)},
                     {"strength", ep.strength}, {"max_cells", mx}, {"trajectory", rows}});
  }
  j["profiles_planted"] = planted.size();
  j["profiles_extracted"] = sd.extraction.profiles.size();
  j["recovery"] = table;
  j["max_parameter_error_cells"] = worst_cells;
  j["merged"] = sd.extraction.merged;
  j["flags"] = sd.extraction.flags;
  json pyth = json::array();
  for (std::size_t nu = 0; nu < sd.rescaled.size(); ++nu)
    pyth.push_back(profile_pythagoras(*sd.grid, sd.rescaled[nu], sd.extraction.profiles, sd.extraction.errors[nu]));
  j["profile_pythagoras"] = pyth;

  std::vector<std::vector<double>> pn_rows;
  if (!sd.profiles.empty()) {
    OrthogonalityConfig oc;
    oc.convention = run.conv;
    std::vector<std::size_t> nus;
    for (int nu = 0; nu < pc.nu_count; ++nu) nus.push_back(nu);
    const DecompositionReport rep = orthogonality_report(sd.profiles, nus, oc);
    json per = json::array();
    for (const auto& r : rep.per_nu) {
      per.push_back({{"nu", r.nu + 1}, {"product_norms", r.product_norms}, {"divergence", r.divergence},
                     {"superadditivity", {{"lhs", r.superadditivity_lhs}, {"rhs", r.superadditivity_rhs},
                                          {"gap", r.superadditivity_gap}}}});
      for (std::size_t a = 0; a < r.product_norms.size(); ++a)
        for (std::size_t b = 0; b < r.product_norms.size(); ++b)
          pn_rows.push_back({double(r.nu + 1), double(a), double(b), r.product_norms[a][b], r.divergence[a][b]});
    }
    j["orthogonality"] = per;
  }
  run.write_json("decomposition.json", j);
  run.write_csv("recovery.csv", d == 1 ? "extracted,planted,nu,x1,t,planted_x1,planted_t,cells"
                                       : "extracted,planted,nu,x1,x2,t,planted_x1,planted_x2,planted_t,cells",
                rec_rows);
  run.write_csv("product_norms.csv", "nu,j,k,product_norm,divergence", pn_rows);
}

void cmd_constants(Run& run) {
  const int d = run.d;
  const RPEstimate rp = estimate_R_P(d, run.conv);
  json j = run.header();
  j["conversion"] = convention_table(d);
  j["p"] = rp.p;
  j["power_ratio"] = rp.power_ratio;
  j["R_P"] = estimate_json(rp.value.estimate);
  j["p_power_form"] = rp.p_power_form;
  j["truncated"] = {{"analytic", rp.truncated_analytic}, {"quadrature", rp.truncated_quadrature},
                    {"relative_gap", rp.cross_check}};
  json other = json::object();
  for (const auto& c : {ConventionTag::unitary(d), ConventionTag::bare()})
    other[c.name] = convert(rp.value, c).estimate.value;
  j["R_P_by_convention"] = other;
  json sc = json::array();
  for (double lam : {0.5, 1.0, 2.0, 4.0}) sc.push_back({{"lambda", lam}, {"power_ratio", scaled_gaussian_power_ratio(d, lam)}});
  j["scaling"] = sc;
  run.write_json("constants.json", j);
}

void cmd_compare(Run& run) {
  const int d = run.d;
  ComparisonConfig cc;
  cc.grid_resolution = run.cfg.integer("grid");
  cc.ascent.steps = run.cfg.integer("steps");
  cc.ascent.conv_resolution = run.cfg.integer("conv_res");
  cc.radii = run.cfg.reals("radii");
  cc.curve.conv_resolution = run.cfg.integer("conv_res");
  cc.seed = run.cfg.integer("seed");
  const ComparisonReport rep = comparison_report(d, run.conv, cc);

  json j = run.header();
  j["conversion"] = convention_table(d);
  j["note"] = "numerical indication on a discretised class of densities, not a proof";
  j["R_P"] = estimate_json(rep.rp.value.estimate);
  j["R"] = estimate_json(rep.R.estimate);
  j["R_source"] = rep.R_source;
  j["verdict"] = verdict_name(rep.verdict);
  json asc = json::array();
  std::vector<std::vector<double>> hist;
  for (std::size_t i = 0; i < rep.ascents.size(); ++i) {
    const auto& a = rep.ascents[i];
    asc.push_back({{"init", rep.init_names[i]},
                   {"objective", a.convolution_objective ? "convolution" : "space_time"},
                   {"initial_quotient", a.history.empty() ? 0.0 : a.history.front().quotient},
                   {"quotient", a.quotient},
                   {"certified", a.certified},
                   {"uncertainty", a.uncertainty},
                   {"iterations", a.iteration},
                   {"converged", a.converged}});
    for (std::size_t s = 0; s < a.history.size(); ++s)
      hist.push_back({double(i), double(s), a.history[s].step, a.history[s].quotient});
  }
  j["ascents"] = asc;
  json curve = json::array();
  std::vector<std::vector<double>> crow;
  for (const auto& c : rep.curve) {
    curve.push_back({{"r", c.r}, {"quotient", c.quotient}, {"uncertainty", c.uncertainty},
                     {"gap_to_R_P", c.quotient - rep.rp.value.estimate.value}});
    crow.push_back({c.r, c.quotient, c.uncertainty, c.quotient - rep.rp.value.estimate.value});
  }
  j["concentration_curve"] = curve;
  run.write_json("comparison.json", j);
  run.write_csv("curve.csv", "r,quotient,uncertainty,gap_to_R_P", crow);
  run.write_csv("ascent_history.csv", "init,step,step_size,quotient", hist);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tslab: sphere extension experiments"};
  app.require_subcommand(1);
  std::string config_path, out_root, convention;
  int dim = 0, seed = -1, profiles = 0, level = -1, depth = 0;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--dim", dim, "sphere dimension d (1 or 2)");
  app.add_option("--convention", convention, "normalisation tag: unitary or bare");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_root, "output root (default $TSLAB_OUT or ./tslab_out)");
  app.add_option("--profiles", profiles, "planted profile count");
  app.add_option("--level", level, "cap-net level");
  app.add_option("--depth", depth, "Whitney depth");
  app.add_option("--set", sets, "override any config key: key=value");

  const std::vector<std::pair<std::string, std::function<void(Run&)>>> commands = {
      {"net", cmd_net},           {"whitney", cmd_whitney},     {"extend", cmd_extend}, {"norms", cmd_norms},
      {"refine", cmd_refine},     {"bilinear", cmd_bilinear},   {"decompose", cmd_decompose},
      {"plant", cmd_plant},       {"constants", cmd_constants}, {"compare", cmd_compare}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (!config_path.empty()) run.cfg.load_file(config_path);
    if (dim) run.cfg.set("dim", std::to_string(dim));
    if (!convention.empty()) run.cfg.set("convention", convention);
    if (seed >= 0) run.cfg.set("seed", std::to_string(seed));
    if (profiles) run.cfg.set("profiles", std::to_string(profiles));
    if (level >= 0) run.cfg.set("level", std::to_string(level));
    if (depth) run.cfg.set("depth", std::to_string(depth));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      run.cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!out_root.empty()) run.cfg.set("out", out_root);
    run.cfg.validate();

    std::string root = run.cfg.str("out");
    if (root.empty()) {
      const char* env = std::getenv("TSLAB_OUT");
      root = env && *env ? env : "tslab_out";
    }
    run.dir = fs::path(root) / run.command;
    std::error_code ec;
    fs::create_directories(run.dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + run.dir.string());
    run.hash = run.cfg.hash();
    run.d = run.cfg.integer("dim");
    run.conv = ConventionTag::by_name(run.cfg.str("convention"), run.d);

    for (const auto& [name, fn] : commands)
      if (name == run.command) fn(run);
  } catch (const ConfigError& e) {
    std::cerr << "tslab " << run.command << ": invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "tslab " << run.command << ": validation failure: " << e.what() << "\n";
    return 2;
  } catch (const ResolutionError& e) {
    std::cerr << "tslab " << run.command << ": resolution failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "tslab " << run.command << ": numerical failure: " << e.what() << "\n";
    return 3;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // The manifest is the one output that is not reproducible byte for byte: it records the wall time.
  json m;
  m["config_hash"] = run.hash;
  m["subcommand"] = run.command;
  m["config"] = run.cfg.values();
  m["versions"] = {{"tslab", kVersion}, {"compiler", __VERSION__}, {"cli11", CLI11_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["wall_seconds"] = wall;
  m["artifacts"] = run.written;
  std::ofstream(run.dir / "manifest.json") << m.dump(2) << "\n";
  std::cout << run.command << ": " << run.written.size() << " artifacts in " << run.dir.string() << " (" << wall
            << " s, config " << run.hash << ")\n";
  return 0;
}
