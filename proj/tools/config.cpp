#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tslab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig::ExperimentConfig() {
  values_ = {
      {"dim", "1"},
      {"convention", "unitary"},
      {"seed", "7"},
      {"out", ""},
      // geometry
      {"level", "3"},
      {"depth", "3"},
      {"samples", "10000"},
      // grids; 0 keeps the module default
      {"grid", "0"},
      {"ball", "0"},
      {"conv_res", "32"},
      {"T", "0"},
      {"X", "0"},
      {"nt", "0"},
      {"nx", "0"},
      // densities for extend / norms
      {"density", "bump"},
      {"radius", "0.2"},
      {"count", "10"},
      // refinement
      {"members", "12"},
      {"separations", "2,4,8,16"},
      {"pair_radius", "0.05"},
      // decomposition
      {"delta", "0.5"},
      {"epsilon", "0.05"},
      {"max_pieces", "4"},
      {"lattice_hx", "0.5"},
      {"lattice_ht", "0.5"},
      {"lattice_X", "10"},
      {"lattice_T", "10"},
      {"profiles", "2"},
      {"nu", "8"},
      {"noise", "0"},
      {"plant_file", ""},
      // constants
      {"steps", "200"},
      {"radii", "0.4,0.2,0.1,0.05"},
  };
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(no) + ": expected key=value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

std::string ExperimentConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int ExperimentConfig::integer(const std::string& key) const {
  const std::string s = str(key);
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

double ExperimentConfig::real(const std::string& key) const {
  const std::string s = str(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || !std::isfinite(v)) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || !std::isfinite(v))
      throw ConfigError(key + ": expected a comma-separated list of numbers");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const int d = integer("dim");
  need(d == 1 || d == 2, "dim must be 1 or 2");
  const std::string conv = str("convention");
  need(conv == "unitary" || conv == "bare", "convention must be unitary or bare");
  need(integer("seed") >= 0, "seed must be non-negative");
  need(integer("level") >= 0 && integer("level") <= 8, "level must lie in 0..8");
  need(integer("depth") >= 1 && integer("depth") <= 6, "depth must lie in 1..6");
  need(integer("samples") >= 1, "samples must be positive");
  need(integer("grid") >= 0 && integer("ball") >= 0, "grid and ball must be non-negative");
  need(integer("conv_res") >= 4, "conv_res must be at least 4");
  need(real("T") >= 0.0 && real("X") >= 0.0, "T and X must be non-negative");
  need(integer("nt") >= 0 && integer("nx") >= 0, "nt and nx must be non-negative");
  const std::string dens = str("density");
  need(dens == "constant" || dens == "gaussian" || dens == "bump", "density must be constant, gaussian or bump");
  need(real("radius") > 0.0 && real("radius") <= 0.5, "radius must lie in (0, 1/2]");
  need(integer("count") >= 1 && integer("members") >= 2, "count >= 1 and members >= 2");
  for (double N : reals("separations")) need(N >= 2.0, "separations must be at least 2");
  need(real("pair_radius") > 0.0 && real("pair_radius") <= 0.25, "pair_radius must lie in (0, 1/4]");
  need(real("delta") > 0.0 && real("delta") < 1.0, "delta must lie in (0, 1)");
  need(real("epsilon") > 0.0 && real("epsilon") < 1.0, "epsilon must lie in (0, 1)");
  need(integer("max_pieces") >= 1, "max_pieces must be positive");
  need(real("lattice_hx") > 0.0 && real("lattice_ht") > 0.0, "lattice spacings must be positive");
  need(real("lattice_X") > 0.0 && real("lattice_T") > 0.0, "lattice extents must be positive");
  need(integer("profiles") >= 1 && integer("profiles") <= 3, "profiles must lie in 1..3");
  need(integer("nu") >= 2, "nu must be at least 2");
  need(real("noise") >= 0.0, "noise must be non-negative");
  need(integer("steps") >= 0, "steps must be non-negative");
  for (double r : reals("radii")) need(r > 0.0 && r <= 0.5, "radii must lie in (0, 1/2]");
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  for (const auto& [k, v] : values_) {
    if (k == "out") continue;
    s += k + "=" + v + "\n";
  }
  return s;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

}  // namespace tslab::cli
