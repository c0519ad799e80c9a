#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslab::cli {

// Bad configuration: unknown key, unparsable value, value out of range, unreadable file.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration. Every key has a default; files and flags may only override known keys.
class ExperimentConfig {
 public:
  ExperimentConfig();

  // '#' starts a comment; blank lines are ignored.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  bool known(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key) const;
  int integer(const std::string& key) const;
  double real(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;

  // Range checks shared by every subcommand; throws ConfigError.
  void validate() const;

  // Sorted key=value lines of everything that influences results (the output root is excluded).
  std::string canonical() const;
  std::string hash() const;  // FNV-1a 64 of canonical(), hex
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& s);

}  // namespace tslab::cli
