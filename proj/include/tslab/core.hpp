#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslab {

using cplx = std::complex<double>;

// Ambient points live in R^{d+1} with d <= 3.
constexpr int kMaxAmbient = 4;
using Point = std::array<double, kMaxAmbient>;

constexpr double kPi = 3.14159265358979323846;

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a requested resolution cannot be honoured.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Estimate {
  double value = 0.0;
  double uncertainty = 0.0;
};

inline double dot(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a, int n) { return std::sqrt(dot(a, a, n)); }

inline Point north_pole(int d) {
  Point p{};
  p[d] = 1.0;
  return p;
}

// Normalisation of the extension operator: F(xi) = prefactor * int e^{sign i xi.w} f dsigma.
struct ConventionTag {
  std::string name = "unitary";
  double prefactor = 1.0;
  int sign = -1;

  static ConventionTag unitary(int d) {
    return {"unitary", std::pow(2.0 * kPi, -(d + 1) / 2.0), -1};
  }
  static ConventionTag bare() { return {"bare", 1.0, +1}; }
  static ConventionTag by_name(const std::string& name, int d) {
    if (name == "unitary") return unitary(d);
    if (name == "bare") return bare();
    throw DomainError("unknown convention: " + name);
  }
};

// Endpoint exponent 2 + 4/d of the extension estimate.
inline double tomas_stein_exponent(int d) { return 2.0 + 4.0 / d; }

}  // namespace tslab
