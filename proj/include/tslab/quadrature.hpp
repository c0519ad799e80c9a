#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "tslab/core.hpp"
#include "tslab/geometry.hpp"

namespace tslab {

// Gauss-Legendre nodes and weights on [a, b].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b);

// Tensor grid on the ball B(0, radius) in R^d (d = 1: composite Gauss-Legendre panels,
// d = 2: Gauss-Legendre radii times uniform angles).
struct BallGrid {
  int d = 2;
  double radius = 1.0;
  int nr = 0;
  int nth = 0;
  std::vector<double> nodes;    // d coordinates per node
  std::vector<double> weights;  // Lebesgue weights

  std::size_t size() const { return weights.size(); }
  const double* node(std::size_t i) const { return nodes.data() + i * d; }
  double node_norm2(std::size_t i) const;

  // Spectral interpolation of nodal values; zero outside the ball.
  cplx interpolate(const std::vector<cplx>& values, const double* y) const;

  static constexpr int kPanel = 8;
};

BallGrid build_ball_grid(int d, int n, double radius);

// BallGrid::interpolate with the per-ring Fourier coefficients and radial weights precomputed,
// for many evaluations of one set of values.
class BallInterpolant {
 public:
  BallInterpolant(const BallGrid& grid, const std::vector<cplx>& values);
  cplx operator()(const double* y) const;

 private:
  int d_ = 1, nr_ = 0, nth_ = 0;
  double radius_ = 1.0;
  std::vector<double> nodes_;   // d = 1
  std::vector<cplx> values_;    // d = 1
  std::vector<double> radii_;   // d = 2
  std::vector<double> bary_;    // d = 2
  std::vector<cplx> coeffs_;    // d = 2: modes -(m-1)..(m-1) per ring, then the cos(m theta) term
};

// Quadrature on a cap of S^d written as a graph over the disk |u| <= radius in the frame.
struct DiskGrid {
  int d = 2;
  Frame frame;
  BallGrid ball;
  std::vector<double> sigma_weights;
  std::vector<Point> points;

  double radius() const { return ball.radius; }
  std::size_t size() const { return ball.size(); }
  double sigma_mass() const;
  // Grid coordinates of p, or nullopt when p is outside the patch.
  bool locate(const Point& p, double* u) const;
};

// Gamma: |u| <= 1/2 around the north pole.
DiskGrid build_disk_grid(int d, int n);
// Patch on an arbitrary cap, radius < 1.
DiskGrid build_cap_grid(const CapSpec& cap, int n);

using SphereFn = std::function<cplx(const Point&)>;

struct SurfaceDensity {
  std::shared_ptr<const DiskGrid> grid;
  std::vector<cplx> values;
  // Optional exact representation; when absent, off-grid values are interpolated.
  SphereFn source;
  // Declared support window (defaults to the grid patch).
  std::optional<CapSpec> support;

  int d() const { return grid->d; }
  cplx at(const Point& p) const;
  CapSpec window() const;
};

// Exact function of the interpolated grid values (zero off the patch).
SphereFn interpolant_function(const SurfaceDensity& f);

SurfaceDensity sample_density(std::shared_ptr<const DiskGrid> grid, SphereFn fn,
                              std::optional<CapSpec> support = std::nullopt);
// Image of f under the reflection taking its window center to the north pole; every L^p norm of the
// extension is unchanged.
SurfaceDensity reflect_to_pole(const SurfaceDensity& f);
SurfaceDensity zero_density(std::shared_ptr<const DiskGrid> grid);
SurfaceDensity scaled(const SurfaceDensity& f, cplx c);

double l2_sigma_norm(const SurfaceDensity& f);
double l1_sigma_norm(const SurfaceDensity& f);

struct SpaceTimeGrid {
  int d = 1;
  double T = 1.0;
  double X = 1.0;
  int nt = 2;
  int nx = 2;
  double cell_weight = 0.0;  // volume of an interior cell

  double ht() const { return 2.0 * T / (nt - 1); }
  double hx() const { return 2.0 * X / (nx - 1); }
  double t(int k) const { return -T + k * ht(); }
  double x(int k) const { return -X + k * hx(); }
  std::size_t slab_size() const;
  std::size_t size() const { return slab_size() * nt; }
  // Cell volume clipped to the truncation box (trapezoid weights).
  double time_weight(int kt) const;
  double space_weight(std::size_t ix) const;
  void space_point(std::size_t ix, double* x) const;
};

SpaceTimeGrid make_lattice(int d, double T, double X, int nt, int nx);
// Lattice through the origin with the given spacings (T, X rounded up to multiples).
SpaceTimeGrid lattice_from_spacing(int d, double T, double X, double ht, double hx);

struct SpaceTimeField {
  SpaceTimeGrid grid;
  std::vector<cplx> values;  // index = kt * slab_size + ix, x_1 fastest
  // Envelope amplitude A of |F(t, .)| <= A |t|^{-d/2} fitted on the outer slabs; 0 if not dispersive.
  double tail_estimate = 0.0;
};

struct NormEstimate {
  double value = 0.0;       // truncated Riemann sum
  double tail = 0.0;        // norm-units increment attributed to |t| > T
  double resolution = 0.0;  // lattice spacing used
  double corrected() const { return value + tail; }
};

// Slab integrals S(t_k) = sum_x w |F|^p.
std::vector<double> slab_integrals(const SpaceTimeField& field, double p);
// Fit of S(t) ~ C |t|^{-gamma} on the outer quarter of slabs, integrated beyond T.
double slab_tail(const SpaceTimeGrid& grid, const std::vector<double>& slabs, double gamma);

// tail_gamma overrides the slab decay exponent d(p-2)/2 used for the tail fit (0 keeps the default).
NormEstimate lp_norm(const SpaceTimeField& field, double p, double tail_gamma = 0.0);
double envelope_amplitude(const SpaceTimeField& field);

}  // namespace tslab
