#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tslab/core.hpp"
#include "tslab/geometry.hpp"
#include "tslab/quadrature.hpp"

namespace tslab {

struct ModulationParams {
  std::array<double, 3> x{};
  double t = 0.0;
};

// F(xi) on the lattice, xi = (x, t) with t paired with the last ambient coordinate.
SpaceTimeField extend_sphere(const SurfaceDensity& f, const SpaceTimeGrid& grid, const ConventionTag& conv);
// Direct evaluation at one point xi in R^{d+1}.
cplx extend_at(const SurfaceDensity& f, const Point& xi, const ConventionTag& conv);
// Adjoint of extend_sphere for the lattice inner product and the sigma inner product on the grid.
std::vector<cplx> restrict_field(const SpaceTimeField& field, const DiskGrid& grid, const ConventionTag& conv);

// e^{it Delta/2} phi(x) = int e^{i x.y - i t |y|^2/2} phi(y) dy.
SpaceTimeField schrodinger_evolve(const BallGrid& grid, const std::vector<cplx>& phi, const SpaceTimeGrid& lattice);
cplx schrodinger_at(const BallGrid& grid, const std::vector<cplx>& phi, double t, const double* x);

// Evolution of exp(-|y|^2/2): (2 pi / (1 + i t))^{d/2} exp(-|x|^2 / (2 (1 + i t))).
cplx gaussian_evolution_analytic(int d, double t, const double* x);
// int_{[-X,X]^d} |evolution|^p dx at time t.
double gaussian_slab_integral(int d, double p, double t, double X);
// Space-time integral of |evolution|^p over [-T,T] x [-X,X]^d.
double gaussian_truncated_integral(int d, double p, double T, double X);
// Integral of |evolution|^p over R^{d+1}.
double gaussian_total_integral(int d, double p);

struct RescaleFactors {
  CapSpec cap;
  std::shared_ptr<const BallGrid> grid;  // unit ball
  std::vector<cplx> g;

  // Phase-correction factor h(tau, y).
  cplx h(double tau, const double* y) const;
};

RescaleFactors rescale_factorize(const SurfaceDensity& f, const CapSpec& cap, int n = 32);
// c r^{d/2} e^{i t_c} e^{i tau Delta/2}(h(tau, .) g)(r x_c), with (x_c, t_c) the cap-frame coordinates of
// sign * xi and tau = r^2 t_c; equals extend_at(f, xi, conv).
cplx rescaled_extension(const RescaleFactors& rf, const Point& xi, const ConventionTag& conv);

// int |rho|^2 for rho = (f1 sigma) * (f2 sigma) on S^2, each factor supported in its cap.
double fiber_l2_pair(const SphereFn& f1, const CapSpec& c1, const SphereFn& f2, const CapSpec& c2, int res);
// int |rho|^2 for the threefold autoconvolution of f sigma on S^1.
double fiber_l2_triple(const SphereFn& f, const CapSpec& cap, int res);

// || ext f ||_{2+4/d} through Plancherel on the autoconvolution.
Estimate even_norm_via_convolution(const SurfaceDensity& f, int d, const ConventionTag& conv, int res = 32);

struct QuotientConfig {
  bool force_space_time = false;
  int conv_resolution = 32;
  double T = 0.0;  // 0 selects default_horizon(d, window)
};

struct QuotientResult {
  double value = 0.0;
  double uncertainty = 0.0;
  std::string path;
  double resolution = 0.0;
};

// Lattice whose spacing is below the Nyquist limit of |F|^p for densities in the window.
SpaceTimeGrid default_lattice(int d, double T, const CapSpec& window, double p);
double default_horizon(int d);
// Horizon for a density supported in `window`: a fixed multiple of r^{-2}.
double default_horizon(int d, const CapSpec& window);

QuotientResult sphere_quotient(const SurfaceDensity& f, const ConventionTag& conv, const QuotientConfig& cfg = {});

struct StrichartzValue {
  double integral = 0.0;    // int |e^{it Delta/2} phi|^p over the lattice
  double l2 = 0.0;          // ||phi||_2
  double power_ratio = 0.0;  // integral / ||phi||^p
  double norm_ratio = 0.0;   // power_ratio^{1/p}
};

StrichartzValue strichartz_quotient(const BallGrid& grid, const std::vector<cplx>& phi, const SpaceTimeGrid& lattice);

// Smooth bumps (1 - |y|^2)^k P(y) e^{i xi . w} in the rescaled coordinates y of a cap.
struct BumpSpec {
  CapSpec cap;
  int power = 6;
  std::vector<cplx> coeffs{1.0};
  Point modulation{};
};

SphereFn bump_function(const BumpSpec& spec);
BumpSpec random_bump_spec(int d, std::mt19937_64& rng, double rmin, double rmax);
// Normalised bump density on the given grid.
SurfaceDensity bump_density(std::shared_ptr<const DiskGrid> grid, const BumpSpec& spec);
// Indicator of Gamma.
SphereFn gamma_indicator(int d);
CapSpec gamma_cap(int d);

}  // namespace tslab
