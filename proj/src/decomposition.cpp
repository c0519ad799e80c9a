#include "tslab/decomposition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace tslab {

namespace {

bool same_cap(const CapSpec& a, const CapSpec& b) {
  if (std::abs(a.radius - b.radius) > 1e-12) return false;
  for (int i = 0; i <= a.d; ++i)
    if (std::abs(a.center[i] - b.center[i]) > 1e-12) return false;
  return true;
}

double grid_l2sq(const SurfaceDensity& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.grid->sigma_weights[i] * std::norm(f.values[i]);
  return s;
}

// Cubic B-spline with support [-1, 1].
double bspline(double u) {
  const double v = std::abs(2.0 * u);
  if (v >= 2.0) return 0.0;
  if (v >= 1.0) return (2.0 - v) * (2.0 - v) * (2.0 - v) / 6.0;
  return (4.0 - 6.0 * v * v + 3.0 * v * v * v) / 6.0;
}

cplx inverse_phase(const ModulationParams& m, const double* y, int d) {
  double y2 = 0.0, xy = 0.0;
  for (int j = 0; j < d; ++j) {
    y2 += y[j] * y[j];
    xy += m.x[j] * y[j];
  }
  return std::polar(1.0, 0.5 * m.t * y2 - xy);
}

// Solve the small dense Hermitian system A x = b in place.
std::vector<cplx> solve_dense(std::vector<cplx> A, std::vector<cplx> b, int n) {
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r * n + c]) > std::abs(A[piv * n + c])) piv = r;
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(A[c * n + k], A[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    const cplx d = A[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      const cplx f = A[r * n + c] / d;
      if (f == 0.0) continue;
      for (int k = c; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<cplx> x(n);
  for (int r = n - 1; r >= 0; --r) {
    cplx s = b[r];
    for (int k = r + 1; k < n; ++k) s -= A[r * n + k] * x[k];
    x[r] = s / A[r * n + r];
  }
  return x;
}

}  // namespace

// ── cap extraction ──────────────────────────────────────────────────

double threshold_level(const CapSpec& cap, double delta, const ThresholdConfig& cfg) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("threshold_split: delta must lie in (0, 1)");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("threshold_split: alpha must lie in (0, 1)");
  if (!(cfg.c0 > 0.0)) throw DomainError("threshold_split: c0 must be positive");
  return 2.0 / (cfg.c0 * std::pow(delta, 1.0 / cfg.alpha) * std::sqrt(cap_measure(cap.d, cap.radius)));
}

SplitResult threshold_split(const SurfaceDensity& f, const CapSpec& cap, double delta, const ThresholdConfig& cfg) {
  const double R = threshold_level(cap, delta, cfg);
  SplitResult s;
  s.level = R;
  s.g = zero_density(f.grid);
  s.h = f;
  const DiskGrid& G = *f.grid;
  for (std::size_t i = 0; i < G.size(); ++i) {
    if (f.values[i] == 0.0) continue;
    if (cap_contains_unchecked(cap, G.points[i]) && std::abs(f.values[i]) <= R) {
      s.g.values[i] = f.values[i];
      s.h.values[i] = 0.0;
    }
  }
  s.g.support = cap;
  if (f.source) {
    const SphereFn src = f.source;
    auto keep = [src, cap, R](const Point& p) -> cplx {
      if (!cap_contains_unchecked(cap, p)) return 0.0;
      const cplx v = src(p);
      return std::abs(v) <= R ? v : cplx(0.0);
    };
    s.g.source = keep;
    s.h.source = [src, keep](const Point& p) { return src(p) - keep(p); };
  }
  return s;
}

FirstDecomposition first_decomposition(const SurfaceDensity& f, double delta, int max_pieces,
                                       const FirstDecompositionConfig& cfg) {
  if (std::abs(l2_sigma_norm(f) - 1.0) > 1e-10) throw DomainError("first_decomposition: input must have unit norm");
  if (!(cfg.R_est > 0.0)) throw DomainError("first_decomposition: R_est must be positive");
  threshold_level(CapSpec(f.d(), north_pole(f.d()), 0.5), delta, cfg.threshold);  // validates delta, alpha, c0

  FirstDecomposition out;
  out.remainder = f;
  out.eta = 1.0;
  while (true) {
    const double rl2 = l2_sigma_norm(out.remainder);
    if (rl2 < 1e-14) {
      out.remainder_extension = 0.0;
      out.remainder_uncertainty = 0.0;
    } else {
      const QuotientResult q = sphere_quotient(out.remainder, cfg.convention, cfg.quotient);
      out.remainder_extension = q.value * rl2;
      out.remainder_uncertainty = q.uncertainty * rl2;
    }
    if (out.remainder_extension <= delta * cfg.R_est) {
      out.reached_threshold = true;
      break;
    }
    if (int(out.pieces.size()) >= max_pieces) break;
    const ConcentrationReport c = cap_concentration(out.remainder, cfg.max_level);
    if (!(c.value > 0.0)) break;
    SplitResult s = threshold_split(out.remainder, c.best_cap, delta, cfg.threshold);
    const double gl2 = l2_sigma_norm(s.g);
    if (!(gl2 > 0.0)) break;
    CapPiece piece;
    piece.cap = c.best_cap;
    piece.level = c.best_level;
    piece.density = std::move(s.g);
    piece.bound_constant = s.level * std::sqrt(cap_measure(c.best_cap.d, c.best_cap.radius));
    piece.l2 = gl2;
    out.eta = std::min(out.eta, gl2);
    out.pieces.push_back(std::move(piece));
    out.remainder = std::move(s.h);
  }
  if (out.pieces.empty()) out.eta = 0.0;
  double parts = grid_l2sq(out.remainder);
  for (const auto& p : out.pieces) parts += grid_l2sq(p.density);
  out.pythagoras_residual = std::abs(grid_l2sq(f) - parts);
  return out;
}

// ── modulation profiles ─────────────────────────────────────────────

std::vector<cplx> modulate(const BallGrid& grid, const std::vector<cplx>& g, const ModulationParams& m, Direction dir) {
  if (g.size() != grid.size()) throw DomainError("modulate: sample count does not match the grid");
  std::vector<cplx> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx ph = inverse_phase(m, grid.node(i), grid.d);
    out[i] = g[i] * (dir == Direction::forward ? std::conj(ph) : ph);
  }
  return out;
}

double ball_l2(const BallGrid& grid, const std::vector<cplx>& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += grid.weights[i] * std::norm(g[i]);
  return std::sqrt(s);
}

namespace {

struct Peak {
  ModulationParams params;
  double value = 0.0;
};

// Argmax over the search lattice of |<T_(x,t) e, chi>| for the given test function.
Peak correlation_peak(const BallGrid& G, const std::vector<cplx>& e, const std::vector<cplx>& chi,
                      const SpaceTimeGrid& L, bool real_part = false) {
  std::vector<cplx> w(G.size());
  for (std::size_t i = 0; i < G.size(); ++i) w[i] = e[i] * std::conj(chi[i]);
  const SpaceTimeField c = schrodinger_evolve(G, w, L);
  Peak pk;
  std::size_t best = 0;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    const double a = real_part ? c.values[i].real() : std::abs(c.values[i]);
    if (a > pk.value) {
      pk.value = a;
      best = i;
    }
  }
  const std::size_t m = L.slab_size();
  const int kt = int(best / m);
  const std::size_t ix = best % m;
  double xs[3] = {0.0, 0.0, 0.0};
  L.space_point(ix, xs);
  for (int j = 0; j < L.d; ++j) pk.params.x[j] = xs[j];
  pk.params.t = L.t(kt);
  return pk;
}

// Joint least-squares fit of every shape over the sequence tail nu >= first for fixed trajectories; the modulations act pointwise,
// so the problem splits into one small system per node.
void refit_shapes(const BallGrid& G, const std::vector<std::vector<cplx>>& sequence, std::vector<ExtractedProfile>& profiles,
                  std::size_t first) {
  const int d = G.d;
  const std::size_t M = sequence.size();
  const int J = int(profiles.size());
  for (auto& p : profiles) p.phi.assign(G.size(), 0.0);
  const double lambda = 1e-12 * double(M - first);
  std::vector<cplx> A(M * J);
  for (std::size_t i = 0; i < G.size(); ++i) {
    const double* y = G.node(i);
    for (std::size_t nu = first; nu < M; ++nu)
      for (int j = 0; j < J; ++j) A[nu * J + j] = inverse_phase(profiles[j].params[nu], y, d);
    std::vector<cplx> N(std::size_t(J) * J, 0.0), b(J, 0.0);
    for (int a = 0; a < J; ++a) {
      for (int c = 0; c < J; ++c) {
        cplx s = 0.0;
        for (std::size_t nu = first; nu < M; ++nu) s += std::conj(A[nu * J + a]) * A[nu * J + c];
        N[a * J + c] = s;
      }
      N[a * J + a] += lambda;
      for (std::size_t nu = first; nu < M; ++nu) b[a] += std::conj(A[nu * J + a]) * sequence[nu][i];
    }
    const auto x = solve_dense(N, b, J);
    for (int j = 0; j < J; ++j) profiles[j].phi[i] = x[j];
  }
}

// Trajectories and shapes are defined up to a common shift (x0, t0): T^{-1}_{p} phi = T^{-1}_{p + s} T_s phi.
// Fix it by moving each shape so that its test-bump correlation peaks at the origin.
bool center_shapes(const BallGrid& G, const std::vector<std::vector<cplx>>& bumps, const SpaceTimeGrid& L,
                   std::vector<ExtractedProfile>& profiles) {
  bool moved = false;
  for (auto& p : profiles) {
    Peak best;
    for (const auto& chi : bumps) {
      const Peak pk = correlation_peak(G, p.phi, chi, L);
      if (pk.value > best.value) best = pk;
    }
    bool zero = std::abs(best.params.t) < 1e-12;
    for (int j = 0; j < G.d; ++j) zero = zero && std::abs(best.params.x[j]) < 1e-12;
    if (zero || best.value == 0.0) continue;
    moved = true;
    p.phi = modulate(G, p.phi, best.params, Direction::forward);
    for (auto& m : p.params) {
      for (int j = 0; j < 3; ++j) m.x[j] += best.params.x[j];
      m.t += best.params.t;
    }
  }
  return moved;
}

// Joint search over the trajectories of every pair (a, b) at each nu with the shapes held fixed.
// With base = g_nu minus the other profiles, the misfit is const - 2 A_a(p_a) - 2 A_b(p_b) + 2 C(p_a - p_b),
// where A_j(p) = Re <T_p base, phi_j> and C is the cross-correlation of the two shapes; the search runs over
// the strongest `keep` lattice points of each A.
bool pair_search(const BallGrid& G, const std::vector<std::vector<cplx>>& sequence, const SpaceTimeGrid& L,
                 std::size_t keep, std::vector<ExtractedProfile>& profiles) {
  const int d = G.d;
  const std::size_t J = profiles.size();
  if (J < 2) return false;
  const std::size_t m = L.slab_size();
  const SpaceTimeGrid D = make_lattice(d, 2.0 * L.T, 2.0 * L.X, 2 * L.nt - 1, 2 * L.nx - 1);
  // Lattice index of a point (x, t) given by integer cell coordinates relative to the lattice origin.
  auto cells = [&](std::size_t idx, int* c) {
    const int kt = int(idx / m);
    std::size_t r = idx % m;
    for (int j = 0; j < d; ++j) {
      c[j] = int(r % L.nx);
      r /= L.nx;
    }
    c[d] = kt;
  };
  bool moved = false;
  for (std::size_t a = 0; a < J; ++a)
    for (std::size_t b = a + 1; b < J; ++b) {
      std::vector<cplx> w(G.size());
      for (std::size_t i = 0; i < G.size(); ++i) w[i] = profiles[a].phi[i] * std::conj(profiles[b].phi[i]);
      const SpaceTimeField C = schrodinger_evolve(G, w, D);
      const std::size_t dm = D.slab_size();
      auto cross = [&](const int* ca, const int* cb) {
        // (X, T) = (-(x_a - x_b), -(t_a - t_b)) in cells, shifted to the difference lattice.
        std::size_t idx = 0, stride = 1;
        for (int j = 0; j < d; ++j) {
          idx += std::size_t(cb[j] - ca[j] + L.nx - 1) * stride;
          stride *= D.nx;
        }
        return C.values[std::size_t(cb[d] - ca[d] + L.nt - 1) * dm + idx].real();
      };
      for (std::size_t nu = 0; nu < sequence.size(); ++nu) {
        std::vector<cplx> base = sequence[nu];
        for (std::size_t k = 0; k < J; ++k) {
          if (k == a || k == b) continue;
          const auto back = modulate(G, profiles[k].phi, profiles[k].params[nu], Direction::inverse);
          for (std::size_t i = 0; i < G.size(); ++i) base[i] -= back[i];
        }
        auto scores = [&](const ExtractedProfile& p) {
          std::vector<cplx> v(G.size());
          for (std::size_t i = 0; i < G.size(); ++i) v[i] = base[i] * std::conj(p.phi[i]);
          const SpaceTimeField F = schrodinger_evolve(G, v, L);
          std::vector<double> r(F.values.size());
          for (std::size_t i = 0; i < r.size(); ++i) r[i] = F.values[i].real();
          return r;
        };
        const auto Aa = scores(profiles[a]), Ab = scores(profiles[b]);
        auto top = [&](const std::vector<double>& A) {
          std::vector<std::size_t> idx(A.size());
          for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
          const std::size_t k = std::min(keep, idx.size());
          std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                            [&](std::size_t x, std::size_t y) { return A[x] > A[y] || (A[x] == A[y] && x < y); });
          idx.resize(k);
          return idx;
        };
        auto index_of = [&](const ModulationParams& p) {
          std::size_t idx = 0, stride = 1;
          for (int j = 0; j < d; ++j) {
            idx += std::size_t(std::lround((p.x[j] + L.X) / L.hx())) * stride;
            stride *= L.nx;
          }
          return std::size_t(std::lround((p.t + L.T) / L.ht())) * m + idx;
        };
        const std::size_t ia0 = index_of(profiles[a].params[nu]), ib0 = index_of(profiles[b].params[nu]);
        int ca[4], cb[4];
        cells(ia0, ca);
        cells(ib0, cb);
        double best = Aa[ia0] + Ab[ib0] - cross(ca, cb);
        std::size_t ba = ia0, bb = ib0;
        const auto ta = top(Aa), tb = top(Ab);
        for (std::size_t i : ta) {
          cells(i, ca);
          for (std::size_t j : tb) {
            cells(j, cb);
            const double v = Aa[i] + Ab[j] - cross(ca, cb);
            if (v > best + 1e-13 * std::abs(best)) {
              best = v;
              ba = i;
              bb = j;
            }
          }
        }
        if (ba != ia0 || bb != ib0) {
          moved = true;
          auto set = [&](ModulationParams& p, std::size_t idx) {
            double xs[3] = {0.0, 0.0, 0.0};
            L.space_point(idx % m, xs);
            for (int j = 0; j < d; ++j) p.x[j] = xs[j];
            p.t = L.t(int(idx / m));
          };
          set(profiles[a].params[nu], ba);
          set(profiles[b].params[nu], bb);
        }
      }
    }
  return moved;
}

// Misfit sum_nu ||g_nu - sum_j T^{-1} phi_j||^2 with the shapes eliminated by least squares, node by node.
double projected_misfit(const BallGrid& G, const std::vector<std::vector<cplx>>& sequence,
                        const std::vector<std::vector<ModulationParams>>& params) {
  const int d = G.d;
  const std::size_t M = sequence.size();
  const int J = int(params.size());
  const double lambda = 1e-12 * double(M);
  std::vector<cplx> A(M * J), N(std::size_t(J) * J), b(J);
  double total = 0.0;
  for (std::size_t i = 0; i < G.size(); ++i) {
    const double* y = G.node(i);
    for (std::size_t nu = 0; nu < M; ++nu)
      for (int j = 0; j < J; ++j) A[nu * J + j] = inverse_phase(params[j][nu], y, d);
    for (int a = 0; a < J; ++a) {
      for (int c = 0; c < J; ++c) {
        cplx s = 0.0;
        for (std::size_t nu = 0; nu < M; ++nu) s += std::conj(A[nu * J + a]) * A[nu * J + c];
        N[a * J + c] = s;
      }
      N[a * J + a] += lambda;
      b[a] = 0.0;
      for (std::size_t nu = 0; nu < M; ++nu) b[a] += std::conj(A[nu * J + a]) * sequence[nu][i];
    }
    const auto x = solve_dense(N, b, J);
    double r = 0.0;
    for (std::size_t nu = 0; nu < M; ++nu) {
      cplx v = sequence[nu][i];
      for (int j = 0; j < J; ++j) v -= A[nu * J + j] * x[j];
      r += std::norm(v);
    }
    total += G.weights[i] * r;
  }
  return total;
}

// Greedy descent on the projected misfit: shift one trajectory by one cell in any direction over any
// contiguous range of nu, accepting strict improvements.
bool block_descent(const BallGrid& G, const std::vector<std::vector<cplx>>& sequence, const SpaceTimeGrid& L,
                   std::vector<ExtractedProfile>& profiles) {
  const int d = G.d;
  const std::size_t M = sequence.size();
  std::vector<std::array<int, 4>> dirs;
  int total = 1;
  for (int k = 0; k <= d; ++k) total *= 3;
  for (int c = 0; c < total; ++c) {
    std::array<int, 4> o{};
    int r = c;
    bool zero = true;
    for (int k = 0; k <= d; ++k) {
      o[k] = r % 3 - 1;
      r /= 3;
      zero = zero && o[k] == 0;
    }
    if (!zero) dirs.push_back(o);
  }
  std::vector<std::vector<ModulationParams>> P;
  for (const auto& p : profiles) P.push_back(p.params);
  double cur = projected_misfit(G, sequence, P);
  bool moved = false;
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (std::size_t j = 0; j < profiles.size(); ++j)
      for (std::size_t lo = 0; lo < M; ++lo)
        for (std::size_t hi = lo; hi < M; ++hi)
          for (const auto& o : dirs) {
            auto trial = P;
            bool ok = true;
            for (std::size_t nu = lo; nu <= hi && ok; ++nu) {
              auto& m = trial[j][nu];
              for (int c = 0; c < d; ++c) {
                m.x[c] += o[c] * L.hx();
                ok = ok && std::abs(m.x[c]) <= L.X + 1e-9;
              }
              m.t += o[d] * L.ht();
              ok = ok && std::abs(m.t) <= L.T + 1e-9;
            }
            if (!ok) continue;
            const double v = projected_misfit(G, sequence, trial);
            if (v < cur * (1.0 - 1e-9)) {
              cur = v;
              P = std::move(trial);
              improved = moved = true;
            }
          }
    if (!improved) break;
  }
  for (std::size_t j = 0; j < profiles.size(); ++j) profiles[j].params = P[j];
  refit_shapes(G, sequence, profiles, 0);
  return moved;
}

}  // namespace

Extraction extract_profiles(std::shared_ptr<const BallGrid> grid, const std::vector<std::vector<cplx>>& sequence,
                            const ExtractionConfig& cfg) {
  if (sequence.empty()) throw DomainError("extract_profiles: empty sequence");
  const BallGrid& G = *grid;
  const int d = G.d;
  for (const auto& g : sequence)
    if (g.size() != G.size()) throw DomainError("extract_profiles: sample count does not match the grid");
  const auto& sl = cfg.lattice;
  if (!(sl.hx > 0.0 && sl.ht > 0.0 && sl.X > 0.0 && sl.T > 0.0)) throw DomainError("extract_profiles: bad search lattice");

  Extraction ex;
  ex.grid = grid;
  const SpaceTimeGrid L = lattice_from_spacing(d, sl.T, sl.X, sl.ht, sl.hx);
  // Correlations against data supported in |y| <= 1 oscillate no faster than e^{i x} and e^{i t / 2}.
  if (sl.hx > 0.5 * kPi || sl.ht > kPi) ex.flags.push_back("search lattice too coarse for unit-ball data");

  std::vector<std::vector<cplx>> bumps;
  for (double s : cfg.bump_scales) {
    std::vector<cplx> chi(G.size());
    for (std::size_t i = 0; i < G.size(); ++i) {
      double v = 1.0;
      for (int j = 0; j < d; ++j) v *= bspline(G.node(i)[j] / s);
      chi[i] = v;
    }
    const double n = ball_l2(G, chi);
    if (n > 0.0)
      for (auto& c : chi) c /= n;
    bumps.push_back(std::move(chi));
  }

  const std::size_t M = sequence.size();
  const std::size_t tail0 = M / 2;
  std::vector<std::vector<cplx>> residual = sequence;
  bool boundary_hit = false;

  while (int(ex.profiles.size()) < cfg.max_profiles) {
    std::vector<ModulationParams> params(M);
    double mu = 0.0;
    for (std::size_t nu = 0; nu < M; ++nu) {
      Peak best;
      for (const auto& chi : bumps) {
        const Peak pk = correlation_peak(G, residual[nu], chi, L);
        if (pk.value > best.value) best = pk;
      }
      params[nu] = best.params;
      if (nu >= tail0) mu += best.value;
    }
    mu /= double(M - tail0);
    if (mu < cfg.epsilon) break;

    // Profile estimate from the aligned tail, then a matched-filter pass with that estimate.
    std::vector<cplx> est(G.size(), 0.0);
    for (std::size_t nu = tail0; nu < M; ++nu) {
      const auto al = modulate(G, residual[nu], params[nu], Direction::forward);
      for (std::size_t i = 0; i < G.size(); ++i) est[i] += al[i] / double(M - tail0);
    }
    const double en = ball_l2(G, est);
    if (en > 0.0) {
      std::vector<cplx> chi = est;
      for (auto& c : chi) c /= en;
      for (std::size_t nu = 0; nu < M; ++nu) {
        const Peak pk = correlation_peak(G, residual[nu], chi, L);
        params[nu] = pk.params;
      }
    }

    bool merged = false;
    for (const auto& prev : ex.profiles) {
      bool close = true;
      for (std::size_t nu = 0; nu < M && close; ++nu) {
        double dx = 0.0;
        for (int j = 0; j < d; ++j) dx = std::max(dx, std::abs(prev.params[nu].x[j] - params[nu].x[j]));
        close = dx <= cfg.merge_cells * sl.hx + 1e-12 &&
                std::abs(prev.params[nu].t - params[nu].t) <= cfg.merge_cells * sl.ht + 1e-12;
      }
      if (close) merged = true;
    }
    if (merged) {
      ++ex.merged;
      break;
    }
    ExtractedProfile prof;
    prof.params = params;
    prof.strength = mu;
    ex.profiles.push_back(std::move(prof));

    // Back-fitting: re-match each trajectory against the data with the other profiles removed,
    // then refit every shape jointly, until the parameters settle.
    refit_shapes(G, sequence, ex.profiles, 0);
    for (int sweep = 0; sweep < cfg.backfit_sweeps; ++sweep) {
      bool moved = false;
      for (std::size_t j = 0; j < ex.profiles.size(); ++j) {
        auto& pj = ex.profiles[j];
        const double pn = ball_l2(G, pj.phi);
        if (!(pn > 0.0)) continue;
        std::vector<cplx> chi = pj.phi;
        for (auto& c : chi) c /= pn;
        for (std::size_t nu = 0; nu < M; ++nu) {
          std::vector<cplx> r = sequence[nu];
          for (std::size_t k = 0; k < ex.profiles.size(); ++k) {
            if (k == j) continue;
            const auto back = modulate(G, ex.profiles[k].phi, ex.profiles[k].params[nu], Direction::inverse);
            for (std::size_t i = 0; i < G.size(); ++i) r[i] -= back[i];
          }
          const Peak pk = correlation_peak(G, r, chi, L, true);
          const auto& old = pj.params[nu];
          bool same = std::abs(old.t - pk.params.t) < 1e-12;
          for (int c = 0; c < d; ++c) same = same && std::abs(old.x[c] - pk.params.x[c]) < 1e-12;
          if (!same) moved = true;
          pj.params[nu] = pk.params;
        }
      }
      refit_shapes(G, sequence, ex.profiles, 0);
      if (pair_search(G, sequence, L, cfg.pair_candidates, ex.profiles)) {
        moved = true;
        refit_shapes(G, sequence, ex.profiles, 0);
      }
      if (block_descent(G, sequence, L, ex.profiles)) moved = true;
      if (center_shapes(G, bumps, L, ex.profiles)) moved = true;
      if (!moved) break;
    }
    for (std::size_t nu = 0; nu < M; ++nu) {
      residual[nu] = sequence[nu];
      for (const auto& p : ex.profiles) {
        const auto back = modulate(G, p.phi, p.params[nu], Direction::inverse);
        for (std::size_t i = 0; i < G.size(); ++i) residual[nu][i] -= back[i];
      }
    }
    for (std::size_t nu = 0; nu < M; ++nu) {
      const auto& pk = ex.profiles.back().params[nu];
      bool edge = std::abs(std::abs(pk.t) - L.T) < 1e-9;
      for (int c = 0; c < d; ++c) edge = edge || std::abs(std::abs(pk.x[c]) - L.X) < 1e-9;
      boundary_hit = boundary_hit || edge;
    }
  }
  if (boundary_hit) ex.flags.push_back("correlation peak on the search-lattice boundary");
  ex.errors = std::move(residual);
  return ex;
}

double profile_pythagoras(const BallGrid& grid, const std::vector<cplx>& g, const std::vector<ExtractedProfile>& profiles,
                          const std::vector<cplx>& error) {
  double s = std::pow(ball_l2(grid, g), 2) - std::pow(ball_l2(grid, error), 2);
  for (const auto& p : profiles) s -= std::pow(ball_l2(grid, p.phi), 2);
  return std::abs(s);
}

// ── synthesis ───────────────────────────────────────────────────────

SphereFn profile_function(const Profile& p, std::size_t nu) {
  const CapSpec cap = p.cap_at(nu);
  if (!(cap.radius > 0.0 && cap.radius <= 0.5)) throw DomainError("synthesize: profile caps need 0 < r <= 1/2");
  const ModulationParams m = p.modulation_at(nu);
  const Frame fr = make_frame(cap.d, cap.center);
  const auto in = std::make_shared<const BallInterpolant>(*p.grid, p.phi);
  return [cap, m, fr, in](const Point& w) -> cplx {
    const int d = cap.d;
    if (dot(w, cap.center, d + 1) <= 0.0) return 0.0;
    double u[kMaxAmbient], y[kMaxAmbient];
    fr.to_plane(w, u);
    double u2 = 0.0, y2 = 0.0;
    for (int j = 0; j < d; ++j) {
      u2 += u[j] * u[j];
      y[j] = u[j] / cap.radius;
      y2 += y[j] * y[j];
    }
    if (y2 >= 1.0) return 0.0;
    const cplx v = (*in)(y);
    if (v == 0.0) return 0.0;
    return v * inverse_phase(m, y, d) * std::pow(1.0 - u2, 0.25) * std::pow(cap.radius, -0.5 * d);
  };
}

SurfaceDensity synthesize(const std::vector<Profile>& profiles, std::size_t nu, std::shared_ptr<const DiskGrid> grid) {
  if (profiles.empty()) return zero_density(std::move(grid));
  std::vector<SphereFn> parts;
  for (const auto& p : profiles) parts.push_back(profile_function(p, nu));
  SphereFn sum = [parts](const Point& w) {
    cplx s = 0.0;
    for (const auto& f : parts) s += f(w);
    return s;
  };
  return sample_density(std::move(grid), sum);
}

bool supports_overlap(const std::vector<Profile>& profiles, std::size_t nu) {
  for (std::size_t a = 0; a < profiles.size(); ++a)
    for (std::size_t b = a + 1; b < profiles.size(); ++b) {
      const CapSpec& ca = profiles[a].cap_at(nu);
      const CapSpec& cb = profiles[b].cap_at(nu);
      if (same_cap(ca, cb)) continue;
      const double ang = std::acos(std::clamp(dot(ca.center, cb.center, ca.d + 1), -1.0, 1.0));
      if (ang < std::asin(std::min(1.0, ca.radius)) + std::asin(std::min(1.0, cb.radius))) return true;
    }
  return false;
}

double parameter_divergence(const Profile& a, const Profile& b, std::size_t nu) {
  const CapSpec& ca = a.cap_at(nu);
  const CapSpec& cb = b.cap_at(nu);
  if (!same_cap(ca, cb)) {
    double dz = 0.0;
    for (int i = 0; i <= ca.d; ++i) dz += (ca.center[i] - cb.center[i]) * (ca.center[i] - cb.center[i]);
    return ca.radius / cb.radius + cb.radius / ca.radius + std::sqrt(dz) / ca.radius;
  }
  const auto& ma = a.modulation_at(nu);
  const auto& mb = b.modulation_at(nu);
  double dx = 0.0;
  for (int j = 0; j < ca.d; ++j) dx += (ma.x[j] - mb.x[j]) * (ma.x[j] - mb.x[j]);
  return std::sqrt(dx) + std::abs(ma.t - mb.t);
}

NuReport orthogonality_at(const std::vector<Profile>& profiles, std::size_t nu, const OrthogonalityConfig& cfg) {
  if (profiles.empty()) throw DomainError("orthogonality_report: no profiles");
  const int d = profiles.front().grid->d;
  const double p = tomas_stein_exponent(d);
  const double q = 1.0 + 2.0 / d;
  const std::size_t J = profiles.size();

  // Window covering every cap, and the physical extent of the modulation parameters.
  Point zc{};
  double rmin = 1.0, tmax = 0.0, xmax = 0.0;
  for (const auto& pr : profiles) {
    const CapSpec& c = pr.cap_at(nu);
    for (int i = 0; i <= d; ++i) zc[i] += c.center[i];
    rmin = std::min(rmin, c.radius);
    const auto& m = pr.modulation_at(nu);
    tmax = std::max(tmax, std::abs(m.t) / (c.radius * c.radius));
    double xn = 0.0;
    for (int j = 0; j < d; ++j) xn += m.x[j] * m.x[j];
    xmax = std::max(xmax, std::sqrt(xn) / c.radius);
  }
  const double zn = norm(zc, d + 1);
  if (zn < 1e-9) throw DomainError("orthogonality_report: caps balance around the origin");
  for (int i = 0; i <= d; ++i) zc[i] /= zn;
  double wr = 0.0;
  for (const auto& pr : profiles) {
    const CapSpec& c = pr.cap_at(nu);
    const double ang = std::acos(std::clamp(dot(c.center, zc, d + 1), -1.0, 1.0));
    wr = std::max(wr, std::sin(std::min(0.5 * kPi - 1e-3, ang + std::asin(std::min(1.0, c.radius)))));
  }
  const CapSpec window(d, zc, wr);
  const double T = tmax + cfg.horizon / (rmin * rmin);
  const SpaceTimeGrid base = default_lattice(d, T, window, p);
  const SpaceTimeGrid L = lattice_from_spacing(d, base.T, base.X + xmax, base.ht(), base.hx());

  std::vector<SpaceTimeField> F;
  for (const auto& pr : profiles) {
    const auto grid = std::make_shared<const DiskGrid>(build_cap_grid(pr.cap_at(nu), cfg.grid_resolution));
    const SurfaceDensity f = sample_density(grid, profile_function(pr, nu), pr.cap_at(nu));
    F.push_back(extend_sphere(f, L, cfg.convention));
  }

  NuReport rep;
  rep.nu = nu;
  rep.product_norms.assign(J, std::vector<double>(J, 0.0));
  rep.divergence.assign(J, std::vector<double>(J, 0.0));
  SpaceTimeField P;
  P.grid = L;
  P.values.resize(L.size());
  P.tail_estimate = 1.0;
  for (std::size_t a = 0; a < J; ++a)
    for (std::size_t b = a; b < J; ++b) {
      for (std::size_t i = 0; i < P.values.size(); ++i) P.values[i] = F[a].values[i] * F[b].values[i];
      const double v = lp_norm(P, q, d * (q - 1.0)).corrected();
      rep.product_norms[a][b] = rep.product_norms[b][a] = v;
      if (a != b) rep.divergence[a][b] = rep.divergence[b][a] = parameter_divergence(profiles[a], profiles[b], nu);
    }
  for (std::size_t i = 0; i < P.values.size(); ++i) {
    cplx s = 0.0;
    for (const auto& f : F) s += f.values[i];
    P.values[i] = s;
  }
  rep.superadditivity_lhs = std::pow(lp_norm(P, p).corrected(), p);
  for (const auto& f : F) rep.superadditivity_rhs += std::pow(lp_norm(f, p).corrected(), p);
  rep.superadditivity_gap = rep.superadditivity_lhs - rep.superadditivity_rhs;
  return rep;
}

DecompositionReport orthogonality_report(const std::vector<Profile>& profiles, const std::vector<std::size_t>& nus,
                                         const OrthogonalityConfig& cfg) {
  DecompositionReport rep;
  for (std::size_t nu : nus) rep.per_nu.push_back(orthogonality_at(profiles, nu, cfg));
  return rep;
}

// ── planted sequences ───────────────────────────────────────────────

ModulationParams planted_params(const PlantedProfile& p, int nu) {
  ModulationParams m;
  for (int j = 0; j < 3; ++j) m.x[j] = p.start.x[j] + nu * p.velocity.x[j];
  m.t = p.start.t + nu * p.velocity.t;
  return m;
}

std::vector<cplx> planted_shape(const BallGrid& grid, const PlantedProfile& p) {
  BumpSpec b;
  b.cap = CapSpec(grid.d, north_pole(grid.d), 0.5);
  b.power = p.power;
  b.coeffs = p.coeffs;
  const SphereFn bump = bump_function(b);
  const Frame fr = make_frame(grid.d, north_pole(grid.d));
  std::vector<cplx> phi(grid.size());
  double mx = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double u[kMaxAmbient];
    for (int j = 0; j < grid.d; ++j) u[j] = 0.5 * grid.node(i)[j];
    phi[i] = bump(fr.lift(u));
    mx = std::max(mx, std::abs(phi[i]));
  }
  if (mx > 0.0)
    for (auto& v : phi) v *= p.amplitude / mx;
  return phi;
}

std::vector<std::vector<cplx>> planted_sequence(const BallGrid& grid, const PlantConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<std::vector<cplx>> shapes;
  for (const auto& p : cfg.profiles) shapes.push_back(planted_shape(grid, p));
  std::vector<std::vector<cplx>> seq;
  for (int nu = 1; nu <= cfg.nu_count; ++nu) {
    std::vector<cplx> g(grid.size(), 0.0);
    for (std::size_t j = 0; j < cfg.profiles.size(); ++j) {
      const auto back = modulate(grid, shapes[j], planted_params(cfg.profiles[j], nu), Direction::inverse);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
    }
    if (cfg.noise > 0.0)
      for (auto& v : g) v += cfg.noise * cplx(N(rng), N(rng));
    seq.push_back(std::move(g));
  }
  return seq;
}

std::vector<Profile> planted_profiles(std::shared_ptr<const BallGrid> grid, const PlantConfig& cfg) {
  std::vector<Profile> out;
  for (const auto& p : cfg.profiles) {
    Profile pr;
    pr.grid = grid;
    pr.phi = planted_shape(*grid, p);
    pr.caps = {p.cap};
    for (int nu = 1; nu <= cfg.nu_count; ++nu) pr.modulation.push_back(planted_params(p, nu));
    out.push_back(std::move(pr));
  }
  return out;
}

PlantConfig default_plant(int d, int profiles, unsigned long long seed) {
  if (d != 1 && d != 2) throw DomainError("default_plant: d must be 1 or 2");
  if (profiles < 1 || profiles > 3) throw DomainError("default_plant: between one and three profiles");
  PlantConfig cfg;
  cfg.d = d;
  cfg.seed = seed;
  cfg.ball_resolution = d == 1 ? 64 : 24;
  // Shared cap: the level-3 net cap closest to the north pole.
  const CapNet& net = cached_cap_net(d, 3);
  std::size_t best = 0;
  for (std::size_t j = 1; j < net.centers.size(); ++j)
    if (net.centers[j][d] > net.centers[best][d]) best = j;
  const CapSpec cap = net.cap(best);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.15, 0.15);
  const double amps[3] = {0.55, 0.35, 0.25};
  for (int j = 0; j < profiles; ++j) {
    PlantedProfile p;
    p.cap = cap;
    p.amplitude = amps[j];
    p.power = 4;
    p.coeffs = {1.0, cplx(U(rng), U(rng))};
    if (j == 0) p.velocity.x[0] = 1.0;
    if (j == 1) {
      p.velocity.x[0] = -1.0;
      p.velocity.t = 1.0;
    }
    if (j == 2) {
      p.velocity.x[d - 1] = 0.5;
      p.velocity.t = -1.0;
    }
    cfg.profiles.push_back(p);
  }
  return cfg;
}

// ── sphere pipeline ─────────────────────────────────────────────────

SphereDecomposition decompose_sequence(const std::vector<SurfaceDensity>& sequence, const SphereSequenceConfig& cfg) {
  if (sequence.empty()) throw DomainError("decompose_sequence: empty sequence");
  const int d = sequence.front().d();
  SphereDecomposition out;
  const int n = cfg.ball_resolution > 0 ? cfg.ball_resolution : (d == 1 ? 64 : 24);
  for (const auto& f : sequence) {
    const double l2 = l2_sigma_norm(f);
    if (!(l2 > 0.0)) throw DomainError("decompose_sequence: zero element");
    FirstDecomposition fd = first_decomposition(scaled(f, 1.0 / l2), cfg.delta, cfg.max_pieces, cfg.first);
    if (fd.pieces.empty()) throw DomainError("decompose_sequence: no cap piece above the threshold");
    std::size_t best = 0;
    for (std::size_t j = 1; j < fd.pieces.size(); ++j)
      if (fd.pieces[j].l2 > fd.pieces[best].l2) best = j;
    const CapPiece& piece = fd.pieces[best];
    if (piece.cap.radius > 0.5) throw DomainError("decompose_sequence: dominant cap wider than 1/2");
    RescaleFactors rf = rescale_factorize(piece.density, piece.cap, n);
    // The threshold needs unit norm; extraction needs the original amplitudes back.
    for (auto& v : rf.g) v *= l2;
    if (!out.grid) out.grid = rf.grid;
    out.caps.push_back(piece.cap);
    out.rescaled.push_back(std::move(rf.g));
    out.first.push_back(std::move(fd));
  }
  out.shared_cap = true;
  for (const auto& c : out.caps)
    out.shared_cap = out.shared_cap && std::abs(dot(c.center, out.caps.front().center, d + 1) - 1.0) < 1e-12 &&
                     std::abs(c.radius - out.caps.front().radius) < 1e-12;
  out.extraction = extract_profiles(out.grid, out.rescaled, cfg.extraction);
  for (const auto& ep : out.extraction.profiles) {
    Profile p;
    p.grid = out.grid;
    p.phi = ep.phi;
    p.caps = out.caps;
    p.modulation = ep.params;
    out.profiles.push_back(std::move(p));
  }
  return out;
}

}  // namespace tslab
