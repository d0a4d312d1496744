#pragma once

#include <optional>
#include <vector>

#include "gramspec/common.hpp"
#include "gramspec/profile.hpp"

namespace gramspec {

/// Which complex plane a spectral parameter lives in: the symmetrized plane of
/// z (spectrum of H = [[0, X], [X^*, 0]]) or the Gram plane of zeta = z^2
/// (spectrum of XX^*).
enum class Plane { symmetrized, gram };

class SpectralPoint {
 public:
  static SpectralPoint symmetrized(cplx z);
  static SpectralPoint gram(cplx zeta);

  Plane plane() const noexcept { return plane_; }
  cplx value() const noexcept { return value_; }

  /// Symmetrized-plane parameter; for Gram points the root with Im > 0.
  cplx z() const;
  /// Gram-plane parameter z^2.
  cplx zeta() const;

 private:
  SpectralPoint(cplx value, Plane plane) : value_(value), plane_(plane) {}
  cplx value_;
  Plane plane_;
};

/// Root of zeta with Im > 0 for Im zeta > 0.
cplx upper_sqrt(cplx zeta);

/// Damped fixed point m <- m + alpha (T(m) - m). The step alpha is complex;
/// its modulus stays in [alpha_min, alpha_max] and is halved whenever the
/// defect grows.
struct SolverOptions {
  double tol = 1e-10;
  int max_iterations = 100000;
  double alpha_init = 1.0;
  double alpha_min = 0.05;
  double alpha_max = 20.0;
  double alpha_grow = 1.2;
};

/// Solution vector M = (M1, M2) of -1/M = z + S_sym M at one point.
struct QveSolution {
  CVec m_sym;
  double residual_inf = 0.0;
  int iterations = 0;
  cplx z;

  Eigen::VectorBlock<const CVec> m1(int p) const { return m_sym.head(p); }
  Eigen::VectorBlock<const CVec> m2(int p) const { return m_sym.tail(m_sym.size() - p); }
};

/// Damped fixed point for the symmetrized equation. Starts from -1/z unless a
/// warm start is given. Throws InvalidArgument when Im z <= 0 and
/// NumericalFailure (carrying the best residual) when tol is not reached.
QveSolution solve_at(const SymmetrizedProfile& sym, cplx z, const SolverOptions& options = {},
                     const QveSolution* warm_start = nullptr);

/// solve_at preceded by a geometric continuation in Im z from Im z = 1 when the
/// target is close to the real axis.
QveSolution solve_continued(const SymmetrizedProfile& sym, cplx z, const SolverOptions& options = {});

/// Gram-plane view: m(zeta) = M1(sqrt zeta)/sqrt zeta and m2 = M2(sqrt zeta)/sqrt zeta.
struct GramSolution {
  CVec m;
  CVec m2;
  cplx zeta;
  /// ||1/m + zeta - S 1/(1 + S^t m)||_inf.
  double gram_residual = 0.0;
  QveSolution sym;

  cplx mean_m() const { return mean(m); }
};

GramSolution to_gram(const VarianceProfile& profile, const QveSolution& solution);

GramSolution solve_gram_at(const VarianceProfile& profile, cplx zeta, const SolverOptions& options = {});

/// ||d||_inf for d = -1/g - z - S_sym g, the perturbation under which the
/// candidate g solves the equation exactly. Throws on zero components.
double residual(const SymmetrizedProfile& sym, const CVec& candidate, cplx z);

/// Same quantity for a Gram-plane candidate m in C^p: the defining equation
/// -1/m = zeta - S 1/(1 + S^t m).
double gram_residual(const VarianceProfile& profile, const CVec& m, cplx zeta);

/// Measure nu = point_mass * delta_0 + pi(omega) d omega sampled on a grid.
struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> values;
  double point_mass = 0.0;
  std::vector<std::pair<double, double>> support;
  std::vector<double> eta_ladder;
  double eta_used = 0.0;
  /// Grid indices where the extrapolation diverged or the solver failed.
  std::vector<int> flagged;

  /// point_mass + integral of pi over (0, grid.back()].
  double total_mass() const;
  /// nu((-inf, x]) for x >= 0.
  double cdf(double x) const;
  /// integral of f(omega) pi(omega) d omega, using sqrt(omega) as the
  /// integration variable so an omega^{-1/2} singularity at zero is harmless.
  template <typename F>
  double integrate(F&& f) const;
};

struct DensityOptions {
  SolverOptions solver{};
  std::vector<double> eta_ladder{1e-2, 1e-3, 1e-4};
  double support_threshold = 1e-3;
  /// Relative disagreement between the extrapolated value and the last rung
  /// above which a grid point is flagged.
  double divergence_ratio = 0.5;
  /// Mass of the atom at zero; computed by point_mass_at_zero when empty.
  std::optional<double> point_mass;
  /// Worker count; 0 reads GRAMSPEC_THREADS.
  int threads = 0;
};

/// Density of nu on a grid of omega > 0 by Stieltjes inversion with two-point
/// Richardson extrapolation in eta along the ladder.
DensityCurve density(const VarianceProfile& profile, const std::vector<double>& grid,
                     const DensityOptions& options = {});

/// Linear grid start:stop:count (inclusive).
std::vector<double> linear_grid(double start, double stop, int count);

/// integral of log(1 + omega/sigma2) nu(d omega). Throws if sigma2 <= 0.
double capacity(const DensityCurve& curve, double sigma2);

/// Closure of {omega : values > threshold}, merging runs separated by fewer
/// than two grid steps, clipped to [0, upper].
std::vector<std::pair<double, double>> detect_support(const std::vector<double>& grid,
                                                      const std::vector<double>& values, double threshold,
                                                      double upper);

template <typename F>
double DensityCurve::integrate(F&& f) const {
  if (grid.empty()) return 0.0;
  // With omega = t^2 the integrand becomes 2 t f(t^2) pi(t^2), bounded at t = 0
  // for an omega^{-1/2} singularity. The leftmost piece [0, t0] uses the value
  // at t0.
  auto g = [&](std::size_t j) {
    const double t = std::sqrt(grid[j]);
    return 2.0 * t * f(grid[j]) * values[j];
  };
  double sum = std::sqrt(grid[0]) * g(0);
  for (std::size_t j = 1; j < grid.size(); ++j)
    sum += 0.5 * (std::sqrt(grid[j]) - std::sqrt(grid[j - 1])) * (g(j) + g(j - 1));
  return sum;
}

}  // namespace gramspec
