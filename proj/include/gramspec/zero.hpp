#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "gramspec/common.hpp"
#include "gramspec/profile.hpp"
#include "gramspec/qve.hpp"

namespace gramspec {

/// Limit v0 of Im M(i eta) as eta -> 0 for a square profile.
struct HardEdgeStructure {
  Vec v0;
  /// lim pi(omega) sqrt(omega) = <v1(0)> / pi.
  double singular_coefficient = 0.0;
  double residual = 0.0;
  /// (1 + F(0))^{-1} v0 on the complement of e_- = (1, -1), with F(0) = v0 S_sym v0.
  Vec first_order;

  /// i v0 - z v0 (1 + F(0))^{-1} v0, the first-order expansion of M at zero.
  CVec expansion(cplx z) const;
};

struct HardEdgeOptions {
  double tol = 1e-10;
  std::vector<double> eta_ladder{1.0, 0.3, 0.1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4,
                                 3e-5, 1e-5, 3e-6, 1e-6, 3e-7, 1e-7, 3e-8, 1e-8};
  double damping = 0.5;
  int max_iterations = 100000;
};

/// Throws InvalidArgument when p != n and NumericalFailure when the fixed point
/// at eta = 0 does not reach tol.
HardEdgeStructure solve_hard_edge(const SymmetrizedProfile& sym, const HardEdgeOptions& options = {});

struct JFunctional {
  double value = 0.0;
  double gradient_norm = 0.0;
};

/// J(u) = p^-1 sum_k log((S^t u)_k) + p^-1 sum_i (u_i - log u_i).
JFunctional evaluate_j(const VarianceProfile& profile, const Vec& u);

struct USolution {
  Vec u;
  double residual = 0.0;  // ||1/u - 1 - S 1/(S^t u)||_inf
  int iterations = 0;
  double j_initial = 0.0;
  double j_final = 0.0;
  /// J did not increase along the iterates after the first few.
  bool j_monotone = true;
};

/// Fixed point u <- 1/(1 + S 1/(S^t u)) from u = 1. Requires p > n.
USolution minimize_j(const VarianceProfile& profile, double tol = 1e-12, int max_iterations = 100000);

struct BOptions {
  /// Largest radius attempted on each ray.
  double radius = 1.0;
  double tol = 1e-10;
  int rays = 16;
  double initial_step = 0.02;
  /// Rays stop once the step falls below min_step * radius.
  double min_step = 1e-4;
  double sigma_guard = 1e-8;
  int series_terms = 16;
};

/// Holomorphic b on the disk |z| < delta_star solving -1/b = z^2 - S^t 1/(1 + S b)
/// with b(0) = 1/(S^t u).
class BFunction {
 public:
  BFunction(VarianceProfile profile, Vec u, const BOptions& options);

  const Vec& u() const noexcept { return u_; }
  const Vec& b0() const noexcept { return b0_; }
  double delta_star() const noexcept { return delta_star_; }
  const std::vector<double>& ray_radii() const noexcept { return ray_radii_; }
  /// Taylor coefficients of b in z from the Cauchy integral on |z| = series_radius.
  const std::vector<CVec>& series() const noexcept { return b_series_; }
  const std::vector<CVec>& a_series() const noexcept { return a_series_; }
  double series_radius() const noexcept { return series_radius_; }
  /// Largest algebraic residual over all accepted ray steps.
  double max_residual() const noexcept { return max_residual_; }
  /// ||b'(0)||_inf from the first Taylor coefficient.
  double derivative_at_zero() const;

  /// b(z) for |z| < delta_star. Throws InvalidArgument outside the disk.
  CVec operator()(cplx z) const;
  /// a(z) = (u - 1/(1 + S b(z))) / z^2, finite at z = 0.
  CVec a(cplx z) const;
  /// (M1, M2) = (z a - u/z, z b) in one vector.
  CVec m_sym(cplx z) const;

  double algebraic_residual(cplx z, const CVec& b) const;

 private:
  struct Ray {
    double radius = 0.0;
    CVec at_series_radius;
  };
  Ray integrate_ray(double theta, double t_end, std::optional<double> record_at) const;
  CVec newton_polish(cplx z, CVec b, int max_steps, double* correction) const;
  Eigen::PartialPivLU<CMat> one_minus_l(const CVec& b, double* sigma_estimate) const;

  VarianceProfile profile_;
  Vec u_;
  Vec b0_;
  BOptions options_;
  double delta_star_ = 0.0;
  double series_radius_ = 0.0;
  std::vector<double> ray_radii_;
  std::vector<CVec> b_series_;
  std::vector<CVec> a_series_;
  mutable double max_residual_ = 0.0;
};

BFunction solve_b(const VarianceProfile& profile, const Vec& u, const BOptions& options = {});

inline CVec compute_a(const BFunction& b, cplx z) { return b.a(z); }

struct SoftEdgeStructure {
  Vec u;
  Vec b0;
  double point_mass = 0.0;
  std::optional<double> delta_pi;
  double delta_star = 0.0;
  std::vector<CVec> b_series;
  /// True when the profile was transposed because p < n.
  bool transposed = false;
};

/// Lower edge of the absolutely continuous part: first grid point where the
/// density exceeds the threshold.
double estimate_gap(const DensityCurve& curve, double threshold = 1e-3);

/// Computes the density on a linear grid over (0, 4 s*] and reads off the gap.
/// Refuses square-like profiles with |p/n - 1| < d_star_min.
double estimate_gap(const VarianceProfile& profile, int grid_points = 2000, double d_star_min = 0.1,
                    const DensityOptions& options = {});

using ZeroStructure = std::variant<HardEdgeStructure, SoftEdgeStructure>;

struct ZeroOptions {
  HardEdgeOptions hard{};
  BOptions b{};
  double u_tol = 1e-12;
  double d_star_min = 0.1;
  int gap_grid_points = 2000;
  bool compute_gap = true;
  DensityOptions density{};
};

/// Hard-edge analysis for p == n, soft-edge analysis otherwise (p < n through
/// the transposed profile).
ZeroStructure analyze_zero(const VarianceProfile& profile, const ZeroOptions& options = {});

/// Mass of nu at zero. Rectangular profiles use <u> from the u equation (zero
/// when p < n); square profiles with a converging hard edge have no atom; any
/// other case falls back to eta Im<m(i eta)> extrapolated to eta = 0.
double point_mass_at_zero(const VarianceProfile& profile, double tol = 1e-10);

}  // namespace gramspec
