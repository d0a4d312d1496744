#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "gramspec/common.hpp"
#include "gramspec/profile.hpp"
#include "gramspec/qve.hpp"

namespace gramspec {

/// F v = |M| S_sym (|M| v) at a solved point. Only the p x n block
/// F_ik = |M1_i| s_ik |M2_k| is stored.
class SaturatedOperator {
 public:
  SaturatedOperator(const SymmetrizedProfile& sym, const QveSolution& solution);

  int p() const noexcept { return static_cast<int>(block_.rows()); }
  int n() const noexcept { return static_cast<int>(block_.cols()); }
  int dim() const noexcept { return p() + n(); }
  const Mat& block() const noexcept { return block_; }
  const CVec& m() const noexcept { return m_; }
  cplx z() const noexcept { return z_; }
  double qve_residual() const noexcept { return qve_residual_; }

  Vec apply(const Eigen::Ref<const Vec>& v) const;
  Mat dense() const;

 private:
  Mat block_;
  CVec m_;
  cplx z_;
  double qve_residual_;
};

inline SaturatedOperator build_F(const SymmetrizedProfile& sym, const QveSolution& solution) {
  return SaturatedOperator(sym, solution);
}

struct PerronOptions {
  /// Relative change of the Rayleigh quotient at which power iteration stops.
  double tol = 1e-12;
  int max_iterations = 20000;
  /// Allowed violation of 1 - ||F|| = Im z <f|M|> / <f Im M/|M|>.
  double identity_tol = 1e-8;
  bool check_identity = true;
};

struct PerronPair {
  double norm_F = 0.0;
  /// Unit (Euclidean) positive eigenvector (f1, f2) of F for norm_F.
  Vec f;
  int iterations = 0;
  /// 1 - Im z <f|M|> / <f Im M/|M|>.
  double identity_value = 0.0;
  double identity_error = 0.0;

  /// (f1, -f2), eigenvector of F for -norm_F.
  Vec f_minus(int p) const;
};

/// Power iteration on F F^t. Falls back to a dense eigensolve when the
/// iteration stalls and p <= 2000. Throws NumericalFailure on non-convergence
/// or when the norm identity is violated.
PerronPair perron(const SaturatedOperator& opr, const PerronOptions& options = {});

/// Gap(F F^t) = lambda1 - lambda2; zero when the top eigenvalue is degenerate.
double spectral_gap(const SaturatedOperator& opr, double degeneracy_tol = 1e-10);

struct StabilityOptions {
  PerronOptions perron{};
  /// Dimension up to which ||B^-1||_inf is computed exactly.
  int exact_inf_limit = 1000;
  int sign_vectors = 20;
  std::uint64_t seed = 0x5eed;
  /// sigma_min / sigma_max below which B counts as singular.
  double singular_tol = 1e-14;
};

struct StabilityReport {
  cplx z;
  double qve_residual = 0.0;
  double norm_F = 0.0;
  Vec f;
  double identity_error = 0.0;
  /// ||F f_- + ||F|| f_-||_2.
  double antisymmetry_residual = 0.0;
  double gap_FFt = 0.0;
  double norm_B_inv_2 = std::numeric_limits<double>::infinity();
  double norm_B_inv_inf = std::numeric_limits<double>::infinity();
  /// norm_B_inv_inf is a randomized lower estimate rather than exact.
  bool inf_norm_estimated = false;
  /// (inf |D|)^-1 (1 + ||F||_{2->inf} ||B^-1||_2) with the normalized 2-norm.
  double inf_norm_bound = std::numeric_limits<double>::infinity();
  bool singular = false;
};

/// B = |M|^2/M^2 - F: norms of its inverse together with the Perron data and Gap(F F^t).
StabilityReport build_B_and_invert(const SaturatedOperator& opr, const StabilityOptions& options = {});

/// Solves at z (with continuation) and builds the full report.
StabilityReport stability_report(const SymmetrizedProfile& sym, cplx z, const SolverOptions& solver = {},
                                 const StabilityOptions& options = {});

struct RotationInversionInstance {
  CMat u1;
  CMat u2;
  Mat a;
};

struct RotationInversionResult {
  double lhs = 0.0;
  double rhs_core = 0.0;
  double ratio = 0.0;
  double rho = 0.0;
  double gap_AAt = 0.0;
  Vec v1;
  Vec v2;
  cplx overlap1;
  cplx overlap2;
  double condition = 0.0;
  bool singular = false;
  /// Singular block matrix while rhs_core is bounded away from zero.
  bool counterexample = false;

  // Decomposition w = alpha_+ a_+ + alpha_- a_- + beta b of the unit vector
  // most contracted by [[U1, A], [A^*, U2]].
  cplx alpha_plus;
  cplx alpha_minus;
  double beta = 0.0;
  double lambda = 0.0;
  double kappa = 0.0;
  int regime = 0;
};

struct RotationInversionOptions {
  double singular_condition = 1e12;
  double rhs_zero = 1e-12;
};

/// Throws InvalidArgument unless U1, U2 are unitary, A is nonnegative with
/// connected support and ||A^* A|| <= 1.
RotationInversionResult rotation_inversion_check(const RotationInversionInstance& instance,
                                                 const RotationInversionOptions& options = {});

/// Support graph of A (rows and columns as vertices) is connected, i.e. AA^* and
/// A^*A are irreducible.
bool support_connected(const Mat& a);

/// Haar unitaries from QR of complex Gaussians, A = |Gaussian| scaled to a
/// uniform random norm in (0, 1].
RotationInversionInstance random_rotation_inversion_instance(int p, int n, std::uint64_t seed);

struct SweepRow {
  int dim = 0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs_core = 0.0;
  double ratio = 0.0;
  bool counterexample = false;
};

/// `instances` random instances spread evenly over `dims` (p = n = dim), each
/// with its own derived seed.
std::vector<SweepRow> rotation_inversion_sweep(int instances, const std::vector<int>& dims, std::uint64_t seed,
                                               int threads = 1);

}  // namespace gramspec
