#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gramspec/common.hpp"
#include "gramspec/profile.hpp"
#include "gramspec/qve.hpp"

namespace gramspec {

enum class Distribution { gaussian_real, gaussian_complex, rademacher };

std::string to_string(Distribution d);
/// Accepts "gaussian-real", "gaussian-complex", "rademacher".
Distribution parse_distribution(std::string_view name);

struct SampleSpec {
  VarianceProfile profile = VarianceProfile::constant(1, 1, 1.0);
  Distribution distribution = Distribution::gaussian_real;
  std::uint64_t seed = 0;
  int trials = 1;
};

/// Entry (i, k) has variance s_ik. The stream is derived from (seed, trial)
/// only, so each trial is reproducible on its own.
CMat sample(const SampleSpec& spec, int trial);

struct EmpiricalSpectrum {
  /// Eigenvalues of XX^* in ascending order.
  Vec eigenvalues;
  int zero_count = 0;
};

/// Eigenvalues below rel * (1 + max eigenvalue) count as zero.
int count_zero(const Vec& eigenvalues, double rel = 1e-8);

/// Uses the smaller of XX^* and X^*X and pads with zeros.
EmpiricalSpectrum spectrum(const CMat& x, double kernel_rel = 1e-8);

/// Full p x p eigendecomposition of XX^*, kept for resolvent evaluation.
struct GramDecomposition {
  Vec eigenvalues;
  CMat vectors;
  bool real = false;
  Mat real_vectors;
};

GramDecomposition decompose(const CMat& x);

/// (XX^* - zeta)^-1. Throws when zeta is real and within 1e-6 of an eigenvalue.
CMat resolvent(const GramDecomposition& dec, cplx zeta);
CVec resolvent_diag(const GramDecomposition& dec, cplx zeta);
inline CVec resolvent_diag(const CMat& x, cplx zeta) { return resolvent_diag(decompose(x), zeta); }

/// Frozen constants of the statistical checks.
struct LawThresholds {
  double percentile = 0.95;
  double entrywise_bulk = 5.0;
  double averaged_bulk = 10.0;
  double entrywise_outside = 5.0;
  double averaged_outside = 10.0;
  /// Median |lambda_i(tau) - tau| <= rigidity / p.
  double rigidity = 20.0;
  double capacity_rel = 0.02;
};

struct VerifyConfig {
  SampleSpec sample;
  /// Real parts of bulk points; Im zeta = p^(-1 + gamma).
  std::vector<double> bulk_re{1.0};
  double gamma = 0.6;
  std::vector<cplx> outside{cplx(3.0, 0.5)};
  std::vector<double> rigidity_tau{1.0};
  double sigma2 = 1.0;
  LawThresholds thresholds{};
  int density_points = 1000;
  DensityOptions density{};
  double kernel_rel = 1e-8;
  /// Outlier window starts at this multiple of the upper support edge.
  double outlier_factor = 1.1;
  double outlier_upper = 10.0;
  /// Gap window [lo, hi] * delta_pi for rectangular profiles.
  double gap_lo = 0.2;
  double gap_hi = 0.8;
  double d_star_min = 0.1;
  std::uint64_t w_seed = 0x77;
  int threads = 1;

  bool check_local_law = true;
  bool check_rigidity = true;
  bool check_kernel_gap = true;
  bool check_outliers = true;
  bool check_capacity = true;
};

struct Summary {
  double median = 0.0;
  double percentile = 0.0;
  double max = 0.0;
};

/// Nearest-rank statistics of a sample.
Summary summarize(std::vector<double> values, double percentile);

struct LocalLawEntry {
  cplx zeta;
  bool bulk = true;
  double scale_entrywise = 1.0;
  double scale_averaged = 1.0;
  /// Scaled errors across trials.
  Summary entrywise;
  Summary averaged;
  bool pass = false;
};

struct RigidityEntry {
  double tau = 0.0;
  int index = 0;
  bool skipped = false;
  Summary deviation;
  /// deviation / (sqrt(tau) + 1/p), square profiles only.
  std::optional<Summary> scaled;
  bool pass = false;
};

struct LongRow {
  int trial = 0;
  std::string quantity;
  std::string key;
  double value = 0.0;
};

struct VerificationReport {
  int schema_version = 1;
  int p = 0;
  int n = 0;
  std::string distribution;
  std::uint64_t seed = 0;
  int trials = 0;

  double point_mass = 0.0;
  double support_upper = 0.0;
  std::optional<double> delta_pi;

  std::vector<LocalLawEntry> local_law;
  std::vector<RigidityEntry> rigidity;

  std::optional<int> kernel_expected;
  int kernel_min = 0;
  int kernel_max = 0;
  bool kernel_ok = true;
  std::optional<std::pair<double, double>> gap_window;
  int gap_violations = 0;

  std::pair<double, double> outlier_window{0.0, 0.0};
  int outlier_count = 0;
  double max_eigenvalue = 0.0;
  bool outliers_ok = true;

  Summary ks;
  std::optional<double> sigma2;
  double capacity_mc = 0.0;
  double capacity_det = 0.0;
  double capacity_rel_err = 0.0;
  bool capacity_ok = true;

  std::vector<LongRow> rows;
  bool all_pass = true;
};

/// Samples config.sample.trials matrices and checks the enabled properties.
/// The report depends only on the config, not on the thread count.
VerificationReport verify(const VerifyConfig& config);

VerificationReport verify_local_law(VerifyConfig config);
VerificationReport verify_rigidity(VerifyConfig config);

struct CapacityCheck {
  double capacity_mc = 0.0;
  double capacity_det = 0.0;
  double rel_err = 0.0;
};

CapacityCheck verify_capacity(const SampleSpec& spec, double sigma2, int density_points = 1000, int threads = 1);

/// p^-1 sum log(1 + lambda/sigma2).
double empirical_capacity(const Vec& eigenvalues, double sigma2);

/// sup |F_emp - F_nu|. Eigenvalues below the kernel threshold count as exact
/// zeros, matching the atom of nu at 0.
double ks_distance(const Vec& eigenvalues, const DensityCurve& curve, double kernel_rel = 1e-8);

/// 1-based index ceil(p nu((-inf, tau])), clamped to [1, p].
int expected_index(const DensityCurve& curve, double tau, int p);

}  // namespace gramspec
