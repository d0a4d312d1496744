#include "gramspec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gramspec/parallel.hpp"
#include "gramspec/random.hpp"
#include "gramspec/zero.hpp"

namespace gramspec {

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::gaussian_real:
      return "gaussian-real";
    case Distribution::gaussian_complex:
      return "gaussian-complex";
    case Distribution::rademacher:
      return "rademacher";
  }
  return "unknown";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "gaussian-real" || name == "gaussian") return Distribution::gaussian_real;
  if (name == "gaussian-complex") return Distribution::gaussian_complex;
  if (name == "rademacher") return Distribution::rademacher;
  throw InvalidArgument("unknown distribution '" + std::string(name) + "'");
}

CMat sample(const SampleSpec& spec, int trial) {
  if (trial < 0) throw InvalidArgument("sample: trial index must be nonnegative");
  const auto& s = spec.profile.s();
  const int p = spec.profile.p();
  const int n = spec.profile.n();
  auto engine = make_stream(spec.seed, static_cast<std::uint64_t>(trial));
  NormalSource source(engine);
  CMat x(p, n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < p; ++i) {
      const double sd = std::sqrt(s(i, k));
      switch (spec.distribution) {
        case Distribution::gaussian_real:
          x(i, k) = sd * source();
          break;
        case Distribution::gaussian_complex: {
          const double re = source();
          const double im = source();
          x(i, k) = cplx(re, im) * (sd / std::sqrt(2.0));
          break;
        }
        case Distribution::rademacher:
          x(i, k) = sd * source.sign();
          break;
      }
    }
  }
  return x;
}

int count_zero(const Vec& eigenvalues, double rel) {
  if (eigenvalues.size() == 0) return 0;
  const double threshold = rel * (1.0 + eigenvalues.maxCoeff());
  return static_cast<int>((eigenvalues.array() < threshold).count());
}

namespace {

bool is_real(const CMat& x) { return x.imag().cwiseAbs().maxCoeff() == 0.0; }

Vec hermitian_eigenvalues(const CMat& g, bool real) {
  if (real) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(g.real(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalFailure("spectrum: eigensolver failed");
    return eig.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<CMat> eig(g, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalFailure("spectrum: eigensolver failed");
  return eig.eigenvalues();
}

}  // namespace

EmpiricalSpectrum spectrum(const CMat& x, double kernel_rel) {
  if (!x.allFinite()) throw InvalidArgument("spectrum: matrix has non-finite entries");
  const Eigen::Index p = x.rows();
  const Eigen::Index n = x.cols();
  const bool real = is_real(x);
  EmpiricalSpectrum out;
  if (n < p) {
    const Vec small = hermitian_eigenvalues(x.adjoint() * x, real);
    out.eigenvalues = Vec::Zero(p);
    out.eigenvalues.tail(n) = small;
    std::sort(out.eigenvalues.data(), out.eigenvalues.data() + p);
  } else {
    out.eigenvalues = hermitian_eigenvalues(x * x.adjoint(), real);
  }
  out.zero_count = count_zero(out.eigenvalues, kernel_rel);
  return out;
}

GramDecomposition decompose(const CMat& x) {
  if (!x.allFinite()) throw InvalidArgument("decompose: matrix has non-finite entries");
  GramDecomposition out;
  out.real = is_real(x);
  if (out.real) {
    const Mat xr = x.real();
    Eigen::SelfAdjointEigenSolver<Mat> eig(xr * xr.transpose());
    if (eig.info() != Eigen::Success) throw NumericalFailure("decompose: eigensolver failed");
    out.eigenvalues = eig.eigenvalues();
    out.real_vectors = eig.eigenvectors();
  } else {
    Eigen::SelfAdjointEigenSolver<CMat> eig(x * x.adjoint());
    if (eig.info() != Eigen::Success) throw NumericalFailure("decompose: eigensolver failed");
    out.eigenvalues = eig.eigenvalues();
    out.vectors = eig.eigenvectors();
  }
  return out;
}

namespace {

CVec inverse_gaps(const GramDecomposition& dec, cplx zeta) {
  if (zeta.imag() == 0.0) {
    const double dist = (dec.eigenvalues.array() - zeta.real()).abs().minCoeff();
    if (dist <= 1e-6) throw InvalidArgument("resolvent: real zeta too close to the spectrum");
  }
  CVec d(dec.eigenvalues.size());
  for (Eigen::Index a = 0; a < d.size(); ++a) d(a) = 1.0 / (dec.eigenvalues(a) - zeta);
  return d;
}

}  // namespace

CMat resolvent(const GramDecomposition& dec, cplx zeta) {
  const CVec d = inverse_gaps(dec, zeta);
  if (dec.real) {
    const Mat& u = dec.real_vectors;
    const Mat re = u * d.real().asDiagonal() * u.transpose();
    const Mat im = u * d.imag().asDiagonal() * u.transpose();
    CMat out(u.rows(), u.rows());
    out.real() = re;
    out.imag() = im;
    return out;
  }
  return dec.vectors * d.asDiagonal() * dec.vectors.adjoint();
}

CVec resolvent_diag(const GramDecomposition& dec, cplx zeta) {
  const CVec d = inverse_gaps(dec, zeta);
  const Mat weights = dec.real ? Mat(dec.real_vectors.array().square()) : Mat(dec.vectors.cwiseAbs2());
  CVec out(weights.rows());
  out.real() = weights * d.real();
  out.imag() = weights * d.imag();
  return out;
}

Summary summarize(std::vector<double> values, double percentile) {
  Summary out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size();
  auto rank = [&](double q) {
    const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(k)));
    return values[std::clamp<std::size_t>(r, 1, k) - 1];
  };
  out.median = rank(0.5);
  out.percentile = rank(percentile);
  out.max = values.back();
  return out;
}

double empirical_capacity(const Vec& eigenvalues, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidArgument("capacity: sigma2 must be positive");
  double sum = 0.0;
  for (Eigen::Index a = 0; a < eigenvalues.size(); ++a) sum += std::log1p(std::max(eigenvalues(a), 0.0) / sigma2);
  return sum / static_cast<double>(eigenvalues.size());
}

double ks_distance(const Vec& eigenvalues, const DensityCurve& curve, double kernel_rel) {
  const Eigen::Index p = eigenvalues.size();
  if (p == 0) return 0.0;
  // Kernel eigenvalues become exact zeros so they line up with the atom at 0.
  const double threshold = kernel_rel * (1.0 + eigenvalues.maxCoeff());
  std::vector<double> sorted(p);
  for (Eigen::Index a = 0; a < p; ++a) sorted[a] = eigenvalues(a) < threshold ? 0.0 : eigenvalues(a);
  std::sort(sorted.begin(), sorted.end());
  double best = 0.0;
  for (Eigen::Index a = 0; a < p;) {
    Eigen::Index b = a;
    while (b < p && sorted[b] == sorted[a]) ++b;
    const double x = sorted[a];
    const double f = curve.cdf(x);
    const double f_left = x == 0.0 ? 0.0 : f;
    best = std::max({best, std::abs(static_cast<double>(b) / p - f), std::abs(static_cast<double>(a) / p - f_left)});
    a = b;
  }
  return best;
}

int expected_index(const DensityCurve& curve, double tau, int p) {
  const double target = static_cast<double>(p) * curve.cdf(tau);
  // Guard against the CDF landing a hair above an integer.
  const int index = static_cast<int>(std::ceil(target - 1e-9));
  return std::clamp(index, 1, p);
}

namespace {

std::string format_key(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string format_key(cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << z.real() << (z.imag() < 0.0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

struct ZetaTarget {
  cplx zeta;
  bool bulk = true;
  CVec m;
};

struct TrialResult {
  std::vector<double> entrywise;
  std::vector<double> averaged;
  std::vector<double> averaged_ones;
  std::vector<int> index_of_tau;
  std::vector<double> rigidity;
  int zero_count = 0;
  int gap_violations = 0;
  int outliers = 0;
  double max_eigenvalue = 0.0;
  double ks = 0.0;
  double capacity = 0.0;
};

}  // namespace

VerificationReport verify(const VerifyConfig& config) {
  const VarianceProfile& profile = config.sample.profile;
  const int p = profile.p();
  const int n = profile.n();
  const int trials = config.sample.trials;
  if (trials < 1) throw InvalidArgument("verify: trials must be positive");
  if (config.check_capacity && !(config.sigma2 > 0.0)) throw InvalidArgument("verify: sigma2 must be positive");
  const auto& th = config.thresholds;

  VerificationReport report;
  report.p = p;
  report.n = n;
  report.distribution = to_string(config.sample.distribution);
  report.seed = config.sample.seed;
  report.trials = trials;

  DensityOptions dopts = config.density;
  if (dopts.threads <= 0) dopts.threads = config.threads;
  const double upper = 4.0 * profile.s_star();
  const DensityCurve curve =
      density(profile, linear_grid(upper / config.density_points, upper, config.density_points), dopts);
  report.point_mass = curve.point_mass;
  report.support_upper = curve.support.empty() ? 0.0 : curve.support.back().second;
  const bool rectangular = std::abs(static_cast<double>(p) / n - 1.0) >= config.d_star_min;
  if (rectangular && p > n) report.delta_pi = estimate_gap(curve, dopts.support_threshold);

  std::vector<ZetaTarget> targets;
  if (config.check_local_law) {
    const double eta = std::pow(static_cast<double>(p), -1.0 + config.gamma);
    for (double re : config.bulk_re) targets.push_back({cplx(re, eta), true, {}});
    for (cplx z : config.outside) targets.push_back({z, false, {}});
    for (auto& t : targets) {
      if (!(t.zeta.imag() > 0.0)) throw InvalidArgument("verify: local-law points need Im zeta > 0");
      t.m = solve_gram_at(profile, t.zeta, dopts.solver).m;
    }
  }

  std::vector<Vec> ws;
  ws.push_back(Vec::Ones(p));
  Vec alt(p);
  for (int i = 0; i < p; ++i) alt(i) = (i % 2 == 0) ? 1.0 : -1.0;
  ws.push_back(alt);
  {
    auto engine = make_stream(config.w_seed, 0);
    NormalSource source(engine);
    Vec w(p);
    for (int i = 0; i < p; ++i) w(i) = source.sign();
    ws.push_back(w);
  }

  std::vector<double> taus;
  std::vector<char> tau_skipped;
  if (config.check_rigidity) {
    for (double tau : config.rigidity_tau) {
      // Bulk points only: the density at tau must clear the support threshold.
      const auto it = std::lower_bound(curve.grid.begin(), curve.grid.end(), tau);
      bool in_bulk = it != curve.grid.end();
      if (in_bulk) {
        const auto j = static_cast<std::size_t>(it - curve.grid.begin());
        in_bulk = curve.values[j] > dopts.support_threshold && (j == 0 || curve.values[j - 1] > dopts.support_threshold);
      }
      taus.push_back(tau);
      tau_skipped.push_back(in_bulk ? 0 : 1);
    }
  }
  std::vector<int> tau_index(taus.size());
  for (std::size_t t = 0; t < taus.size(); ++t) tau_index[t] = expected_index(curve, taus[t], p);

  std::optional<std::pair<double, double>> gap_window;
  if (config.check_kernel_gap && report.delta_pi)
    gap_window = std::make_pair(config.gap_lo * *report.delta_pi, config.gap_hi * *report.delta_pi);
  report.outlier_window = {config.outlier_factor * report.support_upper, config.outlier_upper};

  std::vector<TrialResult> results(trials);
  parallel_for(trials, config.threads, [&](int trial) {
    TrialResult& r = results[trial];
    const CMat x = sample(config.sample, trial);
    Vec eig;
    if (config.check_local_law) {
      const GramDecomposition dec = decompose(x);
      eig = dec.eigenvalues;
      for (const auto& t : targets) {
        const CMat res = resolvent(dec, t.zeta);
        CMat diff = res;
        diff.diagonal() -= t.m;
        r.entrywise.push_back(diff.cwiseAbs().maxCoeff());
        const CVec dd = diff.diagonal();
        double worst = 0.0;
        for (std::size_t k = 0; k < ws.size(); ++k) {
          const double err = std::abs(ws[k].cast<cplx>().dot(dd)) / p;
          if (k == 0) r.averaged_ones.push_back(err);
          worst = std::max(worst, err);
        }
        r.averaged.push_back(worst);
      }
    } else {
      eig = decompose(x).eigenvalues;
    }
    r.zero_count = count_zero(eig, config.kernel_rel);
    r.max_eigenvalue = eig.maxCoeff();
    for (std::size_t t = 0; t < taus.size(); ++t) r.rigidity.push_back(std::abs(eig(tau_index[t] - 1) - taus[t]));
    if (gap_window)
      r.gap_violations = static_cast<int>(
          ((eig.array() >= gap_window->first) && (eig.array() <= gap_window->second)).count());
    r.outliers = static_cast<int>(((eig.array() >= report.outlier_window.first) &&
                                   (eig.array() <= report.outlier_window.second))
                                      .count());
    r.ks = ks_distance(eig, curve, config.kernel_rel);
    if (config.check_capacity) r.capacity = empirical_capacity(eig, config.sigma2);
  });

  // Deterministic fold in trial order.
  for (std::size_t t = 0; t < targets.size(); ++t) {
    LocalLawEntry entry;
    entry.zeta = targets[t].zeta;
    entry.bulk = targets[t].bulk;
    if (entry.bulk) {
      entry.scale_entrywise = std::sqrt(p * entry.zeta.imag());
      entry.scale_averaged = p * entry.zeta.imag();
    } else {
      entry.scale_entrywise = std::sqrt(static_cast<double>(p));
      entry.scale_averaged = p;
    }
    std::vector<double> ent, avg;
    const std::string key = format_key(entry.zeta);
    for (int trial = 0; trial < trials; ++trial) {
      const auto& r = results[trial];
      ent.push_back(r.entrywise[t] * entry.scale_entrywise);
      avg.push_back(r.averaged[t] * entry.scale_averaged);
      report.rows.push_back({trial, "entrywise_err", key, r.entrywise[t]});
      report.rows.push_back({trial, "averaged_err", key, r.averaged[t]});
      report.rows.push_back({trial, "averaged_err_ones", key, r.averaged_ones[t]});
    }
    entry.entrywise = summarize(ent, th.percentile);
    entry.averaged = summarize(avg, th.percentile);
    const double ce = entry.bulk ? th.entrywise_bulk : th.entrywise_outside;
    const double ca = entry.bulk ? th.averaged_bulk : th.averaged_outside;
    entry.pass = entry.entrywise.percentile <= ce && entry.averaged.percentile <= ca;
    report.all_pass = report.all_pass && entry.pass;
    report.local_law.push_back(entry);
  }

  for (std::size_t t = 0; t < taus.size(); ++t) {
    RigidityEntry entry;
    entry.tau = taus[t];
    entry.index = tau_index[t];
    entry.skipped = tau_skipped[t] != 0;
    std::vector<double> dev, scaled;
    const std::string key = format_key(taus[t]);
    for (int trial = 0; trial < trials; ++trial) {
      const double d = results[trial].rigidity[t];
      dev.push_back(d);
      scaled.push_back(d / (std::sqrt(taus[t]) + 1.0 / p));
      report.rows.push_back({trial, "rigidity_dev", key, d});
    }
    entry.deviation = summarize(dev, th.percentile);
    if (p == n) entry.scaled = summarize(scaled, th.percentile);
    entry.pass = entry.skipped || entry.deviation.median <= th.rigidity / p;
    report.all_pass = report.all_pass && entry.pass;
    report.rigidity.push_back(entry);
  }

  report.kernel_min = p;
  report.kernel_max = 0;
  std::vector<double> ks;
  double cap_sum = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto& r = results[trial];
    report.kernel_min = std::min(report.kernel_min, r.zero_count);
    report.kernel_max = std::max(report.kernel_max, r.zero_count);
    report.gap_violations += r.gap_violations;
    report.outlier_count += r.outliers;
    report.max_eigenvalue = std::max(report.max_eigenvalue, r.max_eigenvalue);
    ks.push_back(r.ks);
    cap_sum += r.capacity;
    report.rows.push_back({trial, "zero_count", "", static_cast<double>(r.zero_count)});
    report.rows.push_back({trial, "max_eigenvalue", "", r.max_eigenvalue});
    report.rows.push_back({trial, "ks_distance", "", r.ks});
    if (gap_window) report.rows.push_back({trial, "gap_violations", "", static_cast<double>(r.gap_violations)});
    if (config.check_outliers) report.rows.push_back({trial, "outliers", "", static_cast<double>(r.outliers)});
    if (config.check_capacity) report.rows.push_back({trial, "capacity", format_key(config.sigma2), r.capacity});
  }
  report.ks = summarize(ks, th.percentile);

  if (config.check_kernel_gap) {
    report.kernel_expected = std::max(p - n, 0);
    report.kernel_ok = report.kernel_min == *report.kernel_expected && report.kernel_max == *report.kernel_expected;
    report.gap_window = gap_window;
    report.all_pass = report.all_pass && report.kernel_ok && report.gap_violations == 0;
  }
  if (config.check_outliers) {
    report.outliers_ok = report.outlier_count == 0;
    report.all_pass = report.all_pass && report.outliers_ok;
  }
  if (config.check_capacity) {
    report.sigma2 = config.sigma2;
    report.capacity_mc = cap_sum / trials;
    report.capacity_det = capacity(curve, config.sigma2);
    report.capacity_rel_err = std::abs(report.capacity_mc - report.capacity_det) / std::abs(report.capacity_det);
    report.capacity_ok = report.capacity_rel_err <= th.capacity_rel;
    report.all_pass = report.all_pass && report.capacity_ok;
  }
  return report;
}

namespace {

VerifyConfig only(VerifyConfig config, bool local_law, bool rigidity) {
  config.check_local_law = local_law;
  config.check_rigidity = rigidity;
  config.check_kernel_gap = rigidity;
  config.check_outliers = false;
  config.check_capacity = false;
  return config;
}

}  // namespace

VerificationReport verify_local_law(VerifyConfig config) { return verify(only(std::move(config), true, false)); }

VerificationReport verify_rigidity(VerifyConfig config) { return verify(only(std::move(config), false, true)); }

CapacityCheck verify_capacity(const SampleSpec& spec, double sigma2, int density_points, int threads) {
  if (!(sigma2 > 0.0)) throw InvalidArgument("verify_capacity: sigma2 must be positive");
  VerifyConfig config;
  config.sample = spec;
  config.sigma2 = sigma2;
  config.density_points = density_points;
  config.threads = threads;
  config.check_local_law = false;
  config.check_rigidity = false;
  config.check_kernel_gap = false;
  config.check_outliers = false;
  const VerificationReport report = verify(config);
  return {report.capacity_mc, report.capacity_det, report.capacity_rel_err};
}

}  // namespace gramspec
