// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <variant>

#include "gramspec/cli.hpp"
#include "gramspec/harness.hpp"
#include "gramspec/io.hpp"
#include "gramspec/stability.hpp"
#include "gramspec/zero.hpp"

using namespace gramspec;

namespace {

// Pinned tolerances.
constexpr double kDensitySup = 1e-3;
constexpr double kDensitySeconds = 60.0;
constexpr double kUTol = 1e-8;
constexpr double kUSumTol = 1e-6;
constexpr double kB0Tol = 1e-8;
constexpr double kAtomTol = 1e-12;
constexpr double kIdentityTol = 1e-8;
constexpr double kAntisymmetryTol = 1e-8;
constexpr double kRhsZero = 1e-12;
constexpr int kSweepInstances = 10000;
constexpr double kExpansionC = 10.0;
constexpr double kEntrywiseP95 = 5.0;
constexpr double kAveragedP95 = 10.0;
constexpr double kRigidity = 20.0;
constexpr double kCapacityRel = 0.02;
constexpr int kTrials = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

struct Criterion {
  int id;
  const char* name;
};

// A throwing check fails every criterion it was meant to report.
void guarded(std::initializer_list<Criterion> criteria, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    for (const auto& c : criteria) report(c.id, c.name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int env_threads() {
  const char* v = std::getenv("GRAMSPEC_THREADS");
  return v ? std::max(1, std::atoi(v)) : 1;
}

VarianceProfile random_profile(int p, int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  RowMat s(p, n);
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < n; ++k) s(i, k) = u(gen) / (p + n);
  return VarianceProfile(s);
}

void closed_form_density() {
  const int p = 200;
  const auto profile = VarianceProfile::constant(p, p, 1.0 / (2.0 * p));
  DensityOptions opts;
  opts.threads = 1;
  const auto grid = linear_grid(0.05, 1.95, 2000);
  const auto t0 = Clock::now();
  const auto curve = density(profile, grid, opts);
  const double elapsed = seconds_since(t0);
  double err = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double oracle = std::sqrt(2.0 / grid[j] - 1.0) / std::numbers::pi;
    err = std::max(err, std::abs(curve.values[j] - oracle));
  }
  report(1, "closed-form density", err <= kDensitySup && elapsed <= kDensitySeconds && curve.flagged.empty(),
         "sup_err=" + fmt("%.3e", err) + " runtime=" + fmt("%.1f", elapsed) + "s flagged=" +
             std::to_string(curve.flagged.size()));
}

void soft_edge() {
  const int p = 400, n = 200;
  const auto profile = VarianceProfile::constant(p, n, 1.0 / (p + n));
  ZeroOptions opts;
  opts.density.threads = 1;
  const auto zero = analyze_zero(profile, opts);
  const auto& soft = std::get<SoftEdgeStructure>(zero);
  const double u_err = (soft.u.array() - 0.5).abs().maxCoeff();
  const double sum_err = std::abs(soft.u.sum() - (p - n));
  const double b0_err = (soft.b0.array() - 3.0).abs().maxCoeff();
  const double atom_err = std::abs(soft.point_mass - 0.5);
  const double step = 4.0 * profile.s_star() / opts.gap_grid_points;
  const double gap_oracle = (3.0 - 2.0 * std::sqrt(2.0)) / 3.0;
  const double gap_err = soft.delta_pi ? std::abs(*soft.delta_pi - gap_oracle) : INFINITY;
  const bool pass = u_err <= kUTol && sum_err <= kUSumTol && b0_err <= kB0Tol && atom_err <= kAtomTol &&
                    gap_err <= 2.0 * step;
  report(2, "soft-edge structure", pass,
         "u_err=" + fmt("%.2e", u_err) + " sum_err=" + fmt("%.2e", sum_err) + " b0_err=" + fmt("%.2e", b0_err) +
             " atom_err=" + fmt("%.2e", atom_err) + " gap_err/step=" + fmt("%.2f", gap_err / step));
}

void norm_identity_and_antisymmetry() {
  const int shapes[3][2] = {{250, 250}, {320, 200}, {180, 300}};
  double worst_identity = 0.0, worst_anti = 0.0;
  int points = 0;
  bool validated = true;
  for (int j = 0; j < 3; ++j) {
    const auto profile = random_profile(shapes[j][0], shapes[j][1], 500 + j);
    const auto assumptions = validate(profile);
    validated = validated && assumptions.primitivity && assumptions.lower_bound && assumptions.comparable;
    const SymmetrizedProfile sym(profile);
    DensityOptions dopts;
    dopts.threads = 1;
    const double upper = 4.0 * profile.s_star();
    const auto curve = density(profile, linear_grid(upper / 400, upper, 400), dopts);
    const auto& band = curve.support.back();
    for (int k = 0; k < 20; ++k) {
      const double omega = band.first + (0.1 + 0.8 * k / 19.0) * (band.second - band.first);
      const cplx z = upper_sqrt(cplx(omega, 1e-3));
      const auto r = stability_report(sym, z);
      worst_identity = std::max(worst_identity, r.identity_error);
      worst_anti = std::max(worst_anti, r.antisymmetry_residual);
      ++points;
    }
  }
  const std::string where = std::to_string(points) + " points";
  report(3, "norm identity", validated && worst_identity <= kIdentityTol,
         "max_err=" + fmt("%.2e", worst_identity) + " over " + where);
  report(4, "eigenvector antisymmetry", validated && worst_anti <= kAntisymmetryTol,
         "max_residual=" + fmt("%.2e", worst_anti) + " over " + where);
}

void rotation_inversion() {
  RotationInversionInstance phi0{CMat::Ones(1, 1), CMat::Ones(1, 1), Mat::Ones(1, 1)};
  const auto r = rotation_inversion_check(phi0);
  const bool equivalence = r.singular == (r.rhs_core <= kRhsZero);
  const auto t0 = Clock::now();
  const auto rows = rotation_inversion_sweep(kSweepInstances, {2, 4, 8, 16, 32}, 2024, env_threads());
  double worst = 0.0;
  bool finite = true;
  int counterexamples = 0;
  for (const auto& row : rows) {
    finite = finite && std::isfinite(row.ratio);
    worst = std::max(worst, row.ratio);
    counterexamples += row.counterexample;
  }
  report(5, "rotation-inversion", equivalence && r.singular && finite && counterexamples == 0,
         std::string("phi0 singular=") + (r.singular ? "yes" : "no") + " rhs_core=" + fmt("%.1e", r.rhs_core) +
             " sweep=" + std::to_string(rows.size()) + " max_ratio=" + fmt("%.4g", worst) +
             " counterexamples=" + std::to_string(counterexamples) + " runtime=" + fmt("%.1f", seconds_since(t0)) +
             "s");
}

void expansion_at_zero() {
  const int p = 200;
  const SymmetrizedProfile sym(VarianceProfile::constant(p, p, 1.0 / (2.0 * p)));
  const auto hard = solve_hard_edge(sym);
  std::mt19937 gen(6);
  std::uniform_real_distribution<double> radius(0.001, 0.05), angle(0.05, std::numbers::pi - 0.05);
  double c = 0.0;
  for (int j = 0; j < 50; ++j) {
    const cplx z = std::polar(radius(gen), angle(gen));
    const auto sol = solve_continued(sym, z);
    c = std::max(c, (sol.m_sym - hard.expansion(z)).cwiseAbs().maxCoeff() / std::norm(z));
  }
  report(6, "expansion at zero", c <= kExpansionC, "C=" + fmt("%.3f", c) + " over 50 z");
}

void square_ensemble() {
  VerifyConfig config;
  config.sample.profile = VarianceProfile::constant(400, 400, 1.0 / 800.0);
  config.sample.distribution = Distribution::gaussian_real;
  config.sample.seed = 1;
  config.sample.trials = kTrials;
  config.threads = env_threads();
  const auto t0 = Clock::now();
  const auto r = verify(config);
  const double elapsed = seconds_since(t0);
  const auto& bulk = r.local_law.front();
  report(7, "local law",
         bulk.entrywise.percentile <= kEntrywiseP95 && bulk.averaged.percentile <= kAveragedP95 && elapsed <= 600.0,
         "zeta=" + format_complex(bulk.zeta) + " entrywise_p95=" + fmt("%.3f", bulk.entrywise.percentile) +
             " averaged_p95=" + fmt("%.3f", bulk.averaged.percentile) + " runtime=" + fmt("%.1f", elapsed) + "s");
  const auto& rig = r.rigidity.front();
  report(8, "rigidity", !rig.skipped && rig.deviation.median <= kRigidity / 400.0,
         "median_dev*p=" + fmt("%.3f", rig.deviation.median * 400.0) + " index=" + std::to_string(rig.index));
  report(10, "no outliers", r.outlier_count == 0 && std::abs(r.outlier_window.first - 2.2) < 0.05,
         "window=[" + fmt("%.3f", r.outlier_window.first) + "," + fmt("%.0f", r.outlier_window.second) +
             "] count=" + std::to_string(r.outlier_count) + " max_eigenvalue=" + fmt("%.4f", r.max_eigenvalue));
  report(11, "capacity", r.capacity_rel_err <= kCapacityRel,
         "mc=" + fmt("%.6f", r.capacity_mc) + " det=" + fmt("%.6f", r.capacity_det) +
             " rel_err=" + fmt("%.2e", r.capacity_rel_err));
}

void kernel_and_gap() {
  VerifyConfig config;
  config.sample.profile = VarianceProfile::constant(300, 150, 1.0 / 450.0);
  config.sample.distribution = Distribution::gaussian_real;
  config.sample.seed = 9;
  config.sample.trials = kTrials;
  config.threads = env_threads();
  config.check_local_law = config.check_rigidity = config.check_capacity = false;
  const auto r = verify(config);
  const bool pass = r.kernel_min == 150 && r.kernel_max == 150 && r.gap_window && r.gap_violations == 0;
  report(9, "kernel and gap", pass,
         "kernel=[" + std::to_string(r.kernel_min) + "," + std::to_string(r.kernel_max) + "] delta_pi=" +
             (r.delta_pi ? fmt("%.5f", *r.delta_pi) : std::string("none")) +
             " gap_violations=" + std::to_string(r.gap_violations));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "gramspec_acceptance";
  std::filesystem::create_directories(dir);
  auto run = [&](const std::string& name, const std::string& threads) {
    std::ostringstream out, err;
    return run_cli({"verify", "--demo", "uniform-square", "--p", "120", "--trials", "10", "--seed", "12",
                    "--threads", threads, "--out", (dir / name).string()},
                   out, err);
  };
  const int a = run("a", "1"), b = run("b", "1"), c = run("c", "2");
  bool same = a == b && b == c;
  for (const char* ext : {".json", ".csv"}) {
    const auto ref = slurp(dir / (std::string("a") + ext));
    same = same && !ref.empty() && ref == slurp(dir / (std::string("b") + ext)) &&
           ref == slurp(dir / (std::string("c") + ext));
  }
  report(12, "determinism", same, same ? "reports bitwise identical across 3 runs" : "reports differ");
}

}  // namespace

int main() {
  guarded({{1, "closed-form density"}}, closed_form_density);
  guarded({{2, "soft-edge structure"}}, soft_edge);
  guarded({{3, "norm identity"}, {4, "eigenvector antisymmetry"}}, norm_identity_and_antisymmetry);
  guarded({{5, "rotation-inversion"}}, rotation_inversion);
  guarded({{6, "expansion at zero"}}, expansion_at_zero);
  guarded({{7, "local law"}, {8, "rigidity"}, {10, "no outliers"}, {11, "capacity"}}, square_ensemble);
  guarded({{9, "kernel and gap"}}, kernel_and_gap);
  guarded({{12, "determinism"}}, determinism);
  std::printf("%s\n", failures == 0 ? "ALL PASS" : (std::to_string(failures) + " FAILED").c_str());
  return failures == 0 ? 0 : 1;
}
