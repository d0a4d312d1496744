#include "gramspec/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "gramspec/defaults.hpp"
#include "gramspec/io.hpp"
#include "gramspec/parallel.hpp"

namespace gramspec {

namespace {

struct RunConfig {
  std::string subcommand;
  std::string profile_path;
  std::string demo = "uniform-square";
  int p = 200;
  std::string grid;
  std::string eta_ladder;
  double tol = SolverOptions{}.tol;
  std::uint64_t seed = 1;
  int trials = 50;
  std::string distribution = "gaussian-real";
  std::vector<double> sigma2{1.0};
  std::string z;
  std::string zeta;
  int instances = 10000;
  std::vector<int> dims{2, 4, 8, 16, 32};
  double gamma = VerifyConfig{}.gamma;
  std::vector<double> bulk_re = VerifyConfig{}.bulk_re;
  std::vector<double> tau = VerifyConfig{}.rigidity_tau;
  int density_points = VerifyConfig{}.density_points;
  std::string out;
  std::string format = "csv";
  int threads = 0;

  Json to_json() const {
    Json j;
    j["subcommand"] = subcommand;
    j["profile"] = profile_path.empty() ? Json(nullptr) : Json(profile_path);
    j["demo"] = profile_path.empty() ? Json(demo) : Json(nullptr);
    j["p"] = p;
    j["grid"] = grid;
    j["eta_ladder"] = eta_ladder;
    j["tol"] = tol;
    j["seed"] = seed;
    j["trials"] = trials;
    j["distribution"] = distribution;
    j["sigma2"] = sigma2;
    j["z"] = z;
    j["zeta"] = zeta;
    j["instances"] = instances;
    j["dims"] = dims;
    j["gamma"] = gamma;
    j["bulk_re"] = bulk_re;
    j["tau"] = tau;
    j["density_points"] = density_points;
    j["out"] = out;
    j["format"] = format;
    j["threads"] = threads;
    return j;
  }
};

VarianceProfile resolve_profile(const RunConfig& c) {
  return c.profile_path.empty() ? demo_profile(c.demo, c.p) : load_profile(c.profile_path);
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions s;
  s.tol = c.tol;
  return s;
}

DensityOptions density_options(const RunConfig& c) {
  DensityOptions d;
  d.solver = solver_options(c);
  if (!c.eta_ladder.empty()) d.eta_ladder = parse_list(c.eta_ladder);
  return d;
}

std::string prefix(const RunConfig& c) { return c.out.empty() ? "gramspec_" + c.subcommand : c.out; }

void write_manifest(const RunConfig& c, const VarianceProfile& profile, const Json& resolved, const Json& artifacts) {
  Json m;
  m["artifact"] = "gramspec";
  m["version"] = GRAMSPEC_VERSION;
  m["config"] = c.to_json();
  m["profile_shape"] = {profile.p(), profile.n()};
  m["resolved"] = resolved;
  m["artifacts"] = artifacts;
  m["defaults"] = defaults_json();
  write_json(prefix(c) + ".manifest.json", m);
}

std::string support_text(const std::vector<std::pair<double, double>>& support) {
  std::string s;
  for (const auto& [a, b] : support) s += "[" + format_double(a) + ", " + format_double(b) + "] ";
  if (!s.empty()) s.pop_back();
  return s.empty() ? "(empty)" : s;
}

int cmd_density(const RunConfig& c, std::ostream& out) {
  const VarianceProfile profile = resolve_profile(c);
  const DensityOptions opts = density_options(c);
  const double upper = 4.0 * profile.s_star();
  const std::vector<double> grid = c.grid.empty() ? linear_grid(upper / 2000, upper, 2000) : parse_grid(c.grid);
  const DensityCurve curve = density(profile, grid, opts);
  std::string file;
  if (c.format == "json") {
    file = prefix(c) + ".json";
    Json j = to_json(curve);
    j["tol"] = opts.solver.tol;
    write_json(file, j);
  } else {
    file = prefix(c) + ".csv";
    write_density_csv(curve, file);
  }
  Json resolved = to_json(curve, false);
  resolved["grid"] = {grid.front(), grid.back(), grid.size()};
  resolved["eta_ladder"] = opts.eta_ladder;
  resolved["tol"] = opts.solver.tol;
  write_manifest(c, profile, resolved, Json::array({file}));
  out << "point_mass " << format_double(curve.point_mass) << "\n";
  out << "support " << support_text(curve.support) << "\n";
  out << "total_mass " << format_double(curve.total_mass()) << "\n";
  out << "flagged " << curve.flagged.size() << "\n";
  out << "wrote " << file << "\n";
  return exit_ok;
}

int cmd_zero(const RunConfig& c, std::ostream& out) {
  const VarianceProfile profile = resolve_profile(c);
  ZeroOptions opts;
  opts.density = density_options(c);
  const ZeroStructure zero = analyze_zero(profile, opts);
  const Json j = to_json(zero);
  const std::string file = prefix(c) + ".json";
  write_json(file, j);
  write_manifest(c, profile, Json{{"kind", j["kind"]}}, Json::array({file}));
  out << "kind " << j["kind"].get<std::string>() << "\n";
  out << "point_mass " << format_double(j["point_mass"].get<double>()) << "\n";
  if (const auto* hard = std::get_if<HardEdgeStructure>(&zero)) {
    out << "singular_coefficient " << format_double(hard->singular_coefficient) << "\n";
  } else {
    const auto& soft = std::get<SoftEdgeStructure>(zero);
    out << "delta_star " << format_double(soft.delta_star) << "\n";
    if (soft.delta_pi) out << "delta_pi " << format_double(*soft.delta_pi) << "\n";
  }
  out << "wrote " << file << "\n";
  return exit_ok;
}

int cmd_stability(const RunConfig& c, std::ostream& out) {
  const VarianceProfile profile = resolve_profile(c);
  if (c.z.empty() == c.zeta.empty()) throw InvalidArgument("stability needs exactly one of --z and --zeta");
  const cplx z = c.z.empty() ? upper_sqrt(parse_complex(c.zeta)) : parse_complex(c.z);
  const StabilityReport report = stability_report(SymmetrizedProfile(profile), z, solver_options(c));
  const std::string file = prefix(c) + ".json";
  write_json(file, to_json(report));
  write_manifest(c, profile, Json{{"z", format_complex(z)}}, Json::array({file}));
  out << "z " << format_complex(z) << "\n";
  out << "norm_F " << format_double(report.norm_F) << "\n";
  out << "identity_error " << format_double(report.identity_error) << "\n";
  out << "gap_FFt " << format_double(report.gap_FFt) << "\n";
  out << "norm_B_inv_2 " << format_double(report.norm_B_inv_2) << "\n";
  out << "norm_B_inv_inf " << format_double(report.norm_B_inv_inf) << (report.inf_norm_estimated ? " (estimate)" : "")
      << "\n";
  out << "wrote " << file << "\n";
  return exit_ok;
}

int cmd_ri_sweep(const RunConfig& c, std::ostream& out) {
  const int threads = c.threads > 0 ? c.threads : thread_count_from_env();
  const auto rows = rotation_inversion_sweep(c.instances, c.dims, c.seed, threads);
  const std::string file = prefix(c) + ".csv";
  write_sweep_csv(rows, file);
  Json per_dim = Json::object();
  int counterexamples = 0;
  for (int d : c.dims) {
    double worst = 0.0;
    for (const auto& r : rows)
      if (r.dim == d) worst = std::max(worst, r.ratio);
    per_dim[std::to_string(d)] = worst;
    out << "dim " << d << " max_ratio " << format_double(worst) << "\n";
  }
  for (const auto& r : rows) counterexamples += r.counterexample ? 1 : 0;
  Json m;
  m["artifact"] = "gramspec";
  m["version"] = GRAMSPEC_VERSION;
  m["config"] = c.to_json();
  m["resolved"] = {{"max_ratio", per_dim}, {"counterexamples", counterexamples}};
  m["artifacts"] = Json::array({file});
  m["defaults"] = defaults_json();
  write_json(prefix(c) + ".manifest.json", m);
  out << "counterexamples " << counterexamples << "\n";
  out << "wrote " << file << "\n";
  return counterexamples == 0 ? exit_ok : exit_verification_failed;
}

VerifyConfig verify_config(const RunConfig& c, const VarianceProfile& profile) {
  VerifyConfig v;
  v.sample.profile = profile;
  v.sample.distribution = parse_distribution(c.distribution);
  v.sample.seed = c.seed;
  v.sample.trials = c.trials;
  v.gamma = c.gamma;
  v.bulk_re = c.bulk_re;
  v.rigidity_tau = c.tau;
  v.sigma2 = c.sigma2.front();
  v.density_points = c.density_points;
  v.density = density_options(c);
  v.threads = c.threads > 0 ? c.threads : thread_count_from_env();
  return v;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  const VarianceProfile profile = resolve_profile(c);
  if (c.trials < 1) throw InvalidArgument("--trials must be positive");
  const VerificationReport report = verify(verify_config(c, profile));
  const std::string json_file = prefix(c) + ".json";
  const std::string csv_file = prefix(c) + ".csv";
  write_json(json_file, to_json(report));
  write_report_csv(report, csv_file);
  write_manifest(c, profile, Json{{"all_pass", report.all_pass}}, Json::array({json_file, csv_file}));
  for (const auto& e : report.local_law)
    out << (e.pass ? "PASS" : "FAIL") << " local_law " << format_complex(e.zeta) << " entrywise_p95 "
        << format_double(e.entrywise.percentile) << " averaged_p95 " << format_double(e.averaged.percentile) << "\n";
  for (const auto& e : report.rigidity)
    out << (e.pass ? "PASS" : "FAIL") << " rigidity tau " << format_double(e.tau) << " median_dev_times_p "
        << format_double(e.deviation.median * report.p) << (e.skipped ? " (skipped)" : "") << "\n";
  if (report.kernel_expected)
    out << (report.kernel_ok && report.gap_violations == 0 ? "PASS" : "FAIL") << " kernel expected "
        << *report.kernel_expected << " range [" << report.kernel_min << ", " << report.kernel_max
        << "] gap_violations " << report.gap_violations << "\n";
  out << (report.outliers_ok ? "PASS" : "FAIL") << " outliers " << report.outlier_count << " max_eigenvalue "
      << format_double(report.max_eigenvalue) << "\n";
  if (report.sigma2)
    out << (report.capacity_ok ? "PASS" : "FAIL") << " capacity mc " << format_double(report.capacity_mc) << " det "
        << format_double(report.capacity_det) << " rel_err " << format_double(report.capacity_rel_err) << "\n";
  out << "ks_median " << format_double(report.ks.median) << "\n";
  out << "wrote " << json_file << " " << csv_file << "\n";
  return report.all_pass ? exit_ok : exit_verification_failed;
}

int cmd_capacity(const RunConfig& c, std::ostream& out) {
  const VarianceProfile profile = resolve_profile(c);
  const double upper = 4.0 * profile.s_star();
  const std::vector<double> grid = c.grid.empty() ? linear_grid(upper / 2000, upper, 2000) : parse_grid(c.grid);
  const DensityCurve curve = density(profile, grid, density_options(c));
  Json values = Json::array();
  for (double s2 : c.sigma2) {
    const double cap = capacity(curve, s2);
    values.push_back({{"sigma2", s2}, {"capacity", cap}});
    out << "sigma2 " << format_double(s2) << " capacity " << format_double(cap) << "\n";
  }
  write_manifest(c, profile, Json{{"point_mass", curve.point_mass}, {"capacity", values}}, Json::array());
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral density and stability of Gram matrices with a variance profile", "gramspec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(GRAMSPEC_VERSION));
  RunConfig c;

  auto common = [&](CLI::App* sub, bool needs_profile) {
    if (needs_profile) {
      sub->add_option("--profile", c.profile_path, "variance profile (.json or .csv)")->check(CLI::ExistingFile);
      sub->add_option("--demo", c.demo, "built-in profile when --profile is absent")
          ->check(CLI::IsMember({"uniform-square", "uniform-rect"}));
      sub->add_option("--p", c.p, "size of the demo profile")->check(CLI::PositiveNumber);
      sub->add_option("--tol", c.tol, "solver tolerance")->check(CLI::PositiveNumber);
      sub->add_option("--eta-ladder", c.eta_ladder, "comma-separated decreasing eta values");
    }
    sub->add_option("--out", c.out, "output path prefix");
    sub->add_option("--threads", c.threads, "worker threads (overrides GRAMSPEC_THREADS)")->check(CLI::NonNegativeNumber);
  };

  auto* density_cmd = app.add_subcommand("density", "density of the limiting measure on a grid");
  common(density_cmd, true);
  density_cmd->add_option("--grid", c.grid, "start:stop:count");
  density_cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* zero_cmd = app.add_subcommand("zero", "structure of the measure at zero");
  common(zero_cmd, true);

  auto* stab_cmd = app.add_subcommand("stability", "stability operators at one spectral point");
  common(stab_cmd, true);
  stab_cmd->add_option("--z", c.z, "symmetrized-plane point a+bi");
  stab_cmd->add_option("--zeta", c.zeta, "Gram-plane point a+bi");

  auto* ri_cmd = app.add_subcommand("ri-sweep", "random Rotation-Inversion instances");
  common(ri_cmd, false);
  ri_cmd->add_option("--instances", c.instances, "number of instances")->check(CLI::NonNegativeNumber);
  ri_cmd->add_option("--dims", c.dims, "dimensions p = n")->delimiter(',');
  ri_cmd->add_option("--seed", c.seed, "seed");

  auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo checks of local law, rigidity, kernel, gap, capacity");
  common(verify_cmd, true);
  verify_cmd->add_option("--trials", c.trials, "number of sampled matrices");
  verify_cmd->add_option("--seed", c.seed, "seed");
  verify_cmd->add_option("--distribution", c.distribution, "gaussian-real, gaussian-complex or rademacher");
  verify_cmd->add_option("--sigma2", c.sigma2, "noise variance for capacity")->delimiter(',');
  verify_cmd->add_option("--gamma", c.gamma, "bulk points use Im zeta = p^(-1 + gamma)");
  verify_cmd->add_option("--bulk", c.bulk_re, "real parts of bulk points")->delimiter(',');
  verify_cmd->add_option("--tau", c.tau, "rigidity locations")->delimiter(',');
  verify_cmd->add_option("--density-points", c.density_points, "grid size for the deterministic measure")
      ->check(CLI::PositiveNumber);

  auto* cap_cmd = app.add_subcommand("capacity", "channel capacity from the deterministic measure");
  common(cap_cmd, true);
  cap_cmd->add_option("--sigma2", c.sigma2, "noise variances")->delimiter(',');
  cap_cmd->add_option("--grid", c.grid, "start:stop:count");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  if (c.threads > 0) setenv("GRAMSPEC_THREADS", std::to_string(c.threads).c_str(), 1);
  try {
    for (double s2 : c.sigma2)
      if (!(s2 > 0.0)) throw InvalidArgument("--sigma2 must be positive");
    if (c.subcommand == "density") return cmd_density(c, out);
    if (c.subcommand == "zero") return cmd_zero(c, out);
    if (c.subcommand == "stability") return cmd_stability(c, out);
    if (c.subcommand == "ri-sweep") return cmd_ri_sweep(c, out);
    if (c.subcommand == "verify") return cmd_verify(c, out);
    if (c.subcommand == "capacity") return cmd_capacity(c, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what();
    if (e.best_residual() >= 0.0) err << " (best residual " << format_double(e.best_residual()) << ")";
    err << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_usage;
}

}  // namespace gramspec
