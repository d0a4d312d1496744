#include "gramspec/io.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace gramspec {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  return out;
}

double parse_double(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json vec_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

Json cvec_json(const CVec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(Json::array({v(i).real(), v(i).imag()}));
  return out;
}

Json summary_json(const Summary& s) {
  return Json{{"median", number_or_null(s.median)}, {"percentile", number_or_null(s.percentile)},
              {"max", number_or_null(s.max)}};
}

Json support_json(const std::vector<std::pair<double, double>>& support) {
  Json out = Json::array();
  for (const auto& [a, b] : support) out.push_back(Json::array({a, b}));
  return out;
}

}  // namespace

VarianceProfile load_profile(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  if (ends_with(path, ".json")) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::exception& e) {
      throw InvalidArgument("'" + path + "': " + e.what());
    }
    try {
      if (j.is_object() && j.contains("entries")) {
        const int p = j.at("p").get<int>();
        const int n = j.at("n").get<int>();
        return VarianceProfile(p, n, j.at("entries").get<std::vector<double>>());
      }
      const Json& s = j.is_object() ? j.at("s") : j;
      if (!s.is_array()) throw InvalidArgument("'" + path + "': expected an array of rows");
      for (const auto& row : s) rows.push_back(row.get<std::vector<double>>());
    } catch (const Json::exception& e) {
      throw InvalidArgument("'" + path + "': " + e.what());
    }
  } else {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
      const char sep = line.find(',') != std::string::npos ? ',' : ' ';
      std::vector<double> row;
      for (const auto& field : split(line, sep)) {
        if (sep == ' ' && field.empty()) continue;
        row.push_back(parse_double(field));
      }
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty() || rows.front().empty()) throw InvalidArgument("'" + path + "': empty profile");
  const std::size_t n = rows.front().size();
  RowMat s(rows.size(), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != n) throw InvalidArgument("'" + path + "': ragged rows");
    for (std::size_t k = 0; k < n; ++k) s(i, k) = rows[i][k];
  }
  return VarianceProfile(std::move(s));
}

void save_profile_csv(const VarianceProfile& profile, const std::string& path) {
  auto out = open_out(path);
  for (int i = 0; i < profile.p(); ++i) {
    for (int k = 0; k < profile.n(); ++k) out << (k ? "," : "") << format_double(profile(i, k));
    out << '\n';
  }
}

VarianceProfile demo_profile(const std::string& name, int p) {
  if (p <= 0) throw InvalidArgument("demo profile size must be positive");
  if (name == "uniform-square") return VarianceProfile::constant(p, p, 1.0 / (2.0 * p));
  if (name == "uniform-rect") {
    if (p % 2 != 0) throw InvalidArgument("uniform-rect needs an even p");
    const int n = p / 2;
    return VarianceProfile::constant(p, n, 1.0 / (p + n));
  }
  throw InvalidArgument("unknown demo profile '" + name + "'");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

cplx parse_complex(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
  if (t.empty()) throw InvalidArgument("empty complex number");
  if (t.back() != 'i' && t.back() != 'j') return {parse_double(t), 0.0};
  t.pop_back();
  // Split at the last sign that is not part of an exponent.
  std::size_t cut = std::string::npos;
  for (std::size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      cut = k;
      break;
    }
  }
  auto imag_of = [](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return parse_double(s);
  };
  if (cut == std::string::npos) return {0.0, imag_of(t)};
  return {parse_double(t.substr(0, cut)), imag_of(t.substr(cut))};
}

std::string format_complex(cplx z) {
  return format_double(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + format_double(std::abs(z.imag())) + "i";
}

std::vector<double> parse_grid(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw InvalidArgument("grid must be start:stop:count, got '" + spec + "'");
  const double start = parse_double(parts[0]);
  const double stop = parse_double(parts[1]);
  const double count = parse_double(parts[2]);
  if (count < 1 || count != std::floor(count)) throw InvalidArgument("grid count must be a positive integer");
  if (!(stop >= start)) throw InvalidArgument("grid stop must not be below start");
  return linear_grid(start, stop, static_cast<int>(count));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& field : split(text, ',')) out.push_back(parse_double(field));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

void write_density_csv(const DensityCurve& curve, const std::string& path) {
  auto out = open_out(path);
  out << "omega,pi\n";
  for (std::size_t j = 0; j < curve.grid.size(); ++j)
    out << format_double(curve.grid[j]) << ',' << format_double(curve.values[j]) << '\n';
}

DensityCurve read_density_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("omega,pi", 0) != 0) throw InvalidArgument("'" + path + "': not a density CSV");
  DensityCurve curve;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2) throw InvalidArgument("'" + path + "': malformed row");
    curve.grid.push_back(parse_double(fields[0]));
    curve.values.push_back(parse_double(fields[1]));
  }
  return curve;
}

Json to_json(const DensityCurve& curve, bool include_samples) {
  Json j;
  j["point_mass"] = curve.point_mass;
  j["total_mass"] = curve.total_mass();
  j["support"] = support_json(curve.support);
  j["eta_ladder"] = curve.eta_ladder;
  j["eta_used"] = curve.eta_used;
  j["flagged"] = curve.flagged;
  if (include_samples) {
    j["omega"] = curve.grid;
    j["density"] = curve.values;
  }
  return j;
}

Json to_json(const AssumptionReport& r) {
  Json j;
  j["s_star"] = r.s_star;
  j["aspect_ratio"] = r.aspect_ratio;
  j["comparable"] = r.comparable;
  if (r.primitivity)
    j["primitivity"] = {{"L1", r.primitivity->l1},
                        {"L2", r.primitivity->l2},
                        {"psi1", r.primitivity->psi1},
                        {"psi2", r.primitivity->psi2}};
  else
    j["primitivity"] = nullptr;
  if (r.block_fid)
    j["block_fid"] = {{"K", r.block_fid->k}, {"phi", r.block_fid->phi}, {"partition_valid", r.block_fid->partition_valid}};
  else
    j["block_fid"] = nullptr;
  j["rectangularity"] = r.rectangularity ? Json(*r.rectangularity) : Json(nullptr);
  j["lower_bound"] = r.lower_bound ? Json(*r.lower_bound) : Json(nullptr);
  return j;
}

Json to_json(const ZeroStructure& zero) {
  Json j;
  if (const auto* hard = std::get_if<HardEdgeStructure>(&zero)) {
    j["kind"] = "hard";
    j["point_mass"] = 0.0;
    j["singular_coefficient"] = hard->singular_coefficient;
    j["residual"] = hard->residual;
    j["v0"] = vec_json(hard->v0);
    j["first_order"] = vec_json(hard->first_order);
  } else {
    const auto& soft = std::get<SoftEdgeStructure>(zero);
    j["kind"] = "soft";
    j["transposed"] = soft.transposed;
    j["point_mass"] = soft.point_mass;
    j["delta_pi"] = soft.delta_pi ? Json(*soft.delta_pi) : Json(nullptr);
    j["delta_star"] = soft.delta_star;
    j["u"] = vec_json(soft.u);
    j["b0"] = vec_json(soft.b0);
    Json series = Json::array();
    for (const auto& c : soft.b_series) series.push_back(cvec_json(c));
    j["b_series"] = series;
  }
  return j;
}

Json to_json(const StabilityReport& r) {
  Json j;
  j["z"] = Json::array({r.z.real(), r.z.imag()});
  j["qve_residual"] = r.qve_residual;
  j["norm_F"] = r.norm_F;
  j["identity_error"] = r.identity_error;
  j["antisymmetry_residual"] = r.antisymmetry_residual;
  j["gap_FFt"] = r.gap_FFt;
  j["singular"] = r.singular;
  j["norm_B_inv_2"] = number_or_null(r.norm_B_inv_2);
  j["norm_B_inv_inf"] = number_or_null(r.norm_B_inv_inf);
  j["norm_B_inv_inf_kind"] = r.inf_norm_estimated ? "estimate" : "exact";
  j["inf_norm_bound"] = number_or_null(r.inf_norm_bound);
  j["f"] = vec_json(r.f);
  return j;
}

Json to_json(const RotationInversionResult& r) {
  Json j;
  j["lhs"] = number_or_null(r.lhs);
  j["rhs_core"] = r.rhs_core;
  j["ratio"] = number_or_null(r.ratio);
  j["rho"] = r.rho;
  j["gap_AAt"] = r.gap_AAt;
  j["overlap1"] = Json::array({r.overlap1.real(), r.overlap1.imag()});
  j["overlap2"] = Json::array({r.overlap2.real(), r.overlap2.imag()});
  j["condition"] = number_or_null(r.condition);
  j["singular"] = r.singular;
  j["counterexample"] = r.counterexample;
  j["alpha_plus"] = Json::array({r.alpha_plus.real(), r.alpha_plus.imag()});
  j["alpha_minus"] = Json::array({r.alpha_minus.real(), r.alpha_minus.imag()});
  j["beta"] = r.beta;
  j["lambda"] = r.lambda;
  j["kappa"] = r.kappa;
  j["regime"] = r.regime;
  return j;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["schema_version"] = r.schema_version;
  j["p"] = r.p;
  j["n"] = r.n;
  j["distribution"] = r.distribution;
  j["seed"] = r.seed;
  j["trials"] = r.trials;
  j["point_mass"] = r.point_mass;
  j["support_upper"] = r.support_upper;
  j["delta_pi"] = r.delta_pi ? Json(*r.delta_pi) : Json(nullptr);

  Json law = Json::array();
  for (const auto& e : r.local_law) {
    law.push_back({{"zeta", format_complex(e.zeta)},
                   {"region", e.bulk ? "bulk" : "outside"},
                   {"scale_entrywise", e.scale_entrywise},
                   {"scale_averaged", e.scale_averaged},
                   {"entrywise_scaled", summary_json(e.entrywise)},
                   {"averaged_scaled", summary_json(e.averaged)},
                   {"pass", e.pass}});
  }
  j["local_law"] = law;

  Json rig = Json::array();
  for (const auto& e : r.rigidity) {
    Json item{{"tau", e.tau}, {"index", e.index}, {"skipped", e.skipped}, {"deviation", summary_json(e.deviation)}};
    item["scaled"] = e.scaled ? summary_json(*e.scaled) : Json(nullptr);
    item["pass"] = e.pass;
    rig.push_back(item);
  }
  j["rigidity"] = rig;

  if (r.kernel_expected) {
    j["kernel"] = {{"expected", *r.kernel_expected}, {"min", r.kernel_min}, {"max", r.kernel_max}, {"ok", r.kernel_ok}};
    j["gap"] = r.gap_window ? Json{{"window", Json::array({r.gap_window->first, r.gap_window->second})},
                                   {"violations", r.gap_violations}}
                            : Json(nullptr);
  }
  j["outliers"] = {{"window", Json::array({r.outlier_window.first, r.outlier_window.second})},
                   {"count", r.outlier_count},
                   {"max_eigenvalue", r.max_eigenvalue},
                   {"ok", r.outliers_ok}};
  j["ks_distance"] = summary_json(r.ks);
  if (r.sigma2)
    j["capacity"] = {{"sigma2", *r.sigma2},
                     {"mc", r.capacity_mc},
                     {"deterministic", r.capacity_det},
                     {"rel_err", r.capacity_rel_err},
                     {"ok", r.capacity_ok}};
  j["all_pass"] = r.all_pass;
  return j;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "dim,seed,lhs,rhs_core,ratio\n";
  for (const auto& r : rows)
    out << r.dim << ',' << r.seed << ',' << format_double(r.lhs) << ',' << format_double(r.rhs_core) << ','
        << format_double(r.ratio) << '\n';
}

void write_report_csv(const VerificationReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "trial,quantity,zeta_or_tau,value\n";
  for (const auto& r : report.rows) out << r.trial << ',' << r.quantity << ',' << r.key << ',' << format_double(r.value) << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_json(const std::string& path, const Json& json) { write_text(path, json.dump(2) + "\n"); }

}  // namespace gramspec
