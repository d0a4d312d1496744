#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "gramspec/cli.hpp"
#include "gramspec/defaults.hpp"
#include "gramspec/io.hpp"

using namespace gramspec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gramspec_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

double value_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + " ");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("complex and grid parsing") {
  CHECK(parse_complex("0.5+0.1i") == cplx(0.5, 0.1));
  CHECK(parse_complex("-1-2i") == cplx(-1.0, -2.0));
  CHECK(parse_complex("3i") == cplx(0.0, 3.0));
  CHECK(parse_complex("2") == cplx(2.0, 0.0));
  CHECK(parse_complex("1e-3+2e-2i") == cplx(1e-3, 2e-2));
  CHECK_THROWS_AS(parse_complex("abc"), InvalidArgument);
  CHECK(parse_complex(format_complex(cplx(0.1, -1.0 / 3.0))) == cplx(0.1, -1.0 / 3.0));

  const auto g = parse_grid("0.5:1.5:3");
  REQUIRE(g.size() == 3);
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_grid("1:2"), InvalidArgument);
  CHECK(parse_list("1,2.5,1e9") == std::vector<double>{1.0, 2.5, 1e9});
}

TEST_CASE("doubles print with round-trip precision") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("density CSV round-trips exactly") {
  DensityCurve curve;
  curve.grid = {0.1, 0.2, 1.0 / 3.0};
  curve.values = {0.0, std::sqrt(2.0), 1e-17};
  const auto path = scratch("density.csv").string();
  write_density_csv(curve, path);
  CHECK(slurp(path).rfind("omega,pi\n", 0) == 0);
  const auto back = read_density_csv(path);
  CHECK(back.grid == curve.grid);
  CHECK(back.values == curve.values);
}

TEST_CASE("profile loading from CSV and JSON") {
  const auto profile = VarianceProfile(2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0});
  const auto csv = scratch("profile.csv").string();
  save_profile_csv(profile, csv);
  CHECK(load_profile(csv).s() == profile.s());

  const auto json = scratch("profile.json").string();
  write_text(json, R"({"p": 2, "n": 2, "entries": [0.1, 0.2, 0.3, 0.4]})");
  const auto a = load_profile(json);
  CHECK(a.p() == 2);
  CHECK(a(1, 0) == 0.3);
  write_text(json, R"({"s": [[0.1, 0.2], [0.3, 0.4]]})");
  CHECK(load_profile(json).s() == a.s());

  write_text(csv, "0.1,-0.2\n0.3,0.4\n");
  CHECK_THROWS_AS(load_profile(csv), InvalidArgument);
  write_text(csv, "0.1,nan\n0.3,0.4\n");
  CHECK_THROWS_AS(load_profile(csv), InvalidArgument);
  write_text(csv, "0.1,0.2\n0.3\n");
  CHECK_THROWS_AS(load_profile(csv), InvalidArgument);
  CHECK_THROWS_AS(load_profile(scratch("missing.csv").string()), InvalidArgument);
}

TEST_CASE("demo profiles") {
  const auto sq = demo_profile("uniform-square", 10);
  CHECK(sq.n() == 10);
  CHECK(sq(3, 4) == doctest::Approx(0.05));
  const auto rect = demo_profile("uniform-rect", 10);
  CHECK(rect.n() == 5);
  CHECK(rect(0, 0) == doctest::Approx(1.0 / 15.0));
  CHECK_THROWS_AS(demo_profile("nope", 10), InvalidArgument);
}

TEST_CASE("cli rejects bad usage") {
  CHECK(run({}).code == exit_usage);
  CHECK(run({"frobnicate"}).code == exit_usage);
  CHECK(run({"density", "--profile", scratch("does_not_exist.csv").string()}).code == exit_usage);
  CHECK(run({"stability", "--demo", "uniform-square", "--p", "10", "--z", "0.5-0.1i", "--out",
             scratch("bad_z").string()})
            .code == exit_usage);
  CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("cli stability inside the bulk") {
  const auto prefix = scratch("stab").string();
  const auto r = run({"stability", "--demo", "uniform-square", "--p", "40", "--z", "0.5+0.1i", "--out", prefix});
  REQUIRE(r.code == exit_ok);
  CHECK(value_after(r.out, "norm_F") < 1.0);
  CHECK(value_after(r.out, "identity_error") < 1e-8);
  const auto j = Json::parse(slurp(prefix + ".json"));
  CHECK(j["norm_F"].get<double>() == value_after(r.out, "norm_F"));
}

TEST_CASE("cli capacity at large noise variance") {
  const auto r = run({"capacity", "--demo", "uniform-square", "--p", "20", "--sigma2", "1,1e9", "--grid",
                      "0.005:2.5:500", "--out", scratch("cap").string()});
  REQUIRE(r.code == exit_ok);
  const auto pos = r.out.find("sigma2 1000000000 ");
  REQUIRE(pos != std::string::npos);
  CHECK(value_after(r.out.substr(pos + 18), "capacity") < 1e-8);
}

TEST_CASE("cli density and zero on the demo profiles") {
  const auto dprefix = scratch("dens").string();
  const auto d = run({"density", "--demo", "uniform-rect", "--p", "40", "--grid", "0.01:2:200", "--out", dprefix});
  REQUIRE(d.code == exit_ok);
  CHECK(value_after(d.out, "point_mass") == doctest::Approx(0.5));
  CHECK(read_density_csv(dprefix + ".csv").grid.size() == 200);
  const auto manifest = Json::parse(slurp(dprefix + ".manifest.json"));
  for (const auto& e : defaults_table()) CHECK(manifest["defaults"].contains(e.name));
  CHECK(manifest["profile_shape"][0] == 40);
  CHECK(manifest["profile_shape"][1] == 20);

  const auto z = run({"zero", "--demo", "uniform-square", "--p", "20", "--out", scratch("zero").string()});
  REQUIRE(z.code == exit_ok);
  CHECK(z.out.find("kind hard") != std::string::npos);
  CHECK(value_after(z.out, "singular_coefficient") == doctest::Approx(std::sqrt(2.0) / std::numbers::pi).epsilon(1e-8));
}

TEST_CASE("cli verify is bitwise reproducible") {
  const std::vector<std::string> base{"verify", "--demo", "uniform-square", "--p", "40", "--trials", "2",
                                      "--seed", "7", "--density-points", "300"};
  auto with_out = [&](const std::string& name) {
    auto args = base;
    args.push_back("--out");
    args.push_back(scratch(name).string());
    return run(args);
  };
  const auto a = with_out("verify_a");
  const auto b = with_out("verify_b");
  CHECK(a.code == b.code);
  CHECK(a.out.substr(0, a.out.find("wrote")) == b.out.substr(0, b.out.find("wrote")));
  CHECK(slurp(scratch("verify_a.json")) == slurp(scratch("verify_b.json")));
  CHECK(slurp(scratch("verify_a.csv")) == slurp(scratch("verify_b.csv")));
  CHECK(slurp(scratch("verify_a.csv")).rfind("trial,quantity,zeta_or_tau,value\n", 0) == 0);
}

TEST_CASE("cli sweep writes one row per instance") {
  const auto prefix = scratch("sweep").string();
  const auto r = run({"ri-sweep", "--instances", "50", "--dims", "2,3", "--seed", "5", "--out", prefix});
  CHECK(r.code == exit_ok);
  CHECK(value_after(r.out, "counterexamples") == 0.0);
  const auto text = slurp(prefix + ".csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 51);
}

TEST_CASE("defaults table renders every entry") {
  const auto md = defaults_markdown();
  for (const auto& e : defaults_table()) CHECK(md.find(e.name) != std::string::npos);
  CHECK(defaults_json().size() == defaults_table().size());
}
