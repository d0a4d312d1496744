#include <doctest.h>

#include <cmath>
#include <random>

#include "gramspec/harness.hpp"
#include "gramspec/io.hpp"
#include "gramspec/random.hpp"

using namespace gramspec;

namespace {

SampleSpec spec_for(const VarianceProfile& profile, Distribution d, std::uint64_t seed) {
  SampleSpec spec;
  spec.profile = profile;
  spec.distribution = d;
  spec.seed = seed;
  return spec;
}

VarianceProfile small_profile() {
  RowMat s(2, 3);
  s << 0.5, 0.0, 2.0, 1.0, 0.25, 3.0;
  return VarianceProfile(s);
}

}  // namespace

TEST_CASE("distribution names round-trip") {
  for (auto d : {Distribution::gaussian_real, Distribution::gaussian_complex, Distribution::rademacher})
    CHECK(parse_distribution(to_string(d)) == d);
  CHECK_THROWS_AS(parse_distribution("cauchy"), InvalidArgument);
}

TEST_CASE("zero variance entries are exactly zero") {
  for (auto d : {Distribution::gaussian_real, Distribution::gaussian_complex, Distribution::rademacher}) {
    const auto spec = spec_for(small_profile(), d, 3);
    for (int t = 0; t < 20; ++t) CHECK(sample(spec, t)(0, 1) == cplx(0.0));
  }
}

TEST_CASE("Rademacher entries have modulus sqrt(s)") {
  const auto spec = spec_for(small_profile(), Distribution::rademacher, 5);
  const CMat x = sample(spec, 0);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(x(i, k)) == doctest::Approx(std::sqrt(small_profile()(i, k))));
      CHECK(x(i, k).imag() == 0.0);
    }
}

TEST_CASE("empirical second moments match the profile") {
  const auto profile = small_profile();
  for (auto d : {Distribution::gaussian_real, Distribution::gaussian_complex, Distribution::rademacher}) {
    const auto spec = spec_for(profile, d, 7);
    Mat second = Mat::Zero(2, 3);
    CMat first = CMat::Zero(2, 3);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
      const CMat x = sample(spec, t);
      second += x.cwiseAbs2();
      first += x;
    }
    second /= trials;
    first /= trials;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 3; ++k) {
        const double s = profile(i, k);
        CHECK(std::abs(second(i, k) - s) <= 0.05 * s);
        CHECK(std::abs(first(i, k)) <= 0.05 * std::sqrt(s));
      }
  }
}

TEST_CASE("samples depend only on seed and trial") {
  const auto spec = spec_for(VarianceProfile::constant(6, 4, 0.1), Distribution::gaussian_complex, 11);
  CHECK(sample(spec, 3) == sample(spec, 3));
  CHECK(sample(spec, 3) != sample(spec, 4));
  auto other = spec;
  other.seed = 12;
  CHECK(sample(spec, 3) != sample(other, 3));
}

TEST_CASE("random streams and normal source") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  auto engine = make_stream(42, 0);
  NormalSource normal(engine);
  double sum = 0.0, sq = 0.0;
  const int count = 100000;
  for (int j = 0; j < count; ++j) {
    const double x = normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / count) < 0.02);
  CHECK(sq / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("spectrum of trivial matrices") {
  const auto zero = spectrum(CMat::Zero(4, 3));
  CHECK(zero.eigenvalues.size() == 4);
  CHECK(zero.eigenvalues.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.zero_count == 4);

  const auto one = spectrum(CMat::Constant(1, 1, cplx(0.3, 0.4)));
  CHECK(one.eigenvalues(0) == doctest::Approx(0.25));
  CHECK(one.zero_count == 0);
}

TEST_CASE("spectrum pads the smaller Gram matrix with zeros") {
  const auto spec = spec_for(VarianceProfile::constant(7, 3, 0.1), Distribution::gaussian_complex, 13);
  const CMat x = sample(spec, 0);
  const auto s = spectrum(x);
  Eigen::SelfAdjointEigenSolver<CMat> es(x * x.adjoint());
  CHECK(s.eigenvalues.size() == 7);
  CHECK((s.eigenvalues - es.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.zero_count >= 7 - 3);

  const auto wide = spectrum(x.adjoint());
  CHECK(wide.eigenvalues.size() == 3);
  CHECK((wide.eigenvalues - s.eigenvalues.tail(3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(wide.zero_count == 0);
}

TEST_CASE("resolvent identities") {
  const auto spec = spec_for(VarianceProfile::constant(10, 14, 1.0 / 24.0), Distribution::gaussian_real, 17);
  const CMat x = sample(spec, 0);
  const auto dec = decompose(x);
  CHECK(dec.real);
  const cplx zeta(0.8, 0.05);
  const CMat g = resolvent(dec, zeta);
  const CMat h = x * x.adjoint();
  CHECK(((h - zeta * CMat::Identity(10, 10)) * g - CMat::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
  cplx trace = 0.0;
  for (int a = 0; a < 10; ++a) trace += 1.0 / (dec.eigenvalues(a) - zeta);
  CHECK(std::abs(mean(resolvent_diag(dec, zeta)) - trace / 10.0) < 1e-12);
  CHECK((resolvent_diag(dec, zeta) - g.diagonal()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(resolvent_diag(dec, zeta).imag().minCoeff() > 0.0);

  const CMat far = resolvent(dec, cplx(0.0, 10.0));
  CHECK(Eigen::JacobiSVD<CMat>(far).singularValues()(0) <= 0.1 + 1e-12);
  CHECK_THROWS_AS(resolvent(dec, cplx(dec.eigenvalues(3), 0.0)), InvalidArgument);
}

TEST_CASE("nearest-rank summaries") {
  std::vector<double> v;
  for (int j = 20; j >= 1; --j) v.push_back(j);
  const auto s = summarize(v, 0.95);
  CHECK(s.median == 10.0);
  CHECK(s.percentile == 19.0);
  CHECK(s.max == 20.0);
  const auto single = summarize({4.0}, 0.95);
  CHECK(single.median == 4.0);
  CHECK(single.percentile == 4.0);
}

TEST_CASE("capacity and KS helpers") {
  Vec eig(4);
  eig << 0.0, 1.0, 3.0, 7.0;
  CHECK(empirical_capacity(eig, 1.0) == doctest::Approx((std::log(2.0) + std::log(4.0) + std::log(8.0)) / 4.0));
  CHECK(empirical_capacity(eig, 1e12) < 1e-11);

  DensityCurve atom;
  atom.grid = linear_grid(0.01, 1.0, 100);
  atom.values.assign(100, 0.0);
  atom.point_mass = 1.0;
  CHECK(ks_distance(Vec::Zero(5), atom) == 0.0);
  CHECK(expected_index(atom, 0.5, 5) == 5);
}

TEST_CASE("empirical spectrum approaches the deterministic measure") {
  DensityOptions opts;
  opts.threads = 1;
  const auto curve = density(VarianceProfile::constant(20, 20, 1.0 / 40.0), linear_grid(0.0025, 2.5, 1000), opts);
  auto median_ks = [&](int p) {
    const auto spec = spec_for(VarianceProfile::constant(p, p, 1.0 / (2.0 * p)), Distribution::gaussian_real, 19);
    std::vector<double> ks;
    for (int t = 0; t < 3; ++t) ks.push_back(ks_distance(spectrum(sample(spec, t)).eigenvalues, curve));
    return summarize(ks, 0.5).median;
  };
  const double small = median_ks(50), large = median_ks(400);
  CHECK(large < small);
  CHECK(large < 0.05);
}

TEST_CASE("largest eigenvalue of a flat profile stays bounded") {
  const int p = 200;
  const auto spec = spec_for(VarianceProfile::constant(p, p, 1.0 / (2.0 * p)), Distribution::rademacher, 23);
  const auto s = spectrum(sample(spec, 0));
  CHECK(s.eigenvalues.maxCoeff() <= 5.0);
  CHECK(s.eigenvalues.minCoeff() >= -1e-12);
}

TEST_CASE("verification report is independent of the thread count") {
  VerifyConfig config;
  config.sample = spec_for(VarianceProfile::constant(40, 40, 1.0 / 80.0), Distribution::gaussian_real, 29);
  config.sample.trials = 4;
  config.density_points = 300;
  config.threads = 1;
  const auto one = verify(config);
  config.threads = 2;
  const auto two = verify(config);
  CHECK(to_json(one).dump() == to_json(two).dump());
  CHECK(one.trials == 4);
  CHECK(one.local_law.size() == 2);
  CHECK(one.kernel_expected == 0);
  CHECK(one.capacity_det > 0.0);
}

TEST_CASE("averaged law with w = 1 matches the trace") {
  const int p = 60;
  VerifyConfig config;
  config.sample = spec_for(VarianceProfile::constant(p, p, 1.0 / (2.0 * p)), Distribution::gaussian_complex, 31);
  config.sample.trials = 1;
  config.density_points = 300;
  config.check_rigidity = config.check_kernel_gap = config.check_outliers = config.check_capacity = false;
  const auto report = verify_local_law(config);
  REQUIRE_FALSE(report.local_law.empty());
  const auto& entry = report.local_law[0];
  const cplx zeta = entry.zeta;
  const auto dec = decompose(sample(config.sample, 0));
  const cplx m = solve_gram_at(config.sample.profile, zeta).mean_m();
  const double oracle = std::abs(mean(resolvent_diag(dec, zeta)) - m);
  bool found = false;
  for (const auto& row : report.rows)
    if (!found && row.quantity == "averaged_err_ones") {
      CHECK(row.value == doctest::Approx(oracle).epsilon(1e-9));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("kernel of a tall matrix has at least p - n zeros") {
  const auto spec = spec_for(VarianceProfile::constant(30, 12, 1.0 / 42.0), Distribution::gaussian_real, 37);
  for (int t = 0; t < 5; ++t) CHECK(spectrum(sample(spec, t)).zero_count >= 18);
}
