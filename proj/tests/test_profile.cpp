#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gramspec/profile.hpp"

using namespace gramspec;

namespace {

VarianceProfile random_profile(int p, int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  RowMat s(p, n);
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < n; ++k) s(i, k) = u(gen) / (p + n);
  return VarianceProfile(s);
}

}  // namespace

TEST_CASE("constant 4x4 profile: flatness and first-power primitivity") {
  const auto profile = VarianceProfile::constant(4, 4, 1.0 / 8.0);
  const auto report = validate(profile);
  CHECK(report.s_star == doctest::Approx(1.0));
  REQUIRE(report.primitivity);
  CHECK(report.primitivity->l1 == 1);
  CHECK(report.primitivity->l2 == 1);
  // (S S^t)_ij = 4/64, times p + n = 8.
  CHECK(report.primitivity->psi1 == doctest::Approx(0.5));
  CHECK(report.primitivity->psi2 == doctest::Approx(0.5));
  CHECK(report.comparable);
  CHECK(report.lower_bound);
  CHECK_FALSE(report.rectangularity);
}

TEST_CASE("zero row rules out primitivity at every power") {
  RowMat s = RowMat::Constant(4, 4, 0.125);
  s.row(2).setZero();
  const auto report = validate(VarianceProfile(s), ValidationOptions{.max_l = 8});
  CHECK_FALSE(report.primitivity);
  CHECK_FALSE(report.lower_bound);
}

TEST_CASE("primitivity search is monotone in max_L") {
  // Block-cyclic support needs a second power before S S^t is positive.
  RowMat s = RowMat::Zero(4, 4);
  s(0, 0) = s(0, 1) = s(1, 1) = s(1, 2) = s(2, 2) = s(2, 3) = s(3, 3) = s(3, 0) = 0.25;
  const VarianceProfile profile(s);
  std::optional<Primitivity> first;
  for (int max_l = 1; max_l <= 6; ++max_l) {
    const auto r = validate(profile, ValidationOptions{.max_l = max_l});
    if (first) {
      REQUIRE(r.primitivity);
      CHECK(r.primitivity->l1 == first->l1);
      CHECK(r.primitivity->l2 == first->l2);
    } else if (r.primitivity) {
      first = r.primitivity;
    }
  }
  REQUIRE(first);
  CHECK(first->l1 >= 2);
}

TEST_CASE("rectangularity reported for p = 2n") {
  const auto report = validate(VarianceProfile::constant(8, 4, 1.0 / 12.0));
  REQUIRE(report.rectangularity);
  CHECK(*report.rectangularity == doctest::Approx(1.0));
  CHECK(report.aspect_ratio == doctest::Approx(2.0));
}

TEST_CASE("fully indecomposable patterns") {
  CHECK_FALSE(is_fully_indecomposable(Eigen::MatrixXi::Identity(2, 2)));
  CHECK(is_fully_indecomposable(Eigen::MatrixXi::Ones(3, 3)));
  Eigen::MatrixXi tri(2, 2);
  tri << 1, 1, 1, 0;
  // The 1x1 zero block at (2,2) has #I + #J = 2 >= K.
  CHECK_FALSE(is_fully_indecomposable(tri));
  Eigen::MatrixXi cyclic(3, 3);
  cyclic << 1, 1, 0, 0, 1, 1, 1, 0, 1;
  CHECK(is_fully_indecomposable(cyclic));
}

TEST_CASE("block FID with all-ones and identity patterns") {
  const auto profile = VarianceProfile::constant(4, 4, 0.125);
  const auto cells = contiguous_partition(4, 2);
  CHECK(check_block_fid(profile, cells, Eigen::MatrixXi::Ones(2, 2), 0.5));
  CHECK_FALSE(check_block_fid(profile, cells, Eigen::MatrixXi::Identity(2, 2), 0.5));
  // phi too large for the block entries 1/8 * 8 = 1.
  CHECK_FALSE(check_block_fid(profile, cells, Eigen::MatrixXi::Ones(2, 2), 2.0));
  CHECK_THROWS_AS(check_block_fid(profile, contiguous_partition(4, 4), Eigen::MatrixXi::Ones(2, 2), 0.5),
                  InvalidArgument);
  CHECK_THROWS_AS(contiguous_partition(4, 3), InvalidArgument);
}

TEST_CASE("validate reports block FID when a structure is supplied") {
  const auto profile = VarianceProfile::constant(4, 4, 0.125);
  ValidationOptions opts;
  opts.blocks = BlockStructure{contiguous_partition(4, 2), Eigen::MatrixXi::Ones(2, 2), 0.5};
  const auto report = validate(profile, opts);
  REQUIRE(report.block_fid);
  CHECK(report.block_fid->k == 2);
  CHECK(report.block_fid->partition_valid);
}

TEST_CASE("profile construction rejects bad entries") {
  CHECK_THROWS_AS(VarianceProfile(2, 2, {1.0, 2.0, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(VarianceProfile(1, 2, {1.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(VarianceProfile(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
  CHECK_THROWS_AS(VarianceProfile::constant(0, 2, 1.0), InvalidArgument);
}

TEST_CASE("symmetrized profile on small cases") {
  const SymmetrizedProfile one(VarianceProfile::constant(1, 1, 0.7));
  Mat expected(2, 2);
  expected << 0.0, 0.7, 0.7, 0.0;
  CHECK((one.dense() - expected).cwiseAbs().maxCoeff() == 0.0);

  const SymmetrizedProfile two(VarianceProfile::constant(2, 2, 0.25));
  const Vec ones = Vec::Ones(4);
  CHECK((two.apply(ones) - Vec::Constant(4, 0.5)).cwiseAbs().maxCoeff() < 1e-15);

  const auto profile = random_profile(3, 5, 11);
  const SymmetrizedProfile sym(profile);
  Vec v = Vec::Zero(8);
  v.head(3) << 1.0, -2.0, 0.5;
  const Vec out = sym.apply(v);
  CHECK(out.head(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.tail(5) - Mat(profile.s()).transpose() * v.head(3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("symmetrized profile agrees with explicit construction up to 8x8") {
  unsigned seed = 1;
  for (int p = 1; p <= 8; ++p) {
    for (int n = 1; n <= 8; ++n) {
      const auto profile = random_profile(p, n, seed++);
      const SymmetrizedProfile sym(profile);
      Mat dense = Mat::Zero(p + n, p + n);
      for (int i = 0; i < p; ++i)
        for (int k = 0; k < n; ++k) dense(i, p + k) = dense(p + k, i) = profile(i, k);
      CHECK((sym.dense() - dense).cwiseAbs().maxCoeff() == 0.0);
      const Vec v = Vec::LinSpaced(p + n, -1.0, 2.0);
      CHECK((sym.apply(v) - dense * v).cwiseAbs().maxCoeff() < 1e-14);
      CVec c = v.cast<cplx>() * cplx(0.3, -1.1);
      CHECK((sym.apply(c) - dense.cast<cplx>() * c).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(sym.inf_norm() <= profile.s_star() + 1e-14);
    }
  }
}
