#include "gramspec/profile.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace gramspec {

VarianceProfile::VarianceProfile(RowMat s) {
  if (s.rows() == 0 || s.cols() == 0) throw InvalidArgument("variance profile must have positive dimensions");
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      const double v = s(i, k);
      if (!std::isfinite(v)) throw InvalidArgument("variance profile has a non-finite entry");
      if (v < 0.0) throw InvalidArgument("variance profile has a negative entry");
    }
  }
  s_ = std::make_shared<const RowMat>(std::move(s));
}

VarianceProfile::VarianceProfile(int p, int n, const std::vector<double>& row_major)
    : VarianceProfile([&] {
        if (p <= 0 || n <= 0) throw InvalidArgument("variance profile must have positive dimensions");
        if (row_major.size() != static_cast<std::size_t>(p) * static_cast<std::size_t>(n))
          throw InvalidArgument("variance profile: expected p*n entries, got " + std::to_string(row_major.size()));
        return RowMat(Eigen::Map<const RowMat>(row_major.data(), p, n));
      }()) {}

VarianceProfile VarianceProfile::constant(int p, int n, double value) {
  if (p <= 0 || n <= 0) throw InvalidArgument("variance profile must have positive dimensions");
  return VarianceProfile(RowMat::Constant(p, n, value));
}

double VarianceProfile::s_star() const { return static_cast<double>(dim()) * s_->maxCoeff(); }

VarianceProfile VarianceProfile::transposed() const { return VarianceProfile(RowMat(s_->transpose())); }

namespace {

// Smallest L <= max_l with min entry of T^L strictly positive; psi = dim * that minimum.
std::optional<std::pair<int, double>> first_positive_power(const Mat& t, int max_l, int dim) {
  Mat power = t;
  for (int l = 1; l <= max_l; ++l) {
    if (l > 1) power = power * t;
    const double lo = power.minCoeff();
    if (lo > 0.0) return std::make_pair(l, lo * static_cast<double>(dim));
  }
  return std::nullopt;
}

}  // namespace

AssumptionReport validate(const VarianceProfile& profile, const ValidationOptions& options) {
  if (options.max_l < 1) throw InvalidArgument("validate: max_l must be positive");
  const auto& s = profile.s();
  const int p = profile.p();
  const int n = profile.n();
  const int dim = profile.dim();

  AssumptionReport report;
  report.s_star = profile.s_star();
  report.aspect_ratio = static_cast<double>(p) / static_cast<double>(n);
  report.comparable = options.r1 <= report.aspect_ratio && report.aspect_ratio <= options.r2;

  const Mat sst = s * s.transpose();
  const Mat sts = s.transpose() * s;
  const auto rows = first_positive_power(sst, options.max_l, dim);
  const auto cols = first_positive_power(sts, options.max_l, dim);
  if (rows && cols) report.primitivity = Primitivity{rows->first, cols->first, rows->second, cols->second};

  if (options.blocks) {
    const auto& b = *options.blocks;
    if (check_block_fid(profile, b.partition, b.z, b.phi))
      report.block_fid = BlockFid{static_cast<int>(b.z.rows()), b.phi, true};
  }

  const double d = std::abs(report.aspect_ratio - 1.0);
  if (d >= options.d_star_min) report.rectangularity = d;

  const double lo = s.minCoeff();
  if (lo > 0.0) report.lower_bound = lo * static_cast<double>(dim);
  return report;
}

bool is_fully_indecomposable(const Eigen::MatrixXi& z) {
  const int k = static_cast<int>(z.rows());
  if (k == 0 || z.cols() != k) throw InvalidArgument("fully indecomposable check needs a nonempty square pattern");
  if (k > 24) throw InvalidArgument("fully indecomposable check enumerates subsets; K must be <= 24");
  // For each nonempty row set I, the largest column set J with z(I, J) == 0 is the
  // set of columns vanishing on all of I.
  const unsigned full = (1u << k) - 1u;
  std::vector<unsigned> zero_cols(k);
  for (int i = 0; i < k; ++i) {
    unsigned mask = 0;
    for (int j = 0; j < k; ++j)
      if (z(i, j) == 0) mask |= 1u << j;
    zero_cols[i] = mask;
  }
  for (unsigned rows = 1; rows <= full; ++rows) {
    unsigned cols = full;
    for (int i = 0; i < k; ++i)
      if (rows & (1u << i)) cols &= zero_cols[i];
    if (cols == 0) continue;
    if (std::popcount(rows) + std::popcount(cols) >= k) return false;
  }
  return true;
}

std::vector<std::vector<int>> contiguous_partition(int p, int k) {
  if (k <= 0 || p % k != 0) throw InvalidArgument("contiguous_partition: K must divide p");
  std::vector<std::vector<int>> cells(k);
  const int size = p / k;
  for (int c = 0; c < k; ++c) {
    cells[c].resize(size);
    std::iota(cells[c].begin(), cells[c].end(), c * size);
  }
  return cells;
}

bool check_block_fid(const VarianceProfile& profile, const std::vector<std::vector<int>>& partition,
                     const Eigen::MatrixXi& z, double phi) {
  const int p = profile.p();
  if (profile.n() != p) throw InvalidArgument("block FID requires a square profile");
  const int k = static_cast<int>(partition.size());
  if (k == 0 || z.rows() != k || z.cols() != k) throw InvalidArgument("block FID: Z must be K x K with K cells");
  if (p % k != 0) throw InvalidArgument("block FID: K does not divide p");
  const std::size_t size = static_cast<std::size_t>(p / k);
  std::vector<int> cell_of(p, -1);
  for (int c = 0; c < k; ++c) {
    if (partition[c].size() != size) throw InvalidArgument("block FID: partition cells must all have size p/K");
    for (int x : partition[c]) {
      if (x < 0 || x >= p || cell_of[x] != -1) throw InvalidArgument("block FID: cells must partition {0..p-1}");
      cell_of[x] = c;
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (z(i, j) != 0 && z(i, j) != 1) throw InvalidArgument("block FID: Z must be a 0/1 matrix");

  if (!is_fully_indecomposable(z)) return false;
  const double floor = phi / static_cast<double>(profile.dim());
  const auto& s = profile.s();
  for (int x = 0; x < p; ++x)
    for (int y = 0; y < p; ++y)
      if (s(x, y) < floor * z(cell_of[x], cell_of[y])) return false;
  return true;
}

Vec SymmetrizedProfile::apply(const Eigen::Ref<const Vec>& v) const {
  if (v.size() != dim()) throw InvalidArgument("SymmetrizedProfile::apply: dimension mismatch");
  const auto& s = profile_.s();
  Vec out(dim());
  out.head(p()).noalias() = s * v.tail(n());
  out.tail(n()).noalias() = s.transpose() * v.head(p());
  return out;
}

CVec SymmetrizedProfile::apply(const Eigen::Ref<const CVec>& v) const {
  if (v.size() != dim()) throw InvalidArgument("SymmetrizedProfile::apply: dimension mismatch");
  // Interleaved (re, im) storage viewed as a k x 2 real matrix turns the mixed
  // real-complex product into a real GEMM.
  using Pairs = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
  using InStride = Eigen::OuterStride<>;
  const auto& s = profile_.s();
  const Eigen::Index stride = 2 * v.innerStride();
  Eigen::Map<const Pairs, 0, InStride> in1(reinterpret_cast<const double*>(v.data()), p(), 2, InStride(stride));
  Eigen::Map<const Pairs, 0, InStride> in2(reinterpret_cast<const double*>(v.data() + p() * v.innerStride()), n(),
                                           2, InStride(stride));
  CVec out(dim());
  Eigen::Map<Pairs> out1(reinterpret_cast<double*>(out.data()), p(), 2);
  Eigen::Map<Pairs> out2(reinterpret_cast<double*>(out.data() + p()), n(), 2);
  out1.noalias() = s * in2;
  out2.noalias() = s.transpose() * in1;
  return out;
}

Mat SymmetrizedProfile::dense() const {
  Mat out = Mat::Zero(dim(), dim());
  out.topRightCorner(p(), n()) = profile_.s();
  out.bottomLeftCorner(n(), p()) = profile_.s().transpose();
  return out;
}

double SymmetrizedProfile::inf_norm() const {
  const auto& s = profile_.s();
  return std::max(s.rowwise().sum().maxCoeff(), s.colwise().sum().maxCoeff());
}

}  // namespace gramspec
