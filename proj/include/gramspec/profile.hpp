#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gramspec/common.hpp"

namespace gramspec {

/// Matrix S = (s_ik) of entry variances of a p x n random matrix X.
///
/// Storage is dense, row-major and immutable; copies share the same buffer, so
/// passing profiles by value is cheap.
class VarianceProfile {
 public:
  /// Throws InvalidArgument on empty shapes, non-finite or negative entries.
  explicit VarianceProfile(RowMat s);
  VarianceProfile(int p, int n, const std::vector<double>& row_major);

  /// s_ik = value for all entries.
  static VarianceProfile constant(int p, int n, double value);

  int p() const noexcept { return static_cast<int>(s_->rows()); }
  int n() const noexcept { return static_cast<int>(s_->cols()); }
  int dim() const noexcept { return p() + n(); }
  const RowMat& s() const noexcept { return *s_; }
  double operator()(int i, int k) const { return (*s_)(i, k); }

  /// Flatness constant (p+n) max s_ik.
  double s_star() const;

  /// Profile of X^*, i.e. S^t.
  VarianceProfile transposed() const;

 private:
  std::shared_ptr<const RowMat> s_;
};

/// Block structure used by the block fully indecomposable condition: a partition
/// of {0..p-1} into K equal cells and a K x K 0/1 pattern Z with floor phi.
struct BlockStructure {
  std::vector<std::vector<int>> partition;
  Eigen::MatrixXi z;
  double phi = 0.0;
};

struct Primitivity {
  int l1 = 0;
  int l2 = 0;
  double psi1 = 0.0;
  double psi2 = 0.0;
};

struct BlockFid {
  int k = 0;
  double phi = 0.0;
  bool partition_valid = false;
};

struct ValidationOptions {
  int max_l = 8;
  double r1 = 0.1;
  double r2 = 10.0;
  /// Minimal |p/n - 1| for the profile to count as properly rectangular.
  double d_star_min = 0.1;
  std::optional<BlockStructure> blocks;
};

/// Outcome of checking the structural assumptions on S. Every optional field is
/// engaged only when the corresponding check passed.
struct AssumptionReport {
  double s_star = 0.0;
  double aspect_ratio = 0.0;  // p/n
  bool comparable = false;    // r1 <= p/n <= r2
  std::optional<Primitivity> primitivity;
  std::optional<BlockFid> block_fid;
  std::optional<double> rectangularity;  // d* = |p/n - 1|
  std::optional<double> lower_bound;     // phi = (p+n) min s_ik
};

AssumptionReport validate(const VarianceProfile& profile, const ValidationOptions& options = {});

/// True iff the nonnegative square pattern z has no zero I x J submatrix with
/// nonempty I, J and #I + #J >= K.
bool is_fully_indecomposable(const Eigen::MatrixXi& z);

/// Block fully indecomposable check for a square profile. Throws InvalidArgument
/// when p != n, K does not divide p, or the cells are not an equal partition.
bool check_block_fid(const VarianceProfile& profile, const std::vector<std::vector<int>>& partition,
                     const Eigen::MatrixXi& z, double phi);

/// Contiguous partition of {0..p-1} into k cells of size p/k.
std::vector<std::vector<int>> contiguous_partition(int p, int k);

/// The (p+n) x (p+n) matrix [[0, S], [S^t, 0]] applied blockwise without
/// materializing the zero blocks.
class SymmetrizedProfile {
 public:
  explicit SymmetrizedProfile(VarianceProfile profile) : profile_(std::move(profile)) {}

  const VarianceProfile& profile() const noexcept { return profile_; }
  int p() const noexcept { return profile_.p(); }
  int n() const noexcept { return profile_.n(); }
  int dim() const noexcept { return profile_.dim(); }

  /// v = (v1, v2) -> (S v2, S^t v1).
  Vec apply(const Eigen::Ref<const Vec>& v) const;
  CVec apply(const Eigen::Ref<const CVec>& v) const;

  Mat dense() const;

  /// ||.||_{inf -> inf}: the largest absolute row sum.
  double inf_norm() const;

 private:
  VarianceProfile profile_;
};

inline SymmetrizedProfile symmetrize(const VarianceProfile& profile) { return SymmetrizedProfile(profile); }

}  // namespace gramspec
