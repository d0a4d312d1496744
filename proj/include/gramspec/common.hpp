#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gramspec {

using cplx = std::complex<double>;

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad input: shapes, ranges, violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method or a decomposition did not deliver the requested accuracy.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double best_residual = -1.0)
      : std::runtime_error(what), best_residual_(best_residual) {}

  /// Smallest residual reached before giving up, or -1 when not applicable.
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Average <w> = l^-1 sum w_i.
template <typename Derived>
auto mean(const Eigen::MatrixBase<Derived>& w) {
  return w.sum() / static_cast<double>(w.size());
}

}  // namespace gramspec
