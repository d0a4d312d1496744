#include "gramspec/stability.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "gramspec/parallel.hpp"
#include "gramspec/random.hpp"

namespace gramspec {

SaturatedOperator::SaturatedOperator(const SymmetrizedProfile& sym, const QveSolution& solution)
    : m_(solution.m_sym), z_(solution.z), qve_residual_(solution.residual_inf) {
  if (solution.m_sym.size() != sym.dim()) throw InvalidArgument("build_F: solution does not match the profile");
  if (z_.imag() <= 0.0) throw InvalidArgument("build_F: Im z must be positive");
  const int p = sym.p();
  const Vec r1 = m_.head(p).cwiseAbs();
  const Vec r2 = m_.tail(sym.n()).cwiseAbs();
  block_ = r1.asDiagonal() * Mat(sym.profile().s()) * r2.asDiagonal();
}

Vec SaturatedOperator::apply(const Eigen::Ref<const Vec>& v) const {
  if (v.size() != dim()) throw InvalidArgument("SaturatedOperator::apply: dimension mismatch");
  Vec out(dim());
  out.head(p()).noalias() = block_ * v.tail(n());
  out.tail(n()).noalias() = block_.transpose() * v.head(p());
  return out;
}

Mat SaturatedOperator::dense() const {
  Mat out = Mat::Zero(dim(), dim());
  out.topRightCorner(p(), n()) = block_;
  out.bottomLeftCorner(n(), p()) = block_.transpose();
  return out;
}

Vec PerronPair::f_minus(int p) const {
  Vec out = f;
  out.tail(f.size() - p) *= -1.0;
  return out;
}

namespace {

struct TopEigen {
  double value = 0.0;
  Vec vector;
  int iterations = 0;
  bool converged = false;
};

// Power iteration for the top eigenpair of the PSD matrix G = F F^t, applied as F (F^t x).
TopEigen power_top(const Mat& f, const PerronOptions& options) {
  const Eigen::Index p = f.rows();
  TopEigen out;
  Vec x = Vec::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double previous = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Vec y = f * (f.transpose() * x);
    const double rq = x.dot(y);
    const double norm = y.norm();
    if (!(norm > 0.0)) break;
    const double res = (y - rq * x).norm();
    x = y / norm;
    out.iterations = it;
    if (std::abs(rq - previous) <= options.tol * rq && res <= 1e-10 * rq) {
      out.value = rq;
      out.vector = x;
      out.converged = true;
      return out;
    }
    previous = rq;
  }
  return out;
}

}  // namespace

PerronPair perron(const SaturatedOperator& opr, const PerronOptions& options) {
  const Mat& f = opr.block();
  TopEigen top = power_top(f, options);
  if (!top.converged) {
    if (opr.p() > 2000) throw NumericalFailure("perron: power iteration did not converge");
    Eigen::SelfAdjointEigenSolver<Mat> eig(f * f.transpose());
    if (eig.info() != Eigen::Success) throw NumericalFailure("perron: eigensolver failed");
    top.value = eig.eigenvalues()(opr.p() - 1);
    top.vector = eig.eigenvectors().col(opr.p() - 1);
    if (top.vector.sum() < 0.0) top.vector = -top.vector;
  }
  PerronPair out;
  out.iterations = top.iterations;
  out.norm_F = std::sqrt(top.value);
  if (!(out.norm_F > 0.0)) throw NumericalFailure("perron: F vanishes");
  out.f.resize(opr.dim());
  out.f.head(opr.p()) = top.vector.cwiseAbs();
  out.f.tail(opr.n()) = f.transpose() * out.f.head(opr.p()) / out.norm_F;
  out.f /= out.f.norm();

  const Vec abs_m = opr.m().cwiseAbs();
  const Vec ratio = opr.m().imag().cwiseQuotient(abs_m);
  out.identity_value = 1.0 - opr.z().imag() * out.f.dot(abs_m) / out.f.dot(ratio);
  out.identity_error = std::abs(out.identity_value - out.norm_F);
  if (options.check_identity && out.identity_error > options.identity_tol)
    throw NumericalFailure("perron: norm identity violated; the QVE solution is inaccurate", out.identity_error);
  return out;
}

double spectral_gap(const SaturatedOperator& opr, double degeneracy_tol) {
  // F F^t and F^t F share their nonzero spectrum; work on the smaller side and
  // treat a single eigenvalue as having 0 below it.
  const Mat& f = opr.block();
  const bool rows = opr.p() <= opr.n();
  const Eigen::Index k = rows ? opr.p() : opr.n();
  double l1 = 0.0;
  double l2 = 0.0;
  if (k <= 2000) {
    const Mat g = rows ? Mat(f * f.transpose()) : Mat(f.transpose() * f);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalFailure("spectral_gap: eigensolver failed");
    l1 = eig.eigenvalues()(k - 1);
    l2 = k > 1 ? std::max(eig.eigenvalues()(k - 2), 0.0) : 0.0;
  } else {
    const Mat g = rows ? Mat(f) : Mat(f.transpose());
    PerronOptions po;
    const TopEigen top = power_top(g, po);
    if (!top.converged) throw NumericalFailure("spectral_gap: power iteration did not converge");
    l1 = top.value;
    Vec x = Vec::Ones(k) - top.vector * top.vector.sum();
    x.normalize();
    double previous = 0.0;
    for (int it = 0; it < po.max_iterations; ++it) {
      Vec y = g * (g.transpose() * x);
      y -= top.vector * top.vector.dot(y);
      const double rq = x.dot(y);
      const double norm = y.norm();
      if (!(norm > 0.0)) {
        previous = 0.0;
        break;
      }
      x = y / norm;
      if (std::abs(rq - previous) <= po.tol * std::max(rq, 1e-300)) {
        previous = rq;
        break;
      }
      previous = rq;
    }
    l2 = previous;
  }
  const double gap = l1 - l2;
  return gap <= degeneracy_tol * l1 ? 0.0 : gap;
}

StabilityReport build_B_and_invert(const SaturatedOperator& opr, const StabilityOptions& options) {
  StabilityReport out;
  out.z = opr.z();
  out.qve_residual = opr.qve_residual();
  const PerronPair pair = perron(opr, options.perron);
  out.norm_F = pair.norm_F;
  out.f = pair.f;
  out.identity_error = pair.identity_error;
  const Vec fm = pair.f_minus(opr.p());
  out.antisymmetry_residual = (opr.apply(fm) + pair.norm_F * fm).norm();
  out.gap_FFt = spectral_gap(opr);

  const int dim = opr.dim();
  const CVec& m = opr.m();
  CMat b = -opr.dense().cast<cplx>();
  for (int x = 0; x < dim; ++x) b(x, x) += std::norm(m(x)) / (m(x) * m(x));

  Eigen::PartialPivLU<CMat> lu(b);
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  if (dim <= 1200) {
    Eigen::BDCSVD<CMat> svd(b);
    const auto& sv = svd.singularValues();
    sigma_max = sv(0);
    sigma_min = sv(dim - 1);
  } else {
    // Inverse iteration on B^* B.
    sigma_max = 1.0 + pair.norm_F;
    CVec x = CVec::Ones(dim) / std::sqrt(static_cast<double>(dim));
    double previous = 0.0;
    for (int it = 0; it < 500; ++it) {
      CVec y = lu.solve(x);
      y = lu.adjoint().solve(y);
      const double norm = y.norm();
      if (!std::isfinite(norm)) break;
      x = y / norm;
      if (std::abs(norm - previous) <= 1e-10 * norm) {
        previous = norm;
        break;
      }
      previous = norm;
    }
    sigma_min = previous > 0.0 ? 1.0 / std::sqrt(previous) : 0.0;
  }
  if (!(sigma_min > options.singular_tol * sigma_max)) {
    out.singular = true;
    return out;
  }
  out.norm_B_inv_2 = 1.0 / sigma_min;

  if (dim <= options.exact_inf_limit) {
    const CMat inv = lu.solve(CMat::Identity(dim, dim));
    out.norm_B_inv_inf = inv.cwiseAbs().rowwise().sum().maxCoeff();
  } else {
    out.inf_norm_estimated = true;
    auto engine = make_stream(options.seed, 0);
    NormalSource source(engine);
    double best = 0.0;
    for (int t = 0; t < options.sign_vectors; ++t) {
      CVec x(dim);
      for (int i = 0; i < dim; ++i) x(i) = source.sign();
      best = std::max(best, lu.solve(x).cwiseAbs().maxCoeff());
    }
    out.norm_B_inv_inf = best;
  }
  // ||F||_{2->inf} with the normalized 2-norm is sqrt(dim) times the largest row norm.
  const double row = std::max(opr.block().rowwise().norm().maxCoeff(), opr.block().colwise().norm().maxCoeff());
  out.inf_norm_bound = 1.0 + std::sqrt(static_cast<double>(dim)) * row * out.norm_B_inv_2;
  return out;
}

StabilityReport stability_report(const SymmetrizedProfile& sym, cplx z, const SolverOptions& solver,
                                 const StabilityOptions& options) {
  const QveSolution solution = solve_continued(sym, z, solver);
  return build_B_and_invert(build_F(sym, solution), options);
}

bool support_connected(const Mat& a) {
  const Eigen::Index p = a.rows();
  const Eigen::Index n = a.cols();
  if (p == 0 || n == 0) return false;
  std::vector<char> seen(p + n, 0);
  std::queue<Eigen::Index> queue;
  queue.push(0);
  seen[0] = 1;
  Eigen::Index count = 1;
  while (!queue.empty()) {
    const Eigen::Index v = queue.front();
    queue.pop();
    if (v < p) {
      for (Eigen::Index k = 0; k < n; ++k)
        if (a(v, k) > 0.0 && !seen[p + k]) {
          seen[p + k] = 1;
          ++count;
          queue.push(p + k);
        }
    } else {
      for (Eigen::Index i = 0; i < p; ++i)
        if (a(i, v - p) > 0.0 && !seen[i]) {
          seen[i] = 1;
          ++count;
          queue.push(i);
        }
    }
  }
  return count == p + n;
}

namespace {

bool is_unitary(const CMat& u) {
  if (u.rows() != u.cols() || u.rows() == 0) return false;
  return (u.adjoint() * u - CMat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= 1e-10;
}

int classify_regime(double beta, double lambda, double kappa, double overlap_sum) {
  if (beta >= 1.0 - 1e-14) return 0;
  if (std::sqrt(kappa) < 10.0 * beta) return 1;
  if (lambda < 0.1) return 2;
  if (lambda > 0.9) return 3;
  if (overlap_sum <= 2.0 - kappa / 2.0) return 4;
  return 5;
}

}  // namespace

RotationInversionResult rotation_inversion_check(const RotationInversionInstance& instance,
                                                 const RotationInversionOptions& options) {
  const Mat& a = instance.a;
  const Eigen::Index p = a.rows();
  const Eigen::Index n = a.cols();
  if (instance.u1.rows() != p || instance.u2.rows() != n)
    throw InvalidArgument("rotation_inversion_check: block sizes do not match A");
  if (!is_unitary(instance.u1) || !is_unitary(instance.u2))
    throw InvalidArgument("rotation_inversion_check: diagonal blocks must be unitary");
  if ((a.array() < 0.0).any()) throw InvalidArgument("rotation_inversion_check: A must be nonnegative");
  if (!support_connected(a)) throw InvalidArgument("rotation_inversion_check: AA^* and A^*A must be irreducible");

  RotationInversionResult out;
  Eigen::SelfAdjointEigenSolver<Mat> eig(a * a.transpose());
  const double top = eig.eigenvalues()(p - 1);
  if (top > 1.0 + 1e-12) throw InvalidArgument("rotation_inversion_check: ||A^*A|| must not exceed 1");
  out.rho = std::sqrt(std::max(top, 0.0));
  out.gap_AAt = top - (p > 1 ? std::max(eig.eigenvalues()(p - 2), 0.0) : 0.0);
  out.v1 = eig.eigenvectors().col(p - 1).cwiseAbs();
  out.v2 = a.transpose() * out.v1;
  out.v2 /= out.v2.norm();
  out.overlap1 = out.v1.cast<cplx>().dot(instance.u1 * out.v1.cast<cplx>());
  out.overlap2 = out.v2.cast<cplx>().dot(instance.u2 * out.v2.cast<cplx>());
  out.rhs_core = out.gap_AAt * std::abs(1.0 - top * out.overlap1 * out.overlap2);

  const Eigen::Index dim = p + n;
  CMat block(dim, dim);
  block.topLeftCorner(p, p) = instance.u1;
  block.topRightCorner(p, n) = a.cast<cplx>();
  block.bottomLeftCorner(n, p) = a.transpose().cast<cplx>();
  block.bottomRightCorner(n, n) = instance.u2;
  // Eigenvalues of B^* B are enough unless B is close to singular.
  double s_min = 0.0;
  double s_max = 0.0;
  CVec w;
  Eigen::SelfAdjointEigenSolver<CMat> gram(block.adjoint() * block);
  const Vec ev = gram.eigenvalues().cwiseMax(0.0);
  if (gram.info() == Eigen::Success && ev(0) > 1e-12 * ev(dim - 1)) {
    s_min = std::sqrt(ev(0));
    s_max = std::sqrt(ev(dim - 1));
    w = gram.eigenvectors().col(0);
  } else {
    Eigen::JacobiSVD<CMat> svd(block, Eigen::ComputeFullV);
    s_min = svd.singularValues()(dim - 1);
    s_max = svd.singularValues()(0);
    w = svd.matrixV().col(dim - 1);
  }
  out.condition = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
  out.singular = !(out.condition <= options.singular_condition);
  if (out.singular) {
    out.lhs = std::numeric_limits<double>::infinity();
    out.counterexample = out.rhs_core > options.rhs_zero;
    out.ratio = out.counterexample ? std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::quiet_NaN();
  } else {
    out.lhs = 1.0 / s_min;
    out.ratio = out.lhs * out.rhs_core;
  }

  // Decomposition of the most contracted unit vector along a_+- = (v1, +-v2)/sqrt 2.
  CVec a_plus(dim), a_minus(dim);
  a_plus << out.v1.cast<cplx>(), out.v2.cast<cplx>();
  a_minus << out.v1.cast<cplx>(), -out.v2.cast<cplx>();
  a_plus /= std::sqrt(2.0);
  a_minus /= std::sqrt(2.0);
  out.alpha_plus = a_plus.dot(w);
  out.alpha_minus = a_minus.dot(w);
  const double par2 = std::norm(out.alpha_plus) + std::norm(out.alpha_minus);
  out.beta = (w - out.alpha_plus * a_plus - out.alpha_minus * a_minus).norm();
  if (par2 > 1e-300) {
    out.lambda = 0.5 * std::norm(out.alpha_plus + out.alpha_minus) / par2;
    const CVec x = out.alpha_plus * a_plus + out.alpha_minus * a_minus;
    CVec ax(dim);
    ax.head(p) = a.cast<cplx>() * x.tail(n);
    ax.tail(n) = a.transpose().cast<cplx>() * x.head(p);
    CVec y = x;
    y.head(p) += instance.u1.adjoint() * ax.head(p);
    y.tail(n) += instance.u2.adjoint() * ax.tail(n);
    out.kappa = std::sqrt((std::norm(a_plus.dot(y)) + std::norm(a_minus.dot(y))) / par2);
  }
  out.regime = classify_regime(out.beta, out.lambda, out.kappa, std::norm(out.overlap1) + std::norm(out.overlap2));
  return out;
}

namespace {

CMat haar_unitary(int k, NormalSource& source) {
  CMat g(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) g(i, j) = cplx(source(), source()) / std::sqrt(2.0);
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ();
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

}  // namespace

RotationInversionInstance random_rotation_inversion_instance(int p, int n, std::uint64_t seed) {
  if (p <= 0 || n <= 0) throw InvalidArgument("random_rotation_inversion_instance: dimensions must be positive");
  auto engine = make_stream(seed, 0);
  NormalSource source(engine);
  RotationInversionInstance out;
  out.u1 = haar_unitary(p, source);
  out.u2 = haar_unitary(n, source);
  out.a.resize(p, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < p; ++i) out.a(i, k) = std::abs(source());
  const double scale = source.uniform();
  Eigen::SelfAdjointEigenSolver<Mat> eig(out.a * out.a.transpose(), Eigen::EigenvaluesOnly);
  out.a *= scale / std::sqrt(eig.eigenvalues()(p - 1));
  return out;
}

std::vector<SweepRow> rotation_inversion_sweep(int instances, const std::vector<int>& dims, std::uint64_t seed,
                                               int threads) {
  if (instances < 0) throw InvalidArgument("rotation_inversion_sweep: negative instance count");
  if (dims.empty()) throw InvalidArgument("rotation_inversion_sweep: no dimensions given");
  for (int d : dims)
    if (d <= 0) throw InvalidArgument("rotation_inversion_sweep: dimensions must be positive");
  std::vector<SweepRow> rows(instances);
  parallel_for(instances, threads, [&](int i) {
    SweepRow& row = rows[i];
    row.dim = dims[static_cast<std::size_t>(i) % dims.size()];
    row.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const auto result = rotation_inversion_check(random_rotation_inversion_instance(row.dim, row.dim, row.seed));
    row.lhs = result.lhs;
    row.rhs_core = result.rhs_core;
    row.ratio = result.ratio;
    row.counterexample = result.counterexample;
  });
  return rows;
}

}  // namespace gramspec
