#include "gramspec/zero.hpp"

#include <algorithm>
#include <cmath>

namespace gramspec {

namespace {

// Rescales (v1, v2) -> (c v1, v2 / c) so that <v1> = <v2>; at eta = 0 this is
// exactly the one-parameter family of solutions of 1/v = S_sym v.
void balance_halves(Vec& v, int p) {
  const double c = std::sqrt(mean(v.tail(v.size() - p)) / mean(v.head(p)));
  v.head(p) *= c;
  v.tail(v.size() - p) /= c;
}

Vec hard_edge_rung(const SymmetrizedProfile& sym, double eta, Vec v, const HardEdgeOptions& options, double* res) {
  const double a = options.damping;
  for (int it = 0; it <= options.max_iterations; ++it) {
    Vec w = sym.apply(v);
    w.array() += eta;
    *res = (v.cwiseInverse() - w).cwiseAbs().maxCoeff();
    if (*res <= options.tol) return v;
    v = (1.0 - a) * v + a * w.cwiseInverse();
    balance_halves(v, sym.p());
  }
  throw NumericalFailure("hard-edge fixed point did not converge", *res);
}

}  // namespace

CVec HardEdgeStructure::expansion(cplx z) const {
  CVec out = cplx(0.0, 1.0) * v0.cast<cplx>();
  out -= z * v0.cwiseProduct(first_order).cast<cplx>();
  return out;
}

HardEdgeStructure solve_hard_edge(const SymmetrizedProfile& sym, const HardEdgeOptions& options) {
  const int p = sym.p();
  if (sym.n() != p) throw InvalidArgument("solve_hard_edge: profile must be square");
  if (options.eta_ladder.empty()) throw InvalidArgument("solve_hard_edge: empty eta ladder");
  const int dim = sym.dim();

  Vec v = Vec::Ones(dim);
  Vec previous;
  double prev_eta = 0.0;
  double eta_last = 0.0;
  double res = 0.0;
  for (double eta : options.eta_ladder) {
    Vec next = hard_edge_rung(sym, eta, v, options, &res);
    previous = v;
    prev_eta = eta_last;
    v = std::move(next);
    eta_last = eta;
  }
  // Linear extrapolation of the last two rungs to eta = 0, then the eta = 0 polish.
  if (options.eta_ladder.size() >= 2) {
    Vec guess = v + (v - previous) * (eta_last / (prev_eta - eta_last));
    if ((guess.array() > 0.0).all()) v = guess;
  }
  v = hard_edge_rung(sym, 0.0, v, options, &res);

  HardEdgeStructure out;
  out.v0 = v;
  out.residual = res;
  out.singular_coefficient = mean(v.head(p)) / M_PI;

  // F(0) = v0 S_sym v0 has the simple eigenvalue -1 on e_- = (1, -1); adding
  // the projector onto e_- makes 1 + F(0) invertible without changing it on the
  // orthogonal complement, where v0 lives.
  const Mat f0 = v.asDiagonal() * sym.dense() * v.asDiagonal();
  Vec e_minus(dim);
  e_minus.head(p).setOnes();
  e_minus.tail(p).setConstant(-1.0);
  Mat a = Mat::Identity(dim, dim) + f0 + e_minus * e_minus.transpose() / static_cast<double>(dim);
  out.first_order = a.partialPivLu().solve(v);
  return out;
}

JFunctional evaluate_j(const VarianceProfile& profile, const Vec& u) {
  if (u.size() != profile.p()) throw InvalidArgument("evaluate_j: u has wrong length");
  if ((u.array() <= 0.0).any()) throw InvalidArgument("evaluate_j: u must be positive");
  const auto& s = profile.s();
  const double p = profile.p();
  const Vec q = s.transpose() * u;
  JFunctional out;
  out.value = (q.array().log().sum() + (u.array() - u.array().log()).sum()) / p;
  const Vec grad = (s * q.cwiseInverse() + Vec::Ones(u.size()) - u.cwiseInverse()) / p;
  out.gradient_norm = grad.cwiseAbs().maxCoeff();
  return out;
}

USolution minimize_j(const VarianceProfile& profile, double tol, int max_iterations) {
  if (profile.p() <= profile.n()) throw InvalidArgument("minimize_j: requires p > n");
  if (!(tol > 0.0)) throw InvalidArgument("minimize_j: tol must be positive");
  const auto& s = profile.s();
  USolution out;
  Vec u = Vec::Ones(profile.p());
  out.j_initial = evaluate_j(profile, u).value;
  double j_prev = out.j_initial;
  for (int it = 0;; ++it) {
    const Vec q = s.transpose() * u;
    if ((q.array() <= 0.0).any()) throw NumericalFailure("minimize_j: S^t u has a zero component");
    Vec rhs = s * q.cwiseInverse();
    rhs.array() += 1.0;
    out.residual = (u.cwiseInverse() - rhs).cwiseAbs().maxCoeff();
    if (out.residual <= tol) {
      out.iterations = it;
      break;
    }
    if (it >= max_iterations) throw NumericalFailure("minimize_j: fixed point did not converge", out.residual);
    u = rhs.cwiseInverse();
    const double j = evaluate_j(profile, u).value;
    if (it >= 5 && j > j_prev + 1e-13 * (1.0 + std::abs(j_prev))) out.j_monotone = false;
    j_prev = j;
  }
  out.j_final = evaluate_j(profile, u).value;
  out.u = std::move(u);
  return out;
}

BFunction::BFunction(VarianceProfile profile, Vec u, const BOptions& options)
    : profile_(std::move(profile)), u_(std::move(u)), options_(options) {
  if (u_.size() != profile_.p()) throw InvalidArgument("solve_b: u has wrong length");
  if (options_.rays < 4 || options_.rays % 2 != 0) throw InvalidArgument("solve_b: ray count must be even and >= 4");
  if (!(options_.radius > 0.0) || !(options_.tol > 0.0)) throw InvalidArgument("solve_b: radius and tol must be positive");
  const Vec q = profile_.s().transpose() * u_;
  if ((q.array() <= 0.0).any()) throw InvalidArgument("solve_b: S^t u must be positive");
  b0_ = q.cwiseInverse();

  const int k = options_.rays;
  // Singularities of b sit on the real axis (they are edges of the support in
  // the z^2 variable), so the ray along it fixes the radius first; the other
  // rays only need to reach that far.
  const double first = integrate_ray(0.0, options_.radius, std::nullopt).radius;
  if (!(first > 0.0)) throw NumericalFailure("solve_b: integration along the real axis failed immediately");
  series_radius_ = 0.5 * first;

  std::vector<CVec> circle(k);
  ray_radii_.assign(k, 0.0);
  for (int j = 0; j <= k / 2; ++j) {
    const double theta = 2.0 * M_PI * j / k;
    Ray ray = integrate_ray(theta, first, series_radius_);
    if (ray.radius < series_radius_)
      throw NumericalFailure("solve_b: a ray failed inside the series circle", ray.radius);
    ray_radii_[j] = ray.radius;
    circle[j] = std::move(ray.at_series_radius);
  }
  // b(conj z) = conj b(z) for a real profile.
  for (int j = k / 2 + 1; j < k; ++j) {
    ray_radii_[j] = ray_radii_[k - j];
    circle[j] = circle[k - j].conjugate();
  }
  delta_star_ = *std::min_element(ray_radii_.begin(), ray_radii_.end());

  const int terms = std::min(options_.series_terms, k);
  b_series_.assign(terms, CVec::Zero(b0_.size()));
  a_series_.assign(terms, CVec::Zero(u_.size()));
  for (int j = 0; j < k; ++j) {
    const cplx z = std::polar(series_radius_, 2.0 * M_PI * j / k);
    CVec sb = (profile_.s() * circle[j].real()).cast<cplx>();
    sb.imag() += profile_.s() * circle[j].imag();
    sb.array() += 1.0;
    const CVec a = (u_.cast<cplx>() - sb.cwiseInverse()) / (z * z);
    for (int m = 0; m < terms; ++m) {
      const cplx w = std::pow(z, -m) / static_cast<double>(k);
      b_series_[m] += w * circle[j];
      a_series_[m] += w * a;
    }
  }
}

Eigen::PartialPivLU<CMat> BFunction::one_minus_l(const CVec& b, double* sigma_estimate) const {
  const auto& s = profile_.s();
  CVec sb = (s * b.real()).cast<cplx>();
  sb.imag() += s * b.imag();
  sb.array() += 1.0;
  const CVec w = sb.array().square().inverse();
  // S^t diag(w) S from two real products.
  const Mat re = s.transpose() * w.real().asDiagonal() * s;
  const Mat im = s.transpose() * w.imag().asDiagonal() * s;
  CMat a(re.rows(), re.cols());
  a.real() = re;
  a.imag() = im;
  a = -(b.asDiagonal() * a * b.asDiagonal());
  a.diagonal().array() += 1.0;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  Eigen::PartialPivLU<CMat> lu(a);
  if (sigma_estimate) *sigma_estimate = lu.rcond() * norm1;
  return lu;
}

double BFunction::algebraic_residual(cplx z, const CVec& b) const {
  const auto& s = profile_.s();
  CVec sb = (s * b.real()).cast<cplx>();
  sb.imag() += s * b.imag();
  sb.array() += 1.0;
  const CVec inv = sb.cwiseInverse();
  CVec st = (s.transpose() * inv.real()).cast<cplx>();
  st.imag() += s.transpose() * inv.imag();
  CVec g = b.cwiseInverse() - st;
  g.array() += z * z;
  return g.cwiseAbs().maxCoeff();
}

CVec BFunction::newton_polish(cplx z, CVec b, int max_steps, double* correction) const {
  const auto& s = profile_.s();
  double total = 0.0;
  for (int step = 0; step < max_steps; ++step) {
    CVec sb = (s * b.real()).cast<cplx>();
    sb.imag() += s * b.imag();
    sb.array() += 1.0;
    const CVec inv = sb.cwiseInverse();
    CVec st = (s.transpose() * inv.real()).cast<cplx>();
    st.imag() += s.transpose() * inv.imag();
    CVec g = b.cwiseInverse() - st;
    g.array() += z * z;
    if (g.cwiseAbs().maxCoeff() <= 1e-2 * options_.tol) break;
    double sigma = 0.0;
    const auto lu = one_minus_l(b, &sigma);
    if (sigma < options_.sigma_guard) throw NumericalFailure("1 - L(b) is numerically singular", sigma);
    const CVec delta = b.cwiseProduct(lu.solve(b.cwiseProduct(g).eval()));
    b += delta;
    total += delta.cwiseAbs().maxCoeff();
  }
  if (correction) *correction = total;
  return b;
}

BFunction::Ray BFunction::integrate_ray(double theta, double t_end, std::optional<double> record_at) const {
  const cplx e = std::polar(1.0, theta);
  auto rhs = [&](double t, const CVec& b) -> CVec {
    double sigma = 0.0;
    const auto lu = one_minus_l(b, &sigma);
    if (sigma < options_.sigma_guard) throw NumericalFailure("1 - L(b) is numerically singular", sigma);
    const cplx z = t * e;
    // db/dt = e * b'(z).
    return e * 2.0 * z * b.cwiseProduct(lu.solve(b));
  };

  Ray ray;
  CVec b = b0_.cast<cplx>();
  double t = 0.0;
  double h = options_.initial_step * options_.radius;
  const double h_min = options_.min_step * options_.radius;
  if (record_at && *record_at <= 0.0) ray.at_series_radius = b;
  while (t < t_end) {
    double target = t_end;
    if (record_at && t < *record_at) target = std::min(target, *record_at);
    const double step = std::min(h, target - t);
    bool accepted = false;
    CVec next;
    try {
      const CVec k1 = rhs(t, b);
      const CVec k2 = rhs(t + 0.5 * step, b + 0.5 * step * k1);
      const CVec k3 = rhs(t + 0.5 * step, b + 0.5 * step * k2);
      const CVec k4 = rhs(t + step, b + step * k3);
      next = b + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      double correction = 0.0;
      next = newton_polish((t + step) * e, next, 4, &correction);
      const double res = algebraic_residual((t + step) * e, next);
      if (next.allFinite() && res <= options_.tol && correction <= 1e-3 * (1.0 + b.cwiseAbs().maxCoeff())) {
        accepted = true;
        max_residual_ = std::max(max_residual_, res);
      }
    } catch (const NumericalFailure&) {
      accepted = false;
    }
    if (accepted) {
      t = (step == target - t) ? target : t + step;
      b = std::move(next);
      if (record_at && t == *record_at) ray.at_series_radius = b;
      h = std::min(1.5 * step, options_.initial_step * options_.radius);
    } else {
      h = 0.5 * step;
      if (h < h_min) break;
    }
  }
  ray.radius = t;
  return ray;
}

double BFunction::derivative_at_zero() const {
  return b_series_.size() > 1 ? b_series_[1].cwiseAbs().maxCoeff() : 0.0;
}

CVec BFunction::operator()(cplx z) const {
  const double r = std::abs(z);
  if (!(r < delta_star_)) throw InvalidArgument("b(z): z outside the disk of validity");
  if (r <= series_radius_) {
    CVec guess = CVec::Zero(b0_.size());
    cplx power = 1.0;
    for (const auto& c : b_series_) {
      guess += power * c;
      power *= z;
    }
    return newton_polish(z, guess, 20, nullptr);
  }
  Ray ray = integrate_ray(std::arg(z), r, r);
  if (ray.radius < r) throw NumericalFailure("b(z): ray integration stopped before |z|", ray.radius);
  return ray.at_series_radius;
}

CVec BFunction::a(cplx z) const {
  if (!(std::abs(z) < delta_star_)) throw InvalidArgument("a(z): z outside the disk of validity");
  if (std::abs(z) <= 0.5 * series_radius_) {
    CVec out = CVec::Zero(u_.size());
    cplx power = 1.0;
    for (const auto& c : a_series_) {
      out += power * c;
      power *= z;
    }
    return out;
  }
  const CVec b = (*this)(z);
  CVec sb = (profile_.s() * b.real()).cast<cplx>();
  sb.imag() += profile_.s() * b.imag();
  sb.array() += 1.0;
  return (u_.cast<cplx>() - sb.cwiseInverse()) / (z * z);
}

CVec BFunction::m_sym(cplx z) const {
  if (z == cplx(0.0)) throw InvalidArgument("m_sym: M1 has a pole at z = 0");
  CVec out(u_.size() + b0_.size());
  out.head(u_.size()) = z * a(z) - u_.cast<cplx>() / z;
  out.tail(b0_.size()) = z * (*this)(z);
  return out;
}

BFunction solve_b(const VarianceProfile& profile, const Vec& u, const BOptions& options) {
  return BFunction(profile, u, options);
}

double estimate_gap(const DensityCurve& curve, double threshold) {
  for (std::size_t j = 0; j < curve.grid.size(); ++j)
    if (curve.values[j] > threshold) return curve.grid[j];
  throw NumericalFailure("estimate_gap: density never exceeds the threshold");
}

double estimate_gap(const VarianceProfile& profile, int grid_points, double d_star_min, const DensityOptions& options) {
  const double ratio = static_cast<double>(profile.p()) / profile.n();
  if (std::abs(ratio - 1.0) < d_star_min)
    throw InvalidArgument("estimate_gap: profile is not properly rectangular (hard edge, no gap)");
  const double top = 4.0 * profile.s_star();
  const auto grid = linear_grid(top / grid_points, top, grid_points);
  return estimate_gap(density(profile, grid, options), options.support_threshold);
}

ZeroStructure analyze_zero(const VarianceProfile& profile, const ZeroOptions& options) {
  if (profile.p() == profile.n()) return solve_hard_edge(SymmetrizedProfile(profile), options.hard);

  const bool transposed = profile.p() < profile.n();
  const VarianceProfile tall = transposed ? profile.transposed() : profile;
  const USolution us = minimize_j(tall, options.u_tol);
  SoftEdgeStructure out;
  out.transposed = transposed;
  out.u = us.u;
  out.b0 = (tall.s().transpose() * us.u).cwiseInverse();
  out.point_mass = transposed ? 0.0 : mean(us.u);
  const BFunction b(tall, us.u, options.b);
  out.delta_star = b.delta_star();
  out.b_series = b.series();
  if (options.compute_gap) {
    DensityOptions dens = options.density;
    dens.point_mass = out.point_mass;
    out.delta_pi = estimate_gap(profile, options.gap_grid_points, options.d_star_min, dens);
  }
  return out;
}

double point_mass_at_zero(const VarianceProfile& profile, double tol) {
  const int p = profile.p();
  const int n = profile.n();
  try {
    if (p > n) return mean(minimize_j(profile, std::min(tol, 1e-12)).u);
    if (p < n) {
      minimize_j(profile.transposed(), std::min(tol, 1e-12));
      return 0.0;
    }
    HardEdgeOptions hard;
    hard.tol = std::max(tol, 1e-10);
    solve_hard_edge(SymmetrizedProfile(profile), hard);
    return 0.0;
  } catch (const NumericalFailure&) {
  }
  // eta Im<m(i eta)> = integral of eta^2 / (x^2 + eta^2) nu(dx) -> nu({0}).
  SolverOptions solver;
  solver.tol = tol;
  const double eta1 = 1e-3;
  const double eta2 = 1e-4;
  const double f1 = eta1 * solve_gram_at(profile, cplx(0.0, eta1), solver).mean_m().imag();
  const double f2 = eta2 * solve_gram_at(profile, cplx(0.0, eta2), solver).mean_m().imag();
  return std::clamp((eta1 * f2 - eta2 * f1) / (eta1 - eta2), 0.0, 1.0);
}

}  // namespace gramspec
