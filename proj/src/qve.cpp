#include "gramspec/qve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gramspec/parallel.hpp"
#include "gramspec/zero.hpp"

namespace gramspec {

SpectralPoint SpectralPoint::symmetrized(cplx z) { return SpectralPoint(z, Plane::symmetrized); }
SpectralPoint SpectralPoint::gram(cplx zeta) { return SpectralPoint(zeta, Plane::gram); }

cplx SpectralPoint::z() const { return plane_ == Plane::symmetrized ? value_ : upper_sqrt(value_); }
cplx SpectralPoint::zeta() const { return plane_ == Plane::gram ? value_ : value_ * value_; }

cplx upper_sqrt(cplx zeta) {
  cplx r = std::sqrt(zeta);
  if (r.imag() < 0.0) r = -r;
  return r;
}

namespace {

void require_upper(cplx z, const char* what) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw InvalidArgument(std::string(what) + ": spectral parameter must have positive imaginary part");
}

// S v and S^t v for complex v with a real matrix.
CVec times(const RowMat& s, const CVec& v) {
  CVec out(s.rows());
  out.real() = s * v.real();
  out.imag() = s * v.imag();
  return out;
}

CVec times_t(const RowMat& s, const CVec& v) {
  CVec out(s.cols());
  out.real() = s.transpose() * v.real();
  out.imag() = s.transpose() * v.imag();
  return out;
}

}  // namespace

QveSolution solve_at(const SymmetrizedProfile& sym, cplx z, const SolverOptions& options,
                     const QveSolution* warm_start) {
  require_upper(z, "solve_at");
  if (!(options.tol > 0.0)) throw InvalidArgument("solve_at: tol must be positive");
  const int dim = sym.dim();
  const int p = sym.p();
  const int n = sym.n();

  CVec m;
  if (warm_start && warm_start->m_sym.size() == dim && (warm_start->m_sym.imag().array() > 0.0).all())
    m = warm_start->m_sym;
  else
    m = CVec::Constant(dim, -1.0 / z);

  // Every solution obeys sum M1 - sum M2 = (n - p)/z. The slowest mode of the
  // iteration near the hard edge is the imbalance (M1, -M2), so it is removed
  // by rescaling (M1, M2) -> ((1 + e) M1, (1 - e) M2) whenever that keeps Im > 0.
  const cplx imbalance_target = static_cast<double>(n - p) / z;
  auto balance = [&](CVec& x) {
    const cplx s1 = x.head(p).sum();
    const cplx s2 = x.tail(n).sum();
    const cplx e = (imbalance_target - (s1 - s2)) / (s1 + s2);
    if (!(std::abs(e) < 0.5)) return;
    CVec y = x;
    y.head(p) *= 1.0 + e;
    y.tail(n) *= 1.0 - e;
    if ((y.imag().array() > 0.0).all()) x.swap(y);
  };

  // t = T(m) = -1/w with w = z + S m; the perturbation d = -1/m - w is tracked
  // alongside the fixed-point defect t - m so that both notions of residual
  // meet the tolerance on return.
  auto evaluate = [&](const CVec& x, CVec& r, double& defect, double& perturbation) {
    CVec w = sym.apply(x);
    w.array() += z;
    r = -w.cwiseInverse() - x;
    defect = r.cwiseAbs().maxCoeff();
    perturbation = (-x.cwiseInverse() - w).cwiseAbs().maxCoeff();
  };
  // Step control works with the defect relative to |m|: components of M differ
  // in scale by orders of magnitude close to zero in the rectangular case.
  auto relative = [](const CVec& r, const CVec& x) { return r.cwiseQuotient(x.cwiseAbs().cast<cplx>()).eval(); };

  balance(m);
  CVec r;
  double defect = 0.0;
  double pert = 0.0;
  evaluate(m, r, defect, pert);
  CVec rel = relative(r, m);
  double rel_defect = rel.cwiseAbs().maxCoeff();
  double best = std::max(defect, pert);
  cplx alpha = options.alpha_init;
  int it = 0;
  CVec candidate;
  CVec r_candidate;
  while (std::max(defect, pert) > options.tol) {
    if (it >= options.max_iterations)
      throw NumericalFailure("QVE fixed point did not reach tolerance", best);
    ++it;
    candidate = m + alpha * r;
    if (!(candidate.imag().array() > 0.0).all()) {
      // A real step in (0, 1] is a convex combination of m and T(m), both in
      // the upper half-plane.
      alpha = std::min(std::abs(alpha), 1.0);
      candidate = m + alpha * r;
    }
    balance(candidate);
    double d_c = 0.0;
    double p_c = 0.0;
    evaluate(candidate, r_candidate, d_c, p_c);
    CVec rel_c = relative(r_candidate, candidate);
    const double rel_c_defect = rel_c.cwiseAbs().maxCoeff();
    const bool finite = std::isfinite(rel_c_defect) && std::isfinite(p_c);
    if ((!finite || rel_c_defect > rel_defect) && std::abs(alpha) > options.alpha_min) {
      alpha *= std::max(0.5, options.alpha_min / std::abs(alpha));
      continue;
    }
    if (!finite) throw NumericalFailure("QVE fixed point produced non-finite values", best);
    // Secant estimate of the step that minimizes the linearized relative
    // defect rel + alpha (J - 1) rel over complex alpha; its modulus is kept in
    // [alpha_min, alpha_max]. A proposal pointing backwards is replaced by the
    // plain step.
    const CVec q = (rel_c - rel) / alpha;
    const double qq = q.squaredNorm();
    cplx proposal = qq > 0.0 ? -q.dot(rel) / qq : alpha * options.alpha_grow;
    if (!std::isfinite(proposal.real()) || !std::isfinite(proposal.imag()) || proposal.real() <= 0.0)
      proposal = std::min(1.0, std::abs(alpha) * options.alpha_grow);
    const double mag = std::abs(proposal);
    if (mag > options.alpha_max) proposal *= options.alpha_max / mag;
    if (mag < options.alpha_min) proposal = options.alpha_min;
    alpha = proposal;
    m.swap(candidate);
    r.swap(r_candidate);
    rel.swap(rel_c);
    rel_defect = rel_c_defect;
    defect = d_c;
    pert = p_c;
    best = std::min(best, std::max(defect, pert));
  }
  return QveSolution{std::move(m), defect, it, z};
}

QveSolution solve_continued(const SymmetrizedProfile& sym, cplx z, const SolverOptions& options) {
  require_upper(z, "solve_continued");
  std::optional<QveSolution> current;
  for (double eta = 1.0; eta > 10.0 * z.imag(); eta *= 0.1) {
    // Intermediate rungs only need to land in the basin of the next one.
    SolverOptions loose = options;
    loose.tol = std::max(options.tol, 1e-6);
    current = solve_at(sym, cplx(z.real(), eta), loose, current ? &*current : nullptr);
  }
  return solve_at(sym, z, options, current ? &*current : nullptr);
}

double residual(const SymmetrizedProfile& sym, const CVec& candidate, cplx z) {
  if (candidate.size() != sym.dim()) throw InvalidArgument("residual: candidate has wrong length");
  if ((candidate.array() == cplx(0.0)).any()) throw InvalidArgument("residual: candidate has a zero component");
  CVec d = -candidate.cwiseInverse() - sym.apply(candidate);
  d.array() -= z;
  return d.cwiseAbs().maxCoeff();
}

double gram_residual(const VarianceProfile& profile, const CVec& m, cplx zeta) {
  if (m.size() != profile.p()) throw InvalidArgument("gram_residual: candidate has wrong length");
  if ((m.array() == cplx(0.0)).any()) throw InvalidArgument("gram_residual: candidate has a zero component");
  CVec q = times_t(profile.s(), m);
  q.array() += 1.0;
  CVec d = m.cwiseInverse() - times(profile.s(), q.cwiseInverse());
  d.array() += zeta;
  return d.cwiseAbs().maxCoeff();
}

GramSolution to_gram(const VarianceProfile& profile, const QveSolution& solution) {
  const int p = profile.p();
  GramSolution out;
  out.zeta = solution.z * solution.z;
  out.m = solution.m_sym.head(p) / solution.z;
  out.m2 = solution.m_sym.tail(profile.n()) / solution.z;
  out.gram_residual = gram_residual(profile, out.m, out.zeta);
  out.sym = solution;
  return out;
}

GramSolution solve_gram_at(const VarianceProfile& profile, cplx zeta, const SolverOptions& options) {
  require_upper(zeta, "solve_gram_at");
  const SymmetrizedProfile sym(profile);
  const cplx z = upper_sqrt(zeta);
  // The Gram residual is a rescaled version of the symmetrized one; tighten the
  // symmetrized tolerance until the Gram equation meets the requested one.
  SolverOptions inner = options;
  QveSolution solution = solve_continued(sym, z, inner);
  GramSolution out = to_gram(profile, solution);
  for (int round = 0; round < 3 && out.gram_residual > options.tol; ++round) {
    inner.tol = std::max(inner.tol * 1e-2, 1e-15);
    solution = solve_at(sym, z, inner, &solution);
    out = to_gram(profile, solution);
  }
  if (out.gram_residual > options.tol)
    throw NumericalFailure("Gram-plane residual above tolerance", out.gram_residual);
  return out;
}

std::vector<double> linear_grid(double start, double stop, int count) {
  if (count < 1) throw InvalidArgument("grid needs at least one point");
  if (!std::isfinite(start) || !std::isfinite(stop)) throw InvalidArgument("grid bounds must be finite");
  if (count == 1) return {start};
  std::vector<double> grid(count);
  const double step = (stop - start) / static_cast<double>(count - 1);
  for (int j = 0; j < count; ++j) grid[j] = start + step * j;
  grid.back() = stop;
  return grid;
}

std::vector<std::pair<double, double>> detect_support(const std::vector<double>& grid,
                                                      const std::vector<double>& values, double threshold,
                                                      double upper) {
  std::vector<std::pair<double, double>> out;
  if (grid.size() != values.size()) throw InvalidArgument("detect_support: grid and values differ in length");
  const std::size_t count = grid.size();
  std::size_t j = 0;
  while (j < count) {
    if (!(values[j] > threshold)) {
      ++j;
      continue;
    }
    const std::size_t first = j;
    while (j < count && values[j] > threshold) ++j;
    const std::size_t last = j - 1;
    double lo = grid[first];
    // A run touching the left end of a grid that starts within two steps of the
    // origin is taken to reach zero.
    if (first == 0 && count > 1 && grid[0] < 2.0 * (grid[1] - grid[0])) lo = 0.0;
    out.emplace_back(lo, grid[last]);
  }
  // Merge runs separated by fewer than two grid steps.
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : out) {
    if (!merged.empty()) {
      const auto it = std::lower_bound(grid.begin(), grid.end(), merged.back().second);
      const auto jt = std::lower_bound(grid.begin(), grid.end(), iv.first);
      if (jt - it < 3) {
        merged.back().second = iv.second;
        continue;
      }
    }
    merged.push_back(iv);
  }
  for (auto& iv : merged) {
    iv.first = std::clamp(iv.first, 0.0, upper);
    iv.second = std::clamp(iv.second, 0.0, upper);
  }
  return merged;
}

double DensityCurve::total_mass() const {
  return point_mass + integrate([](double) { return 1.0; });
}

double DensityCurve::cdf(double x) const {
  if (x < 0.0) return 0.0;
  if (grid.empty() || x <= 0.0) return point_mass;
  double acc = point_mass;
  auto g = [&](std::size_t j) { return 2.0 * std::sqrt(grid[j]) * values[j]; };
  const double tx = std::sqrt(x);
  const double t0 = std::sqrt(grid[0]);
  if (tx <= t0) return acc + tx * g(0);
  acc += t0 * g(0);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double ta = std::sqrt(grid[j - 1]);
    const double tb = std::sqrt(grid[j]);
    if (tx >= tb) {
      acc += 0.5 * (tb - ta) * (g(j) + g(j - 1));
      continue;
    }
    const double frac = (tx - ta) / (tb - ta);
    const double gx = g(j - 1) + frac * (g(j) - g(j - 1));
    acc += 0.5 * (tx - ta) * (g(j - 1) + gx);
    return acc;
  }
  return acc;
}

DensityCurve density(const VarianceProfile& profile, const std::vector<double>& grid, const DensityOptions& options) {
  const auto& ladder = options.eta_ladder;
  if (ladder.size() < 2) throw InvalidArgument("density: eta ladder needs at least two rungs");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) throw InvalidArgument("density: eta ladder entries must be positive");
    if (k > 0 && !(ladder[k] < ladder[k - 1])) throw InvalidArgument("density: eta ladder must be decreasing");
  }
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] > 0.0) || !std::isfinite(grid[j])) throw InvalidArgument("density: grid points must be positive");
    if (j > 0 && !(grid[j] > grid[j - 1])) throw InvalidArgument("density: grid must be increasing");
  }

  DensityCurve curve;
  curve.grid = grid;
  curve.eta_ladder = ladder;
  curve.eta_used = ladder.back();
  curve.point_mass = options.point_mass ? *options.point_mass : point_mass_at_zero(profile, options.solver.tol);
  curve.values.assign(grid.size(), 0.0);

  const SymmetrizedProfile sym(profile);
  const int p = profile.p();
  const double pi_star = curve.point_mass;
  std::vector<char> flags(grid.size(), 0);

  const int threads = options.threads > 0 ? options.threads : thread_count_from_env();
  parallel_for(static_cast<int>(grid.size()), threads, [&](int j) {
    const double omega = grid[j];
    // Absolutely continuous part of Im<m>/pi at height eta.
    auto ac_part = [&](const QveSolution& s, double eta) {
      const cplx mean_m = mean(s.m_sym.head(p)) / s.z;
      return (mean_m.imag() - pi_star * eta / (omega * omega + eta * eta)) / M_PI;
    };
    try {
      std::optional<QveSolution> current;
      // Coarse rungs above the ladder lead the iterate into the basin.
      for (double eta = 1.0; eta > 10.0 * ladder.front(); eta *= 0.1) {
        SolverOptions loose = options.solver;
        loose.tol = std::max(options.solver.tol, 1e-6);
        current = solve_at(sym, upper_sqrt(cplx(omega, eta)), loose, current ? &*current : nullptr);
      }
      std::vector<double> f;
      for (double eta : ladder) {
        current = solve_at(sym, upper_sqrt(cplx(omega, eta)), options.solver, current ? &*current : nullptr);
        f.push_back(ac_part(*current, eta));
      }
      auto richardson = [&](std::size_t k) {
        return (ladder[k] * f[k + 1] - ladder[k + 1] * f[k]) / (ladder[k] - ladder[k + 1]);
      };
      const std::size_t last = ladder.size() - 2;
      const double extrapolated = richardson(last);
      // Divergence: the estimate moves between consecutive rung pairs (or, with
      // only two rungs, away from the last rung) by more than the allowed ratio.
      const double reference = last > 0 ? richardson(last - 1) : f.back();
      const double scale = std::max(std::abs(extrapolated), options.support_threshold);
      if (!std::isfinite(extrapolated) || std::abs(extrapolated - reference) > options.divergence_ratio * scale)
        flags[j] = 1;
      curve.values[j] = std::isfinite(extrapolated) ? std::max(0.0, extrapolated) : std::max(0.0, f.back());
    } catch (const NumericalFailure&) {
      flags[j] = 1;
      curve.values[j] = 0.0;
    }
  });

  for (std::size_t j = 0; j < grid.size(); ++j)
    if (flags[j]) curve.flagged.push_back(static_cast<int>(j));
  curve.support = detect_support(grid, curve.values, options.support_threshold, 4.0 * profile.s_star());
  return curve;
}

double capacity(const DensityCurve& curve, double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("capacity: sigma2 must be positive");
  return curve.integrate([sigma2](double omega) { return std::log1p(omega / sigma2); });
}

}  // namespace gramspec
