#include "gramspec/defaults.hpp"

#include <sstream>

namespace gramspec {

namespace {

std::vector<DefaultEntry> build() {
  const SolverOptions solver;
  const DensityOptions dens;
  const HardEdgeOptions hard;
  const BOptions b;
  const ZeroOptions zero;
  const PerronOptions perron;
  const StabilityOptions stab;
  const RotationInversionOptions ri;
  const VerifyConfig verify;
  const LawThresholds th;
  std::vector<DefaultEntry> t;
  t.push_back({"solver.tol", solver.tol, "max-norm defect at which the fixed point stops"});
  t.push_back({"solver.max_iterations", solver.max_iterations, "fixed-point iteration cap"});
  t.push_back({"solver.alpha_init", solver.alpha_init, "initial step"});
  t.push_back({"solver.alpha_min", solver.alpha_min, "smallest step modulus"});
  t.push_back({"solver.alpha_max", solver.alpha_max, "largest step modulus"});
  t.push_back({"solver.alpha_grow", solver.alpha_grow, "growth of the plain step after a success"});
  t.push_back({"density.eta_ladder", dens.eta_ladder, "imaginary parts used for Stieltjes inversion"});
  t.push_back({"density.support_threshold", dens.support_threshold, "density level that counts as support"});
  t.push_back({"density.divergence_ratio", dens.divergence_ratio, "relative disagreement that flags a grid point"});
  t.push_back({"density.grid_points", 2000, "grid size when no grid is given"});
  t.push_back({"hard_edge.tol", hard.tol, "defect tolerance at eta = 0"});
  t.push_back({"hard_edge.eta_ladder", hard.eta_ladder, "continuation ladder towards eta = 0"});
  t.push_back({"hard_edge.damping", hard.damping, "fixed-point damping"});
  t.push_back({"hard_edge.max_iterations", hard.max_iterations, "iteration cap per rung"});
  t.push_back({"b.radius", b.radius, "largest radius tried on each ray"});
  t.push_back({"b.tol", b.tol, "algebraic residual accepted along rays"});
  t.push_back({"b.rays", b.rays, "number of rays from the origin"});
  t.push_back({"b.initial_step", b.initial_step, "first RK4 step"});
  t.push_back({"b.min_step", b.min_step, "step floor relative to the radius"});
  t.push_back({"b.sigma_guard", b.sigma_guard, "smallest singular value estimate of 1 - L(b)"});
  t.push_back({"b.series_terms", b.series_terms, "Taylor coefficients kept for b and a"});
  t.push_back({"zero.u_tol", zero.u_tol, "residual tolerance for u"});
  t.push_back({"zero.d_star_min", zero.d_star_min, "minimal distance of p/n from 1 for the gap analysis"});
  t.push_back({"zero.gap_grid_points", zero.gap_grid_points, "grid used to read off the gap"});
  t.push_back({"perron.tol", perron.tol, "relative Rayleigh quotient change"});
  t.push_back({"perron.max_iterations", perron.max_iterations, "power iteration cap"});
  t.push_back({"perron.identity_tol", perron.identity_tol, "allowed violation of the norm identity"});
  t.push_back({"stability.exact_inf_limit", stab.exact_inf_limit, "dimension up to which the inf-norm is exact"});
  t.push_back({"stability.sign_vectors", stab.sign_vectors, "random sign vectors for the inf-norm estimate"});
  t.push_back({"stability.seed", stab.seed, "seed of the sign vectors"});
  t.push_back({"stability.singular_tol", stab.singular_tol, "sigma_min / sigma_max that counts as singular"});
  t.push_back({"ri.singular_condition", ri.singular_condition, "condition number that counts as singular"});
  t.push_back({"ri.rhs_zero", ri.rhs_zero, "rhs_core below which it counts as zero"});
  t.push_back({"ri_sweep.instances", 10000, "instances in a sweep"});
  t.push_back({"ri_sweep.dims", std::vector<int>{2, 4, 8, 16, 32}, "p = n values cycled through"});
  t.push_back({"ri_sweep.seed", 1, "sweep seed"});
  t.push_back({"verify.trials", 50, "Monte Carlo trials"});
  t.push_back({"verify.seed", 1, "sampling seed"});
  t.push_back({"verify.distribution", to_string(verify.sample.distribution), "entry distribution"});
  t.push_back({"verify.gamma", verify.gamma, "bulk points use Im zeta = p^(-1 + gamma)"});
  t.push_back({"verify.bulk_re", verify.bulk_re, "real parts of bulk points"});
  t.push_back({"verify.outside", Json::array({format_complex(verify.outside.front())}), "points away from the support"});
  t.push_back({"verify.rigidity_tau", verify.rigidity_tau, "bulk locations for rigidity"});
  t.push_back({"verify.sigma2", verify.sigma2, "noise variance for capacity"});
  t.push_back({"verify.density_points", verify.density_points, "grid for the deterministic measure"});
  t.push_back({"verify.kernel_rel", verify.kernel_rel, "eigenvalues below rel * (1 + max) count as zero"});
  t.push_back({"verify.outlier_factor", verify.outlier_factor, "outlier window starts at this multiple of the edge"});
  t.push_back({"verify.outlier_upper", verify.outlier_upper, "outlier window end"});
  t.push_back({"verify.gap_window", Json::array({verify.gap_lo, verify.gap_hi}), "forbidden window in units of delta_pi"});
  t.push_back({"verify.w_seed", verify.w_seed, "seed of the random +-1 test vector"});
  t.push_back({"threshold.percentile", th.percentile, "percentile used for the local-law checks"});
  t.push_back({"threshold.entrywise_bulk", th.entrywise_bulk, "bound on entrywise error * sqrt(p Im zeta)"});
  t.push_back({"threshold.averaged_bulk", th.averaged_bulk, "bound on averaged error * p Im zeta"});
  t.push_back({"threshold.entrywise_outside", th.entrywise_outside, "bound on entrywise error * sqrt(p)"});
  t.push_back({"threshold.averaged_outside", th.averaged_outside, "bound on averaged error * p"});
  t.push_back({"threshold.rigidity", th.rigidity, "bound on median rigidity deviation * p"});
  t.push_back({"threshold.capacity_rel", th.capacity_rel, "relative capacity error"});
  t.push_back({"cli.demo", "uniform-square", "profile used when --profile is absent"});
  t.push_back({"cli.p", 200, "demo profile size"});
  t.push_back({"cli.threads_env", "GRAMSPEC_THREADS", "worker count, 1 when unset"});
  return t;
}

}  // namespace

const std::vector<DefaultEntry>& defaults_table() {
  static const std::vector<DefaultEntry> table = build();
  return table;
}

Json defaults_json() {
  Json j;
  for (const auto& e : defaults_table()) j[e.name] = e.value;
  return j;
}

std::string defaults_markdown() {
  std::ostringstream os;
  os << "| name | default | meaning |\n|---|---|---|\n";
  for (const auto& e : defaults_table()) os << "| `" << e.name << "` | `" << e.value.dump() << "` | " << e.description << " |\n";
  return os.str();
}

}  // namespace gramspec
