#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gramspec/cli.hpp"
#include "gramspec/harness.hpp"
#include "gramspec/io.hpp"
#include "gramspec/stability.hpp"
#include "gramspec/zero.hpp"

#include <sstream>

namespace py = pybind11;
using namespace gramspec;

namespace {

// Reports cross the boundary as JSON text; the Python side parses them.
std::string dump(const Json& j) { return j.dump(); }

VarianceProfile make_profile(const Eigen::Ref<const Mat>& s) { return VarianceProfile(RowMat(s)); }

}  // namespace

PYBIND11_MODULE(_gramspec, m) {
  m.doc() = "Native core of gramspec";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);

  m.def("validate", [](const Eigen::Ref<const Mat>& s, int max_l) {
    ValidationOptions opts;
    opts.max_l = max_l;
    return dump(to_json(validate(make_profile(s), opts)));
  }, py::arg("s"), py::arg("max_l") = 8);

  m.def("solve", [](const Eigen::Ref<const Mat>& s, cplx z, double tol) {
    SolverOptions opts;
    opts.tol = tol;
    const auto sol = solve_continued(SymmetrizedProfile(make_profile(s)), z, opts);
    return py::make_tuple(CVec(sol.m_sym), sol.residual_inf);
  }, py::arg("s"), py::arg("z"), py::arg("tol") = 1e-10);

  m.def("solve_gram", [](const Eigen::Ref<const Mat>& s, cplx zeta) {
    return CVec(solve_gram_at(make_profile(s), zeta).m);
  }, py::arg("s"), py::arg("zeta"));

  m.def("density", [](const Eigen::Ref<const Mat>& s, const std::vector<double>& grid, int threads) {
    DensityOptions opts;
    opts.threads = threads;
    py::gil_scoped_release release;
    const auto curve = density(make_profile(s), grid, opts);
    return dump(to_json(curve));
  }, py::arg("s"), py::arg("grid"), py::arg("threads") = 1);

  m.def("analyze_zero", [](const Eigen::Ref<const Mat>& s) { return dump(to_json(analyze_zero(make_profile(s)))); },
        py::arg("s"));

  m.def("stability", [](const Eigen::Ref<const Mat>& s, cplx z) {
    return dump(to_json(stability_report(SymmetrizedProfile(make_profile(s)), z)));
  }, py::arg("s"), py::arg("z"));

  m.def("rotation_inversion", [](const CMat& u1, const CMat& u2, const Mat& a) {
    return dump(to_json(rotation_inversion_check({u1, u2, a})));
  }, py::arg("u1"), py::arg("u2"), py::arg("a"));

  m.def("sample", [](const Eigen::Ref<const Mat>& s, const std::string& distribution, std::uint64_t seed, int trial) {
    SampleSpec spec;
    spec.profile = make_profile(s);
    spec.distribution = parse_distribution(distribution);
    spec.seed = seed;
    return CMat(sample(spec, trial));
  }, py::arg("s"), py::arg("distribution") = "gaussian-real", py::arg("seed") = 0, py::arg("trial") = 0);

  m.def("spectrum", [](const CMat& x) { return Vec(spectrum(x).eigenvalues); }, py::arg("x"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));

  m.attr("__version__") = GRAMSPEC_VERSION;
}
