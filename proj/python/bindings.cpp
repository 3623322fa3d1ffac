#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dykcd/harness.hpp"
#include "dykcd/instance_io.hpp"

namespace py = pybind11;
using namespace dykcd;

namespace {

struct PySolveResult {
  Vector w;
  std::vector<double> criteria;
  std::string status;
  int sweeps = 0;
};

PySolveResult wrap(RegressionResult&& res) {
  PySolveResult out;
  out.w = std::move(res.w);
  out.criteria.reserve(res.trace.records.size());
  for (const auto& rec : res.trace.records) out.criteria.push_back(rec.criterion);
  out.status = to_string(res.trace.status);
  out.sweeps = static_cast<int>(res.trace.records.size());
  return out;
}

StopRule make_stop(int max_sweeps, double tol) {
  StopRule stop;
  stop.max_sweeps = max_sweeps;
  stop.tol_change = tol;
  return stop;
}

RegressionProblem build_grouped(const Matrix& X, const Vector& y,
                                const std::vector<Eigen::Index>& widths, double lambda) {
  return grouped_problem(X, y, widths, lambda);
}

}  // namespace

PYBIND11_MODULE(_dykcd, m) {
  m.doc() = "Projection and coordinate-descent solvers with their parallel and "
            "nonquadratic generalizations";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<RankError>(m, "RankError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<CertificationError>(m, "CertificationError", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<PySolveResult>(m, "SolveResult")
      .def_readonly("w", &PySolveResult::w)
      .def_readonly("criteria", &PySolveResult::criteria)
      .def_readonly("status", &PySolveResult::status)
      .def_readonly("sweeps", &PySolveResult::sweeps);

  py::class_<RegressionProblem>(m, "RegressionProblem")
      .def_property_readonly("n", &RegressionProblem::n)
      .def_property_readonly("p", &RegressionProblem::p)
      .def_property_readonly("d", &RegressionProblem::d)
      .def_property_readonly("y", &RegressionProblem::y)
      .def("design", &RegressionProblem::design);

  m.def("lasso_problem", &lasso_problem, py::arg("X"), py::arg("y"), py::arg("lam"));
  m.def("grouped_problem", &build_grouped, py::arg("X"), py::arg("y"), py::arg("widths"),
        py::arg("lam"));
  m.def("criterion", &criterion, py::arg("problem"), py::arg("w"));

  m.def(
      "lasso_cd",
      [](const Matrix& X, const Vector& y, double lam, int max_sweeps, double tol) {
        return wrap(lasso_cd(X, y, lam, make_stop(max_sweeps, tol)));
      },
      py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("max_sweeps") = 10000,
      py::arg("tol") = 1e-10);

  m.def(
      "block_cd",
      [](const RegressionProblem& prob, int max_sweeps, double tol) {
        return wrap(block_cd(prob, make_stop(max_sweeps, tol)));
      },
      py::arg("problem"), py::arg("max_sweeps") = 10000, py::arg("tol") = 1e-10);

  m.def(
      "parallel_dykstra_cd",
      [](const RegressionProblem& prob, int max_sweeps, double tol, unsigned threads) {
        return wrap(parallel_dykstra_cd(prob, WeightVector::uniform(prob.d()),
                                        make_stop(max_sweeps, tol), threads));
      },
      py::arg("problem"), py::arg("max_sweeps") = 10000, py::arg("tol") = 1e-10,
      py::arg("threads") = 1);

  m.def(
      "parallel_admm_cd",
      [](const RegressionProblem& prob, double rho, int max_sweeps, double tol,
         unsigned threads) {
        return wrap(parallel_admm_cd(prob, AdmmParams::uniform_blocks(prob.d(), rho),
                                     make_stop(max_sweeps, tol), threads));
      },
      py::arg("problem"), py::arg("rho") = 50.0, py::arg("max_sweeps") = 10000,
      py::arg("tol") = 1e-10, py::arg("threads") = 1);

  m.def(
      "general_cd",
      [](const RegressionProblem& prob, const Vector& labels, int max_sweeps, double tol) {
        return wrap(general_cd(SmoothLoss::logistic(labels), prob, make_stop(max_sweeps, tol)));
      },
      py::arg("problem"), py::arg("labels"), py::arg("max_sweeps") = 10000,
      py::arg("tol") = 1e-10, "Blockwise minimization under the logistic loss");

  m.def(
      "equivalence_check",
      [](const RegressionProblem& prob, int sweeps) {
        StopRule stop;
        stop.max_sweeps = sweeps;
        return equivalence_check(prob, stop);
      },
      py::arg("problem"), py::arg("sweeps") = 100);

  m.def(
      "general_equivalence_check",
      [](const RegressionProblem& prob, const Vector& labels, int sweeps) {
        StopRule stop;
        stop.max_sweeps = sweeps;
        return general_equivalence_check(SmoothLoss::logistic(labels), prob, stop);
      },
      py::arg("problem"), py::arg("labels"), py::arg("sweeps") = 30);

  m.def(
      "reference_lasso",
      [](const Matrix& X, const Vector& y, double lam, double tol_gap) {
        auto [w, cert] = reference_lasso(X, y, lam, tol_gap);
        return py::make_tuple(w, cert.gap);
      },
      py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("tol_gap") = 1e-10);

  m.def(
      "kkt_check",
      [](const Matrix& X, const Vector& y, double lam, const Vector& w, double tol) {
        const auto rep = kkt_check(X, y, lam, w, tol);
        return py::make_tuple(rep.pass, rep.max_violation);
      },
      py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("w"), py::arg("tol") = 1e-8);

  m.def(
      "gen_instance",
      [](Eigen::Index n, Eigen::Index p, Eigen::Index s, double noise_sd, double lam,
         std::uint64_t seed, int trial) {
        InstanceSpec spec{n, p, s, noise_sd, lam, seed, 1};
        const auto prob = gen_instance(spec, trial);
        return py::make_tuple(prob.design(), prob.y());
      },
      py::arg("n"), py::arg("p"), py::arg("s"), py::arg("noise_sd"), py::arg("lam"),
      py::arg("seed"), py::arg("trial") = 0);

  m.def("active_set", &active_set, py::arg("w"), py::arg("tol") = 1e-9);
  m.def("bound_iusem", &bound_iusem, py::arg("X"), py::arg("active"));
  m.def("bound_deutsch", &bound_deutsch, py::arg("X"), py::arg("active"));
  m.def(
      "bound_parallel",
      [](const Matrix& X, const std::vector<Eigen::Index>& active, Eigen::Index d) {
        return bound_parallel(X, active, WeightVector::uniform(d));
      },
      py::arg("X"), py::arg("active"), py::arg("d"),
      "Product-space constant at uniform weights 1/d");
  m.def(
      "mu_lower_bound",
      [](const std::vector<Vector>& normals) { return mu_lower_bound(normals); },
      py::arg("normals"));
}
