#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlr/experiment.hpp"
#include "rlr/selftest.hpp"
#include "rlr/solver.hpp"

namespace py = pybind11;
using namespace rlr;

namespace {

ProblemSpec make_spec(double kappa, double delta, double lambda, const std::string& reg,
                      double sparsity) {
  ProblemSpec spec;
  spec.kappa = kappa;
  spec.delta = delta;
  spec.lambda = lambda;
  spec.regularizer = RegularizerSpec::parse(reg);
  spec.prior = sparsity < 1.0 ? PriorSpec::make_sparse(kappa, sparsity)
                              : PriorSpec::make_gaussian(kappa);
  spec.validate();
  return spec;
}

SolverKnobs make_knobs(int quad_order, double tol, int max_iter, double damping) {
  SolverKnobs k;
  k.quad_order = quad_order;
  k.tol = tol;
  k.max_iter = max_iter;
  k.damping = damping;
  return k;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Asymptotics of regularized logistic regression: fixed-point theory "
            "and a seeded Monte Carlo lab";

  m.def("rho", &rho, py::arg("z"));
  m.def("rho_prime", &rho_prime, py::arg("z"));
  m.def("rho_second", &rho_second, py::arg("z"));
  m.def("q_function", &q_function, py::arg("t"));
  m.def("prox_l1", &prox_l1, py::arg("x"), py::arg("t"));
  m.def("prox_l2sq", &prox_l2sq, py::arg("x"), py::arg("t"));
  m.def("prox_rho", py::overload_cast<double, double>(&prox_rho), py::arg("x"), py::arg("t"));
  m.def("prox_rho_derivative", &prox_rho_derivative, py::arg("x"), py::arg("t"));
  m.def(
      "moreau_envelope",
      [](const std::string& reg, double x, double t) {
        return moreau_envelope(RegularizerSpec::parse(reg), x, t);
      },
      py::arg("reg"), py::arg("x"), py::arg("t"));
  m.def(
      "gauss_hermite",
      [](int order) {
        const QuadratureRule& r = gauss_hermite(order);
        return py::make_tuple(r.nodes, r.weights);
      },
      py::arg("order"), "nodes/weights against the standard normal measure");

  py::class_<FixedPoint>(m, "FixedPoint")
      .def(py::init<>())
      .def_readwrite("alpha", &FixedPoint::alpha)
      .def_readwrite("sigma", &FixedPoint::sigma)
      .def_readwrite("gamma", &FixedPoint::gamma)
      .def_readwrite("theta", &FixedPoint::theta)
      .def_readwrite("tau", &FixedPoint::tau)
      .def_readwrite("r", &FixedPoint::r)
      .def("__repr__", [](const FixedPoint& v) {
        return "FixedPoint(alpha=" + std::to_string(v.alpha) +
               ", sigma=" + std::to_string(v.sigma) + ", gamma=" + std::to_string(v.gamma) +
               ", theta=" + std::to_string(v.theta) + ", tau=" + std::to_string(v.tau) +
               ", r=" + std::to_string(v.r) + ")";
      });

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("point", &SolveResult::point)
      .def_readonly("residual", &SolveResult::residual)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("converged", &SolveResult::converged);

  py::class_<SupportRecovery>(m, "SupportRecovery")
      .def_readonly("t_offsupport", &SupportRecovery::t_offsupport)
      .def_readonly("t_onsupport", &SupportRecovery::t_onsupport)
      .def_readonly("e1", &SupportRecovery::e1)
      .def_readonly("e2", &SupportRecovery::e2);

  py::class_<TheoryReport>(m, "TheoryReport")
      .def_readonly("fixed_point", &TheoryReport::fixed_point)
      .def_readonly("correlation", &TheoryReport::correlation)
      .def_readonly("variance", &TheoryReport::variance)
      .def_readonly("mse_raw", &TheoryReport::mse_raw)
      .def_readonly("mse_debiased", &TheoryReport::mse_debiased)
      .def_readonly("residual", &TheoryReport::residual)
      .def_readonly("converged", &TheoryReport::converged)
      .def_readonly("support", &TheoryReport::support);

  py::class_<MetricStat>(m, "MetricStat")
      .def_readonly("mean", &MetricStat::mean)
      .def_readonly("se", &MetricStat::se)
      .def_readonly("count", &MetricStat::count);

  py::class_<TrialResult>(m, "TrialResult")
      .def_readonly("alpha_hat", &TrialResult::alpha_hat)
      .def_readonly("sigma2_hat", &TrialResult::sigma2_hat)
      .def_readonly("mse_raw", &TrialResult::mse_raw)
      .def_readonly("mse_debiased", &TrialResult::mse_debiased)
      .def_readonly("e1_hat", &TrialResult::e1_hat)
      .def_readonly("e2_hat", &TrialResult::e2_hat)
      .def_readonly("seed", &TrialResult::seed)
      .def_readonly("optimizer_iters", &TrialResult::optimizer_iters)
      .def_readonly("objective_final", &TrialResult::objective_final)
      .def_readonly("converged", &TrialResult::converged)
      .def_readonly("diverged", &TrialResult::diverged);

  py::class_<TrialAggregate>(m, "TrialAggregate")
      .def_readonly("alpha", &TrialAggregate::alpha)
      .def_readonly("sigma2", &TrialAggregate::sigma2)
      .def_readonly("mse_raw", &TrialAggregate::mse_raw)
      .def_readonly("mse_debiased", &TrialAggregate::mse_debiased)
      .def_readonly("e1", &TrialAggregate::e1)
      .def_readonly("e2", &TrialAggregate::e2)
      .def_readonly("trials_total", &TrialAggregate::trials_total)
      .def_readonly("trials_converged", &TrialAggregate::trials_converged)
      .def_readonly("trials_diverged", &TrialAggregate::trials_diverged)
      .def_readonly("rows", &TrialAggregate::rows);

  m.def(
      "solve_fixed_point",
      [](double kappa, double delta, double lambda, const std::string& reg, double sparsity,
         int quad_order, double tol, int max_iter, double damping) {
        return solve_fixed_point(make_spec(kappa, delta, lambda, reg, sparsity),
                                 make_knobs(quad_order, tol, max_iter, damping));
      },
      py::arg("kappa"), py::arg("delta"), py::arg("lambda_"), py::arg("reg") = "l2sq",
      py::arg("sparsity") = 1.0, py::arg("quad_order") = 80, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 2000, py::arg("damping") = 1.0);

  m.def(
      "solve_l2_reduced",
      [](double kappa, double delta, double lambda, const std::string& reg, double sparsity,
         int quad_order, double tol, int max_iter, double damping) {
        return solve_l2_reduced(make_spec(kappa, delta, lambda, reg, sparsity),
                                make_knobs(quad_order, tol, max_iter, damping));
      },
      py::arg("kappa"), py::arg("delta"), py::arg("lambda_") = 0.0, py::arg("reg") = "none",
      py::arg("sparsity") = 1.0, py::arg("quad_order") = 80, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 2000, py::arg("damping") = 1.0);

  m.def(
      "theory_report",
      [](double kappa, double delta, double lambda, const std::string& reg, double sparsity,
         int quad_order, double tol, int max_iter, double damping) {
        return theory_report(make_spec(kappa, delta, lambda, reg, sparsity),
                             make_knobs(quad_order, tol, max_iter, damping));
      },
      py::arg("kappa"), py::arg("delta"), py::arg("lambda_"), py::arg("reg") = "l2sq",
      py::arg("sparsity") = 1.0, py::arg("quad_order") = 80, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 2000, py::arg("damping") = 1.0);

  m.def(
      "gamma_map",
      [](double beta, double z, const FixedPoint& v, double kappa, double delta,
         double lambda, const std::string& reg, double sparsity) {
        return gamma_map(beta, z, v, make_spec(kappa, delta, lambda, reg, sparsity));
      },
      py::arg("beta"), py::arg("z"), py::arg("point"), py::arg("kappa"), py::arg("delta"),
      py::arg("lambda_"), py::arg("reg") = "l2sq", py::arg("sparsity") = 1.0);

  m.def(
      "generate_instance",
      [](int p, double kappa, double delta, double lambda, const std::string& reg,
         double sparsity, std::uint64_t seed) {
        ExperimentConfig cfg;
        cfg.p = p;
        cfg.spec = make_spec(kappa, delta, lambda, reg, sparsity);
        const Instance inst = generate_instance(cfg, seed);
        return py::make_tuple(inst.X, inst.y, inst.beta_star);
      },
      py::arg("p"), py::arg("kappa"), py::arg("delta"), py::arg("lambda_") = 0.0,
      py::arg("reg") = "l2sq", py::arg("sparsity") = 1.0, py::arg("seed") = 1);

  m.def(
      "fit_rlr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double kappa, double lambda,
         const std::string& reg, double tol, int max_iter) {
        ProblemSpec spec = make_spec(kappa, static_cast<double>(X.rows()) / X.cols(),
                                     lambda, reg, 1.0);
        FistaKnobs knobs;
        knobs.tol = tol;
        knobs.max_iter = max_iter;
        const FitResult fit = fit_rlr(X, y, spec, knobs);
        return py::make_tuple(fit.beta, fit.converged, fit.iterations);
      },
      py::arg("X"), py::arg("y"), py::arg("kappa") = 1.0, py::arg("lambda_") = 0.0,
      py::arg("reg") = "none", py::arg("tol") = 1e-9, py::arg("max_iter") = 20000);

  m.def(
      "run_trials",
      [](int p, int trials, std::uint64_t seed, double kappa, double delta, double lambda,
         const std::string& reg, double sparsity, double epsilon, double fista_tol,
         int fista_max_iter) {
        ExperimentConfig cfg;
        cfg.p = p;
        cfg.trials = trials;
        cfg.master_seed = seed;
        cfg.spec = make_spec(kappa, delta, lambda, reg, sparsity);
        cfg.epsilon = epsilon;
        cfg.fista.tol = fista_tol;
        cfg.fista.max_iter = fista_max_iter;
        return run_trials(cfg);
      },
      py::arg("p"), py::arg("trials"), py::arg("seed"), py::arg("kappa"), py::arg("delta"),
      py::arg("lambda_"), py::arg("reg") = "l2sq", py::arg("sparsity") = 1.0,
      py::arg("epsilon") = 1e-3, py::arg("fista_tol") = 1e-9,
      py::arg("fista_max_iter") = 20000);

  m.def(
      "run_selftest",
      [](int quad_order) {
        py::list out;
        for (const SuiteResult& s : run_selftest(quad_order))
          out.append(py::make_tuple(s.name, s.pass, s.ms, s.detail));
        return out;
      },
      py::arg("quad_order") = 80);
}
