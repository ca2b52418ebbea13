#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rlr/solver.hpp"

namespace rlr {

struct FistaKnobs {
  double tol = 1e-9;      // on the prox-gradient mapping norm and relative objective decrease
  int max_iter = 20000;
  double init_step = 1.0;
};

struct ExperimentConfig {
  int p = 250;
  ProblemSpec spec;
  int trials = 100;
  std::uint64_t master_seed = 1;
  double epsilon = 1e-3;  // support threshold
  FistaKnobs fista;
  int threads = 1;

  int n() const;          // round(delta * p)
  void validate() const;
};

// Per-trial seed: splitmix over (master_seed, trial index), so trials are
// reproducible independent of execution order or worker count.
std::uint64_t trial_seed(std::uint64_t master_seed, int trial_index);

struct Instance {
  Eigen::MatrixXd X;         // n x p, rows ~ N(0, I/p)
  Eigen::VectorXd y;         // labels in {0,1}
  Eigen::VectorXd beta_star; // entries ~ prior
};

Instance generate_instance(const ExperimentConfig& config, std::uint64_t seed);

struct FitResult {
  Eigen::VectorXd beta;
  int iterations = 0;
  double objective = 0.0;
  double grad_map_norm = 0.0;
  bool converged = false;
  bool diverged = false;  // iterate blow-up (e.g. nonexistent MLE)
};

// Minimizes (1/n) sum_i [rho(x_i'b) - y_i x_i'b] + (lambda/p) f(b) by FISTA
// with backtracking line search and monotone restart.
FitResult fit_rlr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ProblemSpec& spec, const FistaKnobs& knobs = {});

struct TrialResult {
  double alpha_hat = 0.0;      // b'beta* / ||beta*||^2
  double sigma2_hat = 0.0;     // (1/p)||b - alpha_hat beta*||^2
  double mse_raw = 0.0;        // (1/p)||b - beta*||^2
  double mse_debiased = 0.0;   // (1/p)||b/alpha_hat - beta*||^2
  double e1_hat = 0.0;         // |support(b) \ support(beta*)| / |off-support|
  double e2_hat = 0.0;         // |support(beta*) \ support(b)| / |support|
  bool e1_defined = false;
  bool e2_defined = false;
  std::uint64_t seed = 0;
  int optimizer_iters = 0;
  double objective_final = 0.0;
  bool converged = false;
  bool diverged = false;
};

TrialResult measure_trial(const Eigen::VectorXd& beta_hat,
                          const Eigen::VectorXd& beta_star, double epsilon);

struct MetricStat {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  int count = 0;
};

struct TrialAggregate {
  MetricStat alpha, sigma2, mse_raw, mse_debiased, e1, e2;
  int trials_total = 0;
  int trials_converged = 0;
  int trials_diverged = 0;
  std::vector<TrialResult> rows;  // one per trial, in trial order
};

// Runs all trials (optionally on a worker pool); aggregates over converged
// trials only, in deterministic trial order.
TrialAggregate run_trials(const ExperimentConfig& config);

}  // namespace rlr
