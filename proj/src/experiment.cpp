#include "rlr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace rlr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double smooth_loss(const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(u.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rho(u[i]) - y[i] * u[i];
  return acc / n;
}

}  // namespace

int ExperimentConfig::n() const {
  return static_cast<int>(std::lround(spec.delta * p));
}

void ExperimentConfig::validate() const {
  spec.validate();
  if (p < 1) throw std::invalid_argument("experiment: p must be >= 1");
  if (n() < 1) throw std::invalid_argument("experiment: round(delta*p) must be >= 1");
  if (trials < 0) throw std::invalid_argument("experiment: trials must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("experiment: epsilon must be > 0");
}

std::uint64_t trial_seed(std::uint64_t master_seed, int trial_index) {
  return splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(trial_index + 1));
}

Instance generate_instance(const ExperimentConfig& config, std::uint64_t seed) {
  const int p = config.p;
  const int n = config.n();
  const PriorSpec& prior = config.spec.prior;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Instance inst;
  inst.beta_star.resize(p);
  if (prior.kind == PriorSpec::Kind::gaussian) {
    for (int j = 0; j < p; ++j) inst.beta_star[j] = prior.kappa * normal(rng);
  } else {
    const double scale = prior.kappa / std::sqrt(prior.sparsity);
    for (int j = 0; j < p; ++j) {
      const double u = unif(rng);
      inst.beta_star[j] = u < prior.sparsity ? scale * normal(rng) : 0.0;
    }
  }

  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
  inst.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) inst.X(i, j) = inv_sqrt_p * normal(rng);

  inst.y.resize(n);
  const Eigen::VectorXd signal = inst.X * inst.beta_star;
  for (int i = 0; i < n; ++i)
    inst.y[i] = unif(rng) < rho_prime(signal[i]) ? 1.0 : 0.0;
  return inst;
}

FitResult fit_rlr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ProblemSpec& spec, const FistaKnobs& knobs) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const double pen = spec.lambda / p;
  const RegularizerSpec& f = spec.regularizer;
  const double blowup = 1e6 * spec.kappa * std::sqrt(static_cast<double>(p));

  auto penalty = [&](const Eigen::VectorXd& b) {
    if (f.kind == Regularizer::none || pen == 0.0) return 0.0;
    double acc = 0.0;
    for (int j = 0; j < p; ++j) acc += f.value(b[j]);
    return pen * acc;
  };
  auto prox_step = [&](const Eigen::VectorXd& b, double t, Eigen::VectorXd& out) {
    if (f.kind == Regularizer::none || pen == 0.0) {
      out = b;
      return;
    }
    const double scale = t * pen;
    out.resize(p);
    for (int j = 0; j < p; ++j) out[j] = f.prox(b[j], scale);
  };

  FitResult res;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd yk = b, bn(p), grad(p), probe(p);
  double t_mom = 1.0;
  double lip = 1.0 / knobs.init_step;
  double obj_prev = smooth_loss(X * b, y) + penalty(b);

  for (int it = 1; it <= knobs.max_iter; ++it) {
    const Eigen::VectorXd u = X * yk;
    const double f0 = smooth_loss(u, y);
    Eigen::VectorXd sig(n);
    for (int i = 0; i < n; ++i) sig[i] = rho_prime(u[i]) - y[i];
    grad.noalias() = X.transpose() * sig / n;

    // Backtracking on the smooth part.
    double step = 1.0 / lip;
    for (;;) {
      probe = yk - step * grad;
      prox_step(probe, step, bn);
      const Eigen::VectorXd d = bn - yk;
      const double quad = f0 + grad.dot(d) + 0.5 * lip * d.squaredNorm();
      if (smooth_loss(X * bn, y) <= quad + 1e-14 * (1.0 + std::abs(f0))) break;
      lip *= 2.0;
      step = 1.0 / lip;
      if (lip > 1e12) break;
    }

    const double grad_map = (yk - bn).norm() * lip;
    const double obj = smooth_loss(X * bn, y) + penalty(bn);

    if (bn.norm() > blowup) {
      res.beta = bn;
      res.iterations = it;
      res.objective = obj;
      res.grad_map_norm = grad_map;
      res.diverged = true;
      return res;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    if (obj > obj_prev) {
      yk = bn;  // monotone restart
      t_mom = 1.0;
    } else {
      yk = bn + ((t_mom - 1.0) / t_next) * (bn - b);
      t_mom = t_next;
    }

    const double rel_dec = std::abs(obj_prev - obj) / std::max(1.0, std::abs(obj));
    b = bn;
    if (grad_map < knobs.tol && rel_dec < knobs.tol) {
      res.beta = b;
      res.iterations = it;
      res.objective = obj;
      res.grad_map_norm = grad_map;
      res.converged = true;
      return res;
    }
    obj_prev = obj;
    lip = std::max(lip / 1.5, 1e-6);
  }

  res.beta = b;
  res.iterations = knobs.max_iter;
  res.objective = obj_prev;
  res.grad_map_norm = std::numeric_limits<double>::quiet_NaN();
  return res;
}

TrialResult measure_trial(const Eigen::VectorXd& beta_hat,
                          const Eigen::VectorXd& beta_star, double epsilon) {
  const int p = static_cast<int>(beta_star.size());
  TrialResult t;
  const double norm2 = beta_star.squaredNorm();
  t.alpha_hat = norm2 > 0.0 ? beta_hat.dot(beta_star) / norm2 : 0.0;
  t.sigma2_hat = (beta_hat - t.alpha_hat * beta_star).squaredNorm() / p;
  t.mse_raw = (beta_hat - beta_star).squaredNorm() / p;
  t.mse_debiased = t.alpha_hat != 0.0
                       ? (beta_hat / t.alpha_hat - beta_star).squaredNorm() / p
                       : std::numeric_limits<double>::infinity();

  int on = 0, off = 0, missed = 0, false_alarm = 0;
  for (int j = 0; j < p; ++j) {
    const bool in_support = beta_star[j] != 0.0;
    const bool detected = std::abs(beta_hat[j]) > epsilon;
    if (in_support) {
      ++on;
      if (!detected) ++missed;
    } else {
      ++off;
      if (detected) ++false_alarm;
    }
  }
  t.e1_defined = off > 0;
  t.e2_defined = on > 0;
  t.e1_hat = t.e1_defined ? static_cast<double>(false_alarm) / off : 0.0;
  t.e2_hat = t.e2_defined ? static_cast<double>(missed) / on : 0.0;
  return t;
}

namespace {

MetricStat aggregate(const std::vector<double>& xs) {
  MetricStat m;
  m.count = static_cast<int>(xs.size());
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / m.count;
  if (m.count > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (m.count - 1) / m.count);
  }
  return m;
}

}  // namespace

TrialAggregate run_trials(const ExperimentConfig& config) {
  config.validate();
  TrialAggregate agg;
  agg.trials_total = config.trials;
  agg.rows.resize(config.trials);

  auto run_one = [&](int t) {
    const std::uint64_t seed = trial_seed(config.master_seed, t);
    const Instance inst = generate_instance(config, seed);
    const FitResult fit = fit_rlr(inst.X, inst.y, config.spec, config.fista);
    TrialResult row = measure_trial(fit.beta, inst.beta_star, config.epsilon);
    row.seed = seed;
    row.optimizer_iters = fit.iterations;
    row.objective_final = fit.objective;
    row.converged = fit.converged;
    row.diverged = fit.diverged;
    agg.rows[t] = row;
  };

  const int workers = std::max(1, config.threads);
  if (workers == 1 || config.trials <= 1) {
    for (int t = 0; t < config.trials; ++t) run_one(t);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(workers, config.trials); ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < config.trials; t = next.fetch_add(1))
          run_one(t);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<double> a, s2, mr, md, e1, e2;
  for (const TrialResult& row : agg.rows) {
    if (row.diverged) {
      ++agg.trials_diverged;
      continue;
    }
    if (!row.converged) continue;
    ++agg.trials_converged;
    a.push_back(row.alpha_hat);
    s2.push_back(row.sigma2_hat);
    mr.push_back(row.mse_raw);
    if (std::isfinite(row.mse_debiased)) md.push_back(row.mse_debiased);
    if (row.e1_defined) e1.push_back(row.e1_hat);
    if (row.e2_defined) e2.push_back(row.e2_hat);
  }
  agg.alpha = aggregate(a);
  agg.sigma2 = aggregate(s2);
  agg.mse_raw = aggregate(mr);
  agg.mse_debiased = aggregate(md);
  agg.e1 = aggregate(e1);
  agg.e2 = aggregate(e2);
  return agg;
}

}  // namespace rlr
