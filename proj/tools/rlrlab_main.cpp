// Command-line front end: theory predictions, Monte Carlo sweeps, selftest.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "rlr/selftest.hpp"
#include "rlr/sweep.hpp"

#ifdef _WIN32
#define ISATTY(f) 0
#else
#include <unistd.h>
#define ISATTY(f) isatty(f)
#endif

namespace {

bool use_color() {
  return ISATTY(fileno(stdout)) && std::getenv("NO_COLOR") == nullptr;
}

std::string green(const std::string& s) {
  return use_color() ? "\033[32m" + s + "\033[0m" : s;
}
std::string red(const std::string& s) {
  return use_color() ? "\033[31m" + s + "\033[0m" : s;
}

// Flat INI-style config: [problem] / [solver] / [experiment] / [sweep]
// sections with key = value lines. Keys are stored as "section.key".
std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
  static const char* known_sections[] = {"problem", "solver", "experiment", "sweep"};
  std::map<std::string, std::string> kv;
  std::string line, section;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw CLI::ValidationError(
            "--config", path + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      bool ok = false;
      for (const char* s : known_sections) ok = ok || section == s;
      if (!ok)
        throw CLI::ValidationError(
            "--config", path + ":" + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw CLI::ValidationError(
          "--config", path + ":" + std::to_string(lineno) + ": expected 'key = value' inside a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw CLI::ValidationError(
          "--config", path + ":" + std::to_string(lineno) + ": empty key or value");
    kv[section + "." + key] = value;
  }
  return kv;
}

struct CommonArgs {
  std::string config_path;
  std::string reg = "l2sq";
  double kappa = 1.0;
  std::string delta = "2";
  std::string lambda;  // empty = default (0.5, or 0 for --reg none)
  std::optional<double> sparsity;
  int p = 250;
  int trials = 100;
  std::uint64_t seed = 1;
  double epsilon = 1e-3;
  int quad_order = 80;
  double tol = 1e-10;
  int max_iter = 2000;
  std::string out;
  bool svg = false;
  int threads = 1;
  double fista_tol = 1e-9;
  int fista_max_iter = 20000;
};

void add_common(CLI::App* cmd, CommonArgs& a, std::map<std::string, CLI::Option*>& opts) {
  opts["config"] = cmd->add_option("--config", a.config_path, "config file (INI sections)");
  opts["reg"] = cmd->add_option("--reg", a.reg, "regularizer: none|l1|l2sq")
                    ->check(CLI::IsMember({"none", "l1", "l2sq"}));
  opts["kappa"] = cmd->add_option("--kappa", a.kappa, "signal strength");
  opts["delta"] = cmd->add_option("--delta", a.delta, "n/p ratio, value or grid");
  opts["lambda"] = cmd->add_option("--lambda", a.lambda, "penalty weight, value or grid");
  opts["sparsity"] = cmd->add_option("--sparsity", a.sparsity,
                                     "sparse prior factor s in (0,1]; selects the sparse prior");
  opts["p"] = cmd->add_option("--p", a.p, "feature dimension");
  opts["trials"] = cmd->add_option("--trials", a.trials, "Monte Carlo trials per cell");
  opts["seed"] = cmd->add_option("--seed", a.seed, "master seed");
  opts["epsilon"] = cmd->add_option("--epsilon", a.epsilon, "support threshold");
  opts["quad-order"] = cmd->add_option("--quad-order", a.quad_order, "quadrature order");
  opts["tol"] = cmd->add_option("--tol", a.tol, "fixed-point tolerance");
  opts["max-iter"] = cmd->add_option("--max-iter", a.max_iter, "fixed-point iteration cap");
  opts["out"] = cmd->add_option("--out", a.out, "CSV output path (default: stdout)");
  opts["svg"] = cmd->add_flag("--svg", a.svg, "also write per-metric SVG charts");
  opts["threads"] = cmd->add_option("--threads", a.threads, "worker count for grid cells");
  opts["fista-tol"] = cmd->add_option("--fista-tol", a.fista_tol, "optimizer tolerance");
  opts["fista-max-iter"] =
      cmd->add_option("--fista-max-iter", a.fista_max_iter, "optimizer iteration cap");
}

// Config-file values fill in anything the command line did not set.
void apply_config(const std::map<std::string, std::string>& kv, CommonArgs& a,
                  std::map<std::string, CLI::Option*>& opts) {
  auto want = [&](const char* flag, const char* key) -> const std::string* {
    if (opts.count(flag) && opts[flag]->count() > 0) return nullptr;
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto bad = [](const std::string& key, const std::string& val) {
    throw CLI::ValidationError("config", "field " + key + ": bad value '" + val + "'");
  };
  auto to_d = [&](const std::string& key, const std::string& val) {
    try { return std::stod(val); } catch (...) { bad(key, val); }
    return 0.0;
  };
  auto to_i = [&](const std::string& key, const std::string& val) {
    try { return std::stoi(val); } catch (...) { bad(key, val); }
    return 0;
  };
  auto to_u64 = [&](const std::string& key, const std::string& val) {
    try { return static_cast<std::uint64_t>(std::stoull(val)); } catch (...) { bad(key, val); }
    return std::uint64_t{0};
  };

  if (auto* v = want("reg", "problem.reg")) a.reg = *v;
  if (auto* v = want("kappa", "problem.kappa")) a.kappa = to_d("problem.kappa", *v);
  if (auto* v = want("delta", "problem.delta")) a.delta = *v;
  if (auto* v = want("lambda", "problem.lambda")) a.lambda = *v;
  if (auto* v = want("sparsity", "problem.sparsity")) a.sparsity = to_d("problem.sparsity", *v);
  if (auto* v = want("quad-order", "solver.quad-order"))
    a.quad_order = to_i("solver.quad-order", *v);
  if (auto* v = want("tol", "solver.tol")) a.tol = to_d("solver.tol", *v);
  if (auto* v = want("max-iter", "solver.max-iter")) a.max_iter = to_i("solver.max-iter", *v);
  if (auto* v = want("p", "experiment.p")) a.p = to_i("experiment.p", *v);
  if (auto* v = want("trials", "experiment.trials")) a.trials = to_i("experiment.trials", *v);
  if (auto* v = want("seed", "experiment.seed")) a.seed = to_u64("experiment.seed", *v);
  if (auto* v = want("epsilon", "experiment.epsilon"))
    a.epsilon = to_d("experiment.epsilon", *v);
  if (auto* v = want("fista-tol", "experiment.fista-tol"))
    a.fista_tol = to_d("experiment.fista-tol", *v);
  if (auto* v = want("fista-max-iter", "experiment.fista-max-iter"))
    a.fista_max_iter = to_i("experiment.fista-max-iter", *v);
  if (auto* v = want("threads", "experiment.threads")) a.threads = to_i("experiment.threads", *v);
  if (auto* v = want("out", "sweep.out")) a.out = *v;
  if (auto* v = want("svg", "sweep.svg")) a.svg = (*v == "true" || *v == "1" || *v == "yes");
}

rlr::SweepConfig build_sweep_config(const CommonArgs& a, bool theory_only) {
  rlr::SweepConfig cfg;
  cfg.base.kappa = a.kappa;
  cfg.base.regularizer = rlr::RegularizerSpec::parse(a.reg);
  cfg.base.prior = a.sparsity ? rlr::PriorSpec::make_sparse(a.kappa, *a.sparsity)
                              : rlr::PriorSpec::make_gaussian(a.kappa);
  cfg.deltas = rlr::parse_grid(a.delta);
  const std::string lambda_text =
      !a.lambda.empty() ? a.lambda
                        : (cfg.base.regularizer.kind == rlr::Regularizer::none ? "0" : "0.5");
  cfg.lambdas = rlr::parse_grid(lambda_text);
  cfg.knobs.quad_order = a.quad_order;
  cfg.knobs.tol = a.tol;
  cfg.knobs.max_iter = a.max_iter;
  cfg.p = a.p;
  cfg.trials = theory_only ? 0 : a.trials;
  cfg.master_seed = a.seed;
  cfg.epsilon = a.epsilon;
  cfg.fista.tol = a.fista_tol;
  cfg.fista.max_iter = a.fista_max_iter;
  cfg.threads = a.threads;

  for (double d : cfg.deltas)
    if (!(d > 0.0)) throw CLI::ValidationError("--delta", "delta values must be > 0");
  for (double l : cfg.lambdas) {
    if (l < 0.0) throw CLI::ValidationError("--lambda", "lambda values must be >= 0");
    if (l == 0.0 && cfg.base.regularizer.kind == rlr::Regularizer::l1)
      throw CLI::ValidationError(
          "--lambda", "lambda = 0 with --reg l1 is not supported; use --reg none");
    if (l != 0.0 && cfg.base.regularizer.kind == rlr::Regularizer::none)
      throw CLI::ValidationError("--lambda", "--reg none requires lambda = 0");
  }
  if (!(a.kappa > 0.0)) throw CLI::ValidationError("--kappa", "kappa must be > 0");
  if (a.sparsity && !(*a.sparsity > 0.0 && *a.sparsity <= 1.0))
    throw CLI::ValidationError("--sparsity", "sparsity must be in (0, 1]");
  return cfg;
}

int emit(const rlr::SweepConfig& cfg, const CommonArgs& a) {
  const std::vector<rlr::SweepRow> rows = rlr::run_sweep(cfg);
  if (a.out.empty()) {
    rlr::write_csv(std::cout, rows);
  } else {
    std::ofstream f(a.out);
    if (!f) {
      std::cerr << "error: cannot write " << a.out << "\n";
      return 1;
    }
    rlr::write_csv(f, rows);
  }
  if (a.svg) {
    const std::string base = a.out.empty() ? "rlrlab" : a.out.substr(0, a.out.find_last_of('.'));
    for (const std::string& path : rlr::write_svg_charts(base, rows))
      std::cerr << "wrote " << path << "\n";
  }
  for (const rlr::SweepRow& row : rows)
    if (row.status != "ok") {
      std::cerr << "cell delta=" << row.delta << " lambda=" << row.lambda << ": "
                << row.status << "\n";
      return 2;
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic theory and Monte Carlo validation for regularized logistic regression"};
  app.require_subcommand(1);

  CommonArgs pa, sa;
  std::map<std::string, CLI::Option*> popts, sopts;
  CLI::App* predict = app.add_subcommand("predict", "theory-only rows for a (delta, lambda) grid");
  add_common(predict, pa, popts);
  CLI::App* sweep = app.add_subcommand("sweep", "theory plus seeded Monte Carlo per grid cell");
  add_common(sweep, sa, sopts);

  CLI::App* selftest = app.add_subcommand("selftest", "run the library invariant suites");
  int st_order = 80;
  selftest->add_option("--quad-order", st_order, "degrade/boost the quadrature order")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);

    if (selftest->parsed()) {
      bool all = true;
      for (const rlr::SuiteResult& s : rlr::run_selftest(st_order)) {
        std::printf("%-42s %s  (%8.1f ms)  %s\n", s.name.c_str(),
                    s.pass ? green("PASS").c_str() : red("FAIL").c_str(), s.ms,
                    s.detail.c_str());
        if (!s.pass && all) {
          all = false;
          std::fprintf(stderr, "first failing invariant: %s\n", s.name.c_str());
        }
      }
      return all ? 0 : 1;
    }

    CommonArgs& a = predict->parsed() ? pa : sa;
    auto& opts = predict->parsed() ? popts : sopts;
    if (!a.config_path.empty()) apply_config(load_config(a.config_path), a, opts);
    const rlr::SweepConfig cfg = build_sweep_config(a, predict->parsed());
    return emit(cfg, a);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
