#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlr/experiment.hpp"
#include "rlr/solver.hpp"

namespace rlr {

// Grid syntax: a single value "0.5", a comma list "0.1,0.5,1", or
// "start:stop:count:linear" / "start:stop:count:log".
std::vector<double> parse_grid(const std::string& text);

struct SweepConfig {
  ProblemSpec base;  // kappa, regularizer, prior; delta/lambda come from the grids
  std::vector<double> deltas{2.0};
  std::vector<double> lambdas{0.5};
  SolverKnobs knobs;
  int p = 250;
  int trials = 0;    // 0 = theory only
  std::uint64_t master_seed = 1;
  double epsilon = 1e-3;
  FistaKnobs fista;
  int threads = 1;
};

struct SweepRow {
  double delta = 0.0;
  double lambda = 0.0;
  double kappa = 0.0;
  std::string reg;
  double prior_s = 1.0;
  TheoryReport theory;
  std::optional<TrialAggregate> empirical;
  double runtime_ms = 0.0;
  std::string status = "ok";
};

// One row per (delta, lambda) cell, sorted by (delta, lambda). Cells may run
// concurrently; rows are assembled in grid order so output is deterministic.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

// Fixed header; floats serialized with 17 significant digits. Fields that do
// not apply (support metrics without a sparse+l1 theory, empirical columns in
// theory-only rows) are left empty, never silent NaN.
extern const char* kCsvHeader;
void write_csv(std::ostream& out, std::span<const SweepRow> rows);

// Optional static charts: per metric, theory curve per delta (dashed) plus
// empirical means with error bars. Writes <base>_<metric>.svg.
std::vector<std::string> write_svg_charts(const std::string& base_path,
                                          std::span<const SweepRow> rows);

}  // namespace rlr
