#include "rlr/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rlr {

std::vector<double> parse_grid(const std::string& text) {
  auto parse_one = [](const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number in grid: '" + s + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 4)
      throw std::invalid_argument("grid must be start:stop:count:linear|log, got '" + text + "'");
    const double start = parse_one(parts[0]);
    const double stop = parse_one(parts[1]);
    const int count = static_cast<int>(parse_one(parts[2]));
    if (count < 1) throw std::invalid_argument("grid count must be >= 1");
    std::vector<double> out(count);
    if (parts[3] == "linear") {
      for (int i = 0; i < count; ++i)
        out[i] = count == 1 ? start : start + (stop - start) * i / (count - 1);
    } else if (parts[3] == "log") {
      if (!(start > 0.0) || !(stop > 0.0))
        throw std::invalid_argument("log grid requires positive endpoints");
      const double ls = std::log(start), le = std::log(stop);
      for (int i = 0; i < count; ++i)
        out[i] = count == 1 ? start : std::exp(ls + (le - ls) * i / (count - 1));
    } else {
      throw std::invalid_argument("grid scale must be linear or log, got '" + parts[3] + "'");
    }
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_one(item));
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

namespace {

// Per-cell seed: mix the cell coordinates into the master seed so grid cells
// draw independent instance batches (still fully reproducible).
std::uint64_t cell_seed(std::uint64_t master, double delta, double lambda) {
  auto mix = [](std::uint64_t h, std::uint64_t k) {
    h ^= k + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
  };
  std::uint64_t h = master;
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(delta));
  std::memcpy(&bits, &delta, sizeof(bits));
  h = mix(h, bits);
  std::memcpy(&bits, &lambda, sizeof(bits));
  return mix(h, bits);
}

SweepRow run_cell(const SweepConfig& config, double delta, double lambda) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.delta = delta;
  row.lambda = lambda;
  row.kappa = config.base.kappa;
  row.reg = config.base.regularizer.name();
  row.prior_s =
      config.base.prior.kind == PriorSpec::Kind::sparse ? config.base.prior.sparsity : 1.0;

  ProblemSpec spec = config.base;
  spec.delta = delta;
  spec.lambda = lambda;

  try {
    row.theory = theory_report(spec, config.knobs);
    if (!row.theory.converged) row.status = "theory-nonconverged";
  } catch (const std::exception& e) {
    row.status = std::string("theory-error: ") + e.what();
    row.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return row;
  }

  if (config.trials > 0) {
    ExperimentConfig exp;
    exp.p = config.p;
    exp.spec = spec;
    exp.trials = config.trials;
    exp.master_seed = cell_seed(config.master_seed, delta, lambda);
    exp.epsilon = config.epsilon;
    exp.fista = config.fista;
    exp.threads = 1;  // parallelism lives at the cell level
    row.empirical = run_trials(exp);
    if (row.empirical->trials_converged == 0 && row.status == "ok")
      row.status = "empirical-noconverged";
  }
  row.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
  std::vector<std::pair<double, double>> cells;
  std::vector<double> deltas = config.deltas, lambdas = config.lambdas;
  std::sort(deltas.begin(), deltas.end());
  std::sort(lambdas.begin(), lambdas.end());
  for (double d : deltas)
    for (double l : lambdas) cells.emplace_back(d, l);

  std::vector<SweepRow> rows(cells.size());
  const int workers =
      std::max(1, std::min<int>(config.threads, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      rows[i] = run_cell(config, cells[i].first, cells[i].second);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
          rows[i] = run_cell(config, cells[i].first, cells[i].second);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

const char* kCsvHeader =
    "delta,lambda,kappa,reg,s,"
    "th_alpha,th_sigma2,th_mse_raw,th_mse_debiased,th_e1,th_e2,th_residual,"
    "emp_alpha_mean,emp_alpha_se,emp_sigma2_mean,emp_sigma2_se,"
    "emp_mse_mean,emp_mse_se,emp_e1_mean,emp_e1_se,emp_e2_mean,emp_e2_se,"
    "trials_converged,runtime_ms,status";

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void put_stat(std::ostream& out, const MetricStat& m) {
  if (m.count > 0)
    out << fmt17(m.mean) << ',' << fmt17(m.se);
  else
    out << ",";
}

}  // namespace

void write_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kCsvHeader << '\n';
  for (const SweepRow& row : rows) {
    out << fmt17(row.delta) << ',' << fmt17(row.lambda) << ',' << fmt17(row.kappa)
        << ',' << row.reg << ',' << fmt17(row.prior_s) << ',';
    out << fmt17(row.theory.correlation) << ',' << fmt17(row.theory.variance) << ','
        << fmt17(row.theory.mse_raw) << ',' << fmt17(row.theory.mse_debiased) << ',';
    if (row.theory.support)
      out << fmt17(row.theory.support->e1) << ',' << fmt17(row.theory.support->e2) << ',';
    else
      out << ",,";
    out << fmt17(row.theory.residual) << ',';
    if (row.empirical) {
      const TrialAggregate& e = *row.empirical;
      put_stat(out, e.alpha); out << ',';
      put_stat(out, e.sigma2); out << ',';
      put_stat(out, e.mse_raw); out << ',';
      put_stat(out, e.e1); out << ',';
      put_stat(out, e.e2); out << ',';
      out << e.trials_converged << ',';
    } else {
      out << ",,,,,,,,,,,";
    }
    out << fmt17(row.runtime_ms) << ',' << row.status << '\n';
  }
}

namespace {

struct Series {
  double delta;
  std::vector<double> x, y, err;  // err empty for theory curves
};

std::string svg_chart(const std::string& title,
                      const std::vector<Series>& theory,
                      const std::vector<Series>& empirical) {
  const int W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto scan = [&](const std::vector<Series>& ss) {
    for (const Series& s : ss)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        const double e = s.err.empty() ? 0.0 : s.err[i];
        ymin = std::min(ymin, s.y[i] - e);
        ymax = std::max(ymax, s.y[i] + e);
      }
  };
  scan(theory);
  scan(empirical);
  if (!(xmax > xmin)) { xmax = xmin + 1.0; }
  if (!(ymax > ymin)) { ymax = ymin + 1.0; }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad; ymax += ypad;
  auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
    << "' font-family='sans-serif' font-size='12'>\n";
  s << "<rect width='100%' height='100%' fill='white'/>\n";
  s << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
    << "</text>\n";
  // axes
  s << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR << "' y2='"
    << H - MB << "' stroke='black'/>\n";
  s << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='" << H - MB
    << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    char lab[32];
    std::snprintf(lab, sizeof(lab), "%.3g", xv);
    s << "<text x='" << px(xv) << "' y='" << H - MB + 18
      << "' text-anchor='middle'>" << lab << "</text>\n";
    std::snprintf(lab, sizeof(lab), "%.3g", yv);
    s << "<text x='" << ML - 8 << "' y='" << py(yv) + 4 << "' text-anchor='end'>" << lab
      << "</text>\n";
  }
  s << "<text x='" << (ML + W - MR) / 2 << "' y='" << H - 12
    << "' text-anchor='middle'>lambda</text>\n";
  int ci = 0;
  for (const Series& th : theory) {
    const char* col = colors[ci % 5];
    s << "<polyline fill='none' stroke='" << col << "' stroke-dasharray='6,4' points='";
    for (std::size_t i = 0; i < th.x.size(); ++i)
      s << px(th.x[i]) << ',' << py(th.y[i]) << ' ';
    s << "'/>\n";
    s << "<text x='" << W - MR - 4 << "' y='" << MT + 16 * ci + 12
      << "' text-anchor='end' fill='" << col << "'>delta=" << th.delta << "</text>\n";
    ++ci;
  }
  ci = 0;
  for (const Series& em : empirical) {
    const char* col = colors[ci % 5];
    for (std::size_t i = 0; i < em.x.size(); ++i) {
      if (!em.err.empty() && em.err[i] > 0.0)
        s << "<line x1='" << px(em.x[i]) << "' y1='" << py(em.y[i] - em.err[i])
          << "' x2='" << px(em.x[i]) << "' y2='" << py(em.y[i] + em.err[i])
          << "' stroke='" << col << "'/>\n";
      s << "<circle cx='" << px(em.x[i]) << "' cy='" << py(em.y[i]) << "' r='3' fill='"
        << col << "'/>\n";
    }
    ++ci;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::vector<std::string> write_svg_charts(const std::string& base_path,
                                          std::span<const SweepRow> rows) {
  struct Metric {
    const char* name;
    std::function<double(const SweepRow&)> th;
    std::function<bool(const SweepRow&)> has_th;
    std::function<const MetricStat*(const SweepRow&)> emp;
  };
  const std::vector<Metric> metrics = {
      {"alpha", [](const SweepRow& r) { return r.theory.correlation; },
       [](const SweepRow&) { return true; },
       [](const SweepRow& r) { return r.empirical ? &r.empirical->alpha : nullptr; }},
      {"sigma2", [](const SweepRow& r) { return r.theory.variance; },
       [](const SweepRow&) { return true; },
       [](const SweepRow& r) { return r.empirical ? &r.empirical->sigma2 : nullptr; }},
      {"mse", [](const SweepRow& r) { return r.theory.mse_raw; },
       [](const SweepRow&) { return true; },
       [](const SweepRow& r) { return r.empirical ? &r.empirical->mse_raw : nullptr; }},
      {"e1", [](const SweepRow& r) { return r.theory.support ? r.theory.support->e1 : 0.0; },
       [](const SweepRow& r) { return r.theory.support.has_value(); },
       [](const SweepRow& r) { return r.empirical ? &r.empirical->e1 : nullptr; }},
      {"e2", [](const SweepRow& r) { return r.theory.support ? r.theory.support->e2 : 0.0; },
       [](const SweepRow& r) { return r.theory.support.has_value(); },
       [](const SweepRow& r) { return r.empirical ? &r.empirical->e2 : nullptr; }},
  };

  std::vector<double> deltas;
  for (const SweepRow& r : rows)
    if (std::find(deltas.begin(), deltas.end(), r.delta) == deltas.end())
      deltas.push_back(r.delta);
  std::sort(deltas.begin(), deltas.end());

  std::vector<std::string> written;
  for (const Metric& m : metrics) {
    std::vector<Series> th, em;
    bool any = false;
    for (double d : deltas) {
      Series ts{d, {}, {}, {}}, es{d, {}, {}, {}};
      for (const SweepRow& r : rows) {
        if (r.delta != d) continue;
        if (m.has_th(r)) {
          ts.x.push_back(r.lambda);
          ts.y.push_back(m.th(r));
          any = true;
        }
        const MetricStat* st = m.emp(r);
        if (st && st->count > 0) {
          es.x.push_back(r.lambda);
          es.y.push_back(st->mean);
          es.err.push_back(st->se);
        }
      }
      if (!ts.x.empty()) th.push_back(std::move(ts));
      if (!es.x.empty()) em.push_back(std::move(es));
    }
    if (!any) continue;
    const std::string path = base_path + "_" + m.name + ".svg";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << svg_chart(m.name, th, em);
    written.push_back(path);
  }
  return written;
}

}  // namespace rlr
