#include "nestopt/harness/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nestopt/asa.hpp"
#include "nestopt/harness/instance.hpp"
#include "nestopt/nasa.hpp"
#include "nestopt/problems.hpp"

namespace nestopt::harness {

const char* const kSummaryHeader = "N,seed,R,V,g_gap_sq,z_err_sq,F_gap,V_avg,g_gap_sq_avg,status";
const char* const kTrajectoryHeader = "k,tau,V,d_sq,g_gap_sq,W,z_err_sq";
const char* const kPlotHeader = "N,mean_V,stderr_V,mean_g_gap,slope";

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

void write_trajectory(const std::filesystem::path& path,
                      const std::vector<TrajectoryRow<double>>& rows) {
  std::ofstream out(path);
  out << kTrajectoryHeader << "\n";
  for (const auto& r : rows) {
    out << r.k << "," << num(r.tau) << "," << num(r.V) << "," << num(r.d_sq) << ","
        << num(r.g_gap_sq) << "," << num(r.W) << "," << num(r.z_err_sq) << "\n";
  }
}

bool deterministic(const ExperimentConfig& c, const CompositeProblem<double>& problem) {
  return c.noise.G == 0 && c.noise.J == 0 && c.noise.s == 0 &&
         !dynamic_cast<const PolicyEvalProblem<double>*>(&problem);
}

RunResult<double> run_solver(const ExperimentConfig& c, const CompositeProblem<double>& problem,
                             long N, std::uint64_t seed, const RunOptions<double>& options) {
  const TauRule rule = c.solver.tau ? TauRule::kConstant : TauRule::kStandard;
  const double tau = c.solver.tau.value_or(0.0);
  if (c.solver.name == "asa") {
    AsaParams<double> p;
    p.a = c.solver.a;
    p.beta = *c.solver.beta;
    p.N = N;
    p.regime = c.solver.regime == "variance" ? AsaRegime::kBoundedVariance
                                             : AsaRegime::kBoundedMoment;
    p.tau_rule = rule;
    p.tau_constant = tau;
    p.eta_lipschitz = c.solver.eta_lipschitz;
    return asa_run(problem, p, {c.base_seed, seed}, options);
  }
  NasaParams<double> p;
  p.a = c.solver.a;
  p.b = c.solver.b;
  p.alpha = c.solver.alpha;
  p.beta = c.solver.beta;
  p.N = N;
  p.tau_rule = rule;
  p.tau_constant = tau;
  p.override_validation = c.solver.override_validation;
  return nasa_run(problem, p, {c.base_seed, seed}, options);
}

SummaryRow run_cell(const ExperimentConfig& c, const CompositeProblem<double>& problem, long N,
                    std::uint64_t seed, const std::filesystem::path* trajectory_dir) {
  SummaryRow row;
  row.N = N;
  row.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    RunOptions<double> options;
    options.expected_over_R = c.estimator == "averaged";
    options.record_trajectory = c.diagnostics;
    const auto result = run_solver(c, problem, N, seed, options);
    row.R = result.R;
    row.V = result.metrics.V;
    row.g_gap_sq = result.metrics.g_gap_sq;
    row.z_err_sq = result.metrics.z_err_sq;
    row.F_gap = result.metrics.F_gap;
    row.V_avg = result.expected ? result.expected->V : kNaN;
    row.g_gap_sq_avg = result.expected ? result.expected->g_gap_sq : kNaN;
    if (c.diagnostics) {
      if (trajectory_dir != nullptr) {
        write_trajectory(*trajectory_dir / ("N" + std::to_string(N) + "_seed" +
                                            std::to_string(seed) + ".csv"),
                         result.trajectory);
      }
      if (deterministic(c, problem) && result.merit && result.merit->F_star) {
        const auto ledger = ledger_check(result.trajectory, *result.merit);
        if (!ledger.holds) {
          throw std::runtime_error("descent ledger violated at prefix " +
                                   std::to_string(ledger.first_violation));
        }
      }
    }
    if (!std::isfinite(row.V)) throw std::runtime_error("optimality measure is not finite");
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    row.R = 0;
    row.V = row.g_gap_sq = row.z_err_sq = row.F_gap = row.V_avg = row.g_gap_sq_avg = kNaN;
  }
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

template <typename Write>
void write_file(const std::filesystem::path& path, Write&& write) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write(out);
}

}  // namespace

std::string default_output_dir() {
  if (const char* env = std::getenv("NESTOPT_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "nestopt_out";
}

std::vector<AggregateRow> aggregate(const std::vector<SummaryRow>& rows) {
  std::vector<long> order;
  std::map<long, std::vector<const SummaryRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.N)) order.push_back(r.N);
    auto& g = groups[r.N];
    if (r.ok) g.push_back(&r);
  }
  auto mean_stderr = [](const std::vector<const SummaryRow*>& g, double SummaryRow::*field) {
    double sum = 0;
    for (const auto* r : g) sum += r->*field;
    const double n = static_cast<double>(g.size());
    const double mean = g.empty() ? kNaN : sum / n;
    double ss = 0;
    for (const auto* r : g) ss += (r->*field - mean) * (r->*field - mean);
    const double se = g.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
    return std::make_pair(mean, se);
  };
  std::vector<AggregateRow> out;
  for (const long N : order) {
    const auto& g = groups[N];
    AggregateRow a;
    a.N = N;
    a.count = static_cast<long>(g.size());
    std::tie(a.mean_V, a.stderr_V) = mean_stderr(g, &SummaryRow::V);
    std::tie(a.mean_g_gap_sq, a.stderr_g_gap_sq) = mean_stderr(g, &SummaryRow::g_gap_sq);
    a.mean_z_err_sq = mean_stderr(g, &SummaryRow::z_err_sq).first;
    a.mean_F_gap = mean_stderr(g, &SummaryRow::F_gap).first;
    std::tie(a.mean_V_avg, a.stderr_V_avg) = mean_stderr(g, &SummaryRow::V_avg);
    a.mean_g_gap_sq_avg = mean_stderr(g, &SummaryRow::g_gap_sq_avg).first;
    out.push_back(a);
  }
  return out;
}

std::vector<PlotRow> plot_rows(const std::vector<AggregateRow>& aggregates,
                               const std::string& estimator) {
  if (aggregates.size() < 2) {
    throw std::invalid_argument("plot data: need at least two N values, got " +
                                std::to_string(aggregates.size()));
  }
  const bool averaged = estimator == "averaged";
  std::vector<PlotRow> out;
  std::vector<SlopePoint> points;
  for (const auto& a : aggregates) {
    PlotRow p;
    p.N = static_cast<double>(a.N);
    p.mean_V = averaged ? a.mean_V_avg : a.mean_V;
    p.stderr_V = averaged ? a.stderr_V_avg : a.stderr_V;
    p.mean_g_gap = averaged ? a.mean_g_gap_sq_avg : a.mean_g_gap_sq;
    out.push_back(p);
    points.push_back({p.N, p.mean_V, a.count});
  }
  double slope = kNaN;
  try {
    slope = loglog_slope(points);
  } catch (const std::invalid_argument&) {
    // zero or missing means: no slope
  }
  for (auto& p : out) p.slope = slope;
  return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    out << r.N << "," << r.seed << "," << r.R << "," << num(r.V) << "," << num(r.g_gap_sq) << ","
        << num(r.z_err_sq) << "," << num(r.F_gap) << "," << num(r.V_avg) << ","
        << num(r.g_gap_sq_avg) << "," << (r.ok ? "ok" : "failed") << "\n";
  }
}

std::vector<SummaryRow> read_summary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw std::invalid_argument("summary: unexpected header");
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw std::invalid_argument("summary: expected 10 fields");
    SummaryRow r;
    r.N = std::stol(f[0]);
    r.seed = std::stoull(f[1]);
    r.R = std::stol(f[2]);
    r.V = parse_num(f[3]);
    r.g_gap_sq = parse_num(f[4]);
    r.z_err_sq = parse_num(f[5]);
    r.F_gap = parse_num(f[6]);
    r.V_avg = parse_num(f[7]);
    r.g_gap_sq_avg = parse_num(f[8]);
    r.ok = f[9] == "ok";
    rows.push_back(r);
  }
  return rows;
}

void write_aggregate(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "N,count,mean_V,stderr_V,mean_g_gap_sq,stderr_g_gap_sq,mean_z_err_sq,mean_F_gap,"
         "mean_V_avg,stderr_V_avg,mean_g_gap_sq_avg\n";
  for (const auto& a : rows) {
    out << a.N << "," << a.count << "," << num(a.mean_V) << "," << num(a.stderr_V) << ","
        << num(a.mean_g_gap_sq) << "," << num(a.stderr_g_gap_sq) << "," << num(a.mean_z_err_sq)
        << "," << num(a.mean_F_gap) << "," << num(a.mean_V_avg) << "," << num(a.stderr_V_avg)
        << "," << num(a.mean_g_gap_sq_avg) << "\n";
  }
}

void emit_plot_data(std::ostream& out, const std::vector<PlotRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("plot data: row count 0");
  out << kPlotHeader << "\n";
  for (const auto& p : rows) {
    out << num(p.N) << "," << num(p.mean_V) << "," << num(p.stderr_V) << "," << num(p.mean_g_gap)
        << "," << num(p.slope) << "\n";
  }
}

std::vector<PlotRow> read_plot_data(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kPlotHeader) {
    throw std::invalid_argument("plot data: unexpected header");
  }
  std::vector<PlotRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw std::invalid_argument("plot data: expected 5 fields");
    rows.push_back({parse_num(f[0]), parse_num(f[1]), parse_num(f[2]), parse_num(f[3]),
                    parse_num(f[4])});
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunControl& control) {
  validate(config);
  const InstanceData instance = make_instance(config.problem);
  auto problem = build_problem(instance);
  problem->set_noise({config.noise.G, config.noise.J, config.noise.s});
  if (config.solver.name == "asa" && !problem->identity_inner()) {
    throw ConfigError("solver asa needs an identity inner map");
  }

  std::filesystem::path dir = config.output_dir.empty() ? default_output_dir() : config.output_dir;
  std::filesystem::path trajectory_dir = dir / "trajectories";
  if (control.write_files) {
    std::filesystem::create_directories(dir);
    if (config.diagnostics) std::filesystem::create_directories(trajectory_dir);
    write_file(dir / "config.txt", [&](std::ostream& out) { out << format_config(config); });
    write_file(dir / "instance.txt", [&](std::ostream& out) { write_instance(out, instance); });
  }

  struct Cell {
    long N;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const long N : config.N_list) {
    for (const auto seed : config.seeds) cells.push_back({N, seed});
  }

  ExperimentResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex collect;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SummaryRow row = run_cell(config, *problem, cells[i].N, cells[i].seed,
                                control.write_files ? &trajectory_dir : nullptr);
      std::lock_guard<std::mutex> lock(collect);
      result.rows[i] = std::move(row);
    }
  };
  const int jobs = std::max(1, std::min<int>(control.jobs, static_cast<int>(cells.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : result.rows) result.all_ok = result.all_ok && r.ok;
  result.aggregates = aggregate(result.rows);
  std::vector<PlotRow> plot;
  if (result.aggregates.size() >= 2) {
    plot = plot_rows(result.aggregates, config.estimator);
    if (std::isfinite(plot.front().slope)) result.slope = plot.front().slope;
  }

  if (control.write_files) {
    write_file(dir / "summary.csv", [&](std::ostream& out) { write_summary(out, result.rows); });
    write_file(dir / "aggregate.csv",
               [&](std::ostream& out) { write_aggregate(out, result.aggregates); });
    if (!plot.empty()) {
      write_file(dir / "plot.csv", [&](std::ostream& out) { emit_plot_data(out, plot); });
    }
    write_file(dir / "timing.csv", [&](std::ostream& out) {
      out << "N,seed,wall_seconds\n";
      for (const auto& r : result.rows) out << r.N << "," << r.seed << "," << num(r.wall_seconds) << "\n";
    });
    if (!result.all_ok) {
      write_file(dir / "errors.txt", [&](std::ostream& out) {
        for (const auto& r : result.rows) {
          if (!r.ok) out << "N=" << r.N << " seed=" << r.seed << ": " << r.error << "\n";
        }
      });
    }
  }
  return result;
}

}  // namespace nestopt::harness
