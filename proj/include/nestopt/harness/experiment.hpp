#ifndef NESTOPT_HARNESS_EXPERIMENT_HPP
#define NESTOPT_HARNESS_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nestopt/harness/config.hpp"

namespace nestopt::harness {

/// One (N, seed) cell. The *_avg fields average over the law of R given
/// the iterates; they are NaN when the estimator is "sampled".
struct SummaryRow {
  long N = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  long R = 0;
  double V = 0;
  double g_gap_sq = 0;
  double z_err_sq = 0;
  double F_gap = 0;
  double V_avg = 0;
  double g_gap_sq_avg = 0;
  double wall_seconds = 0;  // written to timing.csv only
  std::string error;
};

struct AggregateRow {
  long N = 0;
  long count = 0;
  double mean_V = 0;
  double stderr_V = 0;
  double mean_g_gap_sq = 0;
  double stderr_g_gap_sq = 0;
  double mean_z_err_sq = 0;
  double mean_F_gap = 0;
  double mean_V_avg = 0;
  double stderr_V_avg = 0;
  double mean_g_gap_sq_avg = 0;
};

struct PlotRow {
  double N = 0;
  double mean_V = 0;
  double stderr_V = 0;
  double mean_g_gap = 0;
  double slope = 0;
};

struct ExperimentResult {
  std::vector<SummaryRow> rows;  // ordered by (N index, seed index)
  std::vector<AggregateRow> aggregates;
  std::optional<double> slope;
  bool all_ok = true;
};

struct RunControl {
  int jobs = 1;
  bool write_files = true;
};

/// Runs every cell; failed cells are recorded and the rest proceed.
/// Writes config.txt, instance.txt, summary.csv, aggregate.csv, plot.csv,
/// timing.csv and (with diagnostics) trajectories/ into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunControl& control = {});

/// Mean and standard error per N over successful rows, in row order.
std::vector<AggregateRow> aggregate(const std::vector<SummaryRow>& rows);

/// Plot columns from the aggregates; V and g-gap come from the chosen
/// estimator. Throws std::invalid_argument on fewer than two N values.
std::vector<PlotRow> plot_rows(const std::vector<AggregateRow>& aggregates,
                               const std::string& estimator);

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(std::istream& in);
void write_aggregate(std::ostream& out, const std::vector<AggregateRow>& rows);
void emit_plot_data(std::ostream& out, const std::vector<PlotRow>& rows);
std::vector<PlotRow> read_plot_data(std::istream& in);

extern const char* const kSummaryHeader;
extern const char* const kTrajectoryHeader;
extern const char* const kPlotHeader;

/// NESTOPT_OUTPUT_DIR, or "nestopt_out".
std::string default_output_dir();

}  // namespace nestopt::harness

#endif  // NESTOPT_HARNESS_EXPERIMENT_HPP
