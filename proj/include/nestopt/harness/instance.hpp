#ifndef NESTOPT_HARNESS_INSTANCE_HPP
#define NESTOPT_HARNESS_INSTANCE_HPP

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <memory>
#include <string>

#include "nestopt/geometry.hpp"
#include "nestopt/harness/config.hpp"
#include "nestopt/oracle.hpp"

namespace nestopt::harness {

/// Every number needed to rebuild a problem exactly.
struct InstanceData {
  std::string problem;  // quadratic | svi | policy_eval | low_rank
  std::string set;      // full | box | ball | simplex
  std::map<std::string, double> scalars;
  std::map<std::string, Eigen::MatrixXd> arrays;  // vectors are n x 1
};

/// Generates the instance described by the config (or reads
/// config.problem.instance_file when set).
InstanceData make_instance(const ProblemConfig& config);

std::unique_ptr<CompositeProblem<double>> build_problem(const InstanceData& data);

/// Text format: `problem <name>`, `set <kind>`, `scalar <name> <value>` and
/// `array <name> <rows> <cols>` followed by one line per row. Numbers are
/// written with 17 significant digits so a read reproduces them exactly.
void write_instance(std::ostream& out, const InstanceData& data);
InstanceData read_instance(std::istream& in);

}  // namespace nestopt::harness

#endif  // NESTOPT_HARNESS_INSTANCE_HPP
