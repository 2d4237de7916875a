#ifndef NESTOPT_HARNESS_CONFIG_HPP
#define NESTOPT_HARNESS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nestopt::harness {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ProblemConfig {
  std::string name = "quadratic";  // quadratic | svi | policy_eval | low_rank
  std::string set = "ball";        // full | box | ball | simplex
  long n = 20;
  long m = 10;
  bool identity = false;  // quadratic with g(x) = x
  double radius = 1;
  double lower = -1;
  double upper = 1;
  std::uint64_t seed = 7;
  long states = 50;
  long d = 10;
  double gamma = 0.5;
  long sketch_rows = 0;  // 0: builder default
  long size = 15;
  long rank = 3;
  std::string instance_file;  // import instead of generating
};

struct NoiseConfig {
  double G = 0;
  double J = 0;
  double s = 0;
};

struct SolverConfig {
  std::string name = "nasa";  // nasa | asa
  double a = 1;
  double b = 1;
  double alpha = 1;
  std::optional<double> beta;          // empty: automatic (nasa only)
  std::optional<double> tau;           // empty: 1/sqrt(N)
  std::string regime = "moment";       // asa: moment | variance
  std::optional<double> eta_lipschitz; // asa variance regime
  bool override_validation = false;
};

struct ExperimentConfig {
  ProblemConfig problem;
  NoiseConfig noise;
  SolverConfig solver;
  std::vector<long> N_list{1000};
  std::uint64_t base_seed = 1;
  std::vector<std::uint64_t> seeds{0};  // replication ids
  bool diagnostics = false;
  std::string estimator = "averaged";  // averaged | sampled
  std::string output_dir;
};

/// Flat `key = value` lines; `#` starts a comment. Duplicate keys rejected.
std::map<std::string, std::string> parse_key_values(const std::string& text);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config (every key written, sorted).
std::string format_config(const ExperimentConfig& config);

/// Throws ConfigError on inconsistent settings.
void validate(const ExperimentConfig& config);

std::vector<long> parse_long_list(const std::string& text);

}  // namespace nestopt::harness

#endif  // NESTOPT_HARNESS_CONFIG_HPP
