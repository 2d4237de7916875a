#include "nestopt/harness/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace nestopt::harness {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key + ": not a finite number: '" + text + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(key + ": not an integer: '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  if (text.empty() || text[0] == '-') throw ConfigError(key + ": not a seed: '" + text + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(key + ": not a seed: '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected on/off: '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  for (const auto& item : split_list(text)) out.push_back(to_long("list", item));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  const auto kv = parse_key_values(text);
  ExperimentConfig c;
  bool seed_count = false;
  bool seed_list = false;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"problem.name", [&](auto&, auto& v) { c.problem.name = v; }},
      {"problem.set", [&](auto&, auto& v) { c.problem.set = v; }},
      {"problem.n", [&](auto& k, auto& v) { c.problem.n = to_long(k, v); }},
      {"problem.m", [&](auto& k, auto& v) { c.problem.m = to_long(k, v); }},
      {"problem.identity", [&](auto& k, auto& v) { c.problem.identity = to_bool(k, v); }},
      {"problem.radius", [&](auto& k, auto& v) { c.problem.radius = to_double(k, v); }},
      {"problem.lower", [&](auto& k, auto& v) { c.problem.lower = to_double(k, v); }},
      {"problem.upper", [&](auto& k, auto& v) { c.problem.upper = to_double(k, v); }},
      {"problem.seed", [&](auto& k, auto& v) { c.problem.seed = to_u64(k, v); }},
      {"problem.states", [&](auto& k, auto& v) { c.problem.states = to_long(k, v); }},
      {"problem.d", [&](auto& k, auto& v) { c.problem.d = to_long(k, v); }},
      {"problem.gamma", [&](auto& k, auto& v) { c.problem.gamma = to_double(k, v); }},
      {"problem.sketch_rows", [&](auto& k, auto& v) { c.problem.sketch_rows = to_long(k, v); }},
      {"problem.size", [&](auto& k, auto& v) { c.problem.size = to_long(k, v); }},
      {"problem.rank", [&](auto& k, auto& v) { c.problem.rank = to_long(k, v); }},
      {"problem.instance_file", [&](auto&, auto& v) { c.problem.instance_file = v; }},
      {"noise.G", [&](auto& k, auto& v) { c.noise.G = to_double(k, v); }},
      {"noise.J", [&](auto& k, auto& v) { c.noise.J = to_double(k, v); }},
      {"noise.s", [&](auto& k, auto& v) { c.noise.s = to_double(k, v); }},
      {"solver.name", [&](auto&, auto& v) { c.solver.name = v; }},
      {"solver.a", [&](auto& k, auto& v) { c.solver.a = to_double(k, v); }},
      {"solver.b", [&](auto& k, auto& v) { c.solver.b = to_double(k, v); }},
      {"solver.alpha", [&](auto& k, auto& v) { c.solver.alpha = to_double(k, v); }},
      {"solver.beta",
       [&](auto& k, auto& v) {
         c.solver.beta = v == "auto" ? std::nullopt : std::optional<double>(to_double(k, v));
       }},
      {"solver.tau",
       [&](auto& k, auto& v) {
         c.solver.tau = v == "standard" ? std::nullopt : std::optional<double>(to_double(k, v));
       }},
      {"solver.regime", [&](auto&, auto& v) { c.solver.regime = v; }},
      {"solver.eta_lipschitz",
       [&](auto& k, auto& v) {
         c.solver.eta_lipschitz =
             v == "none" ? std::nullopt : std::optional<double>(to_double(k, v));
       }},
      {"solver.override", [&](auto& k, auto& v) { c.solver.override_validation = to_bool(k, v); }},
      {"run.N",
       [&](auto& k, auto& v) {
         c.N_list.clear();
         for (const auto& item : split_list(v)) c.N_list.push_back(to_long(k, item));
       }},
      {"run.seeds",
       [&](auto& k, auto& v) {
         const long count = to_long(k, v);
         if (count <= 0) throw ConfigError("run.seeds: must be positive");
         c.seeds.clear();
         for (long i = 0; i < count; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
         seed_count = true;
       }},
      {"run.seed_list",
       [&](auto& k, auto& v) {
         c.seeds.clear();
         for (const auto& item : split_list(v)) c.seeds.push_back(to_u64(k, item));
         seed_list = true;
       }},
      {"run.base_seed", [&](auto& k, auto& v) { c.base_seed = to_u64(k, v); }},
      {"run.diagnostics", [&](auto& k, auto& v) { c.diagnostics = to_bool(k, v); }},
      {"run.estimator", [&](auto&, auto& v) { c.estimator = v; }},
      {"output.dir", [&](auto&, auto& v) { c.output_dir = v; }},
  };

  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
    it->second(key, value);
  }
  if (seed_count && seed_list) throw ConfigError("give run.seeds or run.seed_list, not both");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv = {
      {"problem.name", c.problem.name},
      {"problem.set", c.problem.set},
      {"problem.n", std::to_string(c.problem.n)},
      {"problem.m", std::to_string(c.problem.m)},
      {"problem.identity", c.problem.identity ? "on" : "off"},
      {"problem.radius", num(c.problem.radius)},
      {"problem.lower", num(c.problem.lower)},
      {"problem.upper", num(c.problem.upper)},
      {"problem.seed", std::to_string(c.problem.seed)},
      {"problem.states", std::to_string(c.problem.states)},
      {"problem.d", std::to_string(c.problem.d)},
      {"problem.gamma", num(c.problem.gamma)},
      {"problem.sketch_rows", std::to_string(c.problem.sketch_rows)},
      {"problem.size", std::to_string(c.problem.size)},
      {"problem.rank", std::to_string(c.problem.rank)},
      {"noise.G", num(c.noise.G)},
      {"noise.J", num(c.noise.J)},
      {"noise.s", num(c.noise.s)},
      {"solver.name", c.solver.name},
      {"solver.a", num(c.solver.a)},
      {"solver.b", num(c.solver.b)},
      {"solver.alpha", num(c.solver.alpha)},
      {"solver.beta", c.solver.beta ? num(*c.solver.beta) : "auto"},
      {"solver.tau", c.solver.tau ? num(*c.solver.tau) : "standard"},
      {"solver.regime", c.solver.regime},
      {"solver.eta_lipschitz", c.solver.eta_lipschitz ? num(*c.solver.eta_lipschitz) : "none"},
      {"solver.override", c.solver.override_validation ? "on" : "off"},
      {"run.N", join(c.N_list)},
      {"run.seed_list", join(c.seeds)},
      {"run.base_seed", std::to_string(c.base_seed)},
      {"run.diagnostics", c.diagnostics ? "on" : "off"},
      {"run.estimator", c.estimator},
  };
  if (!c.problem.instance_file.empty()) kv["problem.instance_file"] = c.problem.instance_file;
  if (!c.output_dir.empty()) kv["output.dir"] = c.output_dir;
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void validate(const ExperimentConfig& c) {
  static const std::set<std::string> problems = {"quadratic", "svi", "policy_eval", "low_rank"};
  static const std::set<std::string> sets = {"full", "box", "ball", "simplex"};
  if (!problems.count(c.problem.name)) throw ConfigError("unknown problem '" + c.problem.name + "'");
  if (!sets.count(c.problem.set)) throw ConfigError("unknown set '" + c.problem.set + "'");
  if (c.solver.name != "nasa" && c.solver.name != "asa") {
    throw ConfigError("unknown solver '" + c.solver.name + "'");
  }
  if (c.solver.regime != "moment" && c.solver.regime != "variance") {
    throw ConfigError("solver.regime must be moment or variance");
  }
  if (c.estimator != "averaged" && c.estimator != "sampled") {
    throw ConfigError("run.estimator must be averaged or sampled");
  }
  if (c.N_list.empty()) throw ConfigError("run.N must not be empty");
  for (const long N : c.N_list) {
    if (N < 2) throw ConfigError("run.N entries must be at least 2");
  }
  if (c.seeds.empty()) throw ConfigError("seed list must not be empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    throw ConfigError("seed list has duplicates");
  }
  if (c.noise.G < 0 || c.noise.J < 0 || c.noise.s < 0) {
    throw ConfigError("noise levels must be nonnegative");
  }
  const auto& p = c.problem;
  if (p.n <= 0 || p.m <= 0 || p.states <= 0 || p.d <= 0 || p.size <= 0 || p.rank <= 0) {
    throw ConfigError("problem dimensions must be positive");
  }
  if (!(p.radius > 0)) throw ConfigError("problem.radius must be positive");
  if (!(p.lower < p.upper)) throw ConfigError("problem.lower must be below problem.upper");
  if (c.solver.name == "asa" && p.instance_file.empty() &&
      !(p.name == "quadratic" && p.identity)) {
    throw ConfigError("solver asa needs an identity inner map (problem.identity = on)");
  }
  if (c.solver.name == "asa" && !c.solver.beta) {
    throw ConfigError("solver asa needs an explicit solver.beta");
  }
}

}  // namespace nestopt::harness
