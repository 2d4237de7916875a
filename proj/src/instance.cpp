#include "nestopt/harness/instance.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nestopt/problems.hpp"

namespace nestopt::harness {
namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

FeasibleSet<double> make_set(const ProblemConfig& c, Eigen::Index dim) {
  if (c.set == "full") return FeasibleSet<double>::full_space(dim);
  if (c.set == "box") return FeasibleSet<double>::box(dim, c.lower, c.upper);
  if (c.set == "ball") return FeasibleSet<double>::ball(dim, c.radius);
  if (c.set == "simplex") return FeasibleSet<double>::simplex(dim);
  throw ConfigError("unknown set '" + c.set + "'");
}

void store_set(InstanceData& data, const FeasibleSet<double>& set) {
  data.set = set.kind() == SetKind::kFullSpace ? "full"
             : set.kind() == SetKind::kBox     ? "box"
             : set.kind() == SetKind::kBall    ? "ball"
                                               : "simplex";
  data.scalars["set_dim"] = static_cast<double>(set.dim());
  if (const auto* box = set.as_box()) {
    data.arrays["lower"] = box->lower;
    data.arrays["upper"] = box->upper;
  } else if (const auto* ball = set.as_ball()) {
    data.arrays["center"] = ball->center;
    data.scalars["radius"] = ball->radius;
  }
}

const Matrix& array(const InstanceData& data, const std::string& name) {
  const auto it = data.arrays.find(name);
  if (it == data.arrays.end()) throw std::invalid_argument("instance: missing array '" + name + "'");
  return it->second;
}

double scalar(const InstanceData& data, const std::string& name) {
  const auto it = data.scalars.find(name);
  if (it == data.scalars.end()) {
    throw std::invalid_argument("instance: missing scalar '" + name + "'");
  }
  return it->second;
}

Vector vec(const InstanceData& data, const std::string& name) {
  const Matrix& m = array(data, name);
  if (m.cols() != 1) throw std::invalid_argument("instance: '" + name + "' is not a vector");
  return m.col(0);
}

FeasibleSet<double> load_set(const InstanceData& data) {
  const auto dim = static_cast<Eigen::Index>(scalar(data, "set_dim"));
  if (data.set == "full") return FeasibleSet<double>::full_space(dim);
  if (data.set == "box") return FeasibleSet<double>::box(vec(data, "lower"), vec(data, "upper"));
  if (data.set == "ball") return FeasibleSet<double>::ball(vec(data, "center"), scalar(data, "radius"));
  if (data.set == "simplex") return FeasibleSet<double>::simplex(dim);
  throw std::invalid_argument("instance: unknown set '" + data.set + "'");
}

void store_minimizer(InstanceData& data, const CompositeProblem<double>& problem) {
  if (auto x = problem.minimizer()) data.arrays["x_star"] = *x;
}

}  // namespace

InstanceData make_instance(const ProblemConfig& c) {
  if (!c.instance_file.empty()) {
    std::ifstream in(c.instance_file);
    if (!in) throw ConfigError("cannot open instance file '" + c.instance_file + "'");
    return read_instance(in);
  }
  InstanceData data;
  data.problem = c.name;
  if (c.name == "quadratic") {
    auto set = make_set(c, c.n);
    auto q = c.identity ? make_identity_quadratic<double>(set, c.seed)
                        : make_quadratic<double>(c.n, c.m, set, c.seed);
    store_set(data, q.set());
    data.scalars["identity"] = c.identity ? 1 : 0;
    data.arrays["A"] = q.A();
    data.arrays["b"] = q.b();
    data.arrays["c"] = q.c();
    store_minimizer(data, q);
  } else if (c.name == "svi") {
    auto p = make_svi<double>(make_set(c, c.n), c.seed);
    store_set(data, p.set());
    data.arrays["M"] = p.M();
    data.arrays["q"] = p.q();
    store_minimizer(data, p);
  } else if (c.name == "policy_eval") {
    auto p = build_policy_eval<double>(c.states, c.d, c.gamma, c.seed, c.sketch_rows);
    store_set(data, p.set());
    data.scalars["gamma"] = p.discount();
    data.arrays["P"] = p.transition();
    data.arrays["r"] = p.reward();
    data.arrays["Phi"] = p.features();
    data.arrays["S"] = p.sketch();
  } else if (c.name == "low_rank") {
    auto p = make_low_rank<double>(c.size, c.rank, c.seed);
    store_set(data, p.set());
    data.scalars["rank"] = static_cast<double>(p.rank());
    data.arrays["target"] = p.target();
    data.arrays["x0"] = p.initial_point();
    store_minimizer(data, p);
  } else {
    throw ConfigError("unknown problem '" + c.name + "'");
  }
  return data;
}

std::unique_ptr<CompositeProblem<double>> build_problem(const InstanceData& data) {
  if (data.problem == "quadratic") {
    auto set = load_set(data);
    std::unique_ptr<SyntheticQuadratic<double>> q;
    if (scalar(data, "identity") != 0) {
      q = std::make_unique<SyntheticQuadratic<double>>(
          SyntheticQuadratic<double>::identity(vec(data, "c"), std::move(set)));
    } else {
      q = std::make_unique<SyntheticQuadratic<double>>(array(data, "A"), vec(data, "b"),
                                                      vec(data, "c"), std::move(set));
    }
    if (data.arrays.count("x_star")) q->certify(vec(data, "x_star"));
    return q;
  }
  if (data.problem == "svi") {
    auto p = std::make_unique<SviProblem<double>>(array(data, "M"), vec(data, "q"), load_set(data));
    if (data.arrays.count("x_star")) p->certify(vec(data, "x_star"));
    return p;
  }
  if (data.problem == "policy_eval") {
    return std::make_unique<PolicyEvalProblem<double>>(array(data, "P"), vec(data, "r"),
                                                       scalar(data, "gamma"), array(data, "Phi"),
                                                       array(data, "S"));
  }
  if (data.problem == "low_rank") {
    const auto set = load_set(data);
    if (!set.as_ball()) throw std::invalid_argument("instance: low_rank needs a ball");
    auto p = std::make_unique<LowRankProblem<double>>(
        array(data, "target"), static_cast<Eigen::Index>(scalar(data, "rank")),
        set.as_ball()->radius);
    p->set_initial_point(vec(data, "x0"));
    if (data.arrays.count("x_star")) p->certify(vec(data, "x_star"));
    return p;
  }
  throw std::invalid_argument("instance: unknown problem '" + data.problem + "'");
}

void write_instance(std::ostream& out, const InstanceData& data) {
  char buf[64];
  out << "problem " << data.problem << "\n";
  out << "set " << data.set << "\n";
  for (const auto& [name, value] : data.scalars) {
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << "scalar " << name << " " << buf << "\n";
  }
  for (const auto& [name, m] : data.arrays) {
    out << "array " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << (j ? " " : "") << buf;
      }
      out << "\n";
    }
  }
}

InstanceData read_instance(std::istream& in) {
  InstanceData data;
  std::string tag;
  while (in >> tag) {
    if (tag == "problem") {
      in >> data.problem;
    } else if (tag == "set") {
      in >> data.set;
    } else if (tag == "scalar") {
      std::string name;
      double value = 0;
      if (!(in >> name >> value)) throw std::invalid_argument("instance: bad scalar line");
      data.scalars[name] = value;
    } else if (tag == "array") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0) {
        throw std::invalid_argument("instance: bad array header");
      }
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          if (!(in >> m(i, j))) throw std::invalid_argument("instance: truncated array '" + name + "'");
        }
      }
      data.arrays[name] = std::move(m);
    } else {
      throw std::invalid_argument("instance: unexpected token '" + tag + "'");
    }
  }
  if (data.problem.empty() || data.set.empty()) {
    throw std::invalid_argument("instance: missing problem or set line");
  }
  return data;
}

}  // namespace nestopt::harness
