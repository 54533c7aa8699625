#include "ctmrisk/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ctmrisk::io {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& field, const std::string& what) {
  throw ParseError(origin + ": field '" + field + "': " + what);
}

// `label` is the dotted path used in error messages; the lookup key is the
// last path segment.
const json& member(const json& j, const std::string& origin, const std::string& label) {
  const auto dot = label.rfind('.');
  const std::string key = dot == std::string::npos ? label : label.substr(dot + 1);
  if (!j.is_object()) fail(origin, label, "enclosing value is not an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(origin, label, "missing");
  return *it;
}

double number(const json& j, const std::string& origin, const std::string& field) {
  if (!j.is_number()) fail(origin, field, "expected a number");
  return j.get<double>();
}

std::vector<double> number_array(const json& j, const std::string& origin, const std::string& field) {
  if (!j.is_array()) fail(origin, field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) fail(origin, field, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

MatrixX<double> matrix(const json& j, Index n, const std::string& origin, const std::string& field) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n)
    fail(origin, field, "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  MatrixX<double> m(n, n);
  for (Index r = 0; r < n; ++r) {
    const auto row = number_array(j[static_cast<std::size_t>(r)], origin, field);
    if (static_cast<Index>(row.size()) != n)
      fail(origin, field, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                              " entries, expected " + std::to_string(n));
    for (Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

VectorX<double> per_state(const json& j, Index n, const std::string& origin, const std::string& field) {
  if (j.is_number()) return VectorX<double>::Constant(n, j.get<double>());
  const auto values = number_array(j, origin, field);
  if (static_cast<Index>(values.size()) != n)
    fail(origin, field, "expected a scalar or one value per state");
  return Eigen::Map<const VectorX<double>>(values.data(), n);
}

GeneratorSchedule<double> parse_generator(const json& j, Index n, double horizon, const std::string& origin) {
  try {
    if (j.is_array() && !j.empty() && j.front().is_array()) {
      return GeneratorSchedule<double>(matrix(j, n, origin, "generator"), horizon);
    }
    if (!j.is_array() || j.empty()) fail(origin, "generator", "expected a matrix or a list of pieces");
    std::vector<double> until;
    std::vector<MatrixX<double>> pieces;
    for (const auto& piece : j) {
      until.push_back(number(member(piece, origin, "generator.until"), origin, "generator.until"));
      pieces.push_back(matrix(member(piece, origin, "generator.matrix"), n, origin, "generator.matrix"));
    }
    if (until.back() != horizon)
      fail(origin, "generator", "last piece must end at the horizon");
    return GeneratorSchedule<double>(std::move(until), std::move(pieces));
  } catch (const std::invalid_argument& e) {
    fail(origin, "generator", e.what());
  }
}

CostSpec<double> parse_cost(const json& j, Index n, const std::string& origin) {
  try {
    const auto terminal = number_array(member(j, origin, "terminal_cost"), origin, "terminal_cost");
    if (static_cast<Index>(terminal.size()) != n) fail(origin, "terminal_cost", "expected one value per state");
    VectorX<double> f = Eigen::Map<const VectorX<double>>(terminal.data(), n);
    if (!j.contains("running_cost")) return CostSpec<double>::terminal_only(std::move(f));
    const json& rc = j.at("running_cost");
    const auto times = number_array(member(rc, origin, "running_cost.times"), origin, "running_cost.times");
    const json& values = member(rc, origin, "running_cost.values");
    if (!values.is_array() || values.size() != times.size())
      fail(origin, "running_cost.values", "expected one row per time");
    MatrixX<double> c(static_cast<Index>(times.size()), n);
    for (std::size_t r = 0; r < times.size(); ++r) {
      const auto row = number_array(values[r], origin, "running_cost.values");
      if (static_cast<Index>(row.size()) != n) fail(origin, "running_cost.values", "expected one value per state");
      for (Index x = 0; x < n; ++x) c(static_cast<Index>(r), x) = row[static_cast<std::size_t>(x)];
    }
    return CostSpec<double>(times, std::move(c), std::move(f));
  } catch (const std::invalid_argument& e) {
    fail(origin, "running_cost", e.what());
  }
}

RiskMappingSpec<double> parse_risk(const json& j, Index n, const std::string& origin) {
  const json& risk = member(j, origin, "risk");
  const json& kind = member(risk, origin, "risk.kind");
  if (!kind.is_string()) fail(origin, "risk.kind", "expected a string");
  const std::string name = kind.get<std::string>();
  try {
    if (name == "expectation") return RiskMappingSpec<double>::expectation(n);
    if (name == "avar")
      return RiskMappingSpec<double>::avar(per_state(member(risk, origin, "risk.alpha"), n, origin, "risk.alpha"));
    if (name == "semideviation") {
      const double p = risk.contains("p") ? number(risk.at("p"), origin, "risk.p") : 1.0;
      return RiskMappingSpec<double>::semideviation(
          per_state(member(risk, origin, "risk.kappa"), n, origin, "risk.kappa"), p);
    }
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": risk: " + e.what());
  }
  fail(origin, "risk.kind", "unknown mapping '" + name + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

}  // namespace

ParsedModel parse_model(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(origin + ": top-level value must be an object");

  const json& states_json = member(j, origin, "states");
  if (!states_json.is_array() || states_json.empty()) fail(origin, "states", "expected a nonempty array");
  std::vector<std::string> labels;
  for (const auto& s : states_json) {
    if (!s.is_string()) fail(origin, "states", "expected an array of strings");
    labels.push_back(s.get<std::string>());
  }
  StateSpace states;
  try {
    states = StateSpace(std::move(labels));
  } catch (const std::invalid_argument& e) {
    fail(origin, "states", e.what());
  }
  const Index n = states.size();

  const double horizon = number(member(j, origin, "horizon"), origin, "horizon");
  if (!(horizon > 0) || !std::isfinite(horizon)) fail(origin, "horizon", "must be positive and finite");

  GeneratorSchedule<double> gen = parse_generator(member(j, origin, "generator"), n, horizon, origin);
  CostSpec<double> cost = parse_cost(j, n, origin);
  RiskMappingSpec<double> risk = parse_risk(j, n, origin);

  try {
    return ParsedModel{MarkovModel<double>(std::move(states), std::move(gen), std::move(cost)), std::move(risk)};
  } catch (const std::invalid_argument& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

ParsedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str(), path);
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

void write_value_csv(const std::string& path, const StateSpace& states, const ValueFunction<double>& vf) {
  auto out = open_out(path);
  out << "t,state,value\n";
  for (Index i = 0; i <= vf.grid.segments(); ++i)
    for (Index x = 0; x < states.size(); ++x)
      out << format_number(vf.grid.node(i)) << ',' << states.label(x) << ','
          << format_number(vf.values(i, x)) << '\n';
}

void write_value_csv(const std::string& path, const StateSpace& states, const DPResult<double>& dp) {
  auto out = open_out(path);
  out << "t,state,value\n";
  for (Index i = 0; i <= dp.steps; ++i)
    for (Index x = 0; x < states.size(); ++x)
      out << format_number(dp.node(i)) << ',' << states.label(x) << ','
          << format_number(dp.values(i, x)) << '\n';
}

void write_convergence_csv(const std::string& path, const ConvergenceReport<double>& report) {
  auto out = open_out(path);
  out << "N,sup_error,empirical_order\n";
  for (std::size_t k = 0; k < report.ladder.size(); ++k) {
    out << report.ladder[k] << ',' << format_number(report.sup_errors[k]) << ',';
    if (k < report.orders.size()) out << format_number(report.orders[k]);
    out << '\n';
  }
}

void write_fd_csv(const std::string& path, const std::vector<FdCsvBlock>& blocks) {
  auto out = open_out(path);
  out << "state,epsilon,quotient,target,abs_error\n";
  for (const auto& block : blocks)
    for (const auto& row : block.rows)
      out << block.state << ',' << format_number(row.epsilon) << ',' << format_number(row.quotient)
          << ',' << format_number(row.target) << ',' << format_number(row.abs_error) << '\n';
}

void write_simulation_csv(const std::string& path, const StateSpace& states,
                          const std::vector<std::vector<double>>& costs_per_state) {
  auto out = open_out(path);
  out << "start_state,sample,cost\n";
  for (Index x = 0; x < states.size(); ++x) {
    const auto& costs = costs_per_state.at(static_cast<std::size_t>(x));
    double sum = 0;
    for (std::size_t k = 0; k < costs.size(); ++k) {
      out << states.label(x) << ',' << k << ',' << format_number(costs[k]) << '\n';
      sum += costs[k];
    }
    if (!costs.empty())
      out << states.label(x) << ",mean," << format_number(sum / static_cast<double>(costs.size())) << '\n';
  }
}

}  // namespace ctmrisk::io
