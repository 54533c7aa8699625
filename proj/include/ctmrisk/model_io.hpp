#pragma once

// Model files and CSV reports. The JSON schema:
//
//   {
//     "states": ["a", "b", ...],
//     "horizon": 1.0,
//     "generator": [[...], ...]                          // constant, or
//     "generator": [{"until": 0.5, "matrix": [[...]]},   // piecewise
//                   {"until": 1.0, "matrix": [[...]]}],
//     "running_cost": {"times": [...], "values": [[...], ...]},  // optional
//     "terminal_cost": [...],
//     "risk": {"kind": "expectation"}
//             | {"kind": "avar", "alpha": 0.5 or [...]}
//             | {"kind": "semideviation", "kappa": 0.5 or [...], "p": 1}
//   }
//
// Malformed files raise ParseError with file and field context; risk
// parameters outside their hard ranges raise ConfigError. All CSV output is
// written with 12 significant digits via a locale-independent formatter, so
// repeated runs are byte-identical.

#include <string>
#include <vector>

#include "ctmrisk/backward_solver.hpp"
#include "ctmrisk/discrete_approx.hpp"
#include "ctmrisk/model.hpp"
#include "ctmrisk/multigenerator.hpp"
#include "ctmrisk/risk_mappings.hpp"

namespace ctmrisk::io {

struct ParsedModel {
  MarkovModel<double> model;
  RiskMappingSpec<double> risk;
};

ParsedModel parse_model(const std::string& text, const std::string& origin);
ParsedModel load_model(const std::string& path);

// 12 significant digits, shortest form, C locale regardless of environment.
std::string format_number(double x);

// t,state,value rows, time-major, states in declaration order.
void write_value_csv(const std::string& path, const StateSpace& states, const ValueFunction<double>& vf);
void write_value_csv(const std::string& path, const StateSpace& states, const DPResult<double>& dp);

// N,sup_error,empirical_order rows; the last row has no successor, so its
// order field stays empty.
void write_convergence_csv(const std::string& path, const ConvergenceReport<double>& report);

// epsilon,quotient,target,abs_error rows with a leading state column.
struct FdCsvBlock {
  std::string state;
  std::vector<FdRow<double>> rows;
};
void write_fd_csv(const std::string& path, const std::vector<FdCsvBlock>& blocks);

// start_state,sample,cost rows; each state's block ends with a "mean" row.
void write_simulation_csv(const std::string& path, const StateSpace& states,
                          const std::vector<std::vector<double>>& costs_per_state);

}  // namespace ctmrisk::io
