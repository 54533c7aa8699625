// Command-line front end: validate model files, solve the backward equation,
// run the discrete-time recursion and its convergence study, simulate paths,
// and audit the risk mapping's properties. Exit codes partition failures:
// 1 validation findings, 2 model parse errors, 3 configuration errors
// (including usage), 4 unexpected runtime errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <ctmrisk/ctmrisk.hpp>
#include <ctmrisk/model_io.hpp>

namespace {

using namespace ctmrisk;

struct RunConfig {
  std::string model_path;
  std::string out_path;
  std::string scheme = "rk4";
  Index steps = 1000;
  Index dp_steps = 100;
  std::vector<Index> ladder{10, 20, 40, 80, 160};
  std::uint64_t seed = 12345;
  Index samples = 1000;
  std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5};
  Index trials = 500;
};

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::euler;
  if (name == "rk4") return Scheme::rk4;
  throw ConfigError("unknown scheme '" + name + "' (expected euler or rk4)");
}

// Shared by every command that integrates or simulates: a model whose
// generator breaks the tangent cone is a validation finding, not a crash.
int report_generator_violations(const MarkovModel<double>& model) {
  const auto violations = validate_generator(model.generator);
  for (const auto& v : violations) std::cout << "violation: " << v.describe() << "\n";
  return violations.empty() ? 0 : 1;
}

int cmd_validate(const RunConfig& cfg) {
  const io::ParsedModel parsed = io::load_model(cfg.model_path);
  const int status = report_generator_violations(parsed.model);
  if (status == 0)
    std::cout << "ok: " << parsed.model.state_count() << " states, horizon "
              << io::format_number(parsed.model.horizon()) << ", risk "
              << risk_kind_name(parsed.risk.kind()) << "\n";
  return status;
}

int cmd_solve(const RunConfig& cfg) {
  const io::ParsedModel parsed = io::load_model(cfg.model_path);
  if (int status = report_generator_violations(parsed.model)) return status;
  SolverConfig<double> config;
  config.scheme = parse_scheme(cfg.scheme);
  config.steps = cfg.steps;
  const auto vf = solve_ode(parsed.model, parsed.risk, config);
  io::write_value_csv(cfg.out_path, parsed.model.states, vf);
  std::cout << "wrote " << cfg.out_path << " (" << vf.grid.segments() + 1 << " nodes)\n";
  return 0;
}

int cmd_dp(const RunConfig& cfg) {
  const io::ParsedModel parsed = io::load_model(cfg.model_path);
  if (int status = report_generator_violations(parsed.model)) return status;
  const auto dp = dp_recursion(parsed.model, parsed.risk, cfg.dp_steps);
  io::write_value_csv(cfg.out_path, parsed.model.states, dp);
  std::cout << "wrote " << cfg.out_path << " (" << dp.steps + 1 << " nodes)\n";
  return 0;
}

int cmd_converge(const RunConfig& cfg) {
  const io::ParsedModel parsed = io::load_model(cfg.model_path);
  if (int status = report_generator_violations(parsed.model)) return status;
  if (cfg.ladder.empty()) throw ConfigError("converge: empty ladder");
  SolverConfig<double> config;
  config.scheme = parse_scheme(cfg.scheme);
  const Index largest = *std::max_element(cfg.ladder.begin(), cfg.ladder.end());
  config.steps = std::max<Index>(cfg.steps, 8 * largest);
  const auto reference = solve_ode(parsed.model, parsed.risk, config);
  const auto report = convergence_study(parsed.model, parsed.risk, cfg.ladder, reference);
  io::write_convergence_csv(cfg.out_path, report);
  for (std::size_t k = 0; k < report.ladder.size(); ++k) {
    std::cout << "N " << report.ladder[k] << " sup_error " << io::format_number(report.sup_errors[k]);
    if (k < report.orders.size()) std::cout << " order " << io::format_number(report.orders[k]);
    std::cout << "\n";
  }
  std::cout << "wrote " << cfg.out_path << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const io::ParsedModel parsed = io::load_model(cfg.model_path);
  if (int status = report_generator_violations(parsed.model)) return status;
  if (cfg.samples < 1) throw ConfigError("simulate: need at least one sample");
  Rng rng(cfg.seed);
  const Index n = parsed.model.state_count();
  std::vector<std::vector<double>> costs(static_cast<std::size_t>(n));
  for (Index x = 0; x < n; ++x) {
    auto& bucket = costs[static_cast<std::size_t>(x)];
    bucket.reserve(static_cast<std::size_t>(cfg.samples));
    double sum = 0.0;
    for (Index s = 0; s < cfg.samples; ++s) {
      const auto path = simulate_path(parsed.model.generator, parsed.model.cost, 0.0,
                                      parsed.model.horizon(), x, rng);
      bucket.push_back(path_cost(path, parsed.model.cost));
      sum += bucket.back();
    }
    std::cout << "state " << parsed.model.states.label(x) << " mean "
              << io::format_number(sum / static_cast<double>(cfg.samples)) << "\n";
  }
  io::write_simulation_csv(cfg.out_path, parsed.model.states, costs);
  std::cout << "wrote " << cfg.out_path << "\n";
  return 0;
}

int cmd_check(const RunConfig& cfg) {
  const io::ParsedModel parsed = io::load_model(cfg.model_path);
  if (int status = report_generator_violations(parsed.model)) return status;
  const MarkovModel<double>& model = parsed.model;
  const RiskMappingSpec<double>& spec = parsed.risk;
  const Index n = model.state_count();
  bool all_ok = true;
  const auto verdict = [&](const char* suite, bool ok, const std::string& note = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << suite;
    if (!note.empty()) std::cout << " (" << note << ")";
    std::cout << "\n";
    all_ok = all_ok && ok;
  };

  // Coherence axioms of v -> sigma(x, m, v) at each state, with the
  // horizon-length transition row as the base measure.
  {
    bool ok = true;
    std::string note;
    const MatrixX<double> q = transition_matrix(model.generator, 0.0, model.horizon());
    for (Index x = 0; x < n && ok; ++x) {
      const auto report =
          coherence_check(spec, x, VectorX<double>(q.row(x).transpose()), cfg.trials, cfg.seed + static_cast<std::uint64_t>(x));
      ok = report.all_passed();
      if (!ok) note = "state " + model.states.label(x) + ": " + report.first_failure;
    }
    verdict("coherence", ok, note);
  }

  // sigma(x, delta_x, v) = v(x) to machine precision.
  {
    Rng rng(cfg.seed + 1000);
    bool ok = true;
    for (Index x = 0; x < n && ok; ++x) {
      VectorX<double> dirac = VectorX<double>::Zero(n);
      dirac(x) = 1.0;
      for (Index trial = 0; trial < 100 && ok; ++trial) {
        VectorX<double> v(n);
        for (Index i = 0; i < n; ++i) v(i) = -5.0 + 10.0 * uniform01(rng);
        ok = std::abs(sigma_eval(spec, x, dirac, v) - v(x)) <= 1e-12;
      }
    }
    verdict("state consistency", ok);
  }

  // Primal evaluation against direct maximization over the dual set.
  if (n > 6) {
    std::cout << "[SKIP] primal-dual (dual maximization oracle is limited to 6 states)\n";
  } else {
    Rng rng(cfg.seed + 2000);
    bool ok = true;
    const bool exact = spec.kind() != RiskKind::semideviation || spec.order() == 1.0;
    for (Index trial = 0; trial < 200 && ok; ++trial) {
      const Index x = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
      VectorX<double> m(n), v(n);
      double total = 0.0;
      for (Index i = 0; i < n; ++i) {
        m(i) = 0.05 + uniform01(rng);
        total += m(i);
        v(i) = -5.0 + 10.0 * uniform01(rng);
      }
      m /= total;
      const double primal = sigma_eval(spec, x, m, v);
      const double dual = dual_support_bruteforce(spec, x, m, v);
      ok = exact ? std::abs(primal - dual) <= 1e-8
                 : dual <= primal + 1e-6 && dual >= primal - 1e-4;
    }
    verdict("primal-dual", ok, exact ? "" : "numerical dual maximizer, banded comparison");
  }

  // Difference quotients along the generator's own rows against the
  // closed-form support values.
  if (spec.kind() == RiskKind::semideviation && spec.order() != 1.0) {
    std::cout << "[SKIP] semi-derivative (no closed-form support above order 1; "
                 "use the dp command)\n";
  } else {
    Rng rng(cfg.seed + 3000);
    bool ok = true;
    std::string note;
    std::vector<io::FdCsvBlock> blocks;
    const MatrixX<double>& g = model.generator.piece(0);
    for (Index x = 0; x < n; ++x) {
      std::vector<double> ladder;
      const double limit = max_step_row(g.row(x), x);
      for (double e : cfg.eps)
        if (e < limit) ladder.push_back(e);
      if (ladder.empty()) {
        note = "state " + model.states.label(x) + ": every step exceeds the admissible range";
        ok = false;
        break;
      }
      VectorX<double> v(n);
      for (Index i = 0; i < n; ++i) v(i) = -2.0 + 4.0 * uniform01(rng);
      const auto report = semi_derivative_fd_check(spec, x, VectorX<double>(g.row(x).transpose()), v, ladder);
      blocks.push_back({model.states.label(x), report.rows});
      if (!report.converged && ok) {
        ok = false;
        note = "state " + model.states.label(x) + ": quotients did not converge";
      }
    }
    verdict("semi-derivative", ok, note);
    if (!cfg.out_path.empty()) {
      io::write_fd_csv(cfg.out_path, blocks);
      std::cout << "wrote " << cfg.out_path << "\n";
    }
  }

  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"risk evaluation for continuous-time Markov chains"};
  app.require_subcommand(1);

  const auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model_path, "model JSON file")->required();
  };
  const auto add_out = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--out", cfg.out_path, "output CSV path");
    if (required) opt->required();
  };

  auto* validate = app.add_subcommand("validate", "check a model file against the generator rules");
  add_model(validate);

  auto* solve = app.add_subcommand("solve", "integrate the backward equation");
  add_model(solve);
  add_out(solve, true);
  solve->add_option("--scheme", cfg.scheme, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}));
  solve->add_option("--steps", cfg.steps, "time steps")->check(CLI::PositiveNumber);

  auto* dp = app.add_subcommand("dp", "run the discrete-time recursion");
  add_model(dp);
  add_out(dp, true);
  dp->add_option("--steps", cfg.dp_steps, "mesh size")->check(CLI::PositiveNumber);

  auto* converge = app.add_subcommand("converge", "dp-versus-ode convergence study");
  add_model(converge);
  add_out(converge, true);
  converge->add_option("--ladder", cfg.ladder, "mesh sizes, comma separated")->delimiter(',');
  converge->add_option("--scheme", cfg.scheme, "reference scheme")->check(CLI::IsMember({"euler", "rk4"}));
  converge->add_option("--steps", cfg.steps, "minimum reference steps")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "sample path costs from every start state");
  add_model(simulate);
  add_out(simulate, true);
  simulate->add_option("--samples", cfg.samples, "paths per start state")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", cfg.seed, "rng seed");

  auto* check = app.add_subcommand("check", "audit the model's risk mapping");
  add_model(check);
  add_out(check, false);
  check->add_option("--eps", cfg.eps, "difference-quotient steps, comma separated")->delimiter(',');
  check->add_option("--trials", cfg.trials, "coherence trials per state")->check(CLI::PositiveNumber);
  check->add_option("--seed", cfg.seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (validate->parsed()) return cmd_validate(cfg);
    if (solve->parsed()) return cmd_solve(cfg);
    if (dp->parsed()) return cmd_dp(cfg);
    if (converge->parsed()) return cmd_converge(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    return cmd_check(cfg);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
