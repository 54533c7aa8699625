#pragma once

#include <stdexcept>
#include <utility>

#include "ctmrisk/cost.hpp"
#include "ctmrisk/generator.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

// A controlled-size bundle: state labels, generator schedule, cost data. The
// horizon lives on the generator; cost grids are clamped to it.
template <typename Scalar = double>
struct MarkovModel {
  StateSpace states;
  GeneratorSchedule<Scalar> generator;
  CostSpec<Scalar> cost;

  MarkovModel(StateSpace s, GeneratorSchedule<Scalar> g, CostSpec<Scalar> c)
      : states(std::move(s)), generator(std::move(g)), cost(std::move(c)) {
    if (states.size() != generator.states() || states.size() != cost.states())
      throw std::invalid_argument("model: state counts of labels, generator and cost disagree");
  }

  Index state_count() const { return states.size(); }
  Scalar horizon() const { return generator.horizon(); }
};

}  // namespace ctmrisk
