#pragma once

#include "ctmrisk/backward_solver.hpp"
#include "ctmrisk/cost.hpp"
#include "ctmrisk/discrete_approx.hpp"
#include "ctmrisk/generator.hpp"
#include "ctmrisk/kernels.hpp"
#include "ctmrisk/model.hpp"
#include "ctmrisk/model_io.hpp"
#include "ctmrisk/multigenerator.hpp"
#include "ctmrisk/risk_mappings.hpp"
#include "ctmrisk/simulate.hpp"
#include "ctmrisk/transition.hpp"
#include "ctmrisk/types.hpp"
