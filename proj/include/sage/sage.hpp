#pragma once

#include "sage/cli.hpp"
#include "sage/confidence.hpp"
#include "sage/config.hpp"
#include "sage/cost.hpp"
#include "sage/engine.hpp"
#include "sage/errors.hpp"
#include "sage/metrics.hpp"
#include "sage/model.hpp"
#include "sage/model_spec.hpp"
#include "sage/policy.hpp"
#include "sage/prob.hpp"
#include "sage/rng.hpp"
#include "sage/theory.hpp"
#include "sage/theory_report.hpp"
#include "sage/tree.hpp"
#include "sage/tree_builder.hpp"
#include "sage/verifier.hpp"
