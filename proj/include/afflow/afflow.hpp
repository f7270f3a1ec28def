#pragma once

// Umbrella header for the numerical core. The scenario runner and the
// acceptance suite live in afflow/scenario.hpp and afflow/acceptance.hpp.

#include "afflow/error.hpp"
#include "afflow/ext_real.hpp"
#include "afflow/linalg.hpp"
#include "afflow/grid.hpp"
#include "afflow/support_field.hpp"
#include "afflow/derivatives.hpp"
#include "afflow/support_ops.hpp"
#include "afflow/invariants.hpp"
#include "afflow/solitons.hpp"
#include "afflow/flow.hpp"
#include "afflow/estimates.hpp"
#include "afflow/quadric.hpp"
#include "afflow/io.hpp"
