// Umbrella header.
#pragma once

#include "slhjb/bench.hpp"
#include "slhjb/common.hpp"
#include "slhjb/grid.hpp"
#include "slhjb/interp.hpp"
#include "slhjb/operators.hpp"
#include "slhjb/problem.hpp"
#include "slhjb/problems.hpp"
#include "slhjb/solver.hpp"
#include "slhjb/verify.hpp"
