#pragma once

#include "turnpike/analysis.hpp"
#include "turnpike/are.hpp"
#include "turnpike/errors.hpp"
#include "turnpike/linalg.hpp"
#include "turnpike/model.hpp"
#include "turnpike/problem_io.hpp"
#include "turnpike/riccati.hpp"
#include "turnpike/sde.hpp"
#include "turnpike/stability.hpp"
#include "turnpike/stationary.hpp"
#include "turnpike/time_grid.hpp"

namespace turnpike {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace turnpike
