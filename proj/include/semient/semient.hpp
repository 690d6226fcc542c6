#pragma once

// Umbrella header for the library.

#include "semient/data_io.hpp"
#include "semient/density.hpp"
#include "semient/error.hpp"
#include "semient/format.hpp"
#include "semient/inner.hpp"
#include "semient/rootfind.hpp"
#include "semient/simulate.hpp"
#include "semient/solvers.hpp"
#include "semient/specfun.hpp"
