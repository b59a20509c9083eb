#pragma once

#include "coefficients.hpp"
#include "error.hpp"
#include "excess.hpp"
#include "harness.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "numerics.hpp"
#include "potentials.hpp"
#include "solver.hpp"
#include "vec2.hpp"
