#pragma once

#include "mesh.hpp"
#include "fem_basis.hpp"
#include "dof_map.hpp"
#include "viscosity.hpp"
#include "parallel.hpp"
#include "operators.hpp"
#include "transfer.hpp"
#include "linalg.hpp"
#include "chebyshev.hpp"
#include "krylov.hpp"
#include "multigrid.hpp"
#include "stokes_precond.hpp"
#include "benchmark.hpp"
