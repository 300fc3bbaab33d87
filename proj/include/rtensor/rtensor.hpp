#pragma once

#include "annealed.hpp"
#include "borel.hpp"
#include "eigenpairs.hpp"
#include "errors.hpp"
#include "invariants.hpp"
#include "maps.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "special_functions.hpp"
#include "tensor.hpp"
#include "tensor_io.hpp"
#include "version.hpp"
