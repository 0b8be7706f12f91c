#pragma once

#include "vec.hpp"
#include "specfun.hpp"
#include "geom.hpp"
#include "fields.hpp"
#include "solver.hpp"
#include "cgo.hpp"
#include "rellich.hpp"
#include "stability.hpp"
