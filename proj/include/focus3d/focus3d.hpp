#pragma once

#include "focus3d/exact/polynomial.hpp"
#include "focus3d/exact/quad_ext.hpp"
#include "focus3d/geometry/return_map.hpp"
#include "focus3d/geometry/surface.hpp"
#include "focus3d/geometry/table.hpp"
#include "focus3d/geometry/table_io.hpp"
#include "focus3d/geometry/vec3.hpp"
#include "focus3d/io/decimal.hpp"
#include "focus3d/jacobi.hpp"
#include "focus3d/stability.hpp"
