#pragma once

// Umbrella header.

#include "fastmap/bench.hpp"
#include "fastmap/cell_index.hpp"
#include "fastmap/geojson.hpp"
#include "fastmap/geometry.hpp"
#include "fastmap/hierarchy.hpp"
#include "fastmap/io.hpp"
#include "fastmap/parallel.hpp"
#include "fastmap/simple_mapper.hpp"
#include "fastmap/synthetic.hpp"
