#pragma once

#include "sketchlab/analysis.hpp"
#include "sketchlab/decomposition.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/graph.hpp"
#include "sketchlab/graph_io.hpp"
#include "sketchlab/instances.hpp"
#include "sketchlab/parallel.hpp"
#include "sketchlab/random.hpp"
#include "sketchlab/recovery.hpp"
#include "sketchlab/sketch.hpp"
#include "sketchlab/spectral.hpp"
