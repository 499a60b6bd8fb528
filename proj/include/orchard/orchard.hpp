#pragma once

#include "orchard/apples.hpp"
#include "orchard/calibrate.hpp"
#include "orchard/cloud.hpp"
#include "orchard/color.hpp"
#include "orchard/config.hpp"
#include "orchard/connectivity.hpp"
#include "orchard/error.hpp"
#include "orchard/evaluate.hpp"
#include "orchard/geometry.hpp"
#include "orchard/hough.hpp"
#include "orchard/io.hpp"
#include "orchard/kdtree.hpp"
#include "orchard/log.hpp"
#include "orchard/msac.hpp"
#include "orchard/pipeline.hpp"
#include "orchard/ply.hpp"
#include "orchard/register.hpp"
#include "orchard/segment.hpp"
#include "orchard/separate.hpp"
#include "orchard/synth.hpp"
#include "orchard/thinning.hpp"
#include "orchard/voxel.hpp"
