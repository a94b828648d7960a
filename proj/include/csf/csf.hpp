#pragma once

#include "csf/analytic.hpp"
#include "csf/chord_arc.hpp"
#include "csf/curve.hpp"
#include "csf/curve_io.hpp"
#include "csf/error.hpp"
#include "csf/flow.hpp"
#include "csf/geometry.hpp"
#include "csf/presets.hpp"
#include "csf/record_io.hpp"
#include "csf/resample.hpp"
#include "csf/run.hpp"
#include "csf/sphere.hpp"
#include "csf/threads.hpp"
#include "csf/vec3.hpp"
