#pragma once

// Umbrella header.

#include "lpdepth/classify.hpp"
#include "lpdepth/config.hpp"
#include "lpdepth/csv.hpp"
#include "lpdepth/error.hpp"
#include "lpdepth/harness.hpp"
#include "lpdepth/kde.hpp"
#include "lpdepth/lp_core.hpp"
#include "lpdepth/model_fit.hpp"
#include "lpdepth/rng.hpp"
#include "lpdepth/serialize.hpp"
#include "lpdepth/special.hpp"
#include "lpdepth/stats.hpp"
#include "lpdepth/synth.hpp"
