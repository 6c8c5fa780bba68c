#pragma once

#include "recur/error.hpp"
#include "recur/harness.hpp"
#include "recur/inference.hpp"
#include "recur/io.hpp"
#include "recur/metrics.hpp"
#include "recur/parallel.hpp"
#include "recur/rng.hpp"
#include "recur/simulate.hpp"
#include "recur/stats_core.hpp"
#include "recur/weights.hpp"
