#pragma once

#include "skewsync/error.hpp"
#include "skewsync/clock.hpp"
#include "skewsync/phy.hpp"
#include "skewsync/timing_loop.hpp"
#include "skewsync/skew_estimator.hpp"
#include "skewsync/bayes.hpp"
#include "skewsync/energy.hpp"
#include "skewsync/trace_io.hpp"
#include "skewsync/harness.hpp"
