#pragma once

#include "unicon/backends.hpp"
#include "unicon/bench.hpp"
#include "unicon/bench_harness.hpp"
#include "unicon/block.hpp"
#include "unicon/config.hpp"
#include "unicon/dtype.hpp"
#include "unicon/error.hpp"
#include "unicon/executor.hpp"
#include "unicon/gap.hpp"
#include "unicon/graph.hpp"
#include "unicon/index_map.hpp"
#include "unicon/platform.hpp"
#include "unicon/registry.hpp"
#include "unicon/replay.hpp"
#include "unicon/state_space.hpp"
#include "unicon/trajectory.hpp"
