#pragma once

#include "ecsim/config.hpp"
#include "ecsim/graph.hpp"
#include "ecsim/harness.hpp"
#include "ecsim/metrics.hpp"
#include "ecsim/qnetwork.hpp"
#include "ecsim/random.hpp"
#include "ecsim/simulation.hpp"
#include "ecsim/superagent.hpp"
