#pragma once

// Umbrella header.

#include "odlab/analysis.hpp"
#include "odlab/config.hpp"
#include "odlab/csv.hpp"
#include "odlab/dataset.hpp"
#include "odlab/harness.hpp"
#include "odlab/idx.hpp"
#include "odlab/layers.hpp"
#include "odlab/losses.hpp"
#include "odlab/metrics.hpp"
#include "odlab/network.hpp"
#include "odlab/noise.hpp"
#include "odlab/optim.hpp"
#include "odlab/rng.hpp"
#include "odlab/serialize.hpp"
#include "odlab/tensor.hpp"
