#pragma once

// Umbrella header.

#include "graphair/analysis.hpp"
#include "graphair/autodiff.hpp"
#include "graphair/checkpoint.hpp"
#include "graphair/common.hpp"
#include "graphair/evaluation.hpp"
#include "graphair/experiment.hpp"
#include "graphair/graph.hpp"
#include "graphair/graph_ops.hpp"
#include "graphair/io.hpp"
#include "graphair/losses.hpp"
#include "graphair/metrics.hpp"
#include "graphair/models.hpp"
#include "graphair/nn.hpp"
#include "graphair/plot.hpp"
#include "graphair/random.hpp"
#include "graphair/synthetic.hpp"
#include "graphair/trainer.hpp"
