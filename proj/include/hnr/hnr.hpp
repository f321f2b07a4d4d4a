#pragma once

// Umbrella header for the Hetero-NodeRank toolkit.

#include "hnr/calibration.hpp"
#include "hnr/common.hpp"
#include "hnr/evaluation.hpp"
#include "hnr/graph.hpp"
#include "hnr/head_tail.hpp"
#include "hnr/io.hpp"
#include "hnr/parallel.hpp"
#include "hnr/rankers.hpp"
#include "hnr/rng.hpp"
#include "hnr/spearman.hpp"
