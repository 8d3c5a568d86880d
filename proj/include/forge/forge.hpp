#pragma once

#include "forge/adoption.hpp"
#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/graph.hpp"
#include "forge/metrics.hpp"
#include "forge/orchestrator.hpp"
#include "forge/pipeline.hpp"
#include "forge/segmenter.hpp"
#include "forge/stats.hpp"
#include "forge/syntax.hpp"
