#pragma once

#include "agg/benchmarks.hpp"

namespace agg::bench::detail {

/// Builds the aggregator and runtime for one workload run and drives it to quiescence.
RunMetrics execute(const RunSetup& setup, std::size_t item_size, Program& program, bool default_idle_flush);

}  // namespace agg::bench::detail
