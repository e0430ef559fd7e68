#include "common.hpp"

#include <array>

namespace agg::bench {

std::mt19937_64 stream_rng(std::uint64_t seed, WorkerRef worker, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), worker, salt,
                    0x5eedu};
  return std::mt19937_64(seq);
}

namespace detail {

RunMetrics execute(const RunSetup& setup, std::size_t item_size, Program& program, bool default_idle_flush) {
  auto agg = create_aggregator(setup.scheme, setup.topo, setup.g, item_size, DeliverySink(setup.topo.total_workers()));
  agg->set_auto_flush(setup.idle_flush.value_or(default_idle_flush), setup.flush_timeout);
  Runtime rt(*agg, setup.transport, setup.runtime);
  rt.spawn(program);
  return rt.await_quiescence();
}

}  // namespace detail
}  // namespace agg::bench
