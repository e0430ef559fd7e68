#include <atomic>
#include <memory>

#include "agg/errors.hpp"
#include "common.hpp"

namespace agg::bench {

namespace {

class HistogramProgram final : public Program {
 public:
  HistogramProgram(const HistogramSpec& spec, const Topology& topo)
      : spec_(spec), topo_(topo), workers_(topo.total_workers()), done_(topo.total_processes()) {
    const std::uint32_t w = topo.total_workers();
    for (WorkerRef u = 0; u < w; ++u) {
      auto& s = workers_[u];
      s.rng = stream_rng(spec.seed, u);
      s.remaining = spec.updates_per_worker;
      s.bins.assign((spec.table_size + w - 1 - u) / w, 0);
    }
    for (auto& d : done_) d.store(0);
  }

  bool step(WorkerContext& ctx) override {
    auto& s = workers_[ctx.id()];
    if (s.remaining > 0) {
      const std::uint64_t bin = s.pick(s.rng, Dist::param_type(0, spec_.table_size - 1));
      const std::uint64_t w = topo_.total_workers();
      ctx.insert_value(static_cast<WorkerRef>(bin % w), bin / w);
      --s.remaining;
      return true;
    }
    const ProcessRef p = ctx.process();
    if (!s.arrived) {
      // Flush only once every worker of the process is done inserting, so the
      // shared PP buffers see one end-of-phase flush.
      s.arrived = true;
      if (done_[p].fetch_add(1, std::memory_order_acq_rel) + 1 == topo_.workers_per_proc())
        for (WorkerRef v : topo_.workers_of(p)) ctx.wake(v);
      return false;
    }
    if (!s.flushed && done_[p].load(std::memory_order_acquire) == topo_.workers_per_proc()) {
      s.flushed = true;
      ctx.flush();
    }
    return false;
  }

  void deliver(WorkerContext& ctx, const ItemView& item) override {
    ++workers_[ctx.id()].bins.at(item.read<std::uint64_t>());
  }

  std::vector<std::uint64_t> table() const {
    const std::uint64_t w = topo_.total_workers();
    std::vector<std::uint64_t> out(spec_.table_size, 0);
    for (WorkerRef u = 0; u < w; ++u)
      for (std::uint64_t i = 0; i < workers_[u].bins.size(); ++i) out[i * w + u] = workers_[u].bins[i];
    return out;
  }

 private:
  using Dist = std::uniform_int_distribution<std::uint64_t>;
  struct WorkerState {
    std::mt19937_64 rng;
    Dist pick;
    std::uint64_t remaining = 0;
    bool arrived = false;
    bool flushed = false;
    std::vector<std::uint64_t> bins;
  };

  HistogramSpec spec_;
  Topology topo_;
  std::vector<WorkerState> workers_;
  std::vector<std::atomic<std::uint32_t>> done_;
};

}  // namespace

std::vector<std::uint64_t> histogram_oracle(const HistogramSpec& spec, const Topology& topo) {
  std::vector<std::uint64_t> table(spec.table_size, 0);
  for (WorkerRef u = 0; u < topo.total_workers(); ++u) {
    auto rng = stream_rng(spec.seed, u);
    std::uniform_int_distribution<std::uint64_t> pick(0, spec.table_size - 1);
    for (std::uint64_t i = 0; i < spec.updates_per_worker; ++i) ++table[pick(rng)];
  }
  return table;
}

HistogramResult run_histogram(const HistogramSpec& spec, const RunSetup& setup) {
  if (spec.table_size < setup.topo.total_workers())
    throw UsageError("histogram: table_size must be >= number of workers");
  HistogramProgram program(spec, setup.topo);
  HistogramResult result{detail::execute(setup, 8, program, false), program.table()};
  if (result.table != histogram_oracle(spec, setup.topo))
    throw OracleMismatch("histogram: table differs from the sequential count");
  return result;
}

}  // namespace agg::bench
