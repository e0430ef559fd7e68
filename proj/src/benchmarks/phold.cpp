#include <algorithm>
#include <functional>
#include <queue>

#include "agg/errors.hpp"
#include "common.hpp"

namespace agg::bench {

namespace {

struct Event {
  std::uint32_t lp;
  std::uint32_t pad;
  double timestamp;
};
static_assert(sizeof(Event) == 16);

// Each worker runs an optimistic scheduler over its LPs: arriving events
// wait in a timestamp-ordered pending set and the earliest one is executed
// per step. An event arriving with a timestamp below its LP's latest executed
// timestamp is a straggler; it is counted but not rolled back.
class PholdProgram final : public Program {
 public:
  PholdProgram(const PholdSpec& spec, const Topology& topo)
      : spec_(spec), total_lps_(topo.total_workers() * spec.lps_per_worker), workers_(topo.total_workers()) {
    for (WorkerRef u = 0; u < topo.total_workers(); ++u) {
      workers_[u].rng = stream_rng(spec.seed, u, 2);
      workers_[u].lvt.assign(spec.lps_per_worker, -1.0);
    }
  }

  void start(WorkerContext& ctx) override {
    auto& s = workers_[ctx.id()];
    for (std::uint32_t i = 0; i < spec_.lps_per_worker; ++i) {
      const std::uint32_t lp = ctx.id() * spec_.lps_per_worker + i;
      for (std::uint32_t k = 0; k < spec_.initial_events_per_lp; ++k) {
        const double ts = s.increment(s.rng, Exp::param_type(1.0 / spec_.mean_increment));
        if (ts <= spec_.end_time) s.pending.push({ts, lp});
      }
    }
  }

  bool step(WorkerContext& ctx) override {
    auto& s = workers_[ctx.id()];
    if (s.pending.empty()) return false;
    const auto [ts, lp] = s.pending.top();
    s.pending.pop();
    double& lvt = local_lvt(ctx, lp);
    lvt = std::max(lvt, ts);
    ctx.advance(spec_.event_cost_ns);
    ++s.processed;
    const double next = ts + s.increment(s.rng, Exp::param_type(1.0 / spec_.mean_increment));
    if (next <= spec_.end_time) {
      const auto dest = s.pick(s.rng, Pick::param_type(0, total_lps_ - 1));
      ctx.insert_value(dest / spec_.lps_per_worker, Event{dest, 0, next});
    }
    return !s.pending.empty();
  }

  void deliver(WorkerContext& ctx, const ItemView& item) override {
    const auto ev = item.read<Event>();
    if (ev.timestamp < local_lvt(ctx, ev.lp)) ctx.count_out_of_order();
    workers_[ctx.id()].pending.push({ev.timestamp, ev.lp});
  }

  std::uint64_t processed() const {
    std::uint64_t n = 0;
    for (const auto& s : workers_) n += s.processed;
    return n;
  }

 private:
  using Exp = std::exponential_distribution<double>;
  using Pick = std::uniform_int_distribution<std::uint32_t>;
  using Pending = std::pair<double, std::uint32_t>;
  struct WorkerState {
    std::mt19937_64 rng;
    Exp increment;
    Pick pick;
    std::vector<double> lvt;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
    std::uint64_t processed = 0;
  };

  double& local_lvt(WorkerContext& ctx, std::uint32_t lp) {
    return workers_[ctx.id()].lvt.at(lp - ctx.id() * spec_.lps_per_worker);
  }

  PholdSpec spec_;
  std::uint32_t total_lps_;
  std::vector<WorkerState> workers_;
};

}  // namespace

PholdResult run_phold(const PholdSpec& spec, const RunSetup& setup) {
  if (spec.lps_per_worker == 0) throw UsageError("phold: need at least one LP per worker");
  if (!(spec.mean_increment > 0) || !(spec.end_time >= 0)) throw UsageError("phold: bad time parameters");
  PholdProgram program(spec, setup.topo);
  PholdResult result;
  result.metrics = detail::execute(setup, sizeof(Event), program, true);
  result.out_of_order = result.metrics.out_of_order_events;
  result.events_processed = program.processed();
  return result;
}

}  // namespace agg::bench
