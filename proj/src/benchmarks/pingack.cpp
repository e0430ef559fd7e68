#include <algorithm>

#include "agg/errors.hpp"
#include "common.hpp"

namespace agg::bench {

namespace {

constexpr std::byte kPing{0};
constexpr std::byte kAck{1};

class PingAckProgram final : public Program {
 public:
  PingAckProgram(const PingAckSpec& spec, const Topology& topo)
      : spec_(spec), per_node_(topo.procs_per_node() * topo.workers_per_proc()), workers_(topo.total_workers()) {}

  bool step(WorkerContext& ctx) override {
    if (ctx.id() >= per_node_) return false;
    auto& s = workers_[ctx.id()];
    if (s.sent < spec_.messages_per_worker) {
      if (s.sent == 0 && ctx.id() == 0) first_send_ = ctx.now();
      send(ctx, ctx.id() + per_node_, kPing);
      ++s.sent;
      return true;
    }
    if (!s.flushed) {
      s.flushed = true;
      ctx.flush();
    }
    return false;
  }

  void deliver(WorkerContext& ctx, const ItemView& item) override {
    auto& s = workers_[ctx.id()];
    if (item.payload[0] == kAck) {
      ++acks_;
      last_ack_ = std::max(last_ack_, ctx.now());
      return;
    }
    if (++s.received == spec_.messages_per_worker) {
      send(ctx, 0, kAck);
      ctx.flush();
    }
  }

  std::uint64_t acks() const { return acks_; }
  Duration elapsed() const { return last_ack_ - first_send_; }

 private:
  void send(WorkerContext& ctx, WorkerRef dest, std::byte kind) {
    payload_.assign(spec_.message_size, std::byte{0});
    payload_[0] = kind;
    ctx.insert(dest, payload_);
  }

  struct WorkerState {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    bool flushed = false;
  };

  PingAckSpec spec_;
  std::uint32_t per_node_;
  std::vector<WorkerState> workers_;
  static thread_local std::vector<std::byte> payload_;
  // only touched by worker 0
  Timestamp first_send_ = 0;
  Timestamp last_ack_ = 0;
  std::uint64_t acks_ = 0;
};

thread_local std::vector<std::byte> PingAckProgram::payload_;

}  // namespace

PingAckResult run_pingack(const PingAckSpec& spec, const RunSetup& setup) {
  if (setup.topo.num_nodes() < 2) throw UsageError("pingack: needs at least two nodes");
  if (spec.message_size == 0) throw UsageError("pingack: message size must be positive");
  if (spec.messages_per_worker == 0) throw UsageError("pingack: need at least one message per worker");
  PingAckProgram program(spec, setup.topo);
  PingAckResult result;
  result.metrics = detail::execute(setup, spec.message_size, program, false);
  const Topology& topo = setup.topo;
  const std::uint32_t per_node = topo.procs_per_node() * topo.workers_per_proc();
  result.payload_messages = spec.messages_per_worker * per_node;
  result.acks = program.acks();
  if (result.acks != per_node) throw OracleMismatch("pingack: missing acks");
  result.total_time_ns = program.elapsed();
  result.throughput =
      result.total_time_ns > 0 ? static_cast<double>(result.payload_messages) / result.total_time_ns : 0.0;
  for (ProcessRef p = 0; p < topo.procs_per_node(); ++p)
    result.egress_per_process.push_back(p < result.metrics.comm.size() ? result.metrics.comm[p].egress_rate() : 0.0);
  return result;
}

std::vector<PingAckSweepRow> run_pingack_sweep(const PingAckSpec& spec, const RunSetup& base,
                                               std::uint32_t workers_per_node,
                                               const std::vector<std::uint32_t>& procs_per_node) {
  std::vector<PingAckSweepRow> rows;
  for (std::uint32_t ppn : procs_per_node) {
    if (ppn == 0 || workers_per_node % ppn != 0)
      throw UsageError("pingack sweep: " + std::to_string(ppn) + " does not divide " +
                       std::to_string(workers_per_node) + " workers per node");
    RunSetup setup = base;
    setup.topo = Topology(std::max(2u, base.topo.num_nodes()), ppn, workers_per_node / ppn);
    rows.push_back({ppn, run_pingack(spec, setup)});
  }
  return rows;
}

}  // namespace agg::bench
