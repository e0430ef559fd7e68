#include <unordered_map>

#include "agg/errors.hpp"
#include "common.hpp"

namespace agg::bench {

namespace {

enum class IGKind : std::uint32_t { Request = 0, Response = 1 };

struct IGItem {
  IGKind kind;
  std::uint32_t request;
  std::uint64_t word;  // table index on requests, value on responses
};
static_assert(sizeof(IGItem) == 16);

class IGProgram final : public Program {
 public:
  IGProgram(const IGSpec& spec, const Topology& topo, std::size_t reservoir_cap)
      : spec_(spec), topo_(topo) {
    for (WorkerRef u = 0; u < topo.total_workers(); ++u) {
      WorkerState s{stream_rng(spec.seed, u, 1), {}, LatencyReservoir(reservoir_cap, spec.seed + u), {}, 0, 0, false, {}};
      s.expected.resize(spec.requests_per_worker);
      s.issued_at.resize(spec.requests_per_worker);
      workers_.push_back(std::move(s));
    }
  }

  bool step(WorkerContext& ctx) override {
    auto& s = workers_[ctx.id()];
    if (s.next < spec_.requests_per_worker) {
      const std::uint64_t index = s.pick(s.rng, Dist::param_type(0, spec_.table_size - 1));
      const auto req = static_cast<std::uint32_t>(s.next++);
      s.expected[req] = ig_table_value(index);
      s.issued_at[req] = ctx.now();
      ctx.insert_value(static_cast<WorkerRef>(index % topo_.total_workers()), IGItem{IGKind::Request, req, index});
      return true;
    }
    if (!s.flushed) {
      s.flushed = true;
      ctx.flush();
    }
    return false;
  }

  void deliver(WorkerContext& ctx, const ItemView& item) override {
    const auto msg = item.read<IGItem>();
    if (msg.kind == IGKind::Request) {
      ctx.insert_value(item.header.src, IGItem{IGKind::Response, msg.request, ig_table_value(msg.word)});
      return;
    }
    auto& s = workers_[ctx.id()];
    if (msg.request >= s.next || s.issued_at[msg.request] < 0)
      throw OracleMismatch("ig: unexpected or duplicate response");
    if (msg.word != s.expected[msg.request]) throw OracleMismatch("ig: wrong value gathered");
    s.latencies.add(ctx.now() - s.issued_at[msg.request]);
    s.issued_at[msg.request] = -1;
    ++s.matched;
  }

  std::uint64_t matched() const {
    std::uint64_t n = 0;
    for (const auto& s : workers_) n += s.matched;
    return n;
  }

  LatencyReservoir merged(std::size_t cap, std::uint64_t seed) const {
    std::vector<LatencyReservoir> parts;
    for (const auto& s : workers_) parts.push_back(s.latencies);
    return LatencyReservoir::merge(parts, cap, seed);
  }

 private:
  using Dist = std::uniform_int_distribution<std::uint64_t>;
  struct WorkerState {
    std::mt19937_64 rng;
    Dist pick;
    LatencyReservoir latencies;
    std::vector<std::uint64_t> expected;
    std::uint64_t next = 0;
    std::uint64_t matched = 0;
    bool flushed = false;
    std::vector<Timestamp> issued_at;
  };

  IGSpec spec_;
  Topology topo_;
  std::vector<WorkerState> workers_;
};

}  // namespace

std::uint64_t ig_table_value(std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = index + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

IGResult run_ig(const IGSpec& spec, const RunSetup& setup) {
  if (spec.table_size == 0) throw UsageError("ig: table_size must be positive");
  if (spec.requests_per_worker > std::numeric_limits<std::uint32_t>::max())
    throw UsageError("ig: too many requests per worker");
  const std::size_t cap = setup.runtime.latency_reservoir;
  IGProgram program(spec, setup.topo, cap);
  IGResult result;
  result.metrics = detail::execute(setup, sizeof(IGItem), program, true);
  result.matched = program.matched();
  result.round_trip = summarize_latency(program.merged(cap, spec.seed));
  const std::uint64_t want = spec.requests_per_worker * setup.topo.total_workers();
  if (result.matched != want)
    throw OracleMismatch("ig: " + std::to_string(result.matched) + " of " + std::to_string(want) + " responses");
  return result;
}

}  // namespace agg::bench
