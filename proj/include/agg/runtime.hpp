#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "agg/aggregator.hpp"
#include "agg/clock.hpp"
#include "agg/errors.hpp"
#include "agg/metrics.hpp"

namespace agg {

/// threaded: one OpenMP thread per worker context.
/// sequential: a single thread steps worker contexts in a seeded,
/// reproducible order (by virtual ready time, or round-robin on wall clocks).
enum class RunMode { Threaded, Sequential };

std::string_view to_token(RunMode mode);
RunMode parse_run_mode(std::string_view token);

/// Network model: arrival = departure + alpha + beta * bytes, where departure
/// waits for the origin process's communication context when enabled.
struct TransportConfig {
  double alpha_ns = 0.0;
  double beta_ns_per_byte = 0.0;
  Duration comm_cost_ns = 0;
  bool comm_enabled = false;
  ClockMode clock = ClockMode::Virtual;
};

/// Compute charged to worker clocks in virtual mode.
struct WorkCosts {
  Duration insert_ns = 10;
  Duration deliver_ns = 10;
  Duration group_op_ns = 1;
  Duration receive_overhead_ns = 0;
};

struct RuntimeOptions {
  RunMode mode = RunMode::Sequential;
  std::uint64_t seed = 1;
  WorkCosts costs;
  std::size_t header_bytes = 0;
  std::size_t latency_reservoir = 1'000'000;
  std::chrono::milliseconds quiescence_timeout{120'000};
  /// JSON-lines message trace, one object per emitted message.
  std::ostream* trace = nullptr;
};

class Runtime;

/// Handle a program uses from inside one worker's context.
class WorkerContext {
 public:
  WorkerRef id() const noexcept { return id_; }
  ProcessRef process() const noexcept { return process_; }
  const Topology& topology() const noexcept;
  std::size_t item_size() const noexcept;

  Timestamp now() const noexcept { return clock_.now(); }
  /// Models local computation.
  void advance(Duration ns) noexcept { clock_.advance(ns); }

  InsertOutcome insert(WorkerRef dest, std::span<const std::byte> payload);
  template <class T>
  InsertOutcome insert_value(WorkerRef dest, const T& value);

  std::size_t flush();
  /// Reactivates a parked worker of any process.
  void wake(WorkerRef worker);

  std::mt19937_64& rng() noexcept { return rng_; }
  MetricsShard& metrics() noexcept { return shard_; }
  void count_wasted_update(std::uint64_t n = 1) noexcept { shard_.wasted_updates += n; }
  void count_out_of_order(std::uint64_t n = 1) noexcept { shard_.out_of_order_events += n; }

 private:
  friend class Runtime;

  struct Envelope {
    Timestamp available_at = 0;
    std::uint64_t order = 0;
    std::variant<ItemBatch, CoalescedMessage> body;
  };

  /// Multi-producer, single-consumer; ordered by (available_at, order).
  class Inbox {
   public:
    void push(Envelope env);
    /// Pops the earliest envelope if it is available at `horizon`.
    std::optional<Envelope> pop_ready(Timestamp horizon);
    std::optional<Timestamp> earliest() const;
    std::size_t size() const;
    bool empty() const { return size_.load(std::memory_order_acquire) == 0; }

   private:
    static bool later(const Envelope& a, const Envelope& b);

    mutable std::mutex mutex_;
    std::vector<Envelope> heap_;
    std::atomic<std::size_t> size_{0};
  };

  WorkerContext(Runtime& rt, WorkerRef id, ProcessRef process, Clock clock, std::uint64_t seed,
                std::size_t reservoir_cap);

  void deliver_items(const ItemBatch& batch);

  Runtime* rt_;
  WorkerRef id_;
  ProcessRef process_;
  Clock clock_;
  std::mt19937_64 rng_;
  MetricsShard shard_;
  std::uint64_t next_seq_ = 0;
  Inbox inbox_;
  bool driver_active_ = true;
  bool idle_flushed_ = false;
  bool receiving_ = false;
  std::atomic<bool> wake_pending_{false};
  std::atomic<Timestamp> wake_at_{0};
  // threaded-mode quiescence voting
  std::atomic<bool> idle_{false};
  std::atomic<bool> busy_{false};
  std::atomic<std::uint64_t> activity_{0};
};

/// Application driver run inside every worker context.
class Program {
 public:
  virtual ~Program() = default;
  virtual void start(WorkerContext&) {}
  /// One bounded unit of driver work. Return false to park the driver until
  /// the worker receives items or is woken.
  virtual bool step(WorkerContext& ctx) = 0;
  /// Registered as the worker's delivery handler unless one already exists.
  virtual void deliver(WorkerContext& ctx, const ItemView& item) = 0;
  /// Called for every worker at global quiescence. Return true if the worker
  /// has new work (the run then continues).
  virtual bool on_quiescence(WorkerContext&) { return false; }
};

/// Executes a topology of worker contexts over an aggregator, models the
/// inter-process network, and detects quiescence.
class Runtime final : public Transport {
 public:
  Runtime(Aggregator& agg, TransportConfig cfg, RuntimeOptions opts = {});
  ~Runtime() override;
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Creates the worker contexts and starts the program. A second spawn on
  /// the same runtime is a UsageError.
  void spawn(Program& program);

  /// Runs until every driver is idle, every produced item is delivered and
  /// every buffer is empty. Returns frozen metrics.
  RunMetrics await_quiescence();

  std::size_t worker_context_count() const noexcept { return workers_.size(); }
  std::size_t comm_context_count() const noexcept;
  const Topology& topology() const noexcept { return topo_; }
  const TransportConfig& transport_config() const noexcept { return cfg_; }
  const RuntimeOptions& options() const noexcept { return opts_; }
  Aggregator& aggregator() noexcept { return agg_; }
  WorkerContext& worker(WorkerRef u) { return *workers_.at(u); }
  /// Number of quiescence rounds (phases) completed so far.
  std::uint64_t quiescence_rounds() const noexcept { return rounds_; }

  /// Human-readable state dump used on timeout.
  std::string diagnostic() const;

  // Transport
  void send_remote(WorkerRef emitter, CoalescedMessage msg) override;
  void deliver_local(WorkerRef from, WorkerRef dest, ItemBatch batch) override;
  void charge_grouping(WorkerRef worker, const GroupStats& stats) override;
  Timestamp now(WorkerRef worker) const override;

 private:
  friend class WorkerContext;

  struct Channel {
    std::mutex mutex;
    Timestamp comm_free_at = 0;
    CommStats stats;
    std::vector<Timestamp> last_arrival;
    std::vector<std::uint32_t> next_receiver;
  };

  bool turn(WorkerContext& wk, bool honor_time);
  void process(WorkerContext& wk, WorkerContext::Envelope env);
  Timestamp ready_time(const WorkerContext& wk) const;
  void reschedule(WorkerRef u);
  void touch(WorkerRef u);
  void run_sequential_virtual();
  void run_sequential_round_robin();
  void run_threaded();
  bool detect_threaded_quiescence();
  bool has_pending_work() const;
  void check_deadline() const;
  void push(WorkerRef dest, WorkerContext::Envelope env);

  Aggregator& agg_;
  Topology topo_;
  TransportConfig cfg_;
  RuntimeOptions opts_;
  Clock::Origin origin_;
  std::chrono::steady_clock::time_point started_;
  Program* program_ = nullptr;
  std::vector<std::unique_ptr<WorkerContext>> workers_;
  std::vector<std::unique_ptr<Channel>> channels_;
  std::atomic<std::uint64_t> envelope_order_{0};
  std::mutex trace_mutex_;
  std::uint64_t rounds_ = 0;

  // sequential scheduling
  std::vector<std::uint32_t> tiebreak_;
  std::vector<Timestamp> key_;
  std::set<std::tuple<Timestamp, std::uint32_t, WorkerRef>> ready_;
  std::vector<WorkerRef> touched_;
  bool scheduling_ = false;

  // threaded mode
  std::atomic<bool> stop_{false};
  std::atomic<bool> timed_out_{false};
  std::exception_ptr failure_;
  std::mutex failure_mutex_;
};

template <class T>
InsertOutcome WorkerContext::insert_value(WorkerRef dest, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  const std::size_t m = item_size();
  if (sizeof(T) > m) throw UsageError("insert_value: value larger than the item size");
  std::array<std::byte, 256> small{};
  if (m <= small.size()) {
    std::memcpy(small.data(), &value, sizeof(T));
    return insert(dest, std::span<const std::byte>(small.data(), m));
  }
  auto bytes = make_payload(value, m);
  return insert(dest, bytes);
}

}  // namespace agg
