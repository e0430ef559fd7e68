#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "agg/clock.hpp"
#include "agg/message.hpp"
#include "agg/scheme.hpp"
#include "agg/topology.hpp"
#include "json.hpp"

namespace agg {

/// Uniform reservoir of latency samples (Algorithm R). Count, sum and max
/// are exact regardless of the cap.
class LatencyReservoir {
 public:
  explicit LatencyReservoir(std::size_t cap = 1'000'000, std::uint64_t seed = 0);

  void add(Duration sample);
  /// Folds several reservoirs into one, each shard contributing in
  /// proportion to the samples it saw.
  static LatencyReservoir merge(std::span<const LatencyReservoir> parts, std::size_t cap, std::uint64_t seed);

  std::uint64_t seen() const noexcept { return seen_; }
  long double sum() const noexcept { return sum_; }
  Duration max() const noexcept { return max_; }
  const std::vector<Duration>& samples() const noexcept { return samples_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
  std::uint64_t seen_ = 0;
  long double sum_ = 0;
  Duration max_ = 0;
  std::vector<Duration> samples_;
  std::mt19937_64 rng_;
};

/// Nearest-rank percentile of an unsorted sample set; p in (0, 100].
Duration nearest_rank(std::vector<Duration> samples, double p);

/// Counters kept by one worker context. Only its owner writes them.
struct MetricsShard {
  explicit MetricsShard(std::size_t reservoir_cap = 1'000'000, std::uint64_t seed = 0) : latencies(reservoir_cap, seed) {}

  std::uint64_t messages_sent = 0;
  std::uint64_t full_messages = 0;
  std::uint64_t flush_messages = 0;
  std::uint64_t items_in_messages = 0;
  std::uint64_t bytes_sent = 0;
  double transport_cost_ns = 0;
  std::uint64_t produced = 0;
  std::uint64_t delivered = 0;
  std::uint64_t self_sends = 0;
  std::uint64_t buffered_inserts = 0;
  std::uint64_t grouping_ops = 0;
  std::uint64_t wasted_updates = 0;
  std::uint64_t out_of_order_events = 0;
  LatencyReservoir latencies;

  /// Once per emitted message. bytes = k*m + header_bytes.
  void record_message(const CoalescedMessage& msg, std::size_t item_size, std::size_t header_bytes,
                      double transport_cost);
  /// Once per item handed to a delivery handler. Negative latency under a
  /// virtual clock means the clock model is broken and throws.
  void record_delivery(Timestamp created_at, Timestamp delivered_at, ClockMode mode);
};

/// Egress accounting of one process's communication context.
struct CommStats {
  std::uint64_t messages = 0;
  Timestamp first_sent = 0;
  Timestamp last_departure = 0;

  /// Messages per ns over the busy span; 0 when fewer than one message.
  double egress_rate() const;
};

/// Metrics of a whole run, merged from the per-worker shards at quiescence.
struct RunMetrics {
  SchemeKind scheme = SchemeKind::WW;
  std::optional<Topology> topo;
  std::size_t g = 0;
  std::size_t m = 0;

  std::uint64_t messages_sent = 0;
  std::uint64_t full_messages = 0;
  std::uint64_t flush_messages = 0;
  std::uint64_t items_in_messages = 0;
  std::uint64_t bytes_sent = 0;
  double transport_cost_ns = 0;
  std::uint64_t produced = 0;
  std::uint64_t delivered = 0;
  std::uint64_t self_sends = 0;
  std::uint64_t grouping_ops = 0;
  std::uint64_t wasted_updates = 0;
  std::uint64_t out_of_order_events = 0;
  Duration runtime_ns = 0;
  LatencyReservoir latencies{0};

  /// Source scope is the worker for WW/WPs/WsP and the process for PP.
  bool scope_is_process = false;
  std::vector<std::uint64_t> messages_per_scope;
  std::vector<std::uint64_t> buffered_items_per_scope;
  std::vector<CommStats> comm;

  bool frozen = false;

  static RunMetrics merge(std::span<const MetricsShard> shards, SchemeKind scheme, const Topology& topo,
                          std::size_t g, std::size_t m, std::size_t reservoir_cap, std::uint64_t seed);
};

struct LatencySummary {
  std::uint64_t count = 0;
  std::optional<double> mean_ns;
  std::optional<Duration> p50;
  std::optional<Duration> p99;
  std::optional<Duration> max;
};

LatencySummary summarize_latency(const LatencyReservoir& reservoir);

/// Serializable record of a finished run.
struct Summary {
  SchemeKind scheme = SchemeKind::WW;
  Topology topo{1, 1, 1};
  std::size_t g = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t flush_messages = 0;
  std::uint64_t full_messages = 0;
  std::uint64_t produced = 0;
  std::uint64_t delivered = 0;
  std::uint64_t wasted_updates = 0;
  std::uint64_t out_of_order_events = 0;
  double transport_cost_ns = 0;
  Duration runtime_ns = 0;
  LatencySummary item_latency;
};

/// Throws UsageError unless the metrics come from a quiesced run.
Summary summarize(const RunMetrics& metrics);

nlohmann::ordered_json to_json(const Summary& summary);
nlohmann::ordered_json to_json(const LatencySummary& latency);

/// Column order of csv_row.
std::string csv_header();
std::string csv_row(const Summary& summary);

}  // namespace agg
