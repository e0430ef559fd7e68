#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "agg/aggregator.hpp"
#include "agg/metrics.hpp"
#include "agg/runtime.hpp"
#include "agg/topology.hpp"

namespace agg::bench {

/// Everything a workload run needs besides its own spec.
struct RunSetup {
  SchemeKind scheme = SchemeKind::WPs;
  std::size_t g = 1024;
  Topology topo{1, 1, 1};
  TransportConfig transport;
  RuntimeOptions runtime;
  /// Overrides each workload's default idle-flush policy when set.
  std::optional<bool> idle_flush;
  std::optional<Duration> flush_timeout;
};

/// Per-worker random stream, independent of topology shape: seeded only by
/// (run seed, worker id, stream salt).
std::mt19937_64 stream_rng(std::uint64_t seed, WorkerRef worker, std::uint32_t salt = 0);

// ---------------------------------------------------------------- histogram

struct HistogramSpec {
  std::uint64_t updates_per_worker = 100'000;
  /// Bins; bin b lives on worker b % w. Must be >= w.
  std::uint64_t table_size = 1 << 20;
  std::uint64_t seed = 1;
};

struct HistogramResult {
  RunMetrics metrics;
  /// Global table indexed by bin.
  std::vector<std::uint64_t> table;
};

HistogramResult run_histogram(const HistogramSpec& spec, const RunSetup& setup);
/// Sequential count of the same update streams.
std::vector<std::uint64_t> histogram_oracle(const HistogramSpec& spec, const Topology& topo);

// ------------------------------------------------------------- index gather

struct IGSpec {
  std::uint64_t requests_per_worker = 10'000;
  std::uint64_t table_size = 1 << 20;
  std::uint64_t seed = 1;
};

struct IGResult {
  RunMetrics metrics;
  /// Request insert to response delivery, measured on the requesting worker.
  LatencySummary round_trip;
  std::uint64_t matched = 0;
};

/// Value stored at a table index.
std::uint64_t ig_table_value(std::uint64_t index);
IGResult run_ig(const IGSpec& spec, const RunSetup& setup);

// --------------------------------------------------------------------- SSSP

using Distance = std::uint64_t;
inline constexpr Distance kUnreachable = std::numeric_limits<Distance>::max();

/// Weighted directed graph in CSR form.
struct Graph {
  std::uint32_t num_vertices = 0;
  std::vector<std::uint64_t> offsets;  // size V+1
  std::vector<std::uint32_t> targets;
  std::vector<std::uint32_t> weights;

  std::size_t num_edges() const noexcept { return targets.size(); }
  static Graph from_edges(std::uint32_t num_vertices,
                          const std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>>& edges);
};

/// Uniform random digraph: every vertex gets `out_degree` edges to uniformly
/// chosen targets, weights uniform in [1, 100].
Graph random_graph(std::uint32_t num_vertices, std::uint32_t out_degree, std::uint64_t seed);
/// Text edge list, one "u v w" per line; '#' starts a comment.
Graph load_edge_list(const std::filesystem::path& path);
std::vector<Distance> dijkstra(const Graph& graph, std::uint32_t source);
/// FNV-1a over the distance array.
std::uint64_t distance_digest(const std::vector<Distance>& dist);

struct SSSPSpec {
  std::shared_ptr<const Graph> graph;
  std::uint32_t source = 0;
  /// Width of the distance window released per phase.
  Distance threshold_delta = 50;
  std::uint64_t seed = 1;
};

struct SSSPResult {
  RunMetrics metrics;
  std::vector<Distance> distances;
  std::uint64_t wasted_updates = 0;
  std::uint64_t phases = 0;
};

SSSPResult run_sssp(const SSSPSpec& spec, const RunSetup& setup);

// -------------------------------------------------------------------- PHOLD

struct PholdSpec {
  std::uint32_t lps_per_worker = 4;
  std::uint32_t initial_events_per_lp = 4;
  double mean_increment = 1.0;
  double end_time = 100.0;
  /// Modeled compute per consumed event.
  Duration event_cost_ns = 200;
  std::uint64_t seed = 1;
};

struct PholdResult {
  RunMetrics metrics;
  std::uint64_t out_of_order = 0;
  std::uint64_t events_processed = 0;
};

PholdResult run_phold(const PholdSpec& spec, const RunSetup& setup);

// ----------------------------------------------------------------- ping-ack

struct PingAckSpec {
  std::uint64_t messages_per_worker = 1000;
  std::size_t message_size = 8;
};

struct PingAckResult {
  RunMetrics metrics;
  std::uint64_t payload_messages = 0;
  std::uint64_t acks = 0;
  /// First send on worker 0 to the last ack received there.
  Duration total_time_ns = 0;
  /// Payload items per ns over total_time_ns.
  double throughput = 0.0;
  /// Egress rate (messages/ns) of each sending process's comm context.
  std::vector<double> egress_per_process;
};

/// Node 0 workers send to their counterpart on node 1, which acks worker 0
/// after receiving everything. Needs at least two nodes.
PingAckResult run_pingack(const PingAckSpec& spec, const RunSetup& setup);

struct PingAckSweepRow {
  std::uint32_t procs_per_node = 1;
  PingAckResult result;
};

/// Runs ping-ack for each procs-per-node value with the same number of
/// workers per node, so the node-to-node volume stays constant.
std::vector<PingAckSweepRow> run_pingack_sweep(const PingAckSpec& spec, const RunSetup& base,
                                               std::uint32_t workers_per_node,
                                               const std::vector<std::uint32_t>& procs_per_node);

}  // namespace agg::bench
