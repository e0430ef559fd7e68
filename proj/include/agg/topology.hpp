#pragma once

#include <cstdint>
#include <ranges>
#include <string>
#include <string_view>

namespace agg {

using WorkerRef = std::uint32_t;
using ProcessRef = std::uint32_t;
using NodeRef = std::uint32_t;

/// Node / process / worker hierarchy with a dense row-major id mapping:
/// workers [p*t, (p+1)*t) belong to process p, processes [n*ppn, (n+1)*ppn)
/// live on node n.
class Topology {
 public:
  Topology(std::uint32_t num_nodes, std::uint32_t procs_per_node, std::uint32_t workers_per_proc);

  std::uint32_t num_nodes() const noexcept { return num_nodes_; }
  std::uint32_t procs_per_node() const noexcept { return procs_per_node_; }
  std::uint32_t workers_per_proc() const noexcept { return workers_per_proc_; }

  /// N
  std::uint32_t total_processes() const noexcept { return num_nodes_ * procs_per_node_; }
  /// w = N * t
  std::uint32_t total_workers() const noexcept { return total_processes() * workers_per_proc_; }

  ProcessRef process_of(WorkerRef worker) const;
  NodeRef node_of(ProcessRef process) const;
  NodeRef node_of_worker(WorkerRef worker) const { return node_of(process_of(worker)); }
  std::ranges::iota_view<WorkerRef, WorkerRef> workers_of(ProcessRef process) const;
  /// Rank of a worker inside its process, in [0, t).
  std::uint32_t local_rank(WorkerRef worker) const;

  bool same_process(WorkerRef a, WorkerRef b) const { return process_of(a) == process_of(b); }

  std::string describe() const;

  /// Parses {"nodes": n, "ppn": p, "wpp": t}. Missing keys default to 1.
  static Topology from_json(std::string_view text);

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::uint32_t num_nodes_;
  std::uint32_t procs_per_node_;
  std::uint32_t workers_per_proc_;
};

}  // namespace agg
