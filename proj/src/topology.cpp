#include "agg/topology.hpp"

#include <sstream>

#include "agg/errors.hpp"
#include "json.hpp"

namespace agg {

Topology::Topology(std::uint32_t num_nodes, std::uint32_t procs_per_node, std::uint32_t workers_per_proc)
    : num_nodes_(num_nodes), procs_per_node_(procs_per_node), workers_per_proc_(workers_per_proc) {
  if (num_nodes == 0 || procs_per_node == 0 || workers_per_proc == 0)
    throw UsageError("topology: nodes, ppn and wpp must all be >= 1");
  const std::uint64_t workers = std::uint64_t{num_nodes} * procs_per_node * workers_per_proc;
  if (workers > (std::uint64_t{1} << 31)) throw UsageError("topology: too many workers");
}

ProcessRef Topology::process_of(WorkerRef worker) const {
  if (worker >= total_workers()) throw UsageError("process_of: worker " + std::to_string(worker) + " out of range");
  return worker / workers_per_proc_;
}

NodeRef Topology::node_of(ProcessRef process) const {
  if (process >= total_processes())
    throw UsageError("node_of: process " + std::to_string(process) + " out of range");
  return process / procs_per_node_;
}

std::ranges::iota_view<WorkerRef, WorkerRef> Topology::workers_of(ProcessRef process) const {
  if (process >= total_processes())
    throw UsageError("workers_of: process " + std::to_string(process) + " out of range");
  return std::views::iota(process * workers_per_proc_, (process + 1) * workers_per_proc_);
}

std::uint32_t Topology::local_rank(WorkerRef worker) const {
  if (worker >= total_workers()) throw UsageError("local_rank: worker out of range");
  return worker % workers_per_proc_;
}

std::string Topology::describe() const {
  std::ostringstream os;
  os << num_nodes_ << 'x' << procs_per_node_ << 'x' << workers_per_proc_;
  return os.str();
}

Topology Topology::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("topology: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("topology: expected a JSON object");
  auto field = [&j](const char* key) -> std::uint32_t {
    if (!j.contains(key)) return 1;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned()) throw UsageError(std::string("topology: '") + key + "' must be a positive integer");
    return v.get<std::uint32_t>();
  };
  return Topology(field("nodes"), field("ppn"), field("wpp"));
}

}  // namespace agg
