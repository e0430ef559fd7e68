#pragma once

#include <cstdint>
#include <optional>

#include "agg/scheme.hpp"
#include "json.hpp"

namespace agg::cost {

/// Inputs of the analytic aggregation cost model.
///   g       items per buffer
///   m       bytes per item
///   N       total processes
///   t       workers per process
///   z       items sent per source scope (worker, or process for PP)
///   alpha   per-message latency, ns
///   beta    per-byte cost, ns/byte
///   r       buffer fill rate, items/ns
///   O       per-message processing overhead, ns (not used by any formula yet)
struct CostInputs {
  std::uint64_t g = 1;
  std::uint64_t m = 8;
  std::uint64_t N = 1;
  std::uint64_t t = 1;
  std::uint64_t z = 0;
  double alpha_ns = 0.0;
  double beta_ns_per_byte = 0.0;
  double r = 0.0;
  double O_ns = 0.0;
};

/// Throws UsageError when g == 0 or any real-valued input is negative.
void validate(const CostInputs& in);

struct MemoryOverhead {
  /// Absent for PP, whose buffers belong to the process.
  std::optional<std::uint64_t> per_core_bytes;
  std::uint64_t per_process_bytes = 0;
};

MemoryOverhead memory_overhead(SchemeKind kind, const CostInputs& in);

struct MessageBounds {
  /// ceil(z / g)
  std::uint64_t lower = 0;
  /// z / g + N*t (WW) or z / g + N (others), un-rounded.
  double upper = 0.0;
};

MessageBounds message_bounds(SchemeKind kind, const CostInputs& in);

/// Transport cost of z items in ceil(z/g) messages:
/// (z/g)*alpha + beta*m*z when g divides z.
double send_cost(const CostInputs& in);

/// Cost of sending each of z items on its own: z*(alpha + beta*m).
double unaggregated_send_cost(const CostInputs& in);

/// Upper bound g/r on the extra buffering delay of an item. std::nullopt
/// when r == 0 (the buffer never fills, the delay is unbounded).
std::optional<double> latency_penalty(const CostInputs& in);

/// Work units of grouping one buffer by destination worker: g + t.
std::uint64_t grouping_cost(std::uint64_t g, std::uint64_t t);

/// All four predictions for one scheme, as printed by `predict`.
nlohmann::ordered_json predict(SchemeKind kind, const CostInputs& in);

}  // namespace agg::cost
