#include "agg/costmodel.hpp"

#include <cmath>

#include "agg/errors.hpp"

namespace agg::cost {

void validate(const CostInputs& in) {
  if (in.g == 0) throw UsageError("cost model: g must be >= 1");
  if (in.alpha_ns < 0 || in.beta_ns_per_byte < 0 || in.r < 0 || in.O_ns < 0)
    throw UsageError("cost model: costs and rates must be >= 0");
}

MemoryOverhead memory_overhead(SchemeKind kind, const CostInputs& in) {
  validate(in);
  const std::uint64_t gmn = in.g * in.m * in.N;
  switch (kind) {
    case SchemeKind::WW: return {gmn * in.t, gmn * in.t * in.t};
    case SchemeKind::WPs:
    case SchemeKind::WsP: return {gmn, gmn * in.t};
    case SchemeKind::PP: return {std::nullopt, gmn};
  }
  return {};
}

MessageBounds message_bounds(SchemeKind kind, const CostInputs& in) {
  validate(in);
  MessageBounds b;
  b.lower = (in.z + in.g - 1) / in.g;
  const double ratio = static_cast<double>(in.z) / static_cast<double>(in.g);
  const double flush_term =
      kind == SchemeKind::WW ? static_cast<double>(in.N * in.t) : static_cast<double>(in.N);
  b.upper = ratio + flush_term;
  return b;
}

double send_cost(const CostInputs& in) {
  validate(in);
  const double messages = in.z % in.g == 0 ? static_cast<double>(in.z / in.g)
                                            : static_cast<double>((in.z + in.g - 1) / in.g);
  return messages * in.alpha_ns + in.beta_ns_per_byte * static_cast<double>(in.m) * static_cast<double>(in.z);
}

double unaggregated_send_cost(const CostInputs& in) {
  validate(in);
  return static_cast<double>(in.z) * (in.alpha_ns + in.beta_ns_per_byte * static_cast<double>(in.m));
}

std::optional<double> latency_penalty(const CostInputs& in) {
  validate(in);
  if (in.r == 0.0) return std::nullopt;
  return static_cast<double>(in.g) / in.r;
}

std::uint64_t grouping_cost(std::uint64_t g, std::uint64_t t) { return g + t; }

nlohmann::ordered_json predict(SchemeKind kind, const CostInputs& in) {
  const auto mem = memory_overhead(kind, in);
  const auto bounds = message_bounds(kind, in);
  const auto penalty = latency_penalty(in);
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["scheme"] = std::string(to_token(kind));
  j["memory_overhead"] = {
      {"per_core_bytes", mem.per_core_bytes ? nlohmann::ordered_json(*mem.per_core_bytes) : nullptr},
      {"per_process_bytes", mem.per_process_bytes}};
  j["message_bounds"] = {{"lower", bounds.lower}, {"upper", bounds.upper}};
  j["send_cost_ns"] = send_cost(in);
  j["latency_penalty_ns"] = penalty ? nlohmann::ordered_json(*penalty) : nlohmann::ordered_json(nullptr);
  j["grouping_cost_ops"] = grouping_cost(in.g, in.t);
  return j;
}

}  // namespace agg::cost
