#include "agg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "agg/errors.hpp"

namespace agg {

LatencyReservoir::LatencyReservoir(std::size_t cap, std::uint64_t seed) : cap_(cap), rng_(seed) {}

void LatencyReservoir::add(Duration sample) {
  ++seen_;
  sum_ += static_cast<long double>(sample);
  if (seen_ == 1 || sample > max_) max_ = sample;
  if (samples_.size() < cap_) {
    samples_.push_back(sample);
    return;
  }
  if (cap_ == 0) return;
  std::uniform_int_distribution<std::uint64_t> pick(0, seen_ - 1);
  const std::uint64_t j = pick(rng_);
  if (j < cap_) samples_[j] = sample;
}

LatencyReservoir LatencyReservoir::merge(std::span<const LatencyReservoir> parts, std::size_t cap,
                                         std::uint64_t seed) {
  LatencyReservoir out(cap, seed);
  std::uint64_t total_seen = 0;
  std::size_t total_kept = 0;
  for (const auto& p : parts) {
    total_seen += p.seen_;
    total_kept += p.samples_.size();
    out.sum_ += p.sum_;
    if (p.seen_ > 0 && (out.seen_ == 0 || p.max_ > out.max_)) out.max_ = p.max_;
    out.seen_ += p.seen_;
  }
  if (total_kept <= cap) {
    for (const auto& p : parts) out.samples_.insert(out.samples_.end(), p.samples_.begin(), p.samples_.end());
    return out;
  }
  for (const auto& p : parts) {
    if (p.seen_ == 0) continue;
    auto share = static_cast<std::size_t>(static_cast<long double>(cap) * p.seen_ / total_seen);
    share = std::min(share, p.samples_.size());
    std::vector<Duration> picked;
    std::sample(p.samples_.begin(), p.samples_.end(), std::back_inserter(picked), share, out.rng_);
    out.samples_.insert(out.samples_.end(), picked.begin(), picked.end());
  }
  return out;
}

Duration nearest_rank(std::vector<Duration> samples, double p) {
  if (samples.empty()) throw UsageError("nearest_rank: no samples");
  if (!(p > 0.0 && p <= 100.0)) throw UsageError("nearest_rank: percentile must be in (0, 100]");
  const auto n = samples.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1), samples.end());
  return samples[rank - 1];
}

void MetricsShard::record_message(const CoalescedMessage& msg, std::size_t item_size, std::size_t header_bytes,
                                  double transport_cost) {
  ++messages_sent;
  if (msg.cause == SendCause::Full)
    ++full_messages;
  else
    ++flush_messages;
  items_in_messages += msg.items.size();
  bytes_sent += msg.items.size() * item_size + header_bytes;
  transport_cost_ns += transport_cost;
}

void MetricsShard::record_delivery(Timestamp created_at, Timestamp delivered_at, ClockMode mode) {
  Duration latency = delivered_at - created_at;
  if (latency < 0) {
    if (mode == ClockMode::Virtual) throw InvariantViolation("negative item latency under a virtual clock");
    latency = 0;  // wall clocks of different threads may disagree by a few ns
  }
  ++delivered;
  latencies.add(latency);
}

double CommStats::egress_rate() const {
  const Timestamp span = last_departure - first_sent;
  if (messages == 0 || span <= 0) return 0.0;
  return static_cast<double>(messages) / static_cast<double>(span);
}

RunMetrics RunMetrics::merge(std::span<const MetricsShard> shards, SchemeKind scheme, const Topology& topo,
                             std::size_t g, std::size_t m, std::size_t reservoir_cap, std::uint64_t seed) {
  RunMetrics out;
  out.scheme = scheme;
  out.topo = topo;
  out.g = g;
  out.m = m;
  out.scope_is_process = scheme == SchemeKind::PP;
  const std::size_t scopes = out.scope_is_process ? topo.total_processes() : topo.total_workers();
  out.messages_per_scope.assign(scopes, 0);
  out.buffered_items_per_scope.assign(scopes, 0);

  std::vector<LatencyReservoir> parts;
  parts.reserve(shards.size());
  for (WorkerRef u = 0; u < shards.size(); ++u) {
    const auto& s = shards[u];
    out.messages_sent += s.messages_sent;
    out.full_messages += s.full_messages;
    out.flush_messages += s.flush_messages;
    out.items_in_messages += s.items_in_messages;
    out.bytes_sent += s.bytes_sent;
    out.transport_cost_ns += s.transport_cost_ns;
    out.produced += s.produced;
    out.delivered += s.delivered;
    out.self_sends += s.self_sends;
    out.grouping_ops += s.grouping_ops;
    out.wasted_updates += s.wasted_updates;
    out.out_of_order_events += s.out_of_order_events;
    const std::size_t scope = out.scope_is_process ? topo.process_of(u) : u;
    out.messages_per_scope[scope] += s.messages_sent;
    out.buffered_items_per_scope[scope] += s.buffered_inserts;
    parts.push_back(s.latencies);
  }
  out.latencies = LatencyReservoir::merge(parts, reservoir_cap, seed);
  return out;
}

LatencySummary summarize_latency(const LatencyReservoir& r) {
  LatencySummary s;
  s.count = r.seen();
  if (r.seen() == 0) return s;
  s.mean_ns = static_cast<double>(r.sum() / static_cast<long double>(r.seen()));
  s.p50 = nearest_rank(r.samples(), 50.0);
  s.p99 = nearest_rank(r.samples(), 99.0);
  s.max = r.max();
  return s;
}

Summary summarize(const RunMetrics& metrics) {
  if (!metrics.frozen) throw UsageError("summarize: run has not quiesced");
  Summary s;
  s.scheme = metrics.scheme;
  s.topo = metrics.topo.value_or(Topology{1, 1, 1});
  s.g = metrics.g;
  s.messages_sent = metrics.messages_sent;
  s.bytes_sent = metrics.bytes_sent;
  s.flush_messages = metrics.flush_messages;
  s.full_messages = metrics.full_messages;
  s.produced = metrics.produced;
  s.delivered = metrics.delivered;
  s.wasted_updates = metrics.wasted_updates;
  s.out_of_order_events = metrics.out_of_order_events;
  s.transport_cost_ns = metrics.transport_cost_ns;
  s.runtime_ns = metrics.runtime_ns;
  s.item_latency = summarize_latency(metrics.latencies);
  return s;
}

nlohmann::ordered_json to_json(const LatencySummary& l) {
  nlohmann::ordered_json j;
  j["count"] = l.count;
  j["mean_ns"] = l.mean_ns ? nlohmann::ordered_json(*l.mean_ns) : nlohmann::ordered_json(nullptr);
  j["p50"] = l.p50 ? nlohmann::ordered_json(*l.p50) : nlohmann::ordered_json(nullptr);
  j["p99"] = l.p99 ? nlohmann::ordered_json(*l.p99) : nlohmann::ordered_json(nullptr);
  j["max"] = l.max ? nlohmann::ordered_json(*l.max) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["scheme"] = std::string(to_token(s.scheme));
  j["topo"] = {{"nodes", s.topo.num_nodes()}, {"ppn", s.topo.procs_per_node()}, {"wpp", s.topo.workers_per_proc()}};
  j["g"] = s.g;
  j["messages_sent"] = s.messages_sent;
  j["bytes_sent"] = s.bytes_sent;
  j["flush_messages"] = s.flush_messages;
  j["full_messages"] = s.full_messages;
  j["produced"] = s.produced;
  j["delivered"] = s.delivered;
  j["item_latency"] = to_json(s.item_latency);
  j["wasted_updates"] = s.wasted_updates;
  j["out_of_order_events"] = s.out_of_order_events;
  j["transport_cost_ns"] = s.transport_cost_ns;
  j["runtime_ns"] = s.runtime_ns;
  return j;
}

std::string csv_header() {
  return "scheme,nodes,ppn,wpp,g,messages_sent,bytes_sent,flush_messages,full_messages,produced,delivered,"
         "latency_mean_ns,latency_p50,latency_p99,latency_max,wasted_updates,out_of_order_events,runtime_ns";
}

std::string csv_row(const Summary& s) {
  std::ostringstream os;
  auto opt = [&os](const auto& v) {
    if (v) os << *v;
  };
  os << to_token(s.scheme) << ',' << s.topo.num_nodes() << ',' << s.topo.procs_per_node() << ','
     << s.topo.workers_per_proc() << ',' << s.g << ',' << s.messages_sent << ',' << s.bytes_sent << ','
     << s.flush_messages << ',' << s.full_messages << ',' << s.produced << ',' << s.delivered << ',';
  os << std::setprecision(17);
  opt(s.item_latency.mean_ns);
  os << ',';
  opt(s.item_latency.p50);
  os << ',';
  opt(s.item_latency.p99);
  os << ',';
  opt(s.item_latency.max);
  os << ',' << s.wasted_updates << ',' << s.out_of_order_events << ',' << s.runtime_ns;
  return os.str();
}

}  // namespace agg
