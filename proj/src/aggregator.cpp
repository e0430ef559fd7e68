#include "agg/aggregator.hpp"

#include <algorithm>
#include <string>

#include "agg/errors.hpp"

namespace agg {

void DeliverySink::register_handler(WorkerRef worker, Handler handler) {
  if (worker >= handlers_.size()) throw UsageError("register_handler: worker out of range");
  handlers_[worker] = std::move(handler);
}

bool DeliverySink::complete() const {
  return std::ranges::all_of(handlers_, [](const Handler& h) { return bool(h); });
}

Aggregator::Aggregator(SchemeKind kind, Topology topo, std::size_t capacity, std::size_t item_size,
                       DeliverySink sink)
    : kind_(kind),
      topo_(topo),
      capacity_(capacity),
      item_size_(item_size),
      sink_(std::move(sink)),
      deadlines_(topo.total_workers()) {
  if (capacity == 0) throw UsageError("aggregator: buffer capacity g must be >= 1");
  if (item_size == 0) throw UsageError("aggregator: item size m must be >= 1");
  if (sink_.size() != topo_.total_workers()) throw UsageError("aggregator: sink sized for a different topology");

  const std::uint32_t w = topo_.total_workers();
  const std::uint32_t n = topo_.total_processes();
  switch (kind_) {
    case SchemeKind::WW:
    case SchemeKind::WPs:
    case SchemeKind::WsP: {
      // WW keeps a (never used) buffer for its own worker and the workers of
      // its own process so the layout matches g*m*N*t per core.
      const std::uint32_t per_worker = kind_ == SchemeKind::WW ? w : n;
      owned_.resize(w);
      for (auto& row : owned_) {
        row.reserve(per_worker);
        for (std::uint32_t i = 0; i < per_worker; ++i) row.emplace_back(capacity_, item_size_);
      }
      break;
    }
    case SchemeKind::PP:
      shared_.resize(n);
      for (auto& row : shared_) {
        row.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
          row.push_back(std::make_unique<SharedAggregationBuffer>(capacity_, item_size_));
      }
      break;
  }
}

void Aggregator::set_auto_flush(bool on_idle, std::optional<Duration> timeout) {
  if (timeout && *timeout < 0) throw UsageError("auto flush timeout must be >= 0");
  auto_flush_ = AutoFlush{on_idle, timeout};
}

void Aggregator::check_ready(WorkerRef source, const ItemHeader& header) {
  if (!transport_) throw SetupError("aggregator is not bound to a transport");
  if (!sink_checked_.load(std::memory_order_acquire)) {
    if (!sink_.complete()) throw SetupError("delivery sink is missing a handler for at least one worker");
    sink_checked_.store(true, std::memory_order_release);
  }
  const std::uint32_t w = topo_.total_workers();
  if (source >= w) throw UsageError("insert: source worker out of range");
  if (header.dest >= w)
    throw UsageError("insert: destination worker " + std::to_string(header.dest) + " out of range");
}

InsertOutcome Aggregator::insert(WorkerRef source, const ItemHeader& header, std::span<const std::byte> payload) {
  check_ready(source, header);
  if (payload.size() != item_size_) throw UsageError("insert: payload size does not match m");

  const ProcessRef src_proc = topo_.process_of(source);
  const ProcessRef dst_proc = topo_.process_of(header.dest);
  if (src_proc == dst_proc) {
    ItemBatch one(item_size_);
    one.push_back(header, payload);
    transport_->deliver_local(source, header.dest, std::move(one));
    return InsertOutcome::Bypassed;
  }

  if (kind_ == SchemeKind::PP) {
    auto& buf = *shared_[src_proc][dst_proc];
    auto result = buf.insert(header, payload);
    if (result.opened) arm_deadline(source, dst_proc, result.generation, header.created_at);
    if (result.sealed) emit(source, Scope::process(dst_proc), dst_proc, std::move(*result.sealed), SendCause::Full);
    return InsertOutcome::Buffered;
  }

  const bool per_worker = kind_ == SchemeKind::WW;
  const std::uint32_t slot = per_worker ? header.dest : dst_proc;
  auto& buf = owned_[source][slot];
  if (buf.empty()) arm_deadline(source, slot, buf.generation(), header.created_at);
  if (buf.append(header, payload)) {
    const Scope scope = per_worker ? Scope::worker(header.dest) : Scope::process(dst_proc);
    emit(source, scope, dst_proc, buf.drain(), SendCause::Full);
  }
  return InsertOutcome::Buffered;
}

std::size_t Aggregator::flush(WorkerRef source) {
  if (!transport_) throw SetupError("aggregator is not bound to a transport");
  if (source >= topo_.total_workers()) throw UsageError("flush: source worker out of range");
  std::size_t sent = 0;
  if (kind_ == SchemeKind::PP) {
    const ProcessRef p = topo_.process_of(source);
    for (ProcessRef d = 0; d < shared_[p].size(); ++d) {
      if (auto batch = shared_[p][d]->seal_for_flush()) {
        emit(source, Scope::process(d), d, std::move(*batch), SendCause::Flush);
        ++sent;
      }
    }
  } else {
    auto& row = owned_[source];
    for (std::uint32_t i = 0; i < row.size(); ++i) {
      if (row[i].empty()) continue;
      const bool per_worker = kind_ == SchemeKind::WW;
      const ProcessRef d = per_worker ? topo_.process_of(i) : i;
      emit(source, per_worker ? Scope::worker(i) : Scope::process(d), d, row[i].drain(), SendCause::Flush);
      ++sent;
    }
  }
  deadlines_[source].clear();
  return sent;
}

void Aggregator::arm_deadline(WorkerRef source, std::uint32_t buffer, std::uint64_t generation,
                              Timestamp first_at) {
  if (!auto_flush_.timeout) return;
  deadlines_[source].push_back(Deadline{first_at + *auto_flush_.timeout, buffer, generation});
}

std::optional<Timestamp> Aggregator::next_deadline(WorkerRef source) const {
  const auto& q = deadlines_[source];
  if (q.empty()) return std::nullopt;
  // Deadlines are armed in creation order, which is monotone per worker.
  return q.front().expires_at;
}

std::size_t Aggregator::flush_expired(WorkerRef source, Timestamp now) {
  if (!auto_flush_.timeout) return 0;
  auto& q = deadlines_[source];
  std::size_t sent = 0;
  while (!q.empty() && q.front().expires_at <= now) {
    const Deadline d = q.front();
    q.pop_front();
    if (kind_ == SchemeKind::PP) {
      const ProcessRef p = topo_.process_of(source);
      auto& buf = *shared_[p][d.buffer];
      if (buf.generation() != d.generation) continue;
      if (auto batch = buf.seal_for_flush()) {
        emit(source, Scope::process(d.buffer), d.buffer, std::move(*batch), SendCause::Flush);
        ++sent;
      }
    } else {
      auto& buf = owned_[source][d.buffer];
      if (buf.generation() != d.generation || buf.empty()) continue;
      const bool per_worker = kind_ == SchemeKind::WW;
      const ProcessRef dp = per_worker ? topo_.process_of(d.buffer) : d.buffer;
      emit(source, per_worker ? Scope::worker(d.buffer) : Scope::process(dp), dp, buf.drain(), SendCause::Flush);
      ++sent;
    }
  }
  return sent;
}

void Aggregator::emit(WorkerRef emitter, Scope scope, ProcessRef dest_process, ItemBatch batch, SendCause cause) {
  CoalescedMessage msg;
  msg.origin = topo_.process_of(emitter);
  msg.dest_process = dest_process;
  msg.dest_scope = scope;
  msg.cause = cause;
  switch (kind_) {
    case SchemeKind::WW:
      msg.grouped = true;  // single destination worker
      msg.items = std::move(batch);
      break;
    case SchemeKind::WsP: {
      auto grouped = group_items(batch, topo_);
      transport_->charge_grouping(emitter, grouped.stats);
      msg.items = std::move(grouped.items);
      msg.grouped = true;
      break;
    }
    case SchemeKind::WPs:
    case SchemeKind::PP:
      msg.items = std::move(batch);
      msg.grouped = false;
      break;
  }
  transport_->send_remote(emitter, std::move(msg));
}

void Aggregator::split_and_deliver(WorkerRef receiver, const ItemBatch& items) {
  const auto& headers = items.headers();
  std::size_t first = 0;
  while (first < headers.size()) {
    std::size_t last = first + 1;
    while (last < headers.size() && headers[last].dest == headers[first].dest) ++last;
    transport_->deliver_local(receiver, headers[first].dest, items.slice(first, last));
    first = last;
  }
}

void Aggregator::on_receive(WorkerRef receiver, CoalescedMessage msg) {
  if (!transport_) throw SetupError("aggregator is not bound to a transport");
  const ProcessRef here = topo_.process_of(receiver);
  if (msg.dest_process != here)
    throw InvariantViolation("message for process " + std::to_string(msg.dest_process) + " arrived at process " +
                             std::to_string(here));
  if (msg.items.empty()) throw InvariantViolation("received an empty coalesced message");

  if (msg.dest_scope.kind == Scope::Kind::Worker) {
    const WorkerRef dest = msg.dest_scope.index;
    for (const auto& h : msg.items.headers())
      if (h.dest != dest) throw InvariantViolation("worker-addressed message carries an item for another worker");
    transport_->deliver_local(receiver, dest, std::move(msg.items));
    return;
  }

  if (!msg.grouped) {
    auto grouped = group_items(msg.items, topo_);
    transport_->charge_grouping(receiver, grouped.stats);
    const std::uint32_t t = topo_.workers_per_proc();
    const WorkerRef base = here * t;
    for (std::uint32_t r = 0; r < t; ++r) {
      if (grouped.offsets[r] == grouped.offsets[r + 1]) continue;
      transport_->deliver_local(receiver, base + r, grouped.items.slice(grouped.offsets[r], grouped.offsets[r + 1]));
    }
    return;
  }
  for (const auto& h : msg.items.headers())
    if (topo_.process_of(h.dest) != here) throw InvariantViolation("grouped message carries a misrouted item");
  split_and_deliver(receiver, msg.items);
}

std::size_t Aggregator::buffers_per_worker(WorkerRef worker) const {
  if (worker >= topo_.total_workers()) throw UsageError("worker out of range");
  return kind_ == SchemeKind::PP ? 0 : owned_[worker].size();
}

std::size_t Aggregator::buffers_per_process(ProcessRef process) const {
  if (process >= topo_.total_processes()) throw UsageError("process out of range");
  if (kind_ == SchemeKind::PP) return shared_[process].size();
  std::size_t total = 0;
  for (WorkerRef u : topo_.workers_of(process)) total += owned_[u].size();
  return total;
}

std::size_t Aggregator::allocated_bytes_per_worker(WorkerRef worker) const {
  if (worker >= topo_.total_workers()) throw UsageError("worker out of range");
  if (kind_ == SchemeKind::PP) return 0;
  std::size_t total = 0;
  for (const auto& b : owned_[worker]) total += b.allocated_payload_bytes();
  return total;
}

std::size_t Aggregator::allocated_bytes_per_process(ProcessRef process) const {
  if (process >= topo_.total_processes()) throw UsageError("process out of range");
  std::size_t total = 0;
  if (kind_ == SchemeKind::PP) {
    for (const auto& b : shared_[process]) total += b->allocated_payload_bytes();
    return total;
  }
  for (WorkerRef u : topo_.workers_of(process)) total += allocated_bytes_per_worker(u);
  return total;
}

std::size_t Aggregator::buffered_items_of_worker(WorkerRef worker) const {
  if (kind_ == SchemeKind::PP) return 0;
  std::size_t total = 0;
  for (const auto& b : owned_[worker]) total += b.fill();
  return total;
}

std::size_t Aggregator::buffered_items_of_process(ProcessRef process) const {
  std::size_t total = 0;
  if (kind_ == SchemeKind::PP) {
    for (const auto& b : shared_[process]) total += b->fill();
    return total;
  }
  for (WorkerRef u : topo_.workers_of(process)) total += buffered_items_of_worker(u);
  return total;
}

std::size_t Aggregator::buffered_items() const {
  std::size_t total = 0;
  for (ProcessRef p = 0; p < topo_.total_processes(); ++p) total += buffered_items_of_process(p);
  return total;
}

std::unique_ptr<Aggregator> create_aggregator(SchemeKind kind, const Topology& topo, std::size_t g, std::size_t m,
                                              DeliverySink sink) {
  return std::make_unique<Aggregator>(kind, topo, g, m, std::move(sink));
}

}  // namespace agg
