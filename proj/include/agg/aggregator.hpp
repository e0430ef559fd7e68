#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "agg/buffer.hpp"
#include "agg/group.hpp"
#include "agg/message.hpp"
#include "agg/scheme.hpp"
#include "agg/topology.hpp"

namespace agg {

/// Per-worker delivery handlers. Every worker needs one before the first insert.
class DeliverySink {
 public:
  using Handler = std::function<void(const ItemView&)>;

  explicit DeliverySink(std::uint32_t num_workers) : handlers_(num_workers) {}

  void register_handler(WorkerRef worker, Handler handler);
  bool has_handler(WorkerRef worker) const { return worker < handlers_.size() && bool(handlers_[worker]); }
  bool complete() const;
  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(handlers_.size()); }

  void deliver(WorkerRef worker, const ItemView& item) const { handlers_[worker](item); }

 private:
  std::vector<Handler> handlers_;
};

/// What the aggregator needs from the execution layer. Implemented by the
/// runtime; tests use small fakes.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Hands a coalesced message to the network. `emitter` is the worker whose
  /// context produced the send.
  virtual void send_remote(WorkerRef emitter, CoalescedMessage msg) = 0;
  /// Queues a batch on a worker of the caller's process.
  virtual void deliver_local(WorkerRef from, WorkerRef dest, ItemBatch batch) = 0;
  /// Charges grouping work to a worker context.
  virtual void charge_grouping(WorkerRef worker, const GroupStats& stats) = 0;
  virtual Timestamp now(WorkerRef worker) const = 0;
};

struct AutoFlush {
  bool on_idle = false;
  std::optional<Duration> timeout;
};

enum class InsertOutcome { Buffered, Bypassed };

/// Message aggregation front end for one run. Buffers are laid out per
/// scheme at construction; insert/flush are called from the owning worker's
/// context, on_receive from the receiving worker's context.
class Aggregator {
 public:
  Aggregator(SchemeKind kind, Topology topo, std::size_t capacity, std::size_t item_size, DeliverySink sink);
  Aggregator(const Aggregator&) = delete;
  Aggregator& operator=(const Aggregator&) = delete;

  SchemeKind kind() const noexcept { return kind_; }
  const Topology& topology() const noexcept { return topo_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t item_size() const noexcept { return item_size_; }
  DeliverySink& sink() noexcept { return sink_; }
  const DeliverySink& sink() const noexcept { return sink_; }

  void bind(Transport& transport) noexcept { transport_ = &transport; }
  bool bound() const noexcept { return transport_ != nullptr; }

  void set_auto_flush(bool on_idle, std::optional<Duration> timeout);
  const AutoFlush& auto_flush() const noexcept { return auto_flush_; }

  /// Stores the item in the buffer the scheme selects, or hands it straight to
  /// the local delivery queue when the destination shares the source's process.
  /// Emits a full message when the insert fills the buffer.
  InsertOutcome insert(WorkerRef source, const ItemHeader& header, std::span<const std::byte> payload);

  /// Sends every non-empty buffer in the caller's scope as a resized message.
  std::size_t flush(WorkerRef source);

  /// Flushes buffers owned by `source` whose first item has waited at least the
  /// configured timeout. No-op without a timeout.
  std::size_t flush_expired(WorkerRef source, Timestamp now);
  /// Earliest pending timeout deadline of `source`, if any.
  std::optional<Timestamp> next_deadline(WorkerRef source) const;

  /// Unpacks an arriving message on `receiver` and routes items to their workers.
  void on_receive(WorkerRef receiver, CoalescedMessage msg);

  /// Introspection.
  std::size_t buffers_per_worker(WorkerRef worker) const;
  std::size_t buffers_per_process(ProcessRef process) const;
  std::size_t allocated_bytes_per_worker(WorkerRef worker) const;
  std::size_t allocated_bytes_per_process(ProcessRef process) const;
  /// Items sitting in buffers. Racy while inserts are in flight.
  std::size_t buffered_items() const;
  std::size_t buffered_items_of_worker(WorkerRef worker) const;
  std::size_t buffered_items_of_process(ProcessRef process) const;

 private:
  struct Deadline {
    Timestamp expires_at;
    std::uint32_t buffer;
    std::uint64_t generation;
  };

  void check_ready(WorkerRef source, const ItemHeader& header);
  void emit(WorkerRef emitter, Scope scope, ProcessRef dest_process, ItemBatch batch, SendCause cause);
  void arm_deadline(WorkerRef source, std::uint32_t buffer, std::uint64_t generation, Timestamp first_at);
  void split_and_deliver(WorkerRef receiver, const ItemBatch& items);

  SchemeKind kind_;
  Topology topo_;
  std::size_t capacity_;
  std::size_t item_size_;
  DeliverySink sink_;
  Transport* transport_ = nullptr;
  AutoFlush auto_flush_;
  std::atomic<bool> sink_checked_{false};

  // WW / WPs / WsP: owned_[worker][destination scope]
  std::vector<std::vector<AggregationBuffer>> owned_;
  // PP: shared_[process][destination process]
  std::vector<std::vector<std::unique_ptr<SharedAggregationBuffer>>> shared_;
  std::vector<std::deque<Deadline>> deadlines_;
};

/// Factory matching the library's construction contract: g >= 1 and m >= 1.
std::unique_ptr<Aggregator> create_aggregator(SchemeKind kind, const Topology& topo, std::size_t g,
                                              std::size_t m, DeliverySink sink);

}  // namespace agg
