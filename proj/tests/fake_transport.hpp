#pragma once

#include <vector>

#include "agg/aggregator.hpp"

namespace agg::test {

// Records everything and, when `loop` is set, feeds sent messages straight
// back into the aggregator on the first worker of the destination process.
struct RecordingTransport final : Transport {
  struct Local {
    WorkerRef from;
    WorkerRef dest;
    ItemBatch batch;
  };

  explicit RecordingTransport(Aggregator& a, bool loop_back = false) : agg(a), loop(loop_back) { agg.bind(*this); }

  void send_remote(WorkerRef, CoalescedMessage msg) override {
    sent.push_back(msg);
    if (loop) agg.on_receive(msg.dest_process * agg.topology().workers_per_proc(), std::move(msg));
  }
  void deliver_local(WorkerRef from, WorkerRef dest, ItemBatch batch) override {
    for (std::size_t i = 0; i < batch.size(); ++i) agg.sink().deliver(dest, batch[i]);
    local.push_back({from, dest, std::move(batch)});
  }
  void charge_grouping(WorkerRef, const GroupStats& stats) override {
    grouping.item_touches += stats.item_touches;
    grouping.bucket_touches += stats.bucket_touches;
  }
  Timestamp now(WorkerRef) const override { return clock; }

  Aggregator& agg;
  bool loop;
  Timestamp clock = 0;
  std::vector<CoalescedMessage> sent;
  std::vector<Local> local;
  GroupStats grouping;
};

// Sink whose handlers append (dest, src, seq) to per-worker logs.
struct DeliveryLog {
  struct Entry {
    WorkerRef src;
    std::uint64_t seq;
    friend auto operator<=>(const Entry&, const Entry&) = default;
  };

  explicit DeliveryLog(std::uint32_t workers) : per_worker(workers) {}

  DeliverySink sink() {
    DeliverySink s(static_cast<std::uint32_t>(per_worker.size()));
    for (WorkerRef u = 0; u < per_worker.size(); ++u)
      s.register_handler(u, [this, u](const ItemView& item) {
        per_worker[u].push_back({item.header.src, item.header.seq});
      });
    return s;
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& v : per_worker) n += v.size();
    return n;
  }

  std::vector<std::vector<Entry>> per_worker;
};

inline std::vector<std::byte> bytes_of(std::uint64_t v, std::size_t m = 8) { return make_payload(v, m); }

}  // namespace agg::test
