#pragma once

#include <cstdint>

#include "agg/item.hpp"

namespace agg {

enum class SendCause : std::uint8_t { Full, Flush };

/// A message addresses either a single worker (WW) or a whole process.
struct Scope {
  enum class Kind : std::uint8_t { Worker, Process };
  Kind kind = Kind::Process;
  std::uint32_t index = 0;

  static Scope worker(WorkerRef w) { return {Kind::Worker, w}; }
  static Scope process(ProcessRef p) { return {Kind::Process, p}; }
  friend bool operator==(const Scope&, const Scope&) = default;
};

/// The on-the-wire unit produced by an aggregator.
struct CoalescedMessage {
  ProcessRef origin = 0;
  ProcessRef dest_process = 0;
  Scope dest_scope;
  ItemBatch items;
  /// Items with the same destination worker are contiguous.
  bool grouped = false;
  SendCause cause = SendCause::Full;
  Timestamp sent_at = 0;
  /// Aggregation traffic is expedited over ordinary application messages.
  bool priority = true;
};

}  // namespace agg
