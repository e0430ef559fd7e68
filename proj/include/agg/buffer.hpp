#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "agg/item.hpp"

namespace agg {

/// Fixed-capacity staging area owned by a single worker. Not thread safe.
class AggregationBuffer {
 public:
  AggregationBuffer(std::size_t capacity, std::size_t item_size);

  std::size_t capacity() const noexcept { return headers_.size(); }
  std::size_t item_size() const noexcept { return item_size_; }
  std::size_t fill() const noexcept { return fill_; }
  bool empty() const noexcept { return fill_ == 0; }
  std::uint64_t generation() const noexcept { return generation_; }
  /// Bytes reserved for payload slots: capacity * item_size.
  std::size_t allocated_payload_bytes() const noexcept { return slots_.size(); }

  /// Copies the item into the next slot. Returns true when that slot was the
  /// last one; the caller must then drain().
  bool append(const ItemHeader& header, std::span<const std::byte> payload);

  /// Copies out exactly fill() items and resets the buffer.
  ItemBatch drain();

 private:
  std::size_t item_size_;
  std::size_t fill_ = 0;
  std::uint64_t generation_ = 0;
  std::vector<ItemHeader> headers_;
  std::vector<std::byte> slots_;
};

/// Buffer shared by every worker of a process.
///
/// Slots are claimed with a fetch-and-increment on `reserve` and made
/// visible by incrementing `publish` after the slot is written. Whoever
/// publishes slot g-1 seals the buffer: it copies the items out, bumps the
/// generation and reopens the buffer by resetting publish then reserve.
/// A reserver that draws an index >= g waits for the reopen and retries.
///
/// Flushing closes the buffer by swapping reserve to g, waits until every
/// claimed slot is published, then copies out the claimed prefix.
class SharedAggregationBuffer {
 public:
  SharedAggregationBuffer(std::size_t capacity, std::size_t item_size);
  SharedAggregationBuffer(const SharedAggregationBuffer&) = delete;
  SharedAggregationBuffer& operator=(const SharedAggregationBuffer&) = delete;

  struct InsertResult {
    /// Set when this insert completed the buffer.
    std::optional<ItemBatch> sealed;
    /// This insert took slot 0 of a generation.
    bool opened = false;
    std::uint64_t generation = 0;
    /// Number of times the reservation had to be retried.
    std::uint32_t retries = 0;
  };

  InsertResult insert(const ItemHeader& header, std::span<const std::byte> payload);

  /// Emits the published prefix, or nothing when empty or when a concurrent
  /// seal already owns the contents.
  std::optional<ItemBatch> seal_for_flush();

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t item_size() const noexcept { return item_size_; }
  std::size_t allocated_payload_bytes() const noexcept { return slots_.size(); }
  std::uint64_t generation() const noexcept { return generation_.load(std::memory_order_acquire); }
  /// Published items; exact only when no insert is in flight.
  std::size_t fill() const noexcept;

 private:
  ItemBatch copy_out(std::size_t count) const;
  void reopen();

  std::size_t capacity_;
  std::size_t item_size_;
  alignas(64) std::atomic<std::uint32_t> reserve_{0};
  alignas(64) std::atomic<std::uint32_t> publish_{0};
  alignas(64) std::atomic<std::uint64_t> generation_{0};
  std::vector<ItemHeader> headers_;
  std::vector<std::byte> slots_;
};

}  // namespace agg
