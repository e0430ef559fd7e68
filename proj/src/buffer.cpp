#include "agg/buffer.hpp"

#include <cstring>
#include <thread>

#include "agg/errors.hpp"

namespace agg {

AggregationBuffer::AggregationBuffer(std::size_t capacity, std::size_t item_size)
    : item_size_(item_size), headers_(capacity), slots_(capacity * item_size) {
  if (capacity == 0 || item_size == 0) throw UsageError("aggregation buffer needs g >= 1 and m >= 1");
}

bool AggregationBuffer::append(const ItemHeader& header, std::span<const std::byte> payload) {
  if (fill_ >= headers_.size()) throw InvariantViolation("append to a full aggregation buffer");
  headers_[fill_] = header;
  std::memcpy(slots_.data() + fill_ * item_size_, payload.data(), item_size_);
  ++fill_;
  return fill_ == headers_.size();
}

ItemBatch AggregationBuffer::drain() {
  ItemBatch out(item_size_);
  out.reserve(fill_);
  for (std::size_t i = 0; i < fill_; ++i)
    out.push_back(headers_[i], std::span<const std::byte>(slots_.data() + i * item_size_, item_size_));
  fill_ = 0;
  ++generation_;
  return out;
}

SharedAggregationBuffer::SharedAggregationBuffer(std::size_t capacity, std::size_t item_size)
    : capacity_(capacity), item_size_(item_size), headers_(capacity), slots_(capacity * item_size) {
  if (capacity == 0 || item_size == 0) throw UsageError("aggregation buffer needs g >= 1 and m >= 1");
}

SharedAggregationBuffer::InsertResult SharedAggregationBuffer::insert(const ItemHeader& header,
                                                                      std::span<const std::byte> payload) {
  InsertResult result;
  const auto g = static_cast<std::uint32_t>(capacity_);
  for (;;) {
    const std::uint32_t idx = reserve_.fetch_add(1, std::memory_order_acq_rel);
    if (idx < g) {
      if (idx == 0) {
        result.opened = true;
        result.generation = generation_.load(std::memory_order_acquire);
      }
      headers_[idx] = header;
      std::memcpy(slots_.data() + std::size_t{idx} * item_size_, payload.data(), item_size_);
      const std::uint32_t published = publish_.fetch_add(1, std::memory_order_acq_rel) + 1;
      if (published == g) {
        result.sealed = copy_out(g);
        reopen();
      }
      return result;
    }
    ++result.retries;
    while (reserve_.load(std::memory_order_acquire) >= g) std::this_thread::yield();
  }
}

std::optional<ItemBatch> SharedAggregationBuffer::seal_for_flush() {
  const auto g = static_cast<std::uint32_t>(capacity_);
  if (reserve_.load(std::memory_order_acquire) == 0) return std::nullopt;
  const std::uint32_t claimed = reserve_.exchange(g, std::memory_order_acq_rel);
  if (claimed >= g) return std::nullopt;  // a fill or another flush owns the seal
  while (publish_.load(std::memory_order_acquire) < claimed) std::this_thread::yield();
  std::optional<ItemBatch> out;
  if (claimed > 0) out = copy_out(claimed);
  if (claimed > 0)
    reopen();
  else
    reserve_.store(0, std::memory_order_release);
  return out;
}

std::size_t SharedAggregationBuffer::fill() const noexcept {
  const auto p = publish_.load(std::memory_order_acquire);
  return p < capacity_ ? p : capacity_;
}

ItemBatch SharedAggregationBuffer::copy_out(std::size_t count) const {
  ItemBatch out(item_size_);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(headers_[i], std::span<const std::byte>(slots_.data() + i * item_size_, item_size_));
  return out;
}

void SharedAggregationBuffer::reopen() {
  generation_.fetch_add(1, std::memory_order_acq_rel);
  publish_.store(0, std::memory_order_release);
  reserve_.store(0, std::memory_order_release);
}

}  // namespace agg
