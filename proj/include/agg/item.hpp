#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <type_traits>
#include <vector>

#include "agg/clock.hpp"
#include "agg/topology.hpp"

namespace agg {

/// Fixed-size metadata carried with every item. The payload lives beside it.
struct ItemHeader {
  WorkerRef dest = 0;
  WorkerRef src = 0;
  std::uint64_t seq = 0;
  Timestamp created_at = 0;
};

/// Non-owning view of one item: header plus its m payload bytes.
struct ItemView {
  ItemHeader header;
  std::span<const std::byte> payload;

  template <class T>
  T read() const {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    std::memcpy(&value, payload.data(), sizeof(T) <= payload.size() ? sizeof(T) : payload.size());
    return value;
  }
};

/// Owning batch of items with a run-wide item size. Headers and payload are
/// stored as two parallel arrays; payload i occupies bytes [i*m, (i+1)*m).
class ItemBatch {
 public:
  ItemBatch() = default;
  explicit ItemBatch(std::size_t item_size) : item_size_(item_size) {}

  std::size_t size() const noexcept { return headers_.size(); }
  bool empty() const noexcept { return headers_.empty(); }
  std::size_t item_size() const noexcept { return item_size_; }
  std::size_t payload_bytes() const noexcept { return payload_.size(); }

  void reserve(std::size_t n) {
    headers_.reserve(n);
    payload_.reserve(n * item_size_);
  }

  void push_back(const ItemHeader& header, std::span<const std::byte> payload);
  void push_back(const ItemView& item) { push_back(item.header, item.payload); }

  ItemView operator[](std::size_t i) const {
    return {headers_[i], std::span<const std::byte>(payload_.data() + i * item_size_, item_size_)};
  }

  const std::vector<ItemHeader>& headers() const noexcept { return headers_; }

  /// Items [first, last) as a new batch.
  ItemBatch slice(std::size_t first, std::size_t last) const;

 private:
  std::size_t item_size_ = 0;
  std::vector<ItemHeader> headers_;
  std::vector<std::byte> payload_;
};

/// Serializes a trivially copyable value into an m-byte payload, zero padded.
template <class T>
std::vector<std::byte> make_payload(const T& value, std::size_t item_size) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::vector<std::byte> bytes(item_size);
  std::memcpy(bytes.data(), &value, sizeof(T) <= item_size ? sizeof(T) : item_size);
  return bytes;
}

}  // namespace agg
