#pragma once

#include <cstdint>
#include <vector>

#include "agg/item.hpp"
#include "agg/topology.hpp"

namespace agg {

/// Work done by one grouping pass.
struct GroupStats {
  /// One per item in the counting pass.
  std::uint64_t item_touches = 0;
  /// One per destination bucket in the prefix scan.
  std::uint64_t bucket_touches = 0;

  std::uint64_t total() const noexcept { return item_touches + bucket_touches; }
};

struct GroupedItems {
  ItemBatch items;
  /// offsets[r]..offsets[r+1] holds the items for local rank r; size t+1.
  std::vector<std::uint32_t> offsets;
  GroupStats stats;
};

/// Stable counting sort of a batch by destination worker. Every item must be
/// addressed to the same destination process, otherwise UsageError.
GroupedItems group_items(const ItemBatch& items, const Topology& topo);

}  // namespace agg
