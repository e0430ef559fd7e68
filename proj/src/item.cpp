#include "agg/item.hpp"

#include <algorithm>

#include "agg/errors.hpp"

namespace agg {

void ItemBatch::push_back(const ItemHeader& header, std::span<const std::byte> payload) {
  if (payload.size() != item_size_) throw UsageError("item payload size does not match the run-wide item size");
  headers_.push_back(header);
  payload_.insert(payload_.end(), payload.begin(), payload.end());
}

ItemBatch ItemBatch::slice(std::size_t first, std::size_t last) const {
  ItemBatch out(item_size_);
  out.headers_.assign(headers_.begin() + static_cast<std::ptrdiff_t>(first),
                      headers_.begin() + static_cast<std::ptrdiff_t>(last));
  out.payload_.assign(payload_.begin() + static_cast<std::ptrdiff_t>(first * item_size_),
                      payload_.begin() + static_cast<std::ptrdiff_t>(last * item_size_));
  return out;
}

}  // namespace agg
