#include "agg/group.hpp"

#include "agg/errors.hpp"

namespace agg {

GroupedItems group_items(const ItemBatch& items, const Topology& topo) {
  const std::uint32_t t = topo.workers_per_proc();
  GroupedItems out;
  out.offsets.assign(t + 1, 0);
  out.items = ItemBatch(items.item_size());
  const auto& headers = items.headers();
  if (headers.empty()) {
    out.stats.bucket_touches = t;
    return out;
  }

  const ProcessRef process = topo.process_of(headers.front().dest);
  const WorkerRef base = process * t;
  // counting pass
  std::vector<std::uint32_t> counts(t, 0);
  for (const auto& h : headers) {
    if (h.dest < base || h.dest >= base + t)
      throw UsageError("group_items: batch spans more than one destination process");
    ++counts[h.dest - base];
  }
  out.stats.item_touches = headers.size();
  // prefix scan over buckets
  std::uint32_t running = 0;
  for (std::uint32_t r = 0; r < t; ++r) {
    out.offsets[r] = running;
    running += counts[r];
  }
  out.offsets[t] = running;
  out.stats.bucket_touches = t;

  // placement pass, stable within a bucket
  std::vector<std::uint32_t> order(headers.size());
  std::vector<std::uint32_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  for (std::uint32_t i = 0; i < headers.size(); ++i) order[cursor[headers[i].dest - base]++] = i;

  out.items.reserve(headers.size());
  for (std::uint32_t i : order) out.items.push_back(items[i]);
  return out;
}

}  // namespace agg
