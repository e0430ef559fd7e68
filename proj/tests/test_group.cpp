#include <algorithm>
#include <random>

#include "agg/errors.hpp"
#include "agg/group.hpp"
#include "doctest.h"
#include "fake_transport.hpp"

using namespace agg;

namespace {

ItemBatch batch_of(const std::vector<std::pair<WorkerRef, std::uint64_t>>& items) {
  ItemBatch b(8);
  std::uint64_t seq = 0;
  for (auto [dest, v] : items) b.push_back({dest, 0, seq++, 0}, test::bytes_of(v));
  return b;
}

std::vector<std::pair<WorkerRef, std::uint64_t>> contents(const ItemBatch& b) {
  std::vector<std::pair<WorkerRef, std::uint64_t>> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.emplace_back(b[i].header.dest, b[i].read<std::uint64_t>());
  return out;
}

}  // namespace

TEST_CASE("grouping is stable") {
  const Topology topo(1, 1, 4);
  auto g = group_items(batch_of({{2, 'a'}, {0, 'b'}, {2, 'c'}}), topo);
  CHECK(contents(g.items) == std::vector<std::pair<WorkerRef, std::uint64_t>>{{0, 'b'}, {2, 'a'}, {2, 'c'}});
  CHECK(g.offsets == std::vector<std::uint32_t>{0, 1, 1, 3, 3});
}

TEST_CASE("already grouped input is unchanged") {
  const Topology topo(1, 1, 4);
  const std::vector<std::pair<WorkerRef, std::uint64_t>> in{{0, 1}, {1, 2}, {1, 3}, {3, 4}};
  CHECK(contents(group_items(batch_of(in), topo).items) == in);
}

TEST_CASE("grouping matches a reference stable sort") {
  const Topology topo(2, 1, 8);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<WorkerRef, std::uint64_t>> in;
    for (std::uint64_t i = 0; i < 1000; ++i) in.emplace_back(8 + rng() % 8, i);
    auto ref = in;
    std::ranges::stable_sort(ref, {}, &std::pair<WorkerRef, std::uint64_t>::first);
    auto g = group_items(batch_of(in), topo);
    CHECK(contents(g.items) == ref);
    CHECK(g.stats.item_touches == 1000);
    CHECK(g.stats.bucket_touches == 8);
    CHECK(g.stats.total() == 1008);
  }
}

TEST_CASE("empty batch costs one scan over the buckets") {
  auto g = group_items(ItemBatch(8), Topology(1, 1, 8));
  CHECK(g.items.empty());
  CHECK(g.stats.total() == 8);
}

TEST_CASE("mixed destination processes are rejected") {
  CHECK_THROWS_AS(group_items(batch_of({{0, 1}, {5, 2}}), Topology(1, 2, 4)), UsageError);
}
