#include <vector>

#include "agg/errors.hpp"
#include "agg/scheme.hpp"
#include "agg/topology.hpp"
#include "doctest.h"

using namespace agg;

TEST_CASE("process_of follows the dense mapping") {
  CHECK(Topology(1, 2, 4).process_of(0) == 0);
  CHECK(Topology(1, 2, 4).process_of(5) == 1);
  CHECK(Topology(2, 2, 2).process_of(7) == 3);
  CHECK_THROWS_AS(Topology(1, 2, 4).process_of(8), UsageError);
}

TEST_CASE("workers_of returns the half-open block") {
  auto range = [](const Topology& t, ProcessRef p) {
    auto r = t.workers_of(p);
    return std::vector<WorkerRef>(r.begin(), r.end());
  };
  CHECK(range(Topology(1, 2, 4), 1) == std::vector<WorkerRef>{4, 5, 6, 7});
  CHECK(range(Topology(1, 1, 1), 0) == std::vector<WorkerRef>{0});
  auto big = Topology(4, 8, 8).workers_of(31);
  CHECK(*big.begin() == 248);
  CHECK(*big.end() == 256);
  CHECK_THROWS_AS(Topology(1, 2, 4).workers_of(2), UsageError);
}

TEST_CASE("zero-sized dimensions are rejected") {
  CHECK_THROWS_AS(Topology(0, 1, 1), UsageError);
  CHECK_THROWS_AS(Topology(1, 0, 1), UsageError);
  CHECK_THROWS_AS(Topology(1, 1, 0), UsageError);
}

TEST_CASE("worker <-> (process, rank) is a bijection") {
  for (auto [n, p, t] : {std::tuple{1u, 1u, 1u}, {2u, 2u, 2u}, {3u, 1u, 5u}, {2u, 4u, 4u}}) {
    Topology topo(n, p, t);
    std::vector<int> seen(topo.total_workers(), 0);
    for (WorkerRef u = 0; u < topo.total_workers(); ++u) {
      const auto proc = topo.process_of(u);
      bool inside = false;
      for (WorkerRef v : topo.workers_of(proc)) inside |= v == u;
      CHECK(inside);
      CHECK(topo.local_rank(u) < t);
      CHECK(proc * t + topo.local_rank(u) == u);
      ++seen[u];
      CHECK(topo.node_of_worker(u) == proc / p);
    }
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("scheme tokens") {
  CHECK(parse_scheme("ww") == SchemeKind::WW);
  CHECK(parse_scheme("WPs") == SchemeKind::WPs);
  CHECK(parse_scheme("wsp") == SchemeKind::WsP);
  CHECK(parse_scheme("PP") == SchemeKind::PP);
  for (auto k : kAllSchemes) CHECK(parse_scheme(to_token(k)) == k);
  CHECK_THROWS_AS(parse_scheme("wpp"), UsageError);
  CHECK(Topology(2, 3, 4).describe() == "2x3x4");
}

TEST_CASE("topology from a JSON object") {
  CHECK(Topology::from_json(R"({"nodes": 2, "ppn": 4, "wpp": 8})") == Topology(2, 4, 8));
  CHECK(Topology::from_json(R"({"wpp": 3})") == Topology(1, 1, 3));
  CHECK_THROWS_AS(Topology::from_json(R"({"nodes": 0})"), UsageError);
  CHECK_THROWS_AS(Topology::from_json(R"({"nodes": -1})"), UsageError);
  CHECK_THROWS_AS(Topology::from_json("[1, 2]"), UsageError);
  CHECK_THROWS_AS(Topology::from_json("{nodes"), UsageError);
}
