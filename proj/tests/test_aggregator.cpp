#include <algorithm>
#include <random>

#include "agg/aggregator.hpp"
#include "agg/errors.hpp"
#include "doctest.h"
#include "fake_transport.hpp"

using namespace agg;
using test::DeliveryLog;
using test::RecordingTransport;

namespace {

struct Rig {
  Rig(SchemeKind kind, Topology topo, std::size_t g, bool loop = false)
      : log(topo.total_workers()), agg(kind, topo, g, 8, log.sink()), net(agg, loop) {}

  InsertOutcome send(WorkerRef src, WorkerRef dest, std::uint64_t seq) {
    return agg.insert(src, {dest, src, seq, net.clock}, test::bytes_of(seq));
  }

  DeliveryLog log;
  Aggregator agg;
  RecordingTransport net;
};

}  // namespace

TEST_CASE("buffer layout per scheme") {
  DeliveryLog log8(8), log16(16);
  CHECK(Aggregator(SchemeKind::WW, Topology(1, 2, 4), 32, 8, log8.sink()).buffers_per_worker(3) == 8);
  CHECK(Aggregator(SchemeKind::WPs, Topology(2, 2, 2), 16, 8, DeliveryLog(8).sink()).buffers_per_worker(0) == 4);
  CHECK(Aggregator(SchemeKind::WsP, Topology(2, 2, 2), 16, 8, DeliveryLog(8).sink()).buffers_per_worker(5) == 4);
  Aggregator pp(SchemeKind::PP, Topology(2, 2, 2), 16, 8, DeliveryLog(8).sink());
  std::size_t total = 0;
  for (ProcessRef p = 0; p < 4; ++p) {
    CHECK(pp.buffers_per_process(p) == 4);
    total += pp.buffers_per_process(p);
  }
  CHECK(total == 16);
  CHECK(pp.buffers_per_worker(0) == 0);
}

TEST_CASE("zero g or m is a usage error") {
  CHECK_THROWS_AS(create_aggregator(SchemeKind::WW, Topology(1, 1, 2), 0, 8, DeliveryLog(2).sink()), UsageError);
  CHECK_THROWS_AS(create_aggregator(SchemeKind::PP, Topology(1, 1, 2), 4, 0, DeliveryLog(2).sink()), UsageError);
}

TEST_CASE("insert preconditions") {
  Topology topo(2, 1, 2);
  SUBCASE("unbound") {
    Aggregator agg(SchemeKind::WW, topo, 4, 8, DeliveryLog(4).sink());
    CHECK_THROWS_AS(agg.insert(0, {2, 0, 0, 0}, test::bytes_of(0)), SetupError);
  }
  SUBCASE("missing handler") {
    DeliverySink sink(4);
    sink.register_handler(0, [](const ItemView&) {});
    Aggregator agg(SchemeKind::WW, topo, 4, 8, std::move(sink));
    RecordingTransport net(agg);
    CHECK_THROWS_AS(agg.insert(0, {2, 0, 0, 0}, test::bytes_of(0)), SetupError);
  }
  SUBCASE("bad destination") {
    Rig rig(SchemeKind::WPs, topo, 4);
    CHECK_THROWS_AS(rig.send(0, 4, 0), UsageError);
    CHECK_THROWS_AS(rig.agg.insert(0, {2, 0, 0, 0}, test::bytes_of(0, 4)), UsageError);
  }
}

TEST_CASE("two inserts fill a g=2 buffer into one message") {
  for (auto kind : kAllSchemes) {
    Rig rig(kind, Topology(2, 1, 2), 2);
    rig.send(0, 2, 0);
    CHECK(rig.net.sent.empty());
    rig.send(0, 2, 1);
    REQUIRE(rig.net.sent.size() == 1);
    CHECK(rig.net.sent[0].items.size() == 2);
    CHECK(rig.net.sent[0].cause == SendCause::Full);
  }
}

TEST_CASE("flush-starved buffer sends nothing until flushed") {
  Rig rig(SchemeKind::WW, Topology(2, 1, 1), 1024);
  for (std::uint64_t i = 0; i < 500; ++i) rig.send(0, 1, i);
  CHECK(rig.net.sent.empty());
  CHECK(rig.agg.buffered_items() == 500);
  CHECK(rig.agg.flush(0) == 1);
  CHECK(rig.net.sent[0].items.size() == 500);
  CHECK(rig.net.sent[0].cause == SendCause::Flush);
  CHECK(rig.agg.flush(0) == 0);
}

TEST_CASE("flush of one item sends k=1, flush of nothing sends nothing") {
  for (auto kind : kAllSchemes) {
    Rig rig(kind, Topology(2, 1, 2), 8);
    CHECK(rig.agg.flush(0) == 0);
    rig.send(0, 3, 0);
    CHECK(rig.agg.flush(0) == 1);
    REQUIRE(rig.net.sent.size() == 1);
    CHECK(rig.net.sent[0].items.size() == 1);
  }
}

TEST_CASE("WW flush after spreading over every remote worker sends one message per destination worker") {
  // Scaled down: 64 destination workers instead of 2048.
  Topology topo(2, 1, 64);
  Rig rig(SchemeKind::WW, topo, 1024);
  for (WorkerRef d = 64; d < 128; ++d)
    for (std::uint64_t i = 0; i < 488; ++i) rig.send(0, d, i);
  CHECK(rig.net.sent.empty());
  CHECK(rig.agg.flush(0) == 64);
}

TEST_CASE("self-process destinations bypass the buffers") {
  for (auto kind : kAllSchemes) {
    Rig rig(kind, Topology(2, 1, 2), 4);
    CHECK(rig.send(0, 0, 0) == InsertOutcome::Bypassed);
    CHECK(rig.send(0, 1, 1) == InsertOutcome::Bypassed);
    CHECK(rig.send(0, 2, 2) == InsertOutcome::Buffered);
    CHECK(rig.net.sent.empty());
    CHECK(rig.net.local.size() == 2);
    CHECK(rig.log.per_worker[0].size() == 1);
    CHECK(rig.log.per_worker[1].size() == 1);
  }
}

TEST_CASE("on_receive routes items") {
  Topology topo(2, 1, 2);
  SUBCASE("WW message: k deliveries on one worker") {
    Rig rig(SchemeKind::WW, topo, 3, true);
    for (std::uint64_t i = 0; i < 3; ++i) rig.send(0, 3, i);
    CHECK(rig.log.per_worker[3].size() == 3);
    CHECK(rig.net.local.size() == 1);
  }
  SUBCASE("WPs message for two workers: two contiguous local batches") {
    Rig rig(SchemeKind::WPs, topo, 4, true);
    rig.send(0, 3, 0);
    rig.send(0, 2, 1);
    rig.send(0, 3, 2);
    rig.send(0, 2, 3);
    REQUIRE(rig.net.local.size() == 2);
    CHECK(rig.net.local[0].dest == 2);
    CHECK(rig.net.local[0].batch.size() == 2);
    CHECK(rig.net.local[1].dest == 3);
    CHECK(rig.net.local[0].batch[0].header.seq == 1);
    CHECK(rig.net.local[0].batch[1].header.seq == 3);
    CHECK(rig.net.grouping.total() == 4 + 2);
  }
  SUBCASE("WsP groups before sending") {
    Rig rig(SchemeKind::WsP, topo, 2);
    rig.send(0, 3, 0);
    rig.send(0, 2, 1);
    REQUIRE(rig.net.sent.size() == 1);
    CHECK(rig.net.sent[0].grouped);
    CHECK(rig.net.sent[0].items[0].header.dest == 2);
    CHECK(rig.net.grouping.total() == 2 + 2);
  }
  SUBCASE("misrouted message aborts") {
    Rig rig(SchemeKind::WPs, topo, 1);
    rig.send(0, 2, 0);
    auto msg = rig.net.sent.at(0);
    CHECK_THROWS_AS(rig.agg.on_receive(0, msg), InvariantViolation);
  }
}

TEST_CASE("every full message has k = g and flushes have 1 <= k <= g") {
  std::mt19937_64 rng(3);
  for (auto kind : kAllSchemes) {
    Topology topo(2, 2, 3);
    Rig rig(kind, topo, 7, true);
    std::vector<std::uint64_t> per_dest(topo.total_workers(), 0);
    for (int i = 0; i < 3000; ++i) {
      const WorkerRef src = rng() % topo.total_workers();
      const WorkerRef dst = rng() % topo.total_workers();
      rig.send(src, dst, per_dest[dst]++);
    }
    for (WorkerRef u = 0; u < topo.total_workers(); ++u) rig.agg.flush(u);
    CHECK(rig.agg.buffered_items() == 0);
    for (const auto& m : rig.net.sent) {
      if (m.cause == SendCause::Full) CHECK(m.items.size() == 7);
      else CHECK((m.items.size() >= 1 && m.items.size() <= 7));
    }
    CHECK(rig.log.total() == 3000);
  }
}

TEST_CASE("timeouts flush buffers whose first item is old enough") {
  for (auto kind : kAllSchemes) {
    Rig rig(kind, Topology(2, 1, 2), 16);
    rig.agg.set_auto_flush(false, 1'000'000);
    rig.net.clock = 100;
    rig.send(0, 2, 0);
    CHECK(rig.agg.next_deadline(0) == 1'000'100);
    CHECK(rig.agg.flush_expired(0, 1'000'099) == 0);
    CHECK(rig.agg.flush_expired(0, 1'000'100) == 1);
    REQUIRE(rig.net.sent.size() == 1);
    CHECK(rig.net.sent[0].cause == SendCause::Flush);
    CHECK(rig.agg.buffered_items() == 0);
  }
}

TEST_CASE("without auto flush items stay buffered") {
  Rig rig(SchemeKind::WPs, Topology(2, 1, 2), 16);
  rig.send(0, 2, 0);
  CHECK_FALSE(rig.agg.next_deadline(0));
  CHECK(rig.agg.flush_expired(0, 1'000'000'000) == 0);
  CHECK(rig.agg.buffered_items() == 1);
}

TEST_CASE("allocation introspection is g*m per buffer") {
  Topology topo(2, 2, 3);
  DeliveryLog log(12);
  Aggregator ww(SchemeKind::WW, topo, 10, 8, log.sink());
  CHECK(ww.allocated_bytes_per_worker(0) == 10 * 8 * 4 * 3);
  CHECK(ww.allocated_bytes_per_process(0) == 10 * 8 * 4 * 3 * 3);
  Aggregator pp(SchemeKind::PP, topo, 10, 8, log.sink());
  CHECK(pp.allocated_bytes_per_process(1) == 10 * 8 * 4);
}
