#include <cmath>

#include "agg/costmodel.hpp"
#include "agg/errors.hpp"
#include "doctest.h"

using namespace agg;
using namespace agg::cost;

namespace {

CostInputs large_machine() {
  CostInputs in;
  in.g = 1024;
  in.m = 8;
  in.N = 256;
  in.t = 8;
  return in;
}

}  // namespace

TEST_CASE("memory overhead") {
  const auto in = large_machine();
  CHECK(memory_overhead(SchemeKind::WW, in).per_core_bytes == 16'777'216);
  CHECK(memory_overhead(SchemeKind::WW, in).per_process_bytes == 16'777'216ull * 8);
  CHECK(memory_overhead(SchemeKind::WPs, in).per_core_bytes == 2'097'152);
  CHECK(memory_overhead(SchemeKind::WsP, in).per_process_bytes == 2'097'152ull * 8);
  CHECK_FALSE(memory_overhead(SchemeKind::PP, in).per_core_bytes);
  CHECK(memory_overhead(SchemeKind::PP, in).per_process_bytes == 2'097'152);
}

TEST_CASE("message bounds") {
  auto in = large_machine();
  in.z = 1'000'000;
  auto ww = message_bounds(SchemeKind::WW, in);
  CHECK(ww.lower == 977);
  CHECK(ww.upper == doctest::Approx(3024.5625));

  in.z = 0;
  CHECK(message_bounds(SchemeKind::WW, in).lower == 0);
  CHECK(message_bounds(SchemeKind::WW, in).upper == doctest::Approx(256 * 8));

  CostInputs small;
  small.z = 100;
  small.g = 10;
  small.N = 4;
  small.t = 3;
  for (auto k : {SchemeKind::WPs, SchemeKind::WsP, SchemeKind::PP}) {
    CHECK(message_bounds(k, small).lower == 10);
    CHECK(message_bounds(k, small).upper == doctest::Approx(14));
  }
}

TEST_CASE("send cost") {
  CostInputs in;
  in.z = 1024;
  in.g = 1024;
  in.alpha_ns = 2000;
  in.beta_ns_per_byte = 0.083;
  in.m = 8;
  CHECK(send_cost(in) == doctest::Approx(2679.936));
  in.z = 16 * 1024;
  CHECK(send_cost(in) == doctest::Approx(16 * 2000 + 0.083 * 8 * 16 * 1024));
  CHECK(unaggregated_send_cost(in) == doctest::Approx(16 * 1024 * (2000 + 0.083 * 8)));
  in.z = 1025;
  CHECK(send_cost(in) == doctest::Approx(2 * 2000 + 0.083 * 8 * 1025));
}

TEST_CASE("latency penalty") {
  CostInputs in;
  in.g = 1024;
  in.r = 0.001;  // one item per microsecond
  CHECK(*latency_penalty(in) == doctest::Approx(1'024'000));
  in.g = 1;
  CHECK(*latency_penalty(in) == doctest::Approx(1000));
  in.r = 0;
  CHECK_FALSE(latency_penalty(in));
}

TEST_CASE("grouping cost") {
  CHECK(grouping_cost(1024, 8) == 1032);
  CHECK(grouping_cost(0, 8) == 8);
}

TEST_CASE("invalid inputs") {
  CostInputs in;
  in.g = 0;
  CHECK_THROWS_AS(validate(in), UsageError);
  in.g = 1;
  in.alpha_ns = -1;
  CHECK_THROWS_AS(validate(in), UsageError);
}

TEST_CASE("predict reports every quantity") {
  auto in = large_machine();
  in.z = 1'000'000;
  auto j = predict(SchemeKind::PP, in);
  CHECK(j["schema"] == 1);
  CHECK(j["scheme"] == "pp");
  CHECK(j["memory_overhead"]["per_core_bytes"].is_null());
  CHECK(j["message_bounds"]["lower"] == 977);
  CHECK(j["latency_penalty_ns"].is_null());
  CHECK(j["grouping_cost_ops"] == 1032);
}
