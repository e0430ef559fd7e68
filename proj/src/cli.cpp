#include "agg/cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "agg/benchmarks.hpp"
#include "agg/costmodel.hpp"
#include "agg/errors.hpp"

namespace agg::cli {

namespace {

using nlohmann::ordered_json;

struct RunConfig {
  std::string scheme = "wps";
  std::size_t g = 1024;
  std::uint32_t nodes = 2, ppn = 2, wpp = 4;
  std::string topology;  // JSON file, overrides nodes/ppn/wpp
  std::uint64_t seed = 1;
  std::string mode = "sequential";
  std::string clock = "virtual";
  double alpha = 1000.0;
  double beta = 0.1;
  Duration comm_cost = 0;
  std::size_t header_bytes = 0;
  std::string idle_flush;  // "", "on" or "off"
  Duration flush_timeout = 0;
  std::uint64_t timeout_ms = 120'000;
  std::string trace;
  std::string output;
  std::string format = "json";

  // workloads
  std::uint64_t updates = 100'000;
  std::uint64_t requests = 10'000;
  std::uint64_t table_size = 1 << 20;
  std::uint32_t vertices = 1000;
  std::uint32_t degree = 8;
  std::string graph;
  std::uint32_t source = 0;
  bench::Distance delta = 50;
  std::uint32_t lps = 4;
  std::uint32_t initial_events = 4;
  double mean = 1.0;
  double end_time = 100.0;
  Duration event_cost = 200;
  std::uint64_t messages = 1000;
  std::size_t size = 8;

  // sweep
  std::string bench = "histogram";
  std::optional<std::string> schemes;
  std::optional<std::string> gs;
};

struct PredictConfig {
  std::string scheme = "ww";
  cost::CostInputs in;
};

std::string env_name(const std::string& flag) {
  std::string name = "AGG_";
  for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& flag, T& value, const std::string& help) {
  auto* o = app->add_option("--" + flag, value, help)->envname(env_name(flag));
  if constexpr (!requires { value.has_value(); }) o->capture_default_str();
  return o;
}

void add_common(CLI::App* app, RunConfig& c) {
  opt(app, "scheme", c.scheme, "ww|wps|wsp|pp");
  opt(app, "g", c.g, "Items per aggregation buffer")->check(CLI::PositiveNumber);
  opt(app, "nodes", c.nodes, "Nodes")->check(CLI::PositiveNumber);
  opt(app, "ppn", c.ppn, "Processes per node")->check(CLI::PositiveNumber);
  opt(app, "wpp", c.wpp, "Workers per process")->check(CLI::PositiveNumber);
  opt(app, "topology", c.topology, "JSON file with nodes, ppn, wpp (overrides the three flags)");
  opt(app, "seed", c.seed, "Run seed");
  opt(app, "mode", c.mode, "threaded|sequential")->check(CLI::IsMember({"threaded", "sequential"}));
  opt(app, "clock", c.clock, "virtual|wall")->check(CLI::IsMember({"virtual", "wall"}));
  opt(app, "alpha", c.alpha, "Per-message latency, ns")->check(CLI::NonNegativeNumber);
  opt(app, "beta", c.beta, "Per-byte cost, ns/byte")->check(CLI::NonNegativeNumber);
  opt(app, "comm-cost", c.comm_cost, "Comm-context cost per message, ns (0 disables)")->check(CLI::NonNegativeNumber);
  opt(app, "header-bytes", c.header_bytes, "Bytes added to every message");
  opt(app, "idle-flush", c.idle_flush, "on|off (default depends on the workload)")->check(CLI::IsMember({"on", "off"}));
  opt(app, "flush-timeout", c.flush_timeout, "Flush buffers older than this many ns (0 disables)");
  opt(app, "timeout-ms", c.timeout_ms, "Quiescence timeout");
  opt(app, "trace", c.trace, "Write a JSON-lines message trace here");
  opt(app, "output", c.output, "Write results here instead of stdout");
  opt(app, "format", c.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
}

void add_histogram(CLI::App* app, RunConfig& c) {
  opt(app, "updates", c.updates, "Updates per worker");
}
void add_table(CLI::App* app, RunConfig& c) { opt(app, "table-size", c.table_size, "Table entries")->check(CLI::PositiveNumber); }
void add_ig(CLI::App* app, RunConfig& c) { opt(app, "requests", c.requests, "Requests per worker"); }
void add_sssp(CLI::App* app, RunConfig& c) {
  opt(app, "vertices", c.vertices, "Vertices of the random graph")->check(CLI::PositiveNumber);
  opt(app, "degree", c.degree, "Out-degree of the random graph");
  opt(app, "graph", c.graph, "Edge-list file (u v w per line) instead of a random graph");
  opt(app, "source", c.source, "Source vertex");
  opt(app, "delta", c.delta, "Distance window released per phase")->check(CLI::PositiveNumber);
}
void add_phold(CLI::App* app, RunConfig& c) {
  opt(app, "lps", c.lps, "LPs per worker")->check(CLI::PositiveNumber);
  opt(app, "initial-events", c.initial_events, "Initial events per LP");
  opt(app, "mean", c.mean, "Mean timestamp increment")->check(CLI::PositiveNumber);
  opt(app, "end-time", c.end_time, "Simulation end time");
  opt(app, "event-cost", c.event_cost, "Compute per event, ns");
}
void add_pingack(CLI::App* app, RunConfig& c) {
  opt(app, "messages", c.messages, "Messages per sending worker")->check(CLI::PositiveNumber);
  opt(app, "size", c.size, "Message size, bytes")->check(CLI::PositiveNumber);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

bench::RunSetup make_setup(const RunConfig& c, std::ostream* trace) {
  bench::RunSetup s;
  if (c.bench == "pingack" && c.scheme == "none") {
    s.scheme = SchemeKind::WW;
    s.g = 1;
  } else {
    s.scheme = parse_scheme(c.scheme);
    s.g = c.g;
  }
  if (c.topology.empty()) {
    s.topo = Topology(c.nodes, c.ppn, c.wpp);
  } else {
    std::ifstream in(c.topology);
    if (!in) throw UsageError("cannot read " + c.topology);
    std::stringstream text;
    text << in.rdbuf();
    s.topo = Topology::from_json(text.str());
  }
  s.transport.alpha_ns = c.alpha;
  s.transport.beta_ns_per_byte = c.beta;
  s.transport.comm_cost_ns = c.comm_cost;
  s.transport.comm_enabled = c.comm_cost > 0;
  s.transport.clock = c.clock == "wall" ? ClockMode::Wall : ClockMode::Virtual;
  s.runtime.mode = parse_run_mode(c.mode);
  s.runtime.seed = c.seed;
  s.runtime.header_bytes = c.header_bytes;
  s.runtime.quiescence_timeout = std::chrono::milliseconds(c.timeout_ms);
  s.runtime.trace = trace;
  if (!c.idle_flush.empty()) s.idle_flush = c.idle_flush == "on";
  if (c.flush_timeout > 0) s.flush_timeout = c.flush_timeout;
  return s;
}

struct Outcome {
  RunMetrics metrics;
  ordered_json extra = ordered_json::object();
};

Outcome run_bench(const RunConfig& c, std::ostream* trace) {
  const auto setup = make_setup(c, trace);
  Outcome o;
  if (c.bench == "histogram") {
    auto r = bench::run_histogram({c.updates, c.table_size, c.seed}, setup);
    o.metrics = std::move(r.metrics);
  } else if (c.bench == "ig") {
    auto r = bench::run_ig({c.requests, c.table_size, c.seed}, setup);
    o.metrics = std::move(r.metrics);
    o.extra["matched"] = r.matched;
    o.extra["round_trip_latency"] = to_json(r.round_trip);
  } else if (c.bench == "sssp") {
    bench::SSSPSpec spec;
    spec.graph = std::make_shared<const bench::Graph>(
        c.graph.empty() ? bench::random_graph(c.vertices, c.degree, c.seed) : bench::load_edge_list(c.graph));
    spec.source = c.source;
    spec.threshold_delta = c.delta;
    spec.seed = c.seed;
    auto r = bench::run_sssp(spec, setup);
    o.metrics = std::move(r.metrics);
    std::ostringstream digest;
    digest << std::hex << bench::distance_digest(r.distances);
    o.extra["distances_digest"] = digest.str();
    o.extra["phases"] = r.phases;
  } else if (c.bench == "phold") {
    bench::PholdSpec spec{c.lps, c.initial_events, c.mean, c.end_time, c.event_cost, c.seed};
    auto r = bench::run_phold(spec, setup);
    o.metrics = std::move(r.metrics);
    o.extra["out_of_order_count"] = r.out_of_order;
    o.extra["events_processed"] = r.events_processed;
  } else if (c.bench == "pingack") {
    auto r = bench::run_pingack({c.messages, c.size}, setup);
    o.metrics = std::move(r.metrics);
    o.extra["payload_messages"] = r.payload_messages;
    o.extra["acks"] = r.acks;
    o.extra["total_time_ns"] = r.total_time_ns;
    o.extra["throughput"] = r.throughput;
    o.extra["egress_per_process"] = r.egress_per_process;
  } else {
    throw UsageError("unknown benchmark '" + c.bench + "'");
  }
  return o;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw UsageError("cannot write " + path);
    os_ = &file_;
  }
  std::ostream& get() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

class TraceFile {
 public:
  explicit TraceFile(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw UsageError("cannot write trace " + path);
  }
  std::ostream* get() { return file_.is_open() ? &file_ : nullptr; }

 private:
  std::ofstream file_;
};

int run_one(RunConfig c, const std::string& name, std::ostream& out) {
  c.bench = name;
  TraceFile trace(c.trace);
  auto o = run_bench(c, trace.get());
  Output sink(c.output, out);
  const Summary s = summarize(o.metrics);
  if (c.format == "csv") {
    sink.get() << csv_header() << '\n' << csv_row(s) << '\n';
  } else {
    ordered_json j = to_json(s);
    j["benchmark"] = name;
    j["seed"] = c.seed;
    j["mode"] = c.mode;
    for (auto& [k, v] : o.extra.items()) j[k] = v;
    sink.get() << j.dump(2) << '\n';
  }
  return kExitOk;
}

int run_sweep(const RunConfig& c, std::ostream& out) {
  const auto schemes = c.schemes ? split_list(*c.schemes) : std::vector<std::string>{c.scheme};
  std::vector<std::size_t> gs;
  if (!c.gs) {
    gs.push_back(c.g);
  } else {
    for (const auto& tok : split_list(*c.gs)) {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(tok, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != tok.size() || v == 0) throw UsageError("sweep: bad g value '" + tok + "'");
      gs.push_back(v);
    }
  }
  for (const auto& s : schemes) parse_scheme(s);
  Output sink(c.output, out);
  std::ostream& os = sink.get();
  os << "benchmark," << csv_header() << '\n' << std::flush;
  for (const auto& scheme : schemes)
    for (std::size_t g : gs) {
      RunConfig cell = c;
      cell.scheme = scheme;
      cell.g = g;
      TraceFile trace(c.trace);
      const auto o = run_bench(cell, trace.get());
      os << c.bench << ',' << csv_row(summarize(o.metrics)) << '\n' << std::flush;
    }
  return kExitOk;
}

int run_predict(const PredictConfig& p, std::ostream& out) {
  out << cost::predict(parse_scheme(p.scheme), p.in).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int parse_and_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Message aggregation simulator and benchmarks", args.empty() ? "aggbench" : args.front()};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  RunConfig cfg;
  PredictConfig pred;
  const char* runs[] = {"histogram", "ig", "sssp", "phold", "pingack"};
  const char* about[] = {"Random remote increments into a distributed table",
                         "Random remote reads answered by the index owner",
                         "Single-source shortest paths with thresholded phases",
                         "PHOLD-style discrete-event simulation",
                         "Node-to-node throughput with a final ack"};
  std::vector<CLI::App*> subs;
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(runs[i], about[i]);
    add_common(sub, cfg);
    subs.push_back(sub);
  }
  add_histogram(subs[0], cfg);
  add_table(subs[0], cfg);
  add_ig(subs[1], cfg);
  add_table(subs[1], cfg);
  add_sssp(subs[2], cfg);
  add_phold(subs[3], cfg);
  add_pingack(subs[4], cfg);

  auto* sweep = app.add_subcommand("sweep", "Run a workload over a grid of schemes and buffer sizes, one CSV row per cell");
  add_common(sweep, cfg);
  add_histogram(sweep, cfg);
  add_table(sweep, cfg);
  add_ig(sweep, cfg);
  add_sssp(sweep, cfg);
  add_phold(sweep, cfg);
  add_pingack(sweep, cfg);
  opt(sweep, "bench", cfg.bench, "Workload")->check(CLI::IsMember({"histogram", "ig", "sssp", "phold", "pingack"}));
  opt(sweep, "schemes", cfg.schemes, "Comma-separated scheme tokens (default: --scheme)");
  opt(sweep, "gs", cfg.gs, "Comma-separated buffer sizes (default: --g)");

  auto* predict = app.add_subcommand("predict", "Print cost-model predictions as JSON");
  opt(predict, "scheme", pred.scheme, "ww|wps|wsp|pp");
  opt(predict, "g", pred.in.g, "Items per buffer")->check(CLI::PositiveNumber);
  opt(predict, "m", pred.in.m, "Bytes per item");
  opt(predict, "N", pred.in.N, "Processes");
  opt(predict, "t", pred.in.t, "Workers per process");
  opt(predict, "z", pred.in.z, "Items per source scope");
  opt(predict, "alpha", pred.in.alpha_ns, "Per-message latency, ns");
  opt(predict, "beta", pred.in.beta_ns_per_byte, "Per-byte cost, ns/byte");
  opt(predict, "r", pred.in.r, "Buffer fill rate, items/ns");
  opt(predict, "O", pred.in.O_ns, "Per-message overhead, ns");

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (predict->parsed()) return run_predict(pred, out);
    if (sweep->parsed()) return run_sweep(cfg, out);
    for (int i = 0; i < 5; ++i)
      if (subs[i]->parsed()) return run_one(cfg, runs[i], out);
    err << "error: no subcommand\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const OracleMismatch& e) {
    err << "oracle mismatch: " << e.what() << '\n';
    return kExitOracle;
  } catch (const QuiescenceTimeout& e) {
    err << "timeout: " << e.what() << '\n';
    return kExitTimeout;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int parse_and_run(int argc, const char* const* argv) {
  return parse_and_run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace agg::cli
