#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>

#include "agg/errors.hpp"
#include "common.hpp"

namespace agg::bench {

Graph Graph::from_edges(std::uint32_t num_vertices,
                        const std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>>& edges) {
  Graph g;
  g.num_vertices = num_vertices;
  g.offsets.assign(num_vertices + 1, 0);
  for (const auto& [u, v, w] : edges) {
    if (u >= num_vertices || v >= num_vertices) throw UsageError("graph: edge endpoint out of range");
    ++g.offsets[u + 1];
  }
  for (std::uint32_t i = 0; i < num_vertices; ++i) g.offsets[i + 1] += g.offsets[i];
  g.targets.resize(edges.size());
  g.weights.resize(edges.size());
  std::vector<std::uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& [u, v, w] : edges) {
    const auto at = cursor[u]++;
    g.targets[at] = v;
    g.weights[at] = w;
  }
  return g;
}

Graph random_graph(std::uint32_t num_vertices, std::uint32_t out_degree, std::uint64_t seed) {
  if (num_vertices == 0) throw UsageError("graph: need at least one vertex");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> target(0, num_vertices - 1);
  std::uniform_int_distribution<std::uint32_t> weight(1, 100);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edges;
  edges.reserve(std::size_t{num_vertices} * out_degree);
  for (std::uint32_t u = 0; u < num_vertices; ++u)
    for (std::uint32_t k = 0; k < out_degree; ++k) {
      const auto v = target(rng);
      edges.emplace_back(u, v, weight(rng));
    }
  return Graph::from_edges(num_vertices, edges);
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SetupError("cannot open edge list " + path.string());
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edges;
  std::uint32_t max_vertex = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::uint64_t u, v, w;
    if (!(fields >> u)) continue;
    if (!(fields >> v >> w) || u > UINT32_MAX - 1 || v > UINT32_MAX - 1 || w > UINT32_MAX)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 'u v w'");
    edges.emplace_back(u, v, w);
    max_vertex = std::max({max_vertex, static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v)});
  }
  if (edges.empty()) throw UsageError(path.string() + ": no edges");
  return Graph::from_edges(max_vertex + 1, edges);
}

std::vector<Distance> dijkstra(const Graph& graph, std::uint32_t source) {
  std::vector<Distance> dist(graph.num_vertices, kUnreachable);
  using Entry = std::pair<Distance, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist.at(source) = 0;
  frontier.emplace(0, source);
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (d != dist[u]) continue;
    for (auto e = graph.offsets[u]; e < graph.offsets[u + 1]; ++e) {
      const Distance cand = d + graph.weights[e];
      if (cand < dist[graph.targets[e]]) {
        dist[graph.targets[e]] = cand;
        frontier.emplace(cand, graph.targets[e]);
      }
    }
  }
  return dist;
}

std::uint64_t distance_digest(const std::vector<Distance>& dist) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (Distance d : dist)
    for (int i = 0; i < 8; ++i) {
      h ^= (d >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  return h;
}

namespace {

struct Relax {
  std::uint32_t vertex;
  std::uint32_t pad;
  Distance dist;
};
static_assert(sizeof(Relax) == 16);

// Delta-stepping style relaxation: candidates beyond the current threshold
// are parked until a quiescence round raises it.
class SSSPProgram final : public Program {
 public:
  SSSPProgram(const SSSPSpec& spec, const Topology& topo)
      : spec_(spec), graph_(*spec.graph), w_(topo.total_workers()),
        block_((graph_.num_vertices + w_ - 1) / w_), workers_(w_), threshold_(spec.threshold_delta) {
    for (WorkerRef u = 0; u < w_; ++u) {
      const std::uint64_t lo = std::min<std::uint64_t>(std::uint64_t{u} * block_, graph_.num_vertices);
      const std::uint64_t hi = std::min<std::uint64_t>(lo + block_, graph_.num_vertices);
      workers_[u].dist.assign(hi - lo, kUnreachable);
    }
  }

  WorkerRef owner(std::uint32_t v) const { return v / block_; }

  void start(WorkerContext& ctx) override {
    if (ctx.id() == owner(spec_.source)) ctx.insert_value(ctx.id(), Relax{spec_.source, 0, 0});
  }

  bool step(WorkerContext&) override { return false; }

  void deliver(WorkerContext& ctx, const ItemView& item) override {
    const auto r = item.read<Relax>();
    auto& s = workers_[ctx.id()];
    Distance& slot = s.dist.at(r.vertex - ctx.id() * block_);
    if (r.dist >= slot) {
      ctx.count_wasted_update();
      return;
    }
    slot = r.dist;
    for (auto e = graph_.offsets[r.vertex]; e < graph_.offsets[r.vertex + 1]; ++e) {
      const std::uint32_t x = graph_.targets[e];
      const Distance cand = r.dist + graph_.weights[e];
      if (cand < threshold_)
        ctx.insert_value(owner(x), Relax{x, 0, cand});
      else
        s.pending.push_back({x, cand, r.vertex, r.dist});
    }
  }

  bool on_quiescence(WorkerContext& ctx) override {
    if (ctx.id() == 0) {
      Distance lowest = kUnreachable;
      for (WorkerRef u = 0; u < w_; ++u)
        for (const auto& p : workers_[u].pending)
          if (still_valid(p)) lowest = std::min(lowest, p.cand);
      if (lowest != kUnreachable) {
        threshold_ = std::max(threshold_ + spec_.threshold_delta, lowest + 1);
        ++phases_;
      }
    }
    auto& s = workers_[ctx.id()];
    std::vector<Pending> keep;
    for (const auto& p : s.pending) {
      if (!still_valid(p)) continue;
      if (p.cand < threshold_)
        ctx.insert_value(owner(p.target), Relax{p.target, 0, p.cand});
      else
        keep.push_back(p);
    }
    const bool released = keep.size() != s.pending.size();
    s.pending = std::move(keep);
    return released || !s.pending.empty();
  }

  std::vector<Distance> distances() const {
    std::vector<Distance> out;
    out.reserve(graph_.num_vertices);
    for (const auto& s : workers_) out.insert(out.end(), s.dist.begin(), s.dist.end());
    return out;
  }

  std::uint64_t phases() const { return phases_; }

 private:
  struct Pending {
    std::uint32_t target;
    Distance cand;
    std::uint32_t from;
    Distance from_dist;
  };
  struct WorkerState {
    std::vector<Distance> dist;
    std::vector<Pending> pending;
  };

  // A parked candidate is stale once its source vertex found a shorter path.
  bool still_valid(const Pending& p) const {
    return workers_[owner(p.from)].dist[p.from - owner(p.from) * block_] == p.from_dist;
  }

  SSSPSpec spec_;
  const Graph& graph_;
  std::uint32_t w_;
  std::uint32_t block_;
  std::vector<WorkerState> workers_;
  Distance threshold_;
  std::uint64_t phases_ = 0;
};

}  // namespace

SSSPResult run_sssp(const SSSPSpec& spec, const RunSetup& setup) {
  if (!spec.graph) throw UsageError("sssp: no graph");
  if (spec.source >= spec.graph->num_vertices) throw UsageError("sssp: source out of range");
  if (spec.threshold_delta == 0) throw UsageError("sssp: threshold delta must be positive");
  SSSPProgram program(spec, setup.topo);
  SSSPResult result;
  result.metrics = detail::execute(setup, sizeof(Relax), program, true);
  result.distances = program.distances();
  result.wasted_updates = result.metrics.wasted_updates;
  result.phases = program.phases();
  if (result.distances != dijkstra(*spec.graph, spec.source))
    throw OracleMismatch("sssp: distances differ from Dijkstra");
  return result;
}

}  // namespace agg::bench
