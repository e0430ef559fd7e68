#include "agg/runtime.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "agg/errors.hpp"
#include "json.hpp"

namespace agg {

namespace {

constexpr Timestamp kNever = std::numeric_limits<Timestamp>::max();

std::uint64_t worker_seed(std::uint64_t run_seed, WorkerRef u, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32), u, salt};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

class ReceivingScope {
 public:
  explicit ReceivingScope(bool& flag) : flag_(flag) { flag_ = true; }
  ~ReceivingScope() { flag_ = false; }
  ReceivingScope(const ReceivingScope&) = delete;
  ReceivingScope& operator=(const ReceivingScope&) = delete;

 private:
  bool& flag_;
};

}  // namespace

std::string_view to_token(RunMode mode) { return mode == RunMode::Threaded ? "threaded" : "sequential"; }

RunMode parse_run_mode(std::string_view token) {
  if (token == "threaded") return RunMode::Threaded;
  if (token == "sequential") return RunMode::Sequential;
  throw UsageError("unknown run mode '" + std::string(token) + "' (expected threaded|sequential)");
}

// ---- Inbox ----

bool WorkerContext::Inbox::later(const Envelope& a, const Envelope& b) {
  return std::tie(a.available_at, a.order) > std::tie(b.available_at, b.order);
}

void WorkerContext::Inbox::push(Envelope env) {
  std::lock_guard lock(mutex_);
  heap_.push_back(std::move(env));
  std::push_heap(heap_.begin(), heap_.end(), later);
  size_.fetch_add(1, std::memory_order_release);
}

std::optional<WorkerContext::Envelope> WorkerContext::Inbox::pop_ready(Timestamp horizon) {
  if (empty()) return std::nullopt;
  std::lock_guard lock(mutex_);
  if (heap_.empty() || heap_.front().available_at > horizon) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), later);
  Envelope env = std::move(heap_.back());
  heap_.pop_back();
  size_.fetch_sub(1, std::memory_order_release);
  return env;
}

std::optional<Timestamp> WorkerContext::Inbox::earliest() const {
  if (empty()) return std::nullopt;
  std::lock_guard lock(mutex_);
  if (heap_.empty()) return std::nullopt;
  return heap_.front().available_at;
}

std::size_t WorkerContext::Inbox::size() const { return size_.load(std::memory_order_acquire); }

// ---- WorkerContext ----

WorkerContext::WorkerContext(Runtime& rt, WorkerRef id, ProcessRef process, Clock clock, std::uint64_t seed,
                             std::size_t reservoir_cap)
    : rt_(&rt),
      id_(id),
      process_(process),
      clock_(clock),
      rng_(seed),
      shard_(reservoir_cap, seed ^ 0x9e3779b97f4a7c15ULL) {}

const Topology& WorkerContext::topology() const noexcept { return rt_->topo_; }

std::size_t WorkerContext::item_size() const noexcept { return rt_->agg_.item_size(); }

InsertOutcome WorkerContext::insert(WorkerRef dest, std::span<const std::byte> payload) {
  const ItemHeader header{dest, id_, next_seq_++, clock_.now()};
  ++shard_.produced;
  const InsertOutcome out = rt_->agg_.insert(id_, header, payload);
  if (out == InsertOutcome::Bypassed)
    ++shard_.self_sends;
  else
    ++shard_.buffered_inserts;
  clock_.advance(rt_->opts_.costs.insert_ns);
  return out;
}

std::size_t WorkerContext::flush() { return rt_->agg_.flush(id_); }

void WorkerContext::wake(WorkerRef worker) {
  auto& target = rt_->worker(worker);
  const Timestamp at = now();
  Timestamp prev = target.wake_at_.load(std::memory_order_relaxed);
  while (prev < at && !target.wake_at_.compare_exchange_weak(prev, at, std::memory_order_acq_rel)) {
  }
  target.wake_pending_.store(true, std::memory_order_release);
  rt_->touch(worker);
}

void WorkerContext::deliver_items(const ItemBatch& batch) {
  const Duration cost = rt_->opts_.costs.deliver_ns;
  const ClockMode mode = clock_.mode();
  const auto& sink = rt_->agg_.sink();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ItemView item = batch[i];
    clock_.advance(cost);
    shard_.record_delivery(item.header.created_at, clock_.now(), mode);
    sink.deliver(id_, item);
  }
}

// ---- Runtime ----

Runtime::Runtime(Aggregator& agg, TransportConfig cfg, RuntimeOptions opts)
    : agg_(agg), topo_(agg.topology()), cfg_(cfg), opts_(std::move(opts)) {
  if (cfg_.alpha_ns < 0 || cfg_.beta_ns_per_byte < 0 || cfg_.comm_cost_ns < 0)
    throw UsageError("transport costs must be >= 0");
  const auto& c = opts_.costs;
  if (c.insert_ns < 0 || c.deliver_ns < 0 || c.group_op_ns < 0 || c.receive_overhead_ns < 0)
    throw UsageError("work costs must be >= 0");
  agg_.bind(*this);
  origin_ = std::chrono::steady_clock::now();
  const std::uint32_t n = topo_.total_processes();
  channels_.reserve(n);
  for (ProcessRef p = 0; p < n; ++p) {
    auto ch = std::make_unique<Channel>();
    ch->last_arrival.assign(n, 0);
    ch->next_receiver.assign(n, 0);
    channels_.push_back(std::move(ch));
  }
}

Runtime::~Runtime() = default;

std::size_t Runtime::comm_context_count() const noexcept {
  return (cfg_.comm_enabled && !workers_.empty()) ? topo_.total_processes() : 0;
}

void Runtime::spawn(Program& program) {
  if (program_) throw UsageError("spawn: runtime already has a live run");
  program_ = &program;
  const std::uint32_t w = topo_.total_workers();
  workers_.reserve(w);
  for (WorkerRef u = 0; u < w; ++u) {
    workers_.push_back(std::unique_ptr<WorkerContext>(new WorkerContext(
        *this, u, topo_.process_of(u), Clock(cfg_.clock, origin_), worker_seed(opts_.seed, u, 1),
        opts_.latency_reservoir)));
  }
  for (WorkerRef u = 0; u < w; ++u) {
    if (agg_.sink().has_handler(u)) continue;
    agg_.sink().register_handler(u, [this, u](const ItemView& item) { program_->deliver(*workers_[u], item); });
  }
  if (!agg_.sink().complete()) throw SetupError("spawn: delivery sink incomplete");

  tiebreak_.resize(w);
  std::iota(tiebreak_.begin(), tiebreak_.end(), 0u);
  std::mt19937_64 shuffle_rng(worker_seed(opts_.seed, 0, 2));
  std::shuffle(tiebreak_.begin(), tiebreak_.end(), shuffle_rng);

  started_ = std::chrono::steady_clock::now();
  for (auto& wk : workers_) program.start(*wk);
}

Timestamp Runtime::now(WorkerRef worker) const { return workers_.at(worker)->now(); }

void Runtime::charge_grouping(WorkerRef worker, const GroupStats& stats) {
  auto& wk = *workers_[worker];
  wk.clock_.advance(static_cast<Duration>(stats.total()) * opts_.costs.group_op_ns);
  wk.shard_.grouping_ops += stats.total();
}

void Runtime::touch(WorkerRef u) {
  if (scheduling_) touched_.push_back(u);
}

void Runtime::push(WorkerRef dest, WorkerContext::Envelope env) {
  workers_[dest]->inbox_.push(std::move(env));
  touch(dest);
}

void Runtime::deliver_local(WorkerRef from, WorkerRef dest, ItemBatch batch) {
  auto& src = *workers_[from];
  if (topo_.process_of(dest) != src.process_)
    throw InvariantViolation("deliver_local across processes");
  if (dest == from && src.receiving_) {
    src.deliver_items(batch);
    return;
  }
  push(dest, WorkerContext::Envelope{src.now(), envelope_order_.fetch_add(1, std::memory_order_relaxed),
                                     std::move(batch)});
}

void Runtime::send_remote(WorkerRef emitter, CoalescedMessage msg) {
  auto& wk = *workers_[emitter];
  const ProcessRef dest_p = msg.dest_process;
  if (dest_p == msg.origin) throw InvariantViolation("send_remote: destination process equals origin");
  if (msg.items.empty()) throw InvariantViolation("send_remote: empty message");

  Timestamp sent = wk.now();
  if (cfg_.clock == ClockMode::Virtual)
    for (const auto& h : msg.items.headers()) sent = std::max(sent, h.created_at);
  msg.sent_at = sent;

  const std::size_t bytes = msg.items.size() * agg_.item_size() + opts_.header_bytes;
  const double cost = cfg_.alpha_ns + cfg_.beta_ns_per_byte * static_cast<double>(bytes);
  Timestamp arrival = 0;
  WorkerRef receiver = 0;
  {
    auto& ch = *channels_[msg.origin];
    std::lock_guard lock(ch.mutex);
    Timestamp depart = sent;
    if (cfg_.comm_enabled) {
      depart = std::max(ch.comm_free_at, sent) + cfg_.comm_cost_ns;
      ch.comm_free_at = depart;
    }
    if (ch.stats.messages == 0 || sent < ch.stats.first_sent) ch.stats.first_sent = sent;
    ch.stats.last_departure = std::max(ch.stats.last_departure, depart);
    ++ch.stats.messages;
    arrival = depart + static_cast<Timestamp>(std::llround(cost));
    arrival = std::max(arrival, ch.last_arrival[dest_p]);
    ch.last_arrival[dest_p] = arrival;
    if (msg.dest_scope.kind == Scope::Kind::Worker) {
      receiver = msg.dest_scope.index;
    } else {
      const std::uint32_t t = topo_.workers_per_proc();
      receiver = dest_p * t + (msg.origin + ch.next_receiver[dest_p]++) % t;
    }
  }
  wk.shard_.record_message(msg, agg_.item_size(), opts_.header_bytes, cost);

  if (opts_.trace) {
    nlohmann::ordered_json j;
    j["origin"] = msg.origin;
    j["dest_scope"] = {{"kind", msg.dest_scope.kind == Scope::Kind::Worker ? "worker" : "process"},
                       {"index", msg.dest_scope.index}};
    j["k"] = msg.items.size();
    j["cause"] = msg.cause == SendCause::Full ? "full" : "flush";
    j["grouped"] = msg.grouped;
    j["sent_at"] = msg.sent_at;
    std::lock_guard lock(trace_mutex_);
    *opts_.trace << j.dump() << '\n';
  }
  push(receiver, WorkerContext::Envelope{arrival, envelope_order_.fetch_add(1, std::memory_order_relaxed),
                                         std::move(msg)});
}

void Runtime::process(WorkerContext& wk, WorkerContext::Envelope env) {
  wk.clock_.catch_up(env.available_at);
  if (auto* batch = std::get_if<ItemBatch>(&env.body)) {
    wk.deliver_items(*batch);
    return;
  }
  wk.clock_.advance(opts_.costs.receive_overhead_ns);
  ReceivingScope scope(wk.receiving_);
  agg_.on_receive(wk.id_, std::move(std::get<CoalescedMessage>(env.body)));
}

bool Runtime::turn(WorkerContext& wk, bool honor_time) {
  bool did = false;
  if (wk.wake_pending_.exchange(false, std::memory_order_acq_rel)) {
    wk.clock_.catch_up(wk.wake_at_.load(std::memory_order_acquire));
    wk.driver_active_ = true;
  }
  if (agg_.auto_flush().timeout && agg_.flush_expired(wk.id_, wk.now()) > 0) did = true;
  const Timestamp horizon = honor_time ? wk.now() : kNever;
  if (auto env = wk.inbox_.pop_ready(horizon)) {
    process(wk, std::move(*env));
    wk.driver_active_ = true;
    did = true;
  }
  if (wk.driver_active_) {
    wk.driver_active_ = program_->step(wk);
    did = true;
  }
  if (did) {
    wk.idle_flushed_ = false;
    return true;
  }
  if (agg_.auto_flush().on_idle && !wk.idle_flushed_) {
    wk.idle_flushed_ = true;
    return agg_.flush(wk.id_) > 0;
  }
  return false;
}

Timestamp Runtime::ready_time(const WorkerContext& wk) const {
  const Timestamp now = wk.clock_.now();
  if (wk.driver_active_) return now;
  if (wk.wake_pending_.load(std::memory_order_acquire))
    return std::max(now, wk.wake_at_.load(std::memory_order_acquire));
  if (agg_.auto_flush().on_idle && !wk.idle_flushed_) return now;
  Timestamp t = kNever;
  if (auto e = wk.inbox_.earliest()) t = std::max(now, *e);
  if (auto d = agg_.next_deadline(wk.id_)) t = std::min(t, std::max(now, *d));
  return t;
}

void Runtime::reschedule(WorkerRef u) {
  if (key_[u] != kNever) {
    ready_.erase({key_[u], tiebreak_[u], u});
    key_[u] = kNever;
  }
  const Timestamp t = ready_time(*workers_[u]);
  if (t == kNever) return;
  key_[u] = t;
  ready_.insert({t, tiebreak_[u], u});
}

void Runtime::check_deadline() const {
  if (std::chrono::steady_clock::now() - started_ > opts_.quiescence_timeout)
    throw QuiescenceTimeout("quiescence timeout\n" + diagnostic());
}

void Runtime::run_sequential_virtual() {
  const std::uint32_t w = topo_.total_workers();
  key_.assign(w, kNever);
  ready_.clear();
  touched_.clear();
  scheduling_ = true;
  struct Reset {
    bool& flag;
    ~Reset() { flag = false; }
  } reset{scheduling_};
  for (WorkerRef u = 0; u < w; ++u) reschedule(u);
  std::uint64_t steps = 0;
  while (!ready_.empty()) {
    const auto [t, tb, u] = *ready_.begin();
    ready_.erase(ready_.begin());
    key_[u] = kNever;
    auto& wk = *workers_[u];
    wk.clock_.catch_up(t);
    turn(wk, true);
    reschedule(u);
    for (WorkerRef v : touched_) reschedule(v);
    touched_.clear();
    if ((++steps & 0x3FFF) == 0) check_deadline();
  }
}

void Runtime::run_sequential_round_robin() {
  std::vector<WorkerRef> order(workers_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::ranges::sort(order, [this](WorkerRef a, WorkerRef b) { return tiebreak_[a] < tiebreak_[b]; });
  for (std::uint64_t round = 1;; ++round) {
    bool any = false;
    for (WorkerRef u : order) any |= turn(*workers_[u], false);
    if (!any && !has_pending_work()) {
      bool waiting = false;
      for (WorkerRef u : order)
        if (agg_.next_deadline(u) && agg_.buffered_items() > 0) waiting = true;
      if (!waiting) return;
      std::this_thread::yield();
    }
    if ((round & 0xFF) == 0) check_deadline();
  }
}

bool Runtime::detect_threaded_quiescence() {
  auto wave = [this](std::uint64_t& activity) {
    activity = 0;
    for (const auto& wk : workers_) {
      if (wk->busy_.load(std::memory_order_acquire) || !wk->idle_.load(std::memory_order_acquire) ||
          !wk->inbox_.empty() || wk->wake_pending_.load(std::memory_order_acquire))
        return false;
      activity += wk->activity_.load(std::memory_order_acquire);
    }
    return true;
  };
  std::uint64_t first = 0;
  std::uint64_t second = 0;
  if (!wave(first)) return false;
  std::this_thread::yield();
  if (!wave(second)) return false;
  return first == second;
}

void Runtime::run_threaded() {
  stop_.store(false);
  const int n = static_cast<int>(workers_.size());
  omp_set_dynamic(0);
#pragma omp parallel num_threads(n)
  {
    const auto u = static_cast<WorkerRef>(omp_get_thread_num());
    auto& wk = *workers_[u];
    std::uint32_t idle_spins = 0;
    std::uint64_t loops = 0;
    try {
      while (!stop_.load(std::memory_order_acquire)) {
        wk.busy_.store(true, std::memory_order_release);
        const bool did = turn(wk, false);
        if (did) wk.activity_.fetch_add(1, std::memory_order_acq_rel);
        wk.idle_.store(!did, std::memory_order_release);
        wk.busy_.store(false, std::memory_order_release);
        if (did) {
          idle_spins = 0;
          continue;
        }
        if (cfg_.clock == ClockMode::Virtual)
          if (auto d = agg_.next_deadline(u)) wk.clock_.catch_up(*d);
        if (u == 0) {
          if (detect_threaded_quiescence()) {
            stop_.store(true, std::memory_order_release);
            break;
          }
          if ((++loops & 0x3F) == 0 && std::chrono::steady_clock::now() - started_ > opts_.quiescence_timeout) {
            timed_out_.store(true);
            stop_.store(true, std::memory_order_release);
            break;
          }
        }
        if (++idle_spins < 64)
          std::this_thread::yield();
        else
          std::this_thread::sleep_for(std::chrono::microseconds(20));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex_);
      if (!failure_) failure_ = std::current_exception();
      stop_.store(true, std::memory_order_release);
    }
  }
  if (failure_) std::rethrow_exception(failure_);
  if (timed_out_.load()) throw QuiescenceTimeout("quiescence timeout\n" + diagnostic());
}

bool Runtime::has_pending_work() const {
  return std::ranges::any_of(workers_, [](const auto& wk) {
    return wk->driver_active_ || wk->wake_pending_.load(std::memory_order_acquire) || !wk->inbox_.empty();
  });
}

RunMetrics Runtime::await_quiescence() {
  if (!program_) throw UsageError("await_quiescence: nothing spawned");
  for (;;) {
    switch (opts_.mode) {
      case RunMode::Sequential:
        if (cfg_.clock == ClockMode::Virtual)
          run_sequential_virtual();
        else
          run_sequential_round_robin();
        break;
      case RunMode::Threaded:
        run_threaded();
        break;
    }
    check_deadline();
    if (has_pending_work()) continue;

    // Everyone is idle: align virtual clocks, then a final flush round.
    if (cfg_.clock == ClockMode::Virtual) {
      Timestamp latest = 0;
      for (const auto& wk : workers_) latest = std::max(latest, wk->now());
      for (auto& wk : workers_) wk->clock_.catch_up(latest);
    }
    std::size_t emitted = 0;
    for (auto& wk : workers_) emitted += agg_.flush(wk->id_);
    if (emitted > 0) continue;

    bool more = false;
    for (auto& wk : workers_) {
      if (program_->on_quiescence(*wk)) {
        wk->driver_active_ = true;
        more = true;
      }
    }
    ++rounds_;
    if (more || has_pending_work() || agg_.buffered_items() > 0) continue;
    break;
  }

  std::vector<MetricsShard> shards;
  shards.reserve(workers_.size());
  Timestamp latest = 0;
  for (const auto& wk : workers_) {
    shards.push_back(wk->shard_);
    latest = std::max(latest, wk->now());
  }
  RunMetrics metrics = RunMetrics::merge(shards, agg_.kind(), topo_, agg_.capacity(), agg_.item_size(),
                                         opts_.latency_reservoir, worker_seed(opts_.seed, 0, 3));
  metrics.runtime_ns = cfg_.clock == ClockMode::Virtual
                           ? latest
                           : std::chrono::duration_cast<std::chrono::nanoseconds>(
                                 std::chrono::steady_clock::now() - started_)
                                 .count();
  for (const auto& ch : channels_) metrics.comm.push_back(ch->stats);
  if (metrics.produced != metrics.delivered)
    throw InvariantViolation("quiescence reached with produced=" + std::to_string(metrics.produced) +
                             " delivered=" + std::to_string(metrics.delivered));
  if (agg_.buffered_items() != 0) throw InvariantViolation("quiescence reached with buffered items");
  metrics.frozen = true;
  return metrics;
}

std::string Runtime::diagnostic() const {
  std::ostringstream os;
  std::uint64_t produced = 0;
  std::uint64_t delivered = 0;
  for (const auto& wk : workers_) {
    produced += wk->shard_.produced;
    delivered += wk->shard_.delivered;
  }
  os << "scheme=" << to_token(agg_.kind()) << " topo=" << topo_.describe() << " produced=" << produced
     << " delivered=" << delivered << '\n';
  for (const auto& wk : workers_) {
    os << "  worker " << wk->id_ << ": inbox=" << wk->inbox_.size() << " driver_active=" << wk->driver_active_
       << " clock=" << wk->now() << " buffered=" << agg_.buffered_items_of_worker(wk->id_) << '\n';
  }
  for (ProcessRef p = 0; p < topo_.total_processes(); ++p)
    os << "  process " << p << ": buffered=" << agg_.buffered_items_of_process(p) << '\n';
  return os.str();
}

}  // namespace agg
