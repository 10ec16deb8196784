#include "ctde/kernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

namespace ctde {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, std::string_view text) {
  for (unsigned char c : text) {
    h ^= c;
    h *= kFnvPrime;
  }
  h ^= 0xff;
  h *= kFnvPrime;
}

std::string model_hash(const std::string& name, const ParamMap& params,
                       const std::vector<ClockSpec>& clocks, const SystemState& initial,
                       const std::vector<ClockFamily>& families) {
  std::uint64_t h = kFnvOffset;
  fnv(h, name);
  for (const auto& [key, value] : params) {
    fnv(h, key);
    fnv(h, value);
  }
  fnv(h, initial.to_string());
  for (const ClockSpec& c : clocks) {
    fnv(h, std::to_string(index_of(c.id)));
    fnv(h, c.name);
    for (const auto& [key, delta] : c.mark.deltas()) fnv(h, key + ':' + std::to_string(delta));
    for (const auto& key : c.reads) fnv(h, key);
  }
  for (const ClockFamily& f : families) fnv(h, f.key_prefix);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace

Model::Model(std::string name, ParamMap params, std::vector<ClockSpec> clocks, SystemState initial,
             std::vector<ClockFamily> families) {
  auto data = std::make_shared<Data>();
  data->graph = DependencyGraph::build(clocks);
  data->hash = model_hash(name, params, clocks, initial, families);
  data->name = std::move(name);
  data->params = std::move(params);
  data->clocks = std::move(clocks);
  data->initial = std::move(initial);
  data->families = std::move(families);
  data_ = std::move(data);
}

ClockRegistry::ClockRegistry(const Model& model) : model_(model), base_(model.clocks().size()) {}

void ClockRegistry::instantiate(const SubstateKey& key, std::vector<ClockId>& created) {
  if (!seen_.insert(key).second) return;
  for (const ClockFamily& family : model_.families()) {
    if (key.compare(0, family.key_prefix.size(), family.key_prefix) != 0) continue;
    for (ClockSpec spec : family.instantiate(key)) {
      spec.id = clock_id(size());
      if (!own_graph_) own_graph_ = model_.graph();
      own_graph_->add_clock(spec);
      created.push_back(spec.id);
      extra_.push_back(std::move(spec));
    }
  }
}

std::vector<ClockId> ClockRegistry::observe(const SystemState& state) {
  std::vector<ClockId> created;
  if (model_.families().empty()) return created;
  for (const auto& [key, count] : state.entries()) instantiate(key, created);
  return created;
}

std::vector<ClockId> ClockRegistry::observe(const JumpMark& mark, const SystemState& state) {
  std::vector<ClockId> created;
  if (model_.families().empty()) return created;
  for (const auto& [key, delta] : mark.deltas()) {
    if (state.count(key) > 0) instantiate(key, created);
  }
  return created;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::EndTime:
      return "end-time";
    case StopReason::EventCount:
      return "event-count";
    case StopReason::Stalled:
      return "stalled";
  }
  return "stalled";
}

Simulation::Simulation(const Model& model, std::unique_ptr<Sampler> sampler, std::uint64_t seed,
                       KernelOptions options)
    : model_(model),
      registry_(model),
      sampler_(std::move(sampler)),
      rng_(seed),
      options_(options),
      state_(model.initial_state()) {
  registry_.observe(state_);
  outcomes_.assign(registry_.size(), Disabled{});
  std::vector<ClockId> all;
  all.reserve(registry_.size());
  for (std::size_t i = 0; i < registry_.size(); ++i) all.push_back(clock_id(i));
  EnablingDelta delta;
  evaluate(all, std::nullopt, delta);
  sampler_->absorb(delta, now_, rng_);
  if (options_.audit) {
    if (auto problem = audit(); !problem.empty()) throw KernelError(problem);
  }
}

void Simulation::evaluate(const std::vector<ClockId>& clocks, std::optional<ClockId> fired,
                          EnablingDelta& delta) {
  ClockContext context{state_, changes_, now_};
  for (ClockId id : clocks) {
    auto i = index_of(id);
    const bool is_fired = fired == id;
    const EnablingOutcome previously = is_fired ? EnablingOutcome{Disabled{}} : outcomes_[i];
    EnablingOutcome outcome = evaluate_enabling(registry_.clock(id), context, previously);
    if (is_fired) {
      if (auto* e = std::get_if<Enabled>(&outcome)) {
        delta.newly_enabled.push_back({id, e->spec, e->enabling_time});
      } else {
        delta.newly_disabled.push_back(id);
      }
      outcomes_[i] = std::move(outcome);
      continue;
    }
    if (leaves_unchanged(outcome, previously)) continue;
    if (std::holds_alternative<Disabled>(outcome)) {
      delta.newly_disabled.push_back(id);
    } else {
      const auto& e = std::get<Enabled>(outcome);
      if (e.enabling_time > now_) {
        throw KernelError("clock " + registry_.clock(id).name + " has enabling time " +
                          format_time(e.enabling_time) + " after the current time");
      }
      EnablingEntry entry{id, e.spec, e.enabling_time};
      if (std::holds_alternative<Enabled>(previously)) {
        delta.modified.push_back(std::move(entry));
      } else {
        delta.newly_enabled.push_back(std::move(entry));
      }
    }
    outcomes_[i] = std::move(outcome);
  }
}

Simulation::Outcome Simulation::step(double horizon) {
  auto event = sampler_->next(now_, rng_);
  if (!event) return Outcome::Stalled;
  if (event->time > horizon) return Outcome::Censored;
  if (!(event->time > now_)) {
    throw KernelError("sampler proposed time " + format_time(event->time) +
                      " not after the current time " + format_time(now_));
  }
  const ClockSpec& clock = registry_.clock(event->clock);
  state_.apply(clock.mark);
  now_ = event->time;
  changes_.record(clock.mark, now_);
  const JumpMark mark = clock.mark;

  std::vector<ClockId> created = registry_.observe(mark, state_);
  outcomes_.resize(registry_.size(), Disabled{});
  std::vector<ClockId> affected = registry_.graph().affected(event->clock);
  if (!created.empty()) {
    affected.insert(affected.end(), created.begin(), created.end());
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
  }
  EnablingDelta delta;
  delta.fired = event->clock;
  evaluate(affected, event->clock, delta);
  sampler_->absorb(delta, now_, rng_);
  events_.push_back({events_.size(), now_, event->clock});

  if (options_.audit) {
    if (auto problem = audit(); !problem.empty()) throw KernelError(problem);
  }
  return Outcome::Fired;
}

std::string Simulation::audit() const {
  ClockContext context{state_, changes_, now_};
  std::vector<ClockId> enabled;
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    ClockId id = clock_id(i);
    const EnablingOutcome& cached = outcomes_[i];
    EnablingOutcome fresh = evaluate_enabling(registry_.clock(id), context, cached);
    if (!leaves_unchanged(fresh, cached)) {
      return "cached enabling of clock " + registry_.clock(id).name + " is stale at time " +
             format_time(now_);
    }
    if (std::holds_alternative<Enabled>(cached)) enabled.push_back(id);
  }
  if (sampler_->enabled_clocks() != enabled) {
    return "sampler enabled set differs from the cache at time " + format_time(now_);
  }
  return {};
}

void validate(const StopCondition& stop) {
  if (const auto* e = std::get_if<EndTime>(&stop); e && !(e->t >= 0.0)) {
    throw std::invalid_argument("end time must be non-negative");
  }
  if (const auto* c = std::get_if<EventCount>(&stop); c && c->n == 0) {
    throw std::invalid_argument("event count must be positive");
  }
}

std::string format_sampler(const SamplerSpec& spec) {
  if (spec.name != "hierarchical" || spec.partition.empty()) return spec.name;
  return spec.name + ' ' + format_partition(spec.partition);
}

Trajectory run_trajectory(const Model& model, const SamplerSpec& sampler, std::uint64_t seed,
                          const StopCondition& stop, KernelOptions options) {
  validate(stop);
  Simulation sim(model, make_sampler(sampler), seed, options);
  Trajectory out;
  out.model_name = model.name();
  out.model_hash = model.hash();
  out.params = model.params();
  out.sampler = format_sampler(sampler);
  out.rng_seed = seed;
  out.initial_state = model.initial_state();

  const double horizon = std::holds_alternative<EndTime>(stop) ? std::get<EndTime>(stop).t : kInfinity;
  const std::uint64_t limit =
      std::holds_alternative<EventCount>(stop) ? std::get<EventCount>(stop).n : UINT64_MAX;
  while (true) {
    if (sim.events().size() >= limit) {
      out.stop_reason = StopReason::EventCount;
      out.final_time = sim.now();
      break;
    }
    auto result = sim.step(horizon);
    if (result == Simulation::Outcome::Fired) continue;
    if (result == Simulation::Outcome::Censored) {
      out.stop_reason = StopReason::EndTime;
      out.final_time = horizon;
    } else {
      out.stop_reason = StopReason::Stalled;
      out.final_time = std::isinf(horizon) ? sim.now() : horizon;
    }
    break;
  }
  out.events = sim.events();
  out.variates_consumed = sim.rng().consumed();
  return out;
}

std::vector<Trajectory> run_ensemble(const Model& model, const SamplerSpec& sampler,
                                     std::uint64_t base_seed, std::size_t count,
                                     const StopCondition& stop, unsigned workers,
                                     KernelOptions options) {
  if (count == 0) throw std::invalid_argument("ensemble count must be at least 1");
  validate(stop);
  make_sampler(sampler);
  std::vector<Trajectory> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = run_trajectory(model, sampler, stream_seed(base_seed, i), stop, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<SystemState> replay(const Model& model, const Trajectory& trajectory) {
  ClockRegistry registry(model);
  SystemState state = trajectory.initial_state;
  registry.observe(state);
  std::vector<SystemState> states{state};
  states.reserve(trajectory.events.size() + 1);
  for (const EventRecord& e : trajectory.events) {
    if (index_of(e.clock) >= registry.size()) {
      throw KernelError("event " + std::to_string(e.seq) + " names unknown clock " +
                        std::to_string(index_of(e.clock)));
    }
    const JumpMark& mark = registry.clock(e.clock).mark;
    state.apply(mark);
    registry.observe(mark, state);
    states.push_back(state);
  }
  return states;
}

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

namespace {

constexpr std::string_view kMagic = "# ctde-trajectory 1";

SystemState parse_state(std::string_view text, std::size_t line) {
  SystemState state;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    std::size_t eq = item.rfind('=');
    std::int64_t value = 0;
    if (eq == std::string_view::npos || eq == 0 ||
        std::from_chars(item.data() + eq + 1, item.data() + item.size(), value).ec != std::errc{}) {
      throw TrajectoryFormatError(line, "malformed state entry '" + std::string(item) + "'");
    }
    state.set(std::string(item.substr(0, eq)), value);
    pos = end + 1;
  }
  return state;
}

template <class T>
T parse_number(std::string_view text, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw TrajectoryFormatError(line, std::string("malformed ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& t) {
  out << kMagic << '\n';
  out << "# model\t" << t.model_name << '\n';
  out << "# model_hash\t" << t.model_hash << '\n';
  for (const auto& [key, value] : t.params) out << "# param\t" << key << '\t' << value << '\n';
  out << "# sampler\t" << t.sampler << '\n';
  out << "# seed\t" << t.rng_seed << '\n';
  out << "# initial_state\t" << t.initial_state.to_string() << '\n';
  out << "# final_time\t" << format_time(t.final_time) << '\n';
  out << "# stop_reason\t" << to_string(t.stop_reason) << '\n';
  out << "# variates\t" << t.variates_consumed << '\n';
  out << "seq\ttime\tclock_id\n";
  for (const EventRecord& e : t.events) {
    out << e.seq << '\t' << format_time(e.time) << '\t' << index_of(e.clock) << '\n';
  }
}

Trajectory read_trajectory(std::istream& in) {
  Trajectory t;
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line) || line != kMagic) {
    throw TrajectoryFormatError(1, "missing trajectory header");
  }
  ++number;
  bool columns = false;
  while (std::getline(in, line)) {
    ++number;
    if (!columns) {
      if (line == "seq\ttime\tclock_id") {
        columns = true;
        continue;
      }
      if (line.rfind("# ", 0) != 0) throw TrajectoryFormatError(number, "expected a header line");
      auto fields = split_tabs(std::string_view(line).substr(2));
      std::string_view key = fields[0];
      if (key == "param" && fields.size() == 3) {
        t.params[std::string(fields[1])] = std::string(fields[2]);
        continue;
      }
      if (fields.size() != 2) throw TrajectoryFormatError(number, "malformed header line");
      std::string_view value = fields[1];
      if (key == "model") {
        t.model_name = value;
      } else if (key == "model_hash") {
        t.model_hash = value;
      } else if (key == "sampler") {
        t.sampler = value;
      } else if (key == "seed") {
        t.rng_seed = parse_number<std::uint64_t>(value, number, "seed");
      } else if (key == "initial_state") {
        t.initial_state = parse_state(value, number);
      } else if (key == "final_time") {
        t.final_time = parse_number<double>(value, number, "time");
      } else if (key == "stop_reason") {
        if (value == "end-time") {
          t.stop_reason = StopReason::EndTime;
        } else if (value == "event-count") {
          t.stop_reason = StopReason::EventCount;
        } else if (value == "stalled") {
          t.stop_reason = StopReason::Stalled;
        } else {
          throw TrajectoryFormatError(number, "unknown stop reason");
        }
      } else if (key == "variates") {
        t.variates_consumed = parse_number<std::uint64_t>(value, number, "variate count");
      } else {
        throw TrajectoryFormatError(number, "unknown header key '" + std::string(key) + "'");
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw TrajectoryFormatError(number, "expected seq, time and clock_id");
    EventRecord e;
    e.seq = parse_number<std::uint64_t>(fields[0], number, "seq");
    e.time = parse_number<double>(fields[1], number, "time");
    e.clock = clock_id(parse_number<std::uint32_t>(fields[2], number, "clock id"));
    if (e.seq != t.events.size()) throw TrajectoryFormatError(number, "seq out of order");
    if (!t.events.empty() && !(e.time > t.events.back().time)) {
      throw TrajectoryFormatError(number, "event times must increase");
    }
    t.events.push_back(e);
  }
  if (!columns) throw TrajectoryFormatError(number, "missing column header");
  return t;
}

}  // namespace ctde
