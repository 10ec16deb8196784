#pragma once

// Trajectory loop: sample the next (clock, time), apply its mark, re-evaluate
// the clocks that read written substates and hand the enabling changes back
// to the sampler.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "ctde/clock.hpp"
#include "ctde/dep_graph.hpp"
#include "ctde/rng.hpp"
#include "ctde/sampler.hpp"

namespace ctde {

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ParamMap = std::map<std::string, std::string>;

// Immutable model: clocks with ids 0..n-1, initial state and lazily
// instantiated clock families. Copies share the same data.
class Model {
 public:
  // Throws std::invalid_argument when clock ids are not 0..n-1 in order.
  Model(std::string name, ParamMap params, std::vector<ClockSpec> clocks, SystemState initial,
        std::vector<ClockFamily> families = {});

  const std::string& name() const { return data_->name; }
  const ParamMap& params() const { return data_->params; }
  const std::vector<ClockSpec>& clocks() const { return data_->clocks; }
  const SystemState& initial_state() const { return data_->initial; }
  const std::vector<ClockFamily>& families() const { return data_->families; }
  const DependencyGraph& graph() const { return data_->graph; }

  // FNV-1a over name, parameters, initial state and clock structure, as 16
  // lowercase hex digits.
  const std::string& hash() const { return data_->hash; }

 private:
  struct Data {
    std::string name;
    ParamMap params;
    std::vector<ClockSpec> clocks;
    SystemState initial;
    std::vector<ClockFamily> families;
    DependencyGraph graph;
    std::string hash;
  };
  std::shared_ptr<const Data> data_;
};

// Model clocks plus family instances created as new substates appear.
// Instances get consecutive ids after the model's clocks, in order of first
// appearance (keys of one jump in key order, families in declaration order).
class ClockRegistry {
 public:
  explicit ClockRegistry(const Model& model);

  std::size_t size() const { return base_ + extra_.size(); }
  const ClockSpec& clock(ClockId id) const {
    auto i = index_of(id);
    return i < base_ ? model_.clocks()[i] : extra_[i - base_];
  }
  const DependencyGraph& graph() const { return own_graph_ ? *own_graph_ : model_.graph(); }

  // Instantiates families for present keys not seen before; returns the new
  // ids in ascending order.
  std::vector<ClockId> observe(const SystemState& state);
  std::vector<ClockId> observe(const JumpMark& mark, const SystemState& state);

 private:
  void instantiate(const SubstateKey& key, std::vector<ClockId>& created);

  Model model_;
  std::size_t base_;
  std::vector<ClockSpec> extra_;
  std::optional<DependencyGraph> own_graph_;
  std::unordered_set<SubstateKey> seen_;
};

struct EventRecord {
  std::uint64_t seq = 0;
  double time = 0.0;
  ClockId clock{};
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EndTime {
  double t = 0.0;
  friend bool operator==(const EndTime&, const EndTime&) = default;
};
struct EventCount {
  std::uint64_t n = 0;
  friend bool operator==(const EventCount&, const EventCount&) = default;
};
struct StalledOnly {
  friend bool operator==(const StalledOnly&, const StalledOnly&) = default;
};
using StopCondition = std::variant<EndTime, EventCount, StalledOnly>;

enum class StopReason { EndTime, EventCount, Stalled };
std::string_view to_string(StopReason reason);

struct Trajectory {
  std::string model_name;
  std::string model_hash;
  ParamMap params;
  std::string sampler;
  std::uint64_t rng_seed = 0;
  SystemState initial_state;
  std::vector<EventRecord> events;
  double final_time = 0.0;
  std::uint64_t variates_consumed = 0;
  StopReason stop_reason = StopReason::Stalled;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct KernelOptions {
  // After every step, re-evaluate every clock and compare with the cached
  // outcomes and the sampler's enabled set; throws KernelError on mismatch.
  bool audit = false;
};

// One trajectory's mutable state.
class Simulation {
 public:
  enum class Outcome { Fired, Stalled, Censored };

  Simulation(const Model& model, std::unique_ptr<Sampler> sampler, std::uint64_t seed,
             KernelOptions options = {});

  // Samples and applies one event. With a horizon, an event after it is not
  // applied and Censored is returned; `now` is left unchanged.
  Outcome step(double horizon = kInfinity);

  double now() const { return now_; }
  const SystemState& state() const { return state_; }
  const std::vector<EventRecord>& events() const { return events_; }
  const Sampler& sampler() const { return *sampler_; }
  Sampler& sampler() { return *sampler_; }
  const ClockRegistry& registry() const { return registry_; }
  const Rng& rng() const { return rng_; }
  // Cached outcome (Disabled or Enabled) per clock.
  const EnablingOutcome& outcome(ClockId clock) const { return outcomes_.at(index_of(clock)); }

  // Compares the cache against a fresh sweep; empty string when consistent.
  std::string audit() const;

 private:
  void evaluate(const std::vector<ClockId>& clocks, std::optional<ClockId> fired,
                EnablingDelta& delta);

  Model model_;
  ClockRegistry registry_;
  std::unique_ptr<Sampler> sampler_;
  Rng rng_;
  KernelOptions options_;
  SystemState state_;
  ChangeTimes changes_;
  std::vector<EnablingOutcome> outcomes_;
  std::vector<EventRecord> events_;
  double now_ = 0.0;
};

// Throws std::invalid_argument for EndTime t < 0 or EventCount n == 0.
void validate(const StopCondition& stop);

Trajectory run_trajectory(const Model& model, const SamplerSpec& sampler, std::uint64_t seed,
                          const StopCondition& stop, KernelOptions options = {});

// Trajectory i uses stream_seed(base_seed, i); results are ordered by index
// and independent of the worker count.
std::vector<Trajectory> run_ensemble(const Model& model, const SamplerSpec& sampler,
                                     std::uint64_t base_seed, std::size_t count,
                                     const StopCondition& stop, unsigned workers = 1,
                                     KernelOptions options = {});

// Replays the events from the initial state; element k is the state after
// k events (element 0 is the initial state). Throws NegativeSubstate or
// KernelError when the trajectory does not fit the model.
std::vector<SystemState> replay(const Model& model, const Trajectory& trajectory);

std::string format_sampler(const SamplerSpec& spec);
std::string format_time(double t);

class TrajectoryFormatError : public std::runtime_error {
 public:
  TrajectoryFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Tab-separated, '#'-prefixed header block, then `seq time clock_id` rows
// with times at 17 significant digits.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);
Trajectory read_trajectory(std::istream& in);

}  // namespace ctde
