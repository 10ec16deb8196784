#pragma once

// Clock processes and the discrete state they increment.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "ctde/hazard.hpp"

namespace ctde {

enum class ClockId : std::uint32_t {};

inline constexpr std::uint32_t index_of(ClockId id) { return static_cast<std::uint32_t>(id); }
inline constexpr ClockId clock_id(std::size_t index) {
  return static_cast<ClockId>(static_cast<std::uint32_t>(index));
}

using SubstateKey = std::string;

class NegativeSubstate : public std::runtime_error {
 public:
  explicit NegativeSubstate(const SubstateKey& key)
      : std::runtime_error("substate '" + key + "' would become negative"), key_(key) {}
  const SubstateKey& key() const { return key_; }

 private:
  SubstateKey key_;
};

// Sparse nonzero increments, sorted by key.
class JumpMark {
 public:
  JumpMark() = default;
  JumpMark(std::initializer_list<std::pair<SubstateKey, std::int64_t>> deltas);
  explicit JumpMark(std::vector<std::pair<SubstateKey, std::int64_t>> deltas);

  const std::vector<std::pair<SubstateKey, std::int64_t>>& deltas() const { return deltas_; }
  bool empty() const { return deltas_.empty(); }

  // Componentwise sum; zero results dropped.
  JumpMark operator+(const JumpMark& other) const;

  friend bool operator==(const JumpMark&, const JumpMark&) = default;

 private:
  void normalize();
  std::vector<std::pair<SubstateKey, std::int64_t>> deltas_;
};

// Discrete state X(t): absent keys are zero, stored counts are never zero.
class SystemState {
 public:
  SystemState() = default;
  SystemState(std::initializer_list<std::pair<const SubstateKey, std::int64_t>> entries);

  std::int64_t count(const SubstateKey& key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }
  void set(const SubstateKey& key, std::int64_t value);

  const std::map<SubstateKey, std::int64_t>& entries() const { return counts_; }
  std::size_t size() const { return counts_.size(); }

  // In-place increment; throws NegativeSubstate and leaves the state
  // unchanged if any count would drop below zero.
  void apply(const JumpMark& mark);

  // `key=count` pairs joined by ';' in key order.
  std::string to_string() const;

  friend bool operator==(const SystemState&, const SystemState&) = default;
  friend bool operator<(const SystemState& a, const SystemState& b) { return a.counts_ < b.counts_; }

 private:
  std::map<SubstateKey, std::int64_t> counts_;
};

SystemState apply_mark(const SystemState& state, const JumpMark& mark);

// Time each substate was last written by a jump. Keys never written report 0.
class ChangeTimes {
 public:
  double last_change(const SubstateKey& key) const {
    auto it = times_.find(key);
    return it == times_.end() ? 0.0 : it->second;
  }
  void record(const JumpMark& mark, double when) {
    for (const auto& [key, delta] : mark.deltas()) times_[key] = when;
  }

 private:
  std::unordered_map<SubstateKey, double> times_;
};

// What an enabling rule sees at a stopping time.
struct ClockContext {
  const SystemState& state;
  const ChangeTimes& changes;
  double now = 0.0;

  std::int64_t count(const SubstateKey& key) const { return state.count(key); }
  double last_change(const SubstateKey& key) const { return changes.last_change(key); }
};

struct Disabled {
  friend bool operator==(const Disabled&, const Disabled&) = default;
};

struct Enabled {
  HazardSpec spec;
  double enabling_time = 0.0;
  friend bool operator==(const Enabled&, const Enabled&) = default;
};

struct UnchangedSinceLastQuery {
  friend bool operator==(const UnchangedSinceLastQuery&, const UnchangedSinceLastQuery&) = default;
};

using EnablingOutcome = std::variant<Disabled, Enabled, UnchangedSinceLastQuery>;

// Value returned by a model's enabling rule. Without an explicit enabling
// time, a clock that was already enabled keeps its enabling time and a clock
// that was disabled (or just fired) is enabled at the current time.
struct EnablingRule {
  std::optional<HazardSpec> spec;
  std::optional<double> enabling_time;

  static EnablingRule disabled() { return {}; }
  static EnablingRule enabled(HazardSpec spec, std::optional<double> since = std::nullopt) {
    return {std::move(spec), since};
  }
};

using EnablingFunction = std::function<EnablingRule(const ClockContext&)>;

struct ClockSpec {
  ClockId id{};
  std::string name;
  EnablingFunction enabling;
  JumpMark mark;
  std::vector<SubstateKey> reads;
};

// Resolves the rule against `previously` (Disabled or Enabled). Returns
// UnchangedSinceLastQuery when an enabled clock keeps both spec and enabling
// time; a disabled rule always yields Disabled.
EnablingOutcome evaluate_enabling(const ClockSpec& clock, const ClockContext& context,
                                  const EnablingOutcome& previously);

// True when `outcome` leaves a clock whose last resolved outcome was
// `previously` exactly as it was.
inline bool leaves_unchanged(const EnablingOutcome& outcome, const EnablingOutcome& previously) {
  if (std::holds_alternative<UnchangedSinceLastQuery>(outcome)) return true;
  return std::holds_alternative<Disabled>(outcome) && std::holds_alternative<Disabled>(previously);
}

// Parameterized family of clocks instantiated when a substate whose key
// starts with `key_prefix` first appears. Instantiated clocks receive ids
// assigned by the caller in instantiation order.
struct ClockFamily {
  std::string key_prefix;
  std::function<std::vector<ClockSpec>(const SubstateKey& key)> instantiate;
};

}  // namespace ctde
