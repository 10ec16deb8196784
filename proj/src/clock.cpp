#include "ctde/clock.hpp"

#include <algorithm>

namespace ctde {

JumpMark::JumpMark(std::initializer_list<std::pair<SubstateKey, std::int64_t>> deltas)
    : deltas_(deltas) {
  normalize();
}

JumpMark::JumpMark(std::vector<std::pair<SubstateKey, std::int64_t>> deltas)
    : deltas_(std::move(deltas)) {
  normalize();
}

void JumpMark::normalize() {
  std::sort(deltas_.begin(), deltas_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<SubstateKey, std::int64_t>> merged;
  for (auto& [key, delta] : deltas_) {
    if (!merged.empty() && merged.back().first == key) {
      merged.back().second += delta;
    } else {
      merged.emplace_back(std::move(key), delta);
    }
  }
  std::erase_if(merged, [](const auto& kv) { return kv.second == 0; });
  deltas_ = std::move(merged);
}

JumpMark JumpMark::operator+(const JumpMark& other) const {
  auto all = deltas_;
  all.insert(all.end(), other.deltas_.begin(), other.deltas_.end());
  return JumpMark(std::move(all));
}

SystemState::SystemState(std::initializer_list<std::pair<const SubstateKey, std::int64_t>> entries) {
  for (const auto& [key, value] : entries) set(key, value);
}

void SystemState::set(const SubstateKey& key, std::int64_t value) {
  if (value < 0) throw NegativeSubstate(key);
  if (value == 0) {
    counts_.erase(key);
  } else {
    counts_[key] = value;
  }
}

void SystemState::apply(const JumpMark& mark) {
  for (const auto& [key, delta] : mark.deltas()) {
    if (count(key) + delta < 0) throw NegativeSubstate(key);
  }
  for (const auto& [key, delta] : mark.deltas()) {
    auto it = counts_.find(key);
    if (it == counts_.end()) {
      counts_.emplace(key, delta);
    } else if ((it->second += delta) == 0) {
      counts_.erase(it);
    }
  }
}

std::string SystemState::to_string() const {
  std::string out;
  for (const auto& [key, value] : counts_) {
    if (!out.empty()) out += ';';
    out += key + '=' + std::to_string(value);
  }
  return out;
}

SystemState apply_mark(const SystemState& state, const JumpMark& mark) {
  SystemState next = state;
  next.apply(mark);
  return next;
}

EnablingOutcome evaluate_enabling(const ClockSpec& clock, const ClockContext& context,
                                  const EnablingOutcome& previously) {
  EnablingRule rule = clock.enabling(context);
  const auto* before = std::get_if<Enabled>(&previously);
  if (!rule.spec) return Disabled{};
  double since = rule.enabling_time ? *rule.enabling_time
                                    : (before ? before->enabling_time : context.now);
  if (before && before->enabling_time == since && before->spec == *rule.spec) {
    return UnchangedSinceLastQuery{};
  }
  return Enabled{std::move(*rule.spec), since};
}

}  // namespace ctde
