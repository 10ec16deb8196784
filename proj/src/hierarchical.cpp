#include <algorithm>

#include "ctde/sampler.hpp"

namespace ctde {

HierarchicalSampler::HierarchicalSampler(std::vector<std::unique_ptr<Sampler>> children,
                                         PartitionRule rule)
    : children_(std::move(children)), rule_(std::move(rule)) {
  if (children_.empty()) throw std::invalid_argument("hierarchical sampler needs a child");
}

std::optional<std::size_t> HierarchicalSampler::owner(ClockId clock) const {
  auto i = index_of(clock);
  if (i >= owner_.size() || owner_[i] < 0) return std::nullopt;
  return static_cast<std::size_t>(owner_[i]);
}

void HierarchicalSampler::absorb(const EnablingDelta& delta, double now, Rng& rng) {
  std::vector<EnablingDelta> parts(children_.size());
  std::vector<std::pair<std::size_t, ClockId>> discards;
  auto route = [&](const EnablingEntry& entry) {
    std::size_t n = rule_(entry.clock, entry.spec);
    if (n >= children_.size()) throw SamplerError("partition rule returned an invalid child");
    return n;
  };
  auto slot = [&](ClockId clock) -> int& {
    auto i = index_of(clock);
    if (i >= owner_.size()) owner_.resize(i + 1, -1);
    return owner_[i];
  };

  bool fired_seen = false;
  for (ClockId clock : delta.newly_disabled) {
    table_.disable(clock);
    auto o = static_cast<std::size_t>(slot(clock));
    parts[o].newly_disabled.push_back(clock);
    if (delta.fired == clock) {
      parts[o].fired = clock;
      fired_seen = true;
    }
  }
  for (const EnablingEntry& entry : delta.modified) {
    if (delta.fired == entry.clock) throw SamplerError("fired clock listed as modified");
    table_.disable(entry.clock);
    table_.enable(entry, now);
    int& o = slot(entry.clock);
    std::size_t n = route(entry);
    if (static_cast<int>(n) == o) {
      parts[n].modified.push_back(entry);
    } else {
      parts[o].newly_disabled.push_back(entry.clock);
      discards.emplace_back(o, entry.clock);
      parts[n].newly_enabled.push_back(entry);
      o = static_cast<int>(n);
    }
  }
  for (const EnablingEntry& entry : delta.newly_enabled) {
    int& o = slot(entry.clock);
    std::size_t n = route(entry);
    if (delta.fired == entry.clock) {
      fired_seen = true;
      table_.disable(entry.clock);
      parts[o].fired = entry.clock;
      if (static_cast<int>(n) != o) parts[o].newly_disabled.push_back(entry.clock);
    } else if (table_.find(entry.clock)) {
      throw SamplerError("clock " + std::to_string(index_of(entry.clock)) +
                         " is already enabled");
    } else if (o >= 0 && static_cast<int>(n) != o) {
      discards.emplace_back(o, entry.clock);
    }
    table_.enable(entry, now);
    parts[n].newly_enabled.push_back(entry);
    o = static_cast<int>(n);
  }
  if (delta.fired && !fired_seen) {
    throw SamplerError("fired clock " + std::to_string(index_of(*delta.fired)) +
                       " is neither re-enabled nor disabled in the delta");
  }

  auto by_entry = [](const EnablingEntry& a, const EnablingEntry& b) { return a.clock < b.clock; };
  for (std::size_t i = 0; i < children_.size(); ++i) {
    EnablingDelta& part = parts[i];
    if (part.empty() && !part.fired) continue;
    std::sort(part.newly_disabled.begin(), part.newly_disabled.end());
    std::sort(part.modified.begin(), part.modified.end(), by_entry);
    std::sort(part.newly_enabled.begin(), part.newly_enabled.end(), by_entry);
    children_[i]->absorb(part, now, rng);
  }
  for (const auto& [child, clock] : discards) children_[child]->discard(clock);
}

std::optional<SamplerEvent> HierarchicalSampler::next(double now, Rng& rng) {
  std::optional<SamplerEvent> best;
  for (auto& child : children_) {
    auto proposal = child->next(now, rng);
    if (proposal && (!best || sooner(*proposal, *best))) best = proposal;
  }
  return best;
}

void HierarchicalSampler::discard(ClockId clock) {
  auto i = index_of(clock);
  if (i >= owner_.size() || owner_[i] < 0) return;
  children_[static_cast<std::size_t>(owner_[i])]->discard(clock);
  owner_[i] = -1;
}

}  // namespace ctde
