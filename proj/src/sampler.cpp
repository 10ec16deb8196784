#include "ctde/sampler.hpp"

#include <algorithm>
#include <set>

namespace ctde {

void ClockTable::enable(const EnablingEntry& entry, double now) {
  auto i = index_of(entry.clock);
  if (i >= entries_.size()) {
    entries_.resize(i + 1);
    atom_times_.resize(i + 1);
  }
  if (entries_[i]) throw SamplerError("clock " + std::to_string(i) + " is already enabled");
  std::vector<double> times;
  for (const Atom& atom : entry.spec.atoms()) {
    double when = entry.enabling_time + atom.offset;
    if (when <= now) continue;
    auto [it, inserted] = atoms_.try_emplace(when, FutureAtom{entry.clock, atom.mass});
    if (!inserted) {
      for (double t : times) atoms_.erase(t);
      throw DuplicateAtoms(it->second.clock, entry.clock, when);
    }
    times.push_back(when);
  }
  entries_[i] = Enabled{entry.spec, entry.enabling_time};
  atom_times_[i] = std::move(times);
  ++count_;
}

Enabled ClockTable::disable(ClockId clock) {
  auto i = index_of(clock);
  if (i >= entries_.size() || !entries_[i]) throw UnknownClock(clock);
  for (double t : atom_times_[i]) atoms_.erase(t);
  atom_times_[i].clear();
  Enabled old = std::move(*entries_[i]);
  entries_[i].reset();
  --count_;
  return old;
}

const Enabled& ClockTable::at(ClockId clock) const {
  const Enabled* e = find(clock);
  if (!e) throw UnknownClock(clock);
  return *e;
}

std::vector<ClockId> ClockTable::ids() const {
  std::vector<ClockId> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i]) out.push_back(clock_id(i));
  }
  return out;
}

void TableSampler::absorb(const EnablingDelta& delta, double now, Rng& rng) {
  bool fired_seen = false;
  for (ClockId clock : delta.newly_disabled) {
    bool fired = delta.fired == clock;
    fired_seen = fired_seen || fired;
    Enabled old = table_.disable(clock);
    on_disable(clock, old, now, fired);
  }
  for (const EnablingEntry& entry : delta.modified) {
    if (delta.fired == entry.clock) throw SamplerError("fired clock listed as modified");
    Enabled old = table_.disable(entry.clock);
    table_.enable(entry, now);
    on_modify(entry.clock, old, table_.at(entry.clock), now, rng);
  }
  for (const EnablingEntry& entry : delta.newly_enabled) {
    bool fired = delta.fired == entry.clock;
    if (fired) {
      fired_seen = true;
      Enabled old = table_.disable(entry.clock);
      on_disable(entry.clock, old, now, true);
    }
    table_.enable(entry, now);
    on_enable(entry.clock, table_.at(entry.clock), now, fired, rng);
  }
  if (delta.fired && !fired_seen) {
    throw SamplerError("fired clock " + std::to_string(index_of(*delta.fired)) +
                       " is neither re-enabled nor disabled in the delta");
  }
}

namespace {

std::unique_ptr<Sampler> make_leaf(const std::string& name) {
  if (name == "first-reaction") return std::make_unique<FirstReactionSampler>();
  if (name == "next-reaction") return std::make_unique<NextReactionSampler>();
  if (name == "next-to-fire") return std::make_unique<NextToFireSampler>();
  if (name == "direct") return std::make_unique<DirectSampler>();
  return nullptr;
}

std::string valid_names() {
  std::string out;
  for (const auto& n : sampler_names()) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

}  // namespace

std::unique_ptr<Sampler> make_sampler(const SamplerSpec& spec) {
  if (auto leaf = make_leaf(spec.name)) return leaf;
  if (spec.name != "hierarchical") {
    throw std::invalid_argument("unknown sampler '" + spec.name + "'; valid names: " + valid_names());
  }
  std::map<std::string, std::string> partition = spec.partition;
  if (partition.empty()) partition = {{"Exponential", "direct"}, {"default", "next-reaction"}};

  std::set<std::string> leaves;
  for (const auto& [key, leaf] : partition) leaves.insert(leaf);
  std::vector<std::unique_ptr<Sampler>> children;
  std::map<std::string, std::size_t> child_of_leaf;
  for (const std::string& leaf : leaves) {
    auto child = make_leaf(leaf);
    if (!child) {
      throw std::invalid_argument("partition names unknown leaf sampler '" + leaf +
                                  "'; valid names: first-reaction, next-reaction, next-to-fire, direct");
    }
    child_of_leaf[leaf] = children.size();
    children.push_back(std::move(child));
  }
  std::map<std::string, std::size_t, std::less<>> route;
  for (const auto& [key, leaf] : partition) route[key] = child_of_leaf[leaf];

  PartitionRule rule = [route](ClockId clock, const HazardSpec& hazard) -> std::size_t {
    if (!hazard.atoms().empty()) {
      if (auto it = route.find("Atomic"); it != route.end()) return it->second;
    }
    if (auto it = route.find(hazard.family()); it != route.end()) return it->second;
    if (auto it = route.find("default"); it != route.end()) return it->second;
    throw SamplerError("no partition entry for clock " + std::to_string(index_of(clock)) +
                       " with family " + std::string(hazard.family()));
  };
  return std::make_unique<HierarchicalSampler>(std::move(children), std::move(rule));
}

std::map<std::string, std::string> parse_partition(std::string_view text) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
    return v;
  };
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    std::size_t eq = item.find('=');
    std::string_view key = eq == std::string_view::npos ? item : trim(item.substr(0, eq));
    std::string_view leaf = eq == std::string_view::npos ? item : trim(item.substr(eq + 1));
    if (eq == std::string_view::npos || key.empty() || leaf.empty()) {
      throw std::invalid_argument("partition entry '" + std::string(item) +
                                  "' must look like Family=sampler");
    }
    out[std::string(key)] = std::string(leaf);
    pos = comma + 1;
  }
  return out;
}

std::string format_partition(const std::map<std::string, std::string>& partition) {
  std::string out;
  for (const auto& [key, leaf] : partition) {
    if (!out.empty()) out += ',';
    out += key + '=' + leaf;
  }
  return out;
}

}  // namespace ctde
