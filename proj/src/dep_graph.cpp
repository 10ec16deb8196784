#include "ctde/dep_graph.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace ctde {

DependencyGraph DependencyGraph::build(std::span<const ClockSpec> clocks) {
  DependencyGraph graph;
  for (const ClockSpec& clock : clocks) graph.add_clock(clock);
  return graph;
}

std::uint32_t DependencyGraph::intern(const SubstateKey& key) {
  auto [it, inserted] = key_index_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
  if (inserted) {
    keys_.push_back(key);
    readers_.emplace_back();
  }
  return it->second;
}

void DependencyGraph::add_clock(const ClockSpec& clock) {
  if (index_of(clock.id) != reads_.size()) {
    throw std::invalid_argument("clock '" + clock.name + "' has id " +
                                std::to_string(index_of(clock.id)) + ", expected " +
                                std::to_string(reads_.size()));
  }
  std::vector<std::uint32_t> reads;
  for (const SubstateKey& key : clock.reads) reads.push_back(intern(key));
  std::sort(reads.begin(), reads.end());
  reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
  for (std::uint32_t k : reads) readers_[k].push_back(clock.id);

  std::vector<std::uint32_t> writes;
  for (const auto& [key, delta] : clock.mark.deltas()) writes.push_back(intern(key));
  std::sort(writes.begin(), writes.end());

  reads_.push_back(std::move(reads));
  writes_.push_back(std::move(writes));
}

std::vector<SubstateKey> DependencyGraph::reads(ClockId clock) const {
  std::vector<SubstateKey> out;
  for (std::uint32_t k : reads_.at(index_of(clock))) out.push_back(keys_[k]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SubstateKey> DependencyGraph::writes(ClockId clock) const {
  std::vector<SubstateKey> out;
  for (std::uint32_t k : writes_.at(index_of(clock))) out.push_back(keys_[k]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ClockId> DependencyGraph::readers(const SubstateKey& key) const {
  auto it = key_index_.find(key);
  if (it == key_index_.end()) return {};
  return readers_[it->second];
}

std::vector<ClockId> DependencyGraph::affected(ClockId fired) const {
  std::vector<ClockId> out{fired};
  for (std::uint32_t k : writes_.at(index_of(fired))) {
    out.insert(out.end(), readers_[k].begin(), readers_[k].end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void DependencyGraph::write_edge_list(std::ostream& out) const {
  for (std::size_t c = 0; c < reads_.size(); ++c) {
    for (const SubstateKey& key : reads(clock_id(c))) out << c << '\t' << key << "\tread\n";
    for (const SubstateKey& key : writes(clock_id(c))) out << c << '\t' << key << "\twrite\n";
  }
}

}  // namespace ctde
