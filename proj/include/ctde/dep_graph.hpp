#pragma once

// Bipartite clock/substate dependency graph. A clock reads the substates its
// enabling rule inspects and writes the support of its jump mark; after a
// jump only the readers of written substates need re-evaluation.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctde/clock.hpp"

namespace ctde {

class DependencyGraph {
 public:
  DependencyGraph() = default;

  // Throws std::invalid_argument when ids are not 0..n-1 in order.
  static DependencyGraph build(std::span<const ClockSpec> clocks);

  // Registers one more clock; its id must equal clock_count().
  void add_clock(const ClockSpec& clock);

  std::size_t clock_count() const { return reads_.size(); }
  std::size_t substate_count() const { return keys_.size(); }

  std::vector<SubstateKey> reads(ClockId clock) const;
  std::vector<SubstateKey> writes(ClockId clock) const;
  // Clocks reading `key`, ascending. Empty for unknown keys.
  std::vector<ClockId> readers(const SubstateKey& key) const;

  // Union over written substates of their readers, plus `fired` itself,
  // ascending and unique.
  std::vector<ClockId> affected(ClockId fired) const;

  // One edge per line: clock-id TAB substate-key TAB read|write.
  void write_edge_list(std::ostream& out) const;

 private:
  std::uint32_t intern(const SubstateKey& key);

  std::unordered_map<SubstateKey, std::uint32_t> key_index_;
  std::vector<SubstateKey> keys_;
  std::vector<std::vector<std::uint32_t>> reads_;
  std::vector<std::vector<std::uint32_t>> writes_;
  std::vector<std::vector<ClockId>> readers_;
};

}  // namespace ctde
