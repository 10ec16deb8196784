#pragma once

// Indexed min pairing heap over (putative time, clock id). Ties on time go
// to the smaller id; +infinity is an ordinary key that sorts last.

#include <cstdint>
#include <utility>
#include <vector>

#include "ctde/clock.hpp"

namespace ctde {

class PutativeQueue {
 public:
  struct Entry {
    ClockId clock{};
    double time = 0.0;
  };

  bool empty() const { return size_ == 0; }
  std::size_t size() const { return size_; }
  bool contains(ClockId clock) const {
    auto i = index_of(clock);
    return i < nodes_.size() && nodes_[i].member;
  }
  double time_of(ClockId clock) const { return nodes_.at(index_of(clock)).time; }

  // Precondition for push: not contained. For update/erase: contained.
  void push(ClockId clock, double time);
  void update(ClockId clock, double time);
  void erase(ClockId clock);

  Entry top() const;
  Entry pop();

  // Members in ascending id order.
  std::vector<ClockId> members() const;

  // Heap order and link consistency; for tests.
  bool check_invariants() const;

 private:
  static constexpr std::int32_t kNone = -1;
  struct Node {
    double time = 0.0;
    std::int32_t child = kNone;
    std::int32_t sibling = kNone;
    // Parent when this node is the leftmost child, else left sibling.
    std::int32_t prev = kNone;
    bool member = false;
  };

  bool before(std::int32_t a, std::int32_t b) const {
    return nodes_[a].time < nodes_[b].time || (nodes_[a].time == nodes_[b].time && a < b);
  }
  std::int32_t meld(std::int32_t a, std::int32_t b);
  std::int32_t merge_pairs(std::int32_t first);
  void cut(std::int32_t n);
  bool check_subtree(std::int32_t n, std::size_t& count) const;

  std::vector<Node> nodes_;
  std::vector<std::int32_t> scratch_;
  std::int32_t root_ = kNone;
  std::size_t size_ = 0;
};

}  // namespace ctde
