#include "ctde/putative_queue.hpp"

#include <stdexcept>

namespace ctde {

std::int32_t PutativeQueue::meld(std::int32_t a, std::int32_t b) {
  if (a == kNone) return b;
  if (b == kNone) return a;
  if (before(b, a)) std::swap(a, b);
  Node& parent = nodes_[a];
  Node& child = nodes_[b];
  child.sibling = parent.child;
  if (parent.child != kNone) nodes_[parent.child].prev = b;
  child.prev = a;
  parent.child = b;
  return a;
}

// Two-pass pairing: meld adjacent pairs left to right, then fold right to left.
std::int32_t PutativeQueue::merge_pairs(std::int32_t first) {
  if (first == kNone) return kNone;
  scratch_.clear();
  while (first != kNone) {
    std::int32_t a = first;
    std::int32_t b = nodes_[a].sibling;
    nodes_[a].sibling = kNone;
    nodes_[a].prev = kNone;
    if (b == kNone) {
      scratch_.push_back(a);
      break;
    }
    first = nodes_[b].sibling;
    nodes_[b].sibling = kNone;
    nodes_[b].prev = kNone;
    scratch_.push_back(meld(a, b));
  }
  std::int32_t result = scratch_.back();
  for (std::size_t i = scratch_.size() - 1; i-- > 0;) result = meld(scratch_[i], result);
  return result;
}

void PutativeQueue::cut(std::int32_t n) {
  Node& node = nodes_[n];
  if (node.prev == kNone) return;
  Node& prev = nodes_[node.prev];
  if (prev.child == n) {
    prev.child = node.sibling;
  } else {
    prev.sibling = node.sibling;
  }
  if (node.sibling != kNone) nodes_[node.sibling].prev = node.prev;
  node.prev = kNone;
  node.sibling = kNone;
}

void PutativeQueue::push(ClockId clock, double time) {
  auto i = index_of(clock);
  if (i >= nodes_.size()) nodes_.resize(i + 1);
  Node& node = nodes_[i];
  if (node.member) throw std::logic_error("PutativeQueue::push: clock already queued");
  node = Node{time, kNone, kNone, kNone, true};
  root_ = meld(root_, static_cast<std::int32_t>(i));
  ++size_;
}

void PutativeQueue::update(ClockId clock, double time) {
  auto n = static_cast<std::int32_t>(index_of(clock));
  if (!contains(clock)) throw std::logic_error("PutativeQueue::update: clock not queued");
  double old = nodes_[n].time;
  if (time <= old) {
    nodes_[n].time = time;
    if (n != root_) {
      cut(n);
      root_ = meld(root_, n);
    }
    return;
  }
  erase(clock);
  push(clock, time);
}

void PutativeQueue::erase(ClockId clock) {
  auto n = static_cast<std::int32_t>(index_of(clock));
  if (!contains(clock)) throw std::logic_error("PutativeQueue::erase: clock not queued");
  if (n == root_) {
    pop();
    return;
  }
  cut(n);
  std::int32_t sub = merge_pairs(nodes_[n].child);
  nodes_[n] = Node{};
  root_ = meld(root_, sub);
  --size_;
}

PutativeQueue::Entry PutativeQueue::top() const {
  if (root_ == kNone) throw std::logic_error("PutativeQueue::top on empty queue");
  return {clock_id(static_cast<std::size_t>(root_)), nodes_[root_].time};
}

PutativeQueue::Entry PutativeQueue::pop() {
  Entry result = top();
  std::int32_t old = root_;
  root_ = merge_pairs(nodes_[old].child);
  nodes_[old] = Node{};
  --size_;
  return result;
}

std::vector<ClockId> PutativeQueue::members() const {
  std::vector<ClockId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].member) out.push_back(clock_id(i));
  }
  return out;
}

bool PutativeQueue::check_subtree(std::int32_t n, std::size_t& count) const {
  std::int32_t prev = n;
  for (std::int32_t c = nodes_[n].child; c != kNone; c = nodes_[c].sibling) {
    if (!nodes_[c].member || nodes_[c].prev != prev || before(c, n)) return false;
    ++count;
    if (!check_subtree(c, count)) return false;
    prev = c;
  }
  return true;
}

bool PutativeQueue::check_invariants() const {
  if (root_ == kNone) return size_ == 0;
  if (nodes_[root_].prev != kNone || nodes_[root_].sibling != kNone) return false;
  std::size_t count = 1;
  if (!check_subtree(root_, count)) return false;
  return count == size_ && members().size() == size_;
}

}  // namespace ctde
