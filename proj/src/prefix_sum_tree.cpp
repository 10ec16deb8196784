#include "ctde/prefix_sum_tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace ctde {

void PrefixSumTree::resize(std::size_t size) {
  if (size <= size_) return;
  std::size_t capacity = capacity_ ? capacity_ : 1;
  while (capacity < size) capacity *= 2;
  if (capacity != capacity_) {
    std::vector<double> nodes(2 * capacity, 0.0);
    for (std::size_t i = 0; i < size_; ++i) nodes[capacity + i] = nodes_[capacity_ + i];
    for (std::size_t n = capacity - 1; n >= 1; --n) nodes[n] = nodes[2 * n] + nodes[2 * n + 1];
    nodes_ = std::move(nodes);
    capacity_ = capacity;
  }
  size_ = size;
}

void PrefixSumTree::set(std::size_t index, double weight) {
  if (index >= size_) throw std::out_of_range("PrefixSumTree::set index");
  if (!(weight >= 0.0)) throw std::invalid_argument("PrefixSumTree weights must be >= 0");
  std::size_t n = capacity_ + index;
  nodes_[n] = weight;
  for (n /= 2; n >= 1; n /= 2) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
}

std::size_t PrefixSumTree::find(double target) const {
  if (size_ == 0 || !(total() > 0.0)) throw std::logic_error("PrefixSumTree::find on zero total");
  std::size_t n = 1;
  while (n < capacity_) {
    double left = nodes_[2 * n];
    if (target <= left) {
      n = 2 * n;
    } else {
      target -= left;
      n = 2 * n + 1;
    }
  }
  std::size_t index = n - capacity_;
  // Rounding in the descent can land on an empty leaf at a bracket edge.
  if (index >= size_ || nodes_[n] == 0.0) {
    std::size_t i = std::min(index, size_ - 1);
    while (i > 0 && value(i) == 0.0) --i;
    if (value(i) == 0.0) {
      while (i < size_ && value(i) == 0.0) ++i;
    }
    index = i;
  }
  return index;
}

}  // namespace ctde
