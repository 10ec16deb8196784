#pragma once

// Complete binary tree of partial sums over non-negative weights. Every
// internal node is recomputed from its two children on update, so the root
// is always the same fixed-association sum of the leaves.

#include <cstddef>
#include <vector>

namespace ctde {

class PrefixSumTree {
 public:
  explicit PrefixSumTree(std::size_t size = 0) { resize(size); }

  std::size_t size() const { return size_; }
  // Grows (never shrinks); new leaves are zero.
  void resize(std::size_t size);

  void set(std::size_t index, double weight);
  double value(std::size_t index) const { return nodes_[capacity_ + index]; }
  double total() const { return capacity_ ? nodes_[1] : 0.0; }

  // Smallest index i with target <= w_0 + ... + w_i, skipping zero-weight
  // leaves. Requires 0 < target <= total().
  std::size_t find(double target) const;

 private:
  std::size_t size_ = 0;
  std::size_t capacity_ = 0;
  std::vector<double> nodes_;
};

}  // namespace ctde
