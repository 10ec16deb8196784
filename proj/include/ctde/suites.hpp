#pragma once

// Statistical verification suites run by `ctde verify` and the acceptance
// tests.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ctde/kernel.hpp"
#include "ctde/verify.hpp"

namespace ctde {

struct CheckResult {
  std::string suite;
  std::string check;
  bool passed = false;
  // Measured value and the bound it was held to, human readable.
  std::string measured;
  double p_value = -1.0;  // negative when the check has none
};

struct SuiteOptions {
  std::uint64_t seed = 20240611;
  std::size_t samples = 20000;
};

const std::vector<std::string>& suite_names();

// Runs one suite, or every suite for "all". Throws std::invalid_argument for
// an unknown name.
std::vector<CheckResult> run_suite(std::string_view name, const SuiteOptions& options = {});

// The event with 1-based index `k` of independent trajectories from the
// model's initial state; `clock` is absent when the trajectory stalled first.
struct EventSample {
  std::optional<ClockId> clock;
  double time = 0.0;
};
std::vector<EventSample> sample_kth_event(const Model& model, const SamplerSpec& sampler,
                                          std::size_t count, std::size_t k, std::uint64_t seed);

struct Equivalence {
  TestResult marks;  // homogeneity of fired clock (stalled as its own cell)
  TestResult times;  // two-sample KS on event times of non-stalled samples
};
Equivalence compare_samples(const std::vector<EventSample>& a, const std::vector<EventSample>& b,
                            std::size_t clock_count);

// Empirical distribution of a projection of the state at `horizon`.
Occupancy empirical_occupancy(const Model& model, const SamplerSpec& sampler, std::size_t count,
                              double horizon, std::uint64_t seed,
                              const std::function<SystemState(const SystemState&)>& project);
Occupancy project(const Occupancy& occupancy,
                  const std::function<SystemState(const SystemState&)>& project);

// Sums counts of keys sharing the text before the first ':' (S:3 -> S).
SystemState aggregate_by_prefix(const SystemState& state);

}  // namespace ctde
