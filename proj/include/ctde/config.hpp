#pragma once

// Run configuration read from a YAML file:
//
//   model:
//     name: sir
//     params: {N: 10, recover: "Weibull(2, 1)"}
//   sampler:
//     name: hierarchical
//     partition: {Exponential: direct, default: next-reaction}
//   seed: 7
//   trajectories: 100
//   stop: {t_end: 5}          # or {max_events: 1000} or {stalled: true}
//   output: runs/sir
//   workers: 4

#include <cstdint>
#include <string>

#include "ctde/kernel.hpp"
#include "ctde/models.hpp"

namespace ctde {

struct RunSpec {
  std::string model;
  ParamMap params;
  SamplerSpec sampler;
  std::uint64_t seed = 1;
  std::size_t trajectories = 1;
  StopCondition stop = EndTime{10.0};
  std::string output = "out";
  unsigned workers = 1;

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

// Throws ConfigError whose field names the entry and its line.
RunSpec parse_run_spec(const std::string& yaml);
RunSpec load_run_spec(const std::string& path);
std::string dump_run_spec(const RunSpec& spec);

// Checks the sampler, stop condition, counts and model parameters without
// simulating. Throws ConfigError.
void validate(const RunSpec& spec);

}  // namespace ctde
