#pragma once

// Built-in models, addressable by name with string parameters.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctde/kernel.hpp"

namespace ctde {

// Invalid model name or parameter; `field` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ParamInfo {
  std::string name;
  std::string default_value;
  std::string description;
};

struct ModelInfo {
  std::string name;
  std::string description;
  std::vector<ParamInfo> params;
};

const std::vector<ModelInfo>& model_catalog();

// Fills defaults for missing parameters and validates. Throws ConfigError.
Model build_model(const std::string& name, const ParamMap& params = {});

// Individuals 0..n-1 with substates S:k, I:k, R:k. Clocks: recovery k
// (ids 0..n-1), then infection i->k for each ordered pair i != k.
Model build_sir(int n, const HazardSpec& infect, const HazardSpec& recover, int initial_infected = 1);

struct RabbitsConfig {
  int rabbits = 1;
  double food_rate = 1.0;
  std::vector<int> portions{1};
  // Weibull scale after a meal of size d is scale_per_portion * d; before
  // the first meal it is first_scale.
  double scale_per_portion = 1.0;
  double first_scale = 1.0;
  std::int64_t initial_food = 0;
};
// Clock 0 produces food; clock 1 + m*K + k is rabbit m eating portion k.
Model build_rabbits(const RabbitsConfig& config);

// Per-capita birth and death on X; births stop at `cap`.
Model build_birth_death(double birth, double death, std::int64_t initial, std::int64_t cap);

// Clock 0 (A): Exponential(ln 2). Clock 1 (B): one atom of mass 1/2 at
// offset 1. Both enabled at 0; whichever fires first disables the other.
Model build_atomic_showcase();

Model build_poisson(double rate);

// Single-shot race: the first clock to fire disarms all the others.
Model build_race(const std::vector<HazardSpec>& specs);

// Tokens move around a ring of m sites; clock i fires at rate
// rate * x:i and moves one token from site i to site i+1.
Model build_ring(std::size_t m, double rate, std::int64_t tokens_per_site = 1);

// k clocks that all read and write `n`; every event changes the Weibull
// scale of every clock, and atoms come and go with the parity of n + j.
Model build_modulated(std::size_t k);

// One walker on the integers; the two step clocks at each position are
// instantiated when the walker first reaches it.
Model build_random_walk(double left_rate, double right_rate);

}  // namespace ctde
