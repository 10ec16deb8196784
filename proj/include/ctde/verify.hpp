#pragma once

// Estimators, goodness-of-fit tests and exact oracles used to check the
// samplers.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctde/hazard.hpp"
#include "ctde/kernel.hpp"

namespace ctde {

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StateSpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonExponentialClock : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Right-continuous step function; zero before the first breakpoint.
struct StepFunction {
  std::vector<double> breakpoints;
  std::vector<double> values;

  double operator()(double t) const;
};

struct CensoredSample {
  double duration = 0.0;
  bool observed = true;
};

// Cumulative hazard estimate: sum over event times t <= s of
// (events at t) / (number at risk just before t). Throws InsufficientData
// when empty.
StepFunction nelson_aalen(std::span<const CensoredSample> samples);

struct CifResult {
  StepFunction survival;
  std::vector<StepFunction> incidence;
};

// Survival of the race and per-clock cumulative incidence on [0, horizon]
// for clocks enabled at the given times (<= 0). Continuous parts are
// integrated by the trapezoid rule on a grid refined to include every atom;
// an atom of clock j at t adds S(t-) * mass to clock j's incidence and
// multiplies the survival by (1 - mass).
CifResult cif_numeric(std::span<const std::pair<HazardSpec, double>> clocks, double grid_step,
                      double horizon);

using Occupancy = std::map<SystemState, double>;

// Distribution of the state at `horizon` for a model whose enabled clocks
// are all atomless Exponentials, by breadth-first enumeration and
// uniformization with truncation error below 1e-8.
Occupancy ctmc_oracle(const Model& model, double horizon, std::size_t max_states = 10000);

double total_variation(const Occupancy& a, const Occupancy& b);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic Kolmogorov tail probability of sqrt(n)-scaled statistic.
double kolmogorov_tail(double lambda);

// One-sample Kolmogorov-Smirnov with the cdf's left limits honoured, so a
// step cdf equal to the empirical one gives 0. Needs n >= 10.
TestResult ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Pearson goodness of fit. Adjacent cells are merged until each expected
// count is at least 5; needs two cells after merging.
TestResult chi_square(std::span<const double> observed, std::span<const double> probabilities);

// Pearson homogeneity test between two count vectors over the same cells,
// merging adjacent cells with pooled count below 10.
TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b);

}  // namespace ctde
