#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ctde/models.hpp"
#include "ctde/verify.hpp"
#include "doctest.h"

using namespace ctde;

namespace {

// Dense forward-equation solution for birth-death by classical RK4.
std::vector<double> birth_death_rk4(double birth, double death, int cap, int initial, double horizon,
                                    int steps) {
  const int n = cap + 1;
  auto derivative = [&](const std::vector<double>& p) {
    std::vector<double> d(n, 0.0);
    for (int x = 0; x < n; ++x) {
      const double up = x < cap ? birth * x : 0.0;
      const double down = death * x;
      d[x] -= (up + down) * p[x];
      if (x < cap) d[x + 1] += up * p[x];
      if (x > 0) d[x - 1] += down * p[x];
    }
    return d;
  };
  std::vector<double> p(n, 0.0);
  p[initial] = 1.0;
  const double h = horizon / steps;
  for (int s = 0; s < steps; ++s) {
    auto k1 = derivative(p);
    std::vector<double> tmp(n);
    for (int i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
    auto k2 = derivative(tmp);
    for (int i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
    auto k3 = derivative(tmp);
    for (int i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
    auto k4 = derivative(tmp);
    for (int i = 0; i < n; ++i) p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return p;
}

double occupancy_of(const Occupancy& occ, const SystemState& s) {
  auto it = occ.find(s);
  return it == occ.end() ? 0.0 : it->second;
}

double mass(const Occupancy& occ) {
  double total = 0.0;
  for (const auto& [s, p] : occ) total += p;
  return total;
}

}  // namespace

TEST_CASE("Nelson-Aalen examples") {
  std::vector<CensoredSample> two{{1.0, true}, {2.0, true}};
  StepFunction h = nelson_aalen(two);
  CHECK(h(0.5) == 0.0);
  CHECK(h(1.0) == doctest::Approx(0.5));
  CHECK(h(2.0) == doctest::Approx(1.5));

  std::vector<CensoredSample> censored{{1.0, false}, {2.0, false}, {3.0, false}};
  StepFunction zero = nelson_aalen(censored);
  for (double t : {0.0, 1.5, 10.0}) CHECK(zero(t) == 0.0);

  // Ties and censoring: at t=1 two of four fail; one is censored at 1.5;
  // at t=2 one of the remaining one fails.
  std::vector<CensoredSample> mixed{{1.0, true}, {1.0, true}, {1.5, false}, {2.0, true}};
  StepFunction m = nelson_aalen(mixed);
  CHECK(m(1.0) == doctest::Approx(0.5));
  CHECK(m(2.0) == doctest::Approx(1.5));
  CHECK_THROWS_AS(nelson_aalen(std::vector<CensoredSample>{}), InsufficientData);
}

TEST_CASE("Nelson-Aalen recovers the unit exponential cumulative hazard") {
  Rng rng(2718);
  std::vector<CensoredSample> samples;
  for (int i = 0; i < 100000; ++i) {
    samples.push_back({sample_first(HazardSpec::exponential(1.0), rng.uniform()).duration, true});
  }
  StepFunction h = nelson_aalen(samples);
  double worst = std::abs(h(1.0) - 1.0);
  for (double t : h.breakpoints) {
    if (t > 1.0) break;
    worst = std::max(worst, std::abs(h(t) - t));
    worst = std::max(worst, std::abs(h(std::nextafter(t, 0.0)) - t));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("numeric incidence examples") {
  const std::vector<std::pair<HazardSpec, double>> one{{HazardSpec::exponential(1.0), 0.0}};
  CifResult single = cif_numeric(one, 1e-3, 40.0);
  CHECK(std::abs(single.survival(1.0) - std::exp(-1.0)) < 1e-4);
  CHECK(std::abs(single.incidence[0].values.back() - 1.0) < 1e-4);

  const std::vector<std::pair<HazardSpec, double>> showcase{
      {HazardSpec::exponential(std::numbers::ln2), 0.0}, {HazardSpec::atoms_only({{1.0, 0.5}}), 0.0}};
  CifResult atomic = cif_numeric(showcase, 1e-3, 40.0);
  CHECK(std::abs(atomic.incidence[1].values.back() - 0.25) < 1e-4);
  CHECK(std::abs(atomic.incidence[0].values.back() - 0.75) < 1e-4);
  // Total survival at the grid point before the atom and at the atom.
  CHECK(std::abs(atomic.survival(0.999) - std::exp2(-0.999)) < 1e-6);
  CHECK(std::abs(atomic.survival(1.0) - 0.25) < 1e-4);

  const std::vector<std::pair<HazardSpec, double>> pair{{HazardSpec::exponential(1.0), 0.0},
                                                        {HazardSpec::exponential(2.0), 0.0}};
  CifResult two = cif_numeric(pair, 1e-3, 40.0);
  CHECK(std::abs(two.incidence[1].values.back() - 2.0 / 3.0) < 1e-4);
}

TEST_CASE("numeric incidence conserves probability and converges") {
  // Weibull(2, 1) racing Exponential(1); the exponential's incidence is
  // e^{1/4} sqrt(pi)/2 (erf(t + 1/2) - erf(1/2)).
  const std::vector<std::pair<HazardSpec, double>> clocks{{HazardSpec::weibull(2.0, 1.0), 0.0},
                                                          {HazardSpec::exponential(1.0), 0.0}};
  auto exact = [](double t) {
    return std::exp(0.25) * std::sqrt(std::numbers::pi) / 2.0 * (std::erf(t + 0.5) - std::erf(0.5));
  };
  auto max_error = [&](double step) {
    CifResult r = cif_numeric(clocks, step, 3.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.survival.breakpoints.size(); ++i) {
      const double t = r.survival.breakpoints[i];
      const double total = r.survival(t) + r.incidence[0](t) + r.incidence[1](t);
      CHECK(std::abs(total - 1.0) <= 2.0 * step * 7.0);
      worst = std::max(worst, std::abs(r.incidence[1](t) - exact(t)));
    }
    return worst;
  };
  const double coarse = max_error(0.02);
  const double fine = max_error(0.01);
  CHECK(fine > 0.0);
  CHECK(coarse / fine > 1.8);
}

TEST_CASE("CTMC oracle against an RK4 solution with step halving") {
  const Model model = build_birth_death(1.0, 1.0, 1, 100);
  Occupancy oracle = ctmc_oracle(model, 1.0);
  CHECK(mass(oracle) == doctest::Approx(1.0).epsilon(1e-8));
  auto coarse = birth_death_rk4(1.0, 1.0, 100, 1, 1.0, 200);
  auto fine = birth_death_rk4(1.0, 1.0, 100, 1, 1.0, 400);
  for (int x = 0; x <= 100; ++x) {
    CAPTURE(x);
    CHECK(std::abs(coarse[x] - fine[x]) < 1e-9);
    SystemState s;
    s.set("X", x);
    CHECK(std::abs(occupancy_of(oracle, s) - fine[x]) < 1e-8);
  }
  // Frozen extinction probability at t = 1: t / (1 + t) for equal rates.
  CHECK(occupancy_of(oracle, SystemState{}) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("CTMC oracle edge cases") {
  const Model sir = build_sir(3, HazardSpec::exponential(1.0), HazardSpec::exponential(1.0));
  Occupancy at_zero = ctmc_oracle(sir, 0.0);
  REQUIRE(at_zero.size() == 1);
  CHECK(at_zero.begin()->first == sir.initial_state());
  CHECK(at_zero.begin()->second == doctest::Approx(1.0));

  Occupancy late = ctmc_oracle(sir, 60.0);
  double absorbed = 0.0;
  for (const auto& [s, p] : late) {
    bool any_infectious = false;
    for (const auto& [key, count] : s.entries()) any_infectious |= key.rfind("I:", 0) == 0;
    if (!any_infectious) absorbed += p;
  }
  CHECK(std::abs(absorbed - 1.0) < 1e-8);
  CHECK(std::abs(mass(ctmc_oracle(sir, 1.0)) - 1.0) < 1e-8);

  CHECK_THROWS_AS(ctmc_oracle(build_birth_death(1.0, 1.0, 1, 100000), 1.0, 50), StateSpaceTooLarge);
  CHECK_THROWS_AS(
      ctmc_oracle(build_sir(2, HazardSpec::exponential(1.0), HazardSpec::weibull(2.0, 1.0)), 1.0),
      NonExponentialClock);
}

TEST_CASE("total variation") {
  Occupancy a{{SystemState{{"x", 1}}, 0.5}, {SystemState{{"x", 2}}, 0.5}};
  Occupancy b{{SystemState{{"x", 1}}, 0.2}, {SystemState{{"x", 3}}, 0.8}};
  CHECK(total_variation(a, b) == doctest::Approx(0.8));
  CHECK(total_variation(a, a) == 0.0);
}

TEST_CASE("Kolmogorov tail values") {
  CHECK(kolmogorov_tail(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_tail(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_tail(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-10));
  CHECK(kolmogorov_tail(1.63) == doctest::Approx(0.009846364888486529).epsilon(1e-10));
  CHECK(kolmogorov_tail(0.0) == 1.0);
}

TEST_CASE("KS statistic is zero when the cdf is the empirical step function") {
  std::vector<double> x;
  for (int i = 1; i <= 10; ++i) x.push_back(i);
  TestResult r = ks_statistic(x, [](double t) { return std::clamp(std::floor(t), 0.0, 10.0) / 10.0; });
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(1.0));
  TestResult shifted = ks_statistic(x, [](double t) { return std::clamp(t / 20.0, 0.0, 1.0); });
  CHECK(shifted.statistic == doctest::Approx(0.5));
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{1.0, 2.0}, [](double) { return 0.5; }),
                  InsufficientData);
}

TEST_CASE("KS p-values are uniform for samples from their own cdf") {
  Rng rng(1234);
  std::vector<double> p_values;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> x;
    for (int i = 0; i < 100; ++i) x.push_back(-std::log1p(-rng.uniform()));
    std::sort(x.begin(), x.end());
    p_values.push_back(ks_statistic(x, [](double t) { return t > 0 ? -std::expm1(-t) : 0.0; }).p_value);
  }
  std::sort(p_values.begin(), p_values.end());
  CHECK(ks_statistic(p_values, [](double p) { return std::clamp(p, 0.0, 1.0); }).p_value > 0.01);
}

TEST_CASE("two-sample KS") {
  std::vector<double> a, b;
  for (int i = 1; i <= 10; ++i) {
    a.push_back(i);
    b.push_back(i + 10);
  }
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == doctest::Approx(1.0));
  TestResult apart = ks_two_sample(a, b);
  CHECK(apart.statistic == 1.0);
  CHECK(apart.p_value < 1e-3);
}

TEST_CASE("chi-square goodness of fit") {
  const std::vector<double> even{0.5, 0.5};
  TestResult same = chi_square(std::vector<double>{50, 50}, even);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));
  TestResult off = chi_square(std::vector<double>{30, 70}, even);
  CHECK(off.statistic == doctest::Approx(16.0));
  CHECK(off.p_value == doctest::Approx(6.334248366623977e-05).epsilon(1e-9));
  // The last two cells expect 1 and 1 and are merged into the third.
  TestResult merged = chi_square(std::vector<double>{40, 40, 18, 1, 1},
                                 std::vector<double>{0.4, 0.4, 0.18, 0.01, 0.01});
  CHECK(merged.statistic == doctest::Approx(0.0));
  CHECK_THROWS_AS(chi_square(std::vector<double>{3}, std::vector<double>{1.0}), InsufficientData);
}

TEST_CASE("chi-square homogeneity") {
  const std::vector<double> a{120, 80, 40};
  CHECK(chi_square_homogeneity(a, a).statistic == 0.0);
  TestResult far = chi_square_homogeneity(a, std::vector<double>{40, 80, 120});
  CHECK(far.p_value < 1e-10);
}
