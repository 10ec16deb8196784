#include "ctde/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ctde/models.hpp"

namespace ctde {

namespace {

constexpr double kAlpha = 0.01;

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

CheckResult check(std::string suite, std::string name, bool passed, std::string measured,
                  double p_value = -1.0) {
  return {std::move(suite), std::move(name), passed, std::move(measured), p_value};
}

std::vector<double> uniforms(Rng& rng, std::size_t n) {
  std::vector<double> u(n);
  for (double& x : u) x = rng.uniform();
  return u;
}

void distributions(const SuiteOptions& options, std::vector<CheckResult>& out) {
  const std::string suite = "distributions";
  const std::vector<std::string> families{
      "Exponential(1.5)",
      "Weibull(2, 1)",
      "Weibull(0.7, 2)",
      "Gamma(2.5, 1.2)",
      "UniformInterval(0.5, 2)",
      "PiecewiseConstant(0:1, 1:3, 2:0.5)",
      "Weibull(2, 1) + Atom(0.5, 0.3) + Atom(1, 0.4)",
      "Exponential(0.5) + Atom(1, 1)",
  };
  Rng rng(stream_seed(options.seed, 1));
  for (const auto& text : families) {
    const HazardSpec spec = parse_hazard(text);
    std::vector<double> draws;
    double worst = 0.0;
    for (double u : uniforms(rng, options.samples)) {
      FirstDraw d = sample_first(spec, u);
      draws.push_back(d.duration);
      if (std::isfinite(d.duration)) {
        // The time process reaches the drawn budget exactly at the draw,
        // or jumps across it at an atom.
        double reached = time_process(spec, 0.0, d.duration);
        double before = time_process(spec, 0.0, std::nextafter(d.duration, 0.0));
        double budget = -d.log_survival;
        if (budget > reached + 1e-9 * std::max(1.0, budget) || budget < before - 1e-9 * std::max(1.0, budget)) {
          worst = std::max(worst, std::min(std::abs(budget - reached), std::abs(budget - before)));
        }
      }
    }
    std::sort(draws.begin(), draws.end());
    auto ks = ks_statistic(draws, [&](double t) { return 1.0 - survival(spec, t); });
    out.push_back(check(suite, text + " sampling KS", ks.p_value > kAlpha,
                        fmt("D=%.5f", ks.statistic), ks.p_value));
    out.push_back(check(suite, text + " inversion round trip", worst <= 1e-9,
                        fmt("max budget error %.3g (bound 1e-9)", worst)));
  }

  // Conditional draws given survival to the shift.
  {
    const HazardSpec spec = parse_hazard("Weibull(2, 1) + Atom(1.2, 0.5)");
    const double shift = 0.7;
    std::vector<double> draws;
    for (double u : uniforms(rng, options.samples)) {
      draws.push_back(invert_conditional(spec, shift, std::log1p(-u)));
    }
    std::sort(draws.begin(), draws.end());
    const double base = survival(spec, shift);
    auto ks = ks_statistic(draws, [&](double t) { return 1.0 - survival(spec, t) / base; });
    out.push_back(check(suite, "conditional Weibull + atom from 0.7 KS", ks.p_value > kAlpha,
                        fmt("D=%.5f", ks.statistic), ks.p_value));
  }

  // Nelson-Aalen round trip of the Weibull(2, 1) cumulative hazard t^2.
  {
    const HazardSpec spec = HazardSpec::weibull(2.0, 1.0);
    std::vector<CensoredSample> samples;
    for (double u : uniforms(rng, std::max<std::size_t>(options.samples, 100000))) {
      samples.push_back({sample_first(spec, u).duration, true});
    }
    StepFunction h = nelson_aalen(samples);
    double worst = 0.0;
    for (std::size_t i = 0; i < h.breakpoints.size() && h.breakpoints[i] <= 1.0; ++i) {
      const double t = h.breakpoints[i];
      worst = std::max(worst, std::abs(h.values[i] - t * t));
      if (i > 0) worst = std::max(worst, std::abs(h.values[i - 1] - t * t));
    }
    worst = std::max(worst, std::abs(h(1.0) - 1.0));
    out.push_back(check(suite, "Nelson-Aalen Weibull(2, 1) sup error on [0, 1]", worst < 0.05,
                        fmt("%.4f (bound 0.05)", worst)));
  }
}

void equivalence(const SuiteOptions& options, std::vector<CheckResult>& out) {
  const std::string suite = "sampler-equivalence";
  struct Case {
    std::string label;
    Model model;
    std::size_t k;
  };
  const std::vector<Case> cases{
      {"race", build_race({parse_hazard("Exponential(1)"), parse_hazard("Weibull(2, 1)"),
                           parse_hazard("Weibull(1.5, 0.8) + Atom(0.6, 0.3)")}),
       1},
      {"sir N=10 Weibull recovery, event 3",
       build_sir(10, HazardSpec::exponential(0.3), HazardSpec::weibull(2.0, 1.0)), 3},
      {"atomic showcase", build_atomic_showcase(), 1},
  };
  const std::vector<SamplerSpec> samplers{{"next-reaction", {}},
                                          {"next-to-fire", {}},
                                          {"direct", {}},
                                          {"hierarchical", {}}};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Case& item = cases[c];
    const std::size_t clocks = item.model.clocks().size();
    auto reference = sample_kth_event(item.model, {"first-reaction", {}}, options.samples, item.k,
                                      stream_seed(options.seed, 100 + c));
    for (std::size_t s = 0; s < samplers.size(); ++s) {
      auto other = sample_kth_event(item.model, samplers[s], options.samples, item.k,
                                    stream_seed(options.seed, 200 + 10 * c + s));
      Equivalence eq = compare_samples(reference, other, clocks);
      std::string name = item.label + ": " + samplers[s].name + " vs first-reaction";
      out.push_back(check(suite, name + " marks", eq.marks.p_value > kAlpha,
                          fmt("chi2=%.3f", eq.marks.statistic), eq.marks.p_value));
      out.push_back(check(suite, name + " times", eq.times.p_value > kAlpha,
                          fmt("D=%.5f", eq.times.statistic), eq.times.p_value));
    }
  }
}

void oracles(const SuiteOptions& options, std::vector<CheckResult>& out) {
  const std::string suite = "oracle";
  {
    const Model model = build_atomic_showcase();
    const std::size_t n = std::max<std::size_t>(options.samples / 2, 10000);
    auto samples = sample_kth_event(model, {"direct", {}}, n, 1, stream_seed(options.seed, 300));
    double b = 0;
    for (const auto& s : samples) b += (s.clock == clock_id(1)) ? 1.0 : 0.0;
    const double p = b / double(n);
    const double se = std::sqrt(0.25 * 0.75 / double(n));
    const double z = (p - 0.25) / se;
    const double p_value = std::erfc(std::abs(z) / std::numbers::sqrt2);
    out.push_back(check(suite, "atomic showcase P(B fires) vs 0.25",
                        std::abs(p - 0.25) <= 0.01 && p_value > kAlpha,
                        fmt("%.4f (tolerance 0.01)", p), p_value));

    const std::vector<std::pair<HazardSpec, double>> clocks{
        {HazardSpec::exponential(std::numbers::ln2), 0.0},
        {HazardSpec::atoms_only({{1.0, 0.5}}), 0.0}};
    CifResult cif = cif_numeric(clocks, 1e-4, 30.0);
    const double b_inf = cif.incidence[1].values.back();
    const double a_inf = cif.incidence[0].values.back();
    out.push_back(check(suite, "numeric incidence of B at infinity vs 0.25",
                        std::abs(b_inf - 0.25) < 1e-4, fmt("%.6f (A: %.6f)", b_inf, a_inf)));
  }
  const std::size_t n = std::max<std::size_t>(options.samples / 2, 10000);
  {
    const Model model = build_sir(3, HazardSpec::exponential(1.0), HazardSpec::exponential(1.0));
    const double horizon = 1.0;
    Occupancy exact = project(ctmc_oracle(model, horizon), aggregate_by_prefix);
    Occupancy seen = empirical_occupancy(model, {"direct", {}}, n, horizon,
                                         stream_seed(options.seed, 301), aggregate_by_prefix);
    const double tv = total_variation(exact, seen);
    out.push_back(check(suite, "exponential SIR N=3 occupancy at t=1 vs CTMC", tv < 0.02,
                        fmt("TV=%.4f (bound 0.02)", tv)));
  }
  {
    const Model model = build_birth_death(1.0, 1.0, 1, 100);
    const double horizon = 1.0;
    auto identity = [](const SystemState& s) { return s; };
    Occupancy exact = ctmc_oracle(model, horizon);
    Occupancy seen =
        empirical_occupancy(model, {"next-reaction", {}}, n, horizon, stream_seed(options.seed, 302), identity);
    const double tv = total_variation(exact, seen);
    out.push_back(check(suite, "birth-death occupancy at t=1 vs CTMC", tv < 0.02,
                        fmt("TV=%.4f (bound 0.02)", tv)));
  }
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"distributions", "sampler-equivalence", "oracle", "all"};
  return names;
}

std::vector<CheckResult> run_suite(std::string_view name, const SuiteOptions& options) {
  std::vector<CheckResult> out;
  if (name == "distributions" || name == "all") distributions(options, out);
  if (name == "sampler-equivalence" || name == "all") equivalence(options, out);
  if (name == "oracle" || name == "all") oracles(options, out);
  if (out.empty()) {
    throw std::invalid_argument("unknown suite '" + std::string(name) +
                                "'; valid suites: distributions, sampler-equivalence, oracle, all");
  }
  return out;
}

std::vector<EventSample> sample_kth_event(const Model& model, const SamplerSpec& sampler,
                                          std::size_t count, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("event index is 1-based");
  std::vector<EventSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Simulation sim(model, make_sampler(sampler), stream_seed(seed, i));
    EventSample sample;
    while (sim.events().size() < k) {
      if (sim.step() != Simulation::Outcome::Fired) break;
    }
    if (sim.events().size() == k) {
      sample.clock = sim.events().back().clock;
      sample.time = sim.events().back().time;
    } else {
      sample.time = sim.now();
    }
    out.push_back(sample);
  }
  return out;
}

Equivalence compare_samples(const std::vector<EventSample>& a, const std::vector<EventSample>& b,
                            std::size_t clock_count) {
  std::vector<double> ca(clock_count + 1, 0.0), cb(clock_count + 1, 0.0);
  std::vector<double> ta, tb;
  for (const auto& s : a) {
    ca[s.clock ? index_of(*s.clock) : clock_count] += 1.0;
    if (s.clock) ta.push_back(s.time);
  }
  for (const auto& s : b) {
    cb[s.clock ? index_of(*s.clock) : clock_count] += 1.0;
    if (s.clock) tb.push_back(s.time);
  }
  Equivalence eq;
  std::size_t populated = 0;
  for (std::size_t i = 0; i <= clock_count; ++i) populated += (ca[i] + cb[i] > 0.0) ? 1 : 0;
  if (populated >= 2) eq.marks = chi_square_homogeneity(ca, cb);
  eq.times = ks_two_sample(std::move(ta), std::move(tb));
  return eq;
}

Occupancy empirical_occupancy(const Model& model, const SamplerSpec& sampler, std::size_t count,
                              double horizon, std::uint64_t seed,
                              const std::function<SystemState(const SystemState&)>& projection) {
  Occupancy out;
  for (std::size_t i = 0; i < count; ++i) {
    Simulation sim(model, make_sampler(sampler), stream_seed(seed, i));
    while (sim.step(horizon) == Simulation::Outcome::Fired) {
    }
    out[projection(sim.state())] += 1.0 / double(count);
  }
  return out;
}

Occupancy project(const Occupancy& occupancy,
                  const std::function<SystemState(const SystemState&)>& projection) {
  Occupancy out;
  for (const auto& [state, p] : occupancy) out[projection(state)] += p;
  return out;
}

SystemState aggregate_by_prefix(const SystemState& state) {
  SystemState out;
  for (const auto& [key, count] : state.entries()) {
    std::string prefix = key.substr(0, key.find(':'));
    out.set(prefix, out.count(prefix) + count);
  }
  return out;
}

}  // namespace ctde
