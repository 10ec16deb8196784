#include <algorithm>
#include <cmath>

#include "ctde/kernel.hpp"
#include "ctde/models.hpp"
#include "ctde/verify.hpp"
#include "doctest.h"

using namespace ctde;

TEST_CASE("two-person SIR infects the second individual half the time") {
  const Model sir = build_sir(2, HazardSpec::exponential(1.0), HazardSpec::exponential(1.0));
  const std::size_t n = 20000;
  auto runs = run_ensemble(sir, {"direct", {}}, 808, n, StalledOnly{});
  double infected = 0.0;
  for (const auto& t : runs) {
    bool second = std::any_of(t.events.begin(), t.events.end(),
                              [](const EventRecord& e) { return e.clock == clock_id(2); });
    infected += second ? 1.0 : 0.0;
  }
  const double p = infected / double(n);
  CHECK(std::abs(p - 0.5) <= 4.0 * std::sqrt(0.25 / double(n)));
}

TEST_CASE("Weibull recovery is timed from the infection") {
  const std::size_t n = 5;
  const Model sir = build_sir(int(n), HazardSpec::exponential(1.5), HazardSpec::weibull(2.0, 1.0));
  Simulation sim(sir, make_sampler({"next-reaction", {}}), 31);
  std::vector<double> infected_at(n, -1.0);
  infected_at[0] = 0.0;
  int checked = 0;
  while (sim.step() == Simulation::Outcome::Fired) {
    const EventRecord& e = sim.events().back();
    const std::string& name = sim.registry().clock(e.clock).name;
    if (name.rfind("infect:", 0) == 0) {
      infected_at[std::stoul(name.substr(name.find('>') + 1))] = e.time;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (sim.state().count("I:" + std::to_string(k)) == 0) continue;
      const auto& outcome = std::get<Enabled>(sim.outcome(clock_id(k)));
      CHECK(outcome.enabling_time == infected_at[k]);
      CHECK(outcome.spec == HazardSpec::weibull(2.0, 1.0));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("rabbits food bookkeeping") {
  RabbitsConfig config;
  config.rabbits = 3;
  config.food_rate = 2.0;
  config.portions = {1, 3};
  config.initial_food = 4;
  const Model rabbits = build_rabbits(config);
  Trajectory t = run_trajectory(rabbits, {"next-reaction", {}}, 12, EndTime{40.0}, {.audit = true});
  std::int64_t produced = 0;
  std::int64_t eaten = 0;
  for (const auto& e : t.events) {
    const auto id = index_of(e.clock);
    if (id == 0) {
      ++produced;
    } else {
      eaten += config.portions[(id - 1) % config.portions.size()];
    }
  }
  CHECK(eaten > 0);
  CHECK(replay(rabbits, t).back().count("food") == config.initial_food + produced - eaten);
}

TEST_CASE("rabbits without food cannot eat") {
  RabbitsConfig config;
  config.rabbits = 2;
  config.portions = {1, 2};
  const Model rabbits = build_rabbits(config);
  Simulation sim(rabbits, make_sampler({"direct", {}}), 1);
  CHECK(std::holds_alternative<Enabled>(sim.outcome(clock_id(0))));
  for (std::size_t j = 1; j < rabbits.clocks().size(); ++j) {
    CHECK(std::holds_alternative<Disabled>(sim.outcome(clock_id(j))));
  }
}

TEST_CASE("well-fed rabbit eats at Weibull intervals") {
  RabbitsConfig config;
  config.initial_food = 20000;
  const Model rabbits = build_rabbits(config);
  Simulation sim(rabbits, make_sampler({"next-reaction", {}}), 5);
  std::vector<double> gaps;
  double last = 0.0;
  while (gaps.size() < 10000) {
    REQUIRE(sim.step() == Simulation::Outcome::Fired);
    const EventRecord& e = sim.events().back();
    if (e.clock != clock_id(1)) continue;
    gaps.push_back(e.time - last);
    last = e.time;
  }
  std::sort(gaps.begin(), gaps.end());
  const HazardSpec weibull = HazardSpec::weibull(2.0, 1.0);
  TestResult r = ks_statistic(gaps, [&](double t) { return 1.0 - survival(weibull, t); });
  CHECK(r.p_value > 0.01);
}

TEST_CASE("atomic showcase always ends with one event") {
  auto runs = run_ensemble(build_atomic_showcase(), {"next-reaction", {}}, 3, 2000, StalledOnly{});
  std::size_t b = 0;
  for (const auto& t : runs) {
    REQUIRE(t.events.size() == 1);
    if (t.events[0].clock == clock_id(1)) {
      ++b;
      CHECK(t.events[0].time == 1.0);
    }
  }
  CHECK(b > 0);
  CHECK(b < 2000);
}

TEST_CASE("catalog models build with defaults") {
  for (const auto& info : model_catalog()) {
    CAPTURE(info.name);
    Model m = build_model(info.name);
    CHECK(m.name() == info.name);
    for (const auto& p : info.params) CHECK(m.params().count(p.name) == 1);
    CHECK_NOTHROW(run_trajectory(m, {"direct", {}}, 1, EventCount{20}, {.audit = true}));
  }
  CHECK(build_model("sir", {{"N", "4"}}).clocks().size() == 4 + 12);
  CHECK(build_model("ring", {{"M", "16"}}).clocks().size() == 16);
  CHECK(build_model("race", {{"specs", "Weibull(2, 1) | Exponential(1) + Atom(1, 0.5)"}}).clocks().size() == 2);
}

TEST_CASE("parameter errors name the field") {
  auto field_of = [](const std::string& model, const ParamMap& params) -> std::string {
    try {
      build_model(model, params);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  CHECK(field_of("sir", {{"N", "0"}}) == "N");
  CHECK(field_of("sir", {{"N", "ten"}}) == "N");
  CHECK(field_of("sir", {{"beta", "1"}}) == "beta");
  CHECK(field_of("sir", {{"recover", "Weibull(0, 1)"}}) == "recover");
  CHECK(field_of("sir", {{"N", "2"}, {"initial_infected", "3"}}) == "initial_infected");
  CHECK(field_of("rabbits", {{"portions", "1,,2"}}) == "portions");
  CHECK(field_of("rabbits", {{"l", "-1"}}) == "l");
  CHECK(field_of("birth-death", {{"initial", "200"}}) == "initial");
  CHECK(field_of("poisson", {{"rate", "0"}}) == "rate");
  CHECK(field_of("ring", {{"M", "1"}}) == "M");
  CHECK(field_of("atomic-showcase", {{"x", "1"}}) == "x");
  CHECK(field_of("zombies", {}) == "model");
  try {
    build_model("sir", {{"beta", "1"}});
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("recover") != std::string::npos);
  }
}
