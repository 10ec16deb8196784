#include <cmath>
#include <sstream>

#include "ctde/kernel.hpp"
#include "ctde/models.hpp"
#include "doctest.h"
#include "fuzz_support.hpp"

using namespace ctde;

namespace {

const HazardSpec unit_rate = HazardSpec::exponential(1.0);

std::unique_ptr<Sampler> sampler(const std::string& name) { return make_sampler({name, {}}); }

}  // namespace

TEST_CASE("SIR infection step by hand") {
  // N=2, individual 0 infectious: recover:0 (0) and infect:0->1 (2) are
  // enabled. Find a seed whose first event is the infection.
  const Model sir = build_sir(2, unit_rate, unit_rate, 1);
  bool traced = false;
  for (std::uint64_t seed = 0; seed < 100 && !traced; ++seed) {
    Simulation sim(sir, sampler("direct"), seed);
    CHECK(std::holds_alternative<Enabled>(sim.outcome(clock_id(0))));
    CHECK(std::holds_alternative<Disabled>(sim.outcome(clock_id(1))));
    CHECK(std::holds_alternative<Enabled>(sim.outcome(clock_id(2))));
    CHECK(std::holds_alternative<Disabled>(sim.outcome(clock_id(3))));
    REQUIRE(sim.step() == Simulation::Outcome::Fired);
    if (sim.events().back().clock != clock_id(2)) continue;
    traced = true;
    const double t = sim.now();
    CHECK(sim.state() == SystemState{{"I:0", 1}, {"I:1", 1}});
    CHECK(std::get<Enabled>(sim.outcome(clock_id(0))) == Enabled{unit_rate, 0.0});
    CHECK(std::get<Enabled>(sim.outcome(clock_id(1))) == Enabled{unit_rate, t});
    CHECK(std::holds_alternative<Disabled>(sim.outcome(clock_id(2))));
    CHECK(std::holds_alternative<Disabled>(sim.outcome(clock_id(3))));
    CHECK(sim.sampler().enabled_clocks() == std::vector<ClockId>{clock_id(0), clock_id(1)});
    CHECK(sim.audit().empty());
  }
  CHECK(traced);
}

TEST_CASE("no enabled clocks stalls immediately") {
  const Model sir = build_sir(3, unit_rate, unit_rate, 0);
  for (const auto& name : sampler_names()) {
    Simulation sim(sir, sampler(name), 1);
    CHECK(sim.step() == Simulation::Outcome::Stalled);
    CHECK(sim.events().empty());
    Trajectory t = run_trajectory(sir, {name, {}}, 1, EventCount{5});
    CHECK(t.stop_reason == StopReason::Stalled);
    CHECK(t.events.empty());
  }
}

TEST_CASE("pure birth process counts its events") {
  const Model birth = build_poisson(3.0);
  for (const auto& name : sampler_names()) {
    CAPTURE(name);
    Trajectory t = run_trajectory(birth, {name, {}}, 4, EventCount{200});
    REQUIRE(t.events.size() == 200);
    CHECK(t.stop_reason == StopReason::EventCount);
    CHECK(t.final_time == t.events.back().time);
    auto states = replay(birth, t);
    CHECK(states.back() == SystemState{{"n", 200}});
    for (std::size_t k = 0; k < t.events.size(); ++k) {
      CHECK(t.events[k].seq == k);
      if (k) CHECK(t.events[k].time > t.events[k - 1].time);
    }
  }
}

TEST_CASE("variate accounting per sampler") {
  const Model birth = build_poisson(1.0);
  CHECK(run_trajectory(birth, {"direct", {}}, 1, EventCount{10}).variates_consumed == 20);
  CHECK(run_trajectory(birth, {"first-reaction", {}}, 1, EventCount{10}).variates_consumed == 10);
  // One draw at start and one per regeneration.
  CHECK(run_trajectory(birth, {"next-reaction", {}}, 1, EventCount{10}).variates_consumed == 11);
  CHECK(run_trajectory(birth, {"next-to-fire", {}}, 1, EventCount{10}).variates_consumed == 11);
}

TEST_CASE("same seed gives identical trajectories") {
  const Model model = build_sir(8, HazardSpec::exponential(0.4), HazardSpec::weibull(2.0, 1.0));
  for (const auto& name : sampler_names()) {
    CAPTURE(name);
    Trajectory a = run_trajectory(model, {name, {}}, 42, EndTime{20.0});
    Trajectory b = run_trajectory(model, {name, {}}, 42, EndTime{20.0});
    CHECK(a == b);
    CHECK_FALSE(a.events.empty());
    Trajectory c = run_trajectory(model, {name, {}}, 43, EndTime{20.0});
    CHECK_FALSE(a.events == c.events);
  }
}

TEST_CASE("end time zero gives no events") {
  for (const auto& name : sampler_names()) {
    Trajectory t = run_trajectory(build_poisson(5.0), {name, {}}, 3, EndTime{0.0});
    CHECK(t.events.empty());
    CHECK(t.final_time == 0.0);
    CHECK(t.stop_reason == StopReason::EndTime);
  }
}

TEST_CASE("events after the horizon are censored") {
  Trajectory t = run_trajectory(build_poisson(2.0), {"next-reaction", {}}, 8, EndTime{30.0});
  CHECK(t.final_time == 30.0);
  CHECK(t.stop_reason == StopReason::EndTime);
  CHECK(t.events.back().time <= 30.0);

  Simulation sim(build_poisson(1.0), sampler("next-to-fire"), 2);
  while (sim.step(1.0) == Simulation::Outcome::Fired) {
  }
  const double before = sim.now();
  CHECK(sim.step(1.0) == Simulation::Outcome::Censored);
  CHECK(sim.now() == before);
}

TEST_CASE("Poisson event count mean over a seed sweep") {
  // Mean of 100 counts of a rate-1 process on [0, 1000]: sd sqrt(10).
  const Model poisson = build_poisson(1.0);
  for (const auto& name : sampler_names()) {
    CAPTURE(name);
    auto runs = run_ensemble(poisson, {name, {}}, 2024, 100, EndTime{1000.0});
    double mean = 0.0;
    for (const auto& t : runs) mean += double(t.events.size()) / 100.0;
    CHECK(std::abs(mean - 1000.0) <= 3.0 * std::sqrt(10.0));
  }
}

TEST_CASE("stop conditions are validated") {
  CHECK_THROWS_AS(validate(StopCondition{EndTime{-1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(StopCondition{EventCount{0}}), std::invalid_argument);
  CHECK_NOTHROW(validate(StopCondition{StalledOnly{}}));
  CHECK_THROWS_AS(run_ensemble(build_poisson(1.0), {"direct", {}}, 1, 0, EndTime{1.0}),
                  std::invalid_argument);
}

TEST_CASE("single-shot models stall after one event") {
  Trajectory t = run_trajectory(build_atomic_showcase(), {"direct", {}}, 6, StalledOnly{});
  CHECK(t.events.size() == 1);
  CHECK(t.stop_reason == StopReason::Stalled);
  CHECK(t.final_time == t.events[0].time);
}

TEST_CASE("ensembles do not depend on the worker count") {
  const Model model = build_sir(5, HazardSpec::exponential(0.7), HazardSpec::weibull(2.0, 1.0));
  auto one = run_ensemble(model, {"hierarchical", {}}, 77, 12, EndTime{10.0}, 1);
  auto four = run_ensemble(model, {"hierarchical", {}}, 77, 12, EndTime{10.0}, 4);
  CHECK(one == four);
  Trajectory single = run_trajectory(model, {"hierarchical", {}}, stream_seed(77, 0), EndTime{10.0});
  CHECK(run_ensemble(model, {"hierarchical", {}}, 77, 1, EndTime{10.0})[0] == single);
  CHECK(one[5] == run_trajectory(model, {"hierarchical", {}}, stream_seed(77, 5), EndTime{10.0}));
}

TEST_CASE("cache audit holds for every model and sampler") {
  std::vector<Model> models = testing::small_models();
  models.push_back(build_random_walk(1.0, 1.5));
  for (const Model& model : models) {
    for (const auto& name : sampler_names()) {
      CAPTURE(model.name());
      CAPTURE(name);
      Trajectory t;
      CHECK_NOTHROW(t = run_trajectory(model, {name, {}}, 13, EventCount{300}, {.audit = true}));
      auto states = replay(model, t);
      CHECK(states.size() == t.events.size() + 1);
      for (const auto& s : states) {
        for (const auto& [key, count] : s.entries()) CHECK(count > 0);
      }
    }
  }
}

TEST_CASE("families are instantiated as new substates appear") {
  const Model walk = build_random_walk(1.0, 1.0);
  Simulation sim(walk, sampler("next-reaction"), 9, {.audit = true});
  const std::size_t start = sim.registry().size();
  for (int k = 0; k < 200; ++k) REQUIRE(sim.step() == Simulation::Outcome::Fired);
  CHECK(sim.registry().size() > start);
  CHECK(sim.registry().graph().clock_count() == sim.registry().size());
  Trajectory t = run_trajectory(walk, {"direct", {}}, 9, EventCount{200});
  CHECK(replay(walk, t).size() == 201);
}

TEST_CASE("replay rejects trajectories that do not fit the model") {
  const Model sir = build_sir(2, unit_rate, unit_rate);
  Trajectory t = run_trajectory(sir, {"direct", {}}, 1, StalledOnly{});
  REQUIRE_FALSE(t.events.empty());
  Trajectory bad = t;
  bad.events.push_back({t.events.size(), t.events.back().time + 1.0, clock_id(3)});
  bad.events.push_back({t.events.size() + 1, t.events.back().time + 2.0, clock_id(3)});
  CHECK_THROWS(replay(sir, bad));
  Trajectory unknown = t;
  unknown.events.push_back({t.events.size(), t.events.back().time + 1.0, clock_id(40)});
  CHECK_THROWS(replay(sir, unknown));
}

TEST_CASE("trajectory serialization round trip") {
  const Model model = build_sir(4, HazardSpec::exponential(0.9), HazardSpec::weibull(2.0, 1.0));
  Trajectory t = run_trajectory(model, {"hierarchical", {{"default", "next-to-fire"}}}, 314, EndTime{7.5});
  std::stringstream buffer;
  write_trajectory(buffer, t);
  const std::string text = buffer.str();
  CHECK(text.rfind("# ctde-trajectory 1\n", 0) == 0);
  CHECK(text.find("# sampler\thierarchical default=next-to-fire\n") != std::string::npos);
  CHECK(text.find("seq\ttime\tclock_id\n") != std::string::npos);
  Trajectory back = read_trajectory(buffer);
  CHECK(back == t);
  std::stringstream again;
  write_trajectory(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("times are written with 17 significant digits") {
  CHECK(format_time(0.1) == "0.10000000000000001");
  CHECK(format_time(2.0) == "2");
  CHECK(std::stod(format_time(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("malformed trajectory files report the line") {
  const Model model = build_poisson(1.0);
  std::stringstream buffer;
  write_trajectory(buffer, run_trajectory(model, {"direct", {}}, 1, EventCount{3}));
  std::string text = buffer.str();

  auto fails_at = [](const std::string& input) -> std::size_t {
    std::istringstream in(input);
    try {
      read_trajectory(in);
    } catch (const TrajectoryFormatError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(fails_at("") == 1);
  CHECK(fails_at("hello\n") == 1);
  CHECK(fails_at(text + "9\t100\t0\n") > 1);
  std::string garbage = text + "3\tnot-a-time\t0\n";
  CHECK(fails_at(garbage) > 1);
  std::string backwards = text + "3\t1e-9\t0\n";
  CHECK(fails_at(backwards) > 1);
}

TEST_CASE("model hash") {
  const Model a = build_sir(3, unit_rate, unit_rate);
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() == build_sir(3, unit_rate, unit_rate).hash());
  CHECK(a.hash() != build_sir(4, unit_rate, unit_rate).hash());
  CHECK(a.hash() != build_sir(3, unit_rate, HazardSpec::exponential(2.0)).hash());
}

TEST_CASE("models reject misnumbered clocks") {
  ClockSpec c{clock_id(1), "c", [](const ClockContext&) { return EnablingRule::disabled(); }, {}, {}};
  CHECK_THROWS_AS(Model("bad", {}, {c}, {}), std::invalid_argument);
}

TEST_CASE("enabling times in the future are a kernel error") {
  ClockSpec c{clock_id(0), "c",
              [](const ClockContext& ctx) {
                return EnablingRule::enabled(HazardSpec::exponential(1.0), ctx.now + 1.0);
              },
              JumpMark{{"x", 1}},
              {}};
  const Model model("future", {}, {c}, {});
  CHECK_THROWS_AS(Simulation(model, sampler("direct"), 1), KernelError);
}
