#include <random>
#include <set>

#include "ctde/clock.hpp"
#include "ctde/models.hpp"
#include "doctest.h"
#include "fuzz_support.hpp"

using namespace ctde;

namespace {

EnablingOutcome resolve(const ClockSpec& clock, const SystemState& state, const ChangeTimes& changes,
                        double now, const EnablingOutcome& previously = Disabled{}) {
  return evaluate_enabling(clock, ClockContext{state, changes, now}, previously);
}

}  // namespace

TEST_CASE("apply_mark examples") {
  CHECK(apply_mark({{"S", 3}, {"I", 1}}, JumpMark{{"S", -1}, {"I", 1}}) ==
        SystemState{{"S", 2}, {"I", 2}});
  SystemState emptied = apply_mark({{"S", 1}}, JumpMark{{"S", -1}});
  CHECK(emptied == SystemState{});
  CHECK(emptied.size() == 0);
  CHECK_THROWS_AS(apply_mark({}, JumpMark{{"S", -1}}), NegativeSubstate);
  try {
    apply_mark({{"I", 2}}, JumpMark{{"I", 1}, {"S", -1}});
  } catch (const NegativeSubstate& e) {
    CHECK(e.key() == "S");
  }
}

TEST_CASE("failed apply leaves the state unchanged") {
  SystemState s{{"A", 1}, {"B", 0}};
  CHECK_THROWS_AS(s.apply(JumpMark{{"A", 1}, {"B", -1}}), NegativeSubstate);
  CHECK(s == SystemState{{"A", 1}});
}

TEST_CASE("jump marks are sparse and sorted") {
  JumpMark m{{"b", 1}, {"a", 2}, {"b", -1}, {"c", 0}};
  REQUIRE(m.deltas().size() == 1);
  CHECK(m.deltas()[0] == std::pair<SubstateKey, std::int64_t>{"a", 2});
  CHECK((JumpMark{{"x", 1}} + JumpMark{{"x", -1}}).empty());
  CHECK(JumpMark{{"y", 1}, {"x", 2}} + JumpMark{{"x", 1}} == JumpMark{{"x", 3}, {"y", 1}});
}

TEST_CASE("state text form") {
  CHECK(SystemState{{"b", 2}, {"a", 1}}.to_string() == "a=1;b=2");
  CHECK(SystemState{}.to_string().empty());
  SystemState s;
  s.set("x", 0);
  CHECK(s.size() == 0);
}

TEST_CASE("apply_mark is associative with mark addition") {
  std::mt19937_64 gen(5);
  const std::vector<SubstateKey> keys{"a", "b", "c", "d"};
  std::uniform_int_distribution<int> delta(-2, 2);
  std::uniform_int_distribution<int> count(0, 3);
  int compared = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    SystemState s;
    std::vector<std::pair<SubstateKey, std::int64_t>> d1, d2;
    for (const auto& k : keys) {
      s.set(k, count(gen));
      d1.emplace_back(k, delta(gen));
      d2.emplace_back(k, delta(gen));
    }
    JumpMark m1(d1), m2(d2);
    SystemState stepwise;
    SystemState combined;
    try {
      stepwise = apply_mark(apply_mark(s, m1), m2);
      combined = apply_mark(s, m1 + m2);
    } catch (const NegativeSubstate&) {
      continue;
    }
    CHECK(stepwise == combined);
    ++compared;
  }
  CHECK(compared > 200);
}

TEST_CASE("SIR enabling examples") {
  const Model sir = build_sir(2, HazardSpec::exponential(1.0), HazardSpec::weibull(2.0, 1.0), 0);
  ChangeTimes changes;
  // Clock 2 is infection 0 -> 1; with nobody infectious it is disabled.
  CHECK(std::holds_alternative<Disabled>(resolve(sir.clocks()[2], sir.initial_state(), changes, 0.0)));

  SystemState s{{"I:0", 1}, {"S:1", 1}};
  const JumpMark infect_1{{"S:1", -1}, {"I:1", 1}};
  s.apply(infect_1);
  changes.record(infect_1, 2.0);
  auto outcome = resolve(sir.clocks()[1], s, changes, 2.0);
  REQUIRE(std::holds_alternative<Enabled>(outcome));
  CHECK(std::get<Enabled>(outcome) == Enabled{HazardSpec::weibull(2.0, 1.0), 2.0});

  // Asked again later, the clock reports that nothing changed.
  CHECK(std::holds_alternative<UnchangedSinceLastQuery>(
      resolve(sir.clocks()[1], s, changes, 3.5, outcome)));
}

TEST_CASE("rabbits eating clock is enabled from the last meal") {
  RabbitsConfig config;
  config.portions = {1, 2};
  config.scale_per_portion = 0.5;
  config.first_scale = 3.0;
  const Model rabbits = build_rabbits(config);
  const ClockSpec& eat_small = rabbits.clocks()[1];
  const ClockSpec& eat_large = rabbits.clocks()[2];

  ChangeTimes changes;
  SystemState s{{"food", 3}};
  auto before = resolve(eat_large, s, changes, 0.5);
  REQUIRE(std::holds_alternative<Enabled>(before));
  CHECK(std::get<Enabled>(before) == Enabled{HazardSpec::weibull(2.0, 3.0), 0.0});

  // A portion of 2 eaten at t = 1.5 leaves food 1: the large portion no
  // longer fits and the small one is timed from that meal.
  const JumpMark meal = eat_large.mark;
  s.apply(meal);
  changes.record(meal, 1.5);
  CHECK(s.count("food") == 1);
  CHECK(std::holds_alternative<Disabled>(resolve(eat_large, s, changes, 1.5, before)));
  auto small = resolve(eat_small, s, changes, 1.5);
  REQUIRE(std::holds_alternative<Enabled>(small));
  CHECK(std::get<Enabled>(small) == Enabled{HazardSpec::weibull(2.0, 1.0), 1.5});

  SystemState hungry;
  for (std::size_t j = 1; j < rabbits.clocks().size(); ++j) {
    CHECK(std::holds_alternative<Disabled>(resolve(rabbits.clocks()[j], hungry, changes, 2.0)));
  }
}

TEST_CASE("default enabling time") {
  ClockSpec clock{clock_id(0), "c",
                  [](const ClockContext& c) {
                    return c.count("x") > 0 ? EnablingRule::enabled(HazardSpec::exponential(double(c.count("x"))))
                                            : EnablingRule::disabled();
                  },
                  {},
                  {"x"}};
  ChangeTimes changes;
  auto first = resolve(clock, {{"x", 1}}, changes, 1.0);
  CHECK(std::get<Enabled>(first).enabling_time == 1.0);
  // Still enabled with the same rate: unchanged. With a new rate the
  // enabling time is kept.
  CHECK(std::holds_alternative<UnchangedSinceLastQuery>(resolve(clock, {{"x", 1}}, changes, 2.0, first)));
  auto modified = resolve(clock, {{"x", 2}}, changes, 2.0, first);
  CHECK(std::get<Enabled>(modified) == Enabled{HazardSpec::exponential(2.0), 1.0});
  // Re-enabled after being disabled: timed from now.
  CHECK(std::get<Enabled>(resolve(clock, {{"x", 1}}, changes, 3.0, Disabled{})).enabling_time == 3.0);
  CHECK(std::holds_alternative<Disabled>(resolve(clock, {}, changes, 3.0, first)));
  CHECK(leaves_unchanged(Disabled{}, Disabled{}));
  CHECK_FALSE(leaves_unchanged(Disabled{}, first));
}

TEST_CASE("enabling is deterministic and local") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> when(0.0, 1.0);
  int enabled_seen = 0;
  for (const Model& model : testing::small_models()) {
    CAPTURE(model.name());
    const auto keys = testing::mentioned_keys(model);
    for (int trial = 0; trial < 200; ++trial) {
      SystemState s = testing::random_state(keys, gen);
      ChangeTimes changes;
      for (const auto& k : keys) changes.record(JumpMark{{k, 1}}, when(gen));
      for (const ClockSpec& clock : model.clocks()) {
        auto a = resolve(clock, s, changes, 1.0);
        CHECK(a == resolve(clock, s, changes, 1.0));
        enabled_seen += std::holds_alternative<Enabled>(a) ? 1 : 0;

        std::set<SubstateKey> reads(clock.reads.begin(), clock.reads.end());
        SystemState perturbed = s;
        ChangeTimes perturbed_changes = changes;
        for (const auto& k : keys) {
          if (reads.count(k)) continue;
          perturbed.set(k, std::uniform_int_distribution<int>(0, 5)(gen));
          perturbed_changes.record(JumpMark{{k, 1}}, when(gen));
        }
        CHECK(resolve(clock, perturbed, perturbed_changes, 1.0) == a);
      }
    }
  }
  CHECK(enabled_seen > 0);
}
