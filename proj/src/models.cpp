#include "ctde/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace ctde {

namespace {

std::string number(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string number(std::int64_t value) { return std::to_string(value); }

std::string key(std::string_view prefix, std::size_t i) {
  return std::string(prefix) + std::to_string(i);
}

std::int64_t parse_integer(const std::string& field, const std::string& text, std::int64_t min) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  }
  if (v < min) throw ConfigError(field, "must be at least " + std::to_string(min));
  return v;
}

class Params {
 public:
  Params(const ModelInfo& info, const ParamMap& given) : values_(given) {
    for (const auto& [name, value] : given) {
      bool known = std::any_of(info.params.begin(), info.params.end(),
                               [&](const ParamInfo& p) { return p.name == name; });
      if (!known) {
        std::string valid;
        for (const auto& p : info.params) valid += (valid.empty() ? "" : ", ") + p.name;
        throw ConfigError(name, "unknown parameter for model " + info.name +
                                    (valid.empty() ? " (it takes none)" : "; valid: " + valid));
      }
    }
    for (const auto& p : info.params) values_.try_emplace(p.name, p.default_value);
  }

  std::int64_t integer(const std::string& name, std::int64_t min) const {
    return parse_integer(name, values_.at(name), min);
  }

  double real(const std::string& name, bool allow_zero) const {
    const std::string& text = values_.at(name);
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
      throw ConfigError(name, "expected a finite number, got '" + text + "'");
    }
    if (v < 0 || (!allow_zero && v == 0)) {
      throw ConfigError(name, allow_zero ? "must be non-negative" : "must be positive");
    }
    return v;
  }

  HazardSpec hazard(const std::string& name) const {
    try {
      return parse_hazard(values_.at(name));
    } catch (const InvalidHazard& e) {
      throw ConfigError(name, e.what());
    }
  }

  std::vector<std::string> list(const std::string& name, char separator) const {
    std::vector<std::string> out;
    const std::string& text = values_.at(name);
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find(separator, pos);
      if (end == std::string::npos) end = text.size();
      std::string item = text.substr(pos, end - pos);
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (item.empty()) throw ConfigError(name, "empty list entry");
      out.push_back(item);
      pos = end + 1;
    }
    return out;
  }

 private:
  ParamMap values_;
};

const ModelInfo& info_of(const std::string& name) {
  for (const auto& info : model_catalog()) {
    if (info.name == name) return info;
  }
  std::string valid;
  for (const auto& info : model_catalog()) valid += (valid.empty() ? "" : ", ") + info.name;
  throw ConfigError("model", "unknown model '" + name + "'; valid models: " + valid);
}

EnablingRule when(bool enabled, const HazardSpec& spec) {
  return enabled ? EnablingRule::enabled(spec) : EnablingRule::disabled();
}

}  // namespace

const std::vector<ModelInfo>& model_catalog() {
  static const std::vector<ModelInfo> catalog{
      {"sir",
       "susceptible-infectious-recovered epidemic with one clock per action",
       {{"N", "10", "number of individuals"},
        {"infect", "Exponential(1)", "infection hazard per infectious-susceptible pair"},
        {"recover", "Exponential(1)", "recovery hazard, measured from infection"},
        {"initial_infected", "1", "individuals infectious at time 0"}}},
      {"rabbits",
       "rabbits eating portions of a food supply produced at a constant rate",
       {{"M", "1", "number of rabbits"},
        {"l", "1", "food production rate"},
        {"portions", "1", "comma-separated portion sizes"},
        {"scale_per_portion", "1", "Weibull scale per unit of the last meal"},
        {"first_scale", "1", "Weibull scale before the first meal"},
        {"initial_food", "0", "food available at time 0"}}},
      {"birth-death",
       "linear birth-death process",
       {{"birth", "1", "per-capita birth rate"},
        {"death", "1", "per-capita death rate"},
        {"initial", "1", "initial population"},
        {"cap", "100", "population at which births stop"}}},
      {"atomic-showcase", "exponential clock racing a clock with a single atom", {}},
      {"poisson", "Poisson counting process", {{"rate", "1", "event rate"}}},
      {"race",
       "single-shot race between clocks",
       {{"specs", "Exponential(1) | Exponential(2) | Exponential(3)",
         "hazards separated by '|'"}}},
      {"ring",
       "tokens hopping around a ring of sites",
       {{"M", "1024", "number of sites"},
        {"rate", "1", "hop rate per token"},
        {"tokens", "1", "tokens per site at time 0"}}},
      {"modulated",
       "clocks whose hazards all change at every event",
       {{"K", "4", "number of clocks"}}},
      {"random-walk",
       "walker on the integers with lazily created position clocks",
       {{"left", "1", "rate of steps to the left"}, {"right", "1", "rate of steps to the right"}}},
  };
  return catalog;
}

Model build_model(const std::string& name, const ParamMap& given) {
  const ModelInfo& info = info_of(name);
  Params p(info, given);
  if (name == "sir") {
    auto n = p.integer("N", 1);
    auto infected = p.integer("initial_infected", 0);
    if (infected > n) throw ConfigError("initial_infected", "exceeds N");
    return build_sir(static_cast<int>(n), p.hazard("infect"), p.hazard("recover"),
                     static_cast<int>(infected));
  }
  if (name == "rabbits") {
    RabbitsConfig c;
    c.rabbits = static_cast<int>(p.integer("M", 1));
    c.food_rate = p.real("l", false);
    c.portions.clear();
    for (const auto& item : p.list("portions", ',')) {
      c.portions.push_back(static_cast<int>(parse_integer("portions", item, 1)));
    }
    c.scale_per_portion = p.real("scale_per_portion", false);
    c.first_scale = p.real("first_scale", false);
    c.initial_food = p.integer("initial_food", 0);
    return build_rabbits(c);
  }
  if (name == "birth-death") {
    return build_birth_death(p.real("birth", true), p.real("death", true), p.integer("initial", 0),
                             p.integer("cap", 1));
  }
  if (name == "atomic-showcase") return build_atomic_showcase();
  if (name == "poisson") return build_poisson(p.real("rate", false));
  if (name == "race") {
    std::vector<HazardSpec> specs;
    for (const auto& item : p.list("specs", '|')) {
      try {
        specs.push_back(parse_hazard(item));
      } catch (const InvalidHazard& e) {
        throw ConfigError("specs", e.what());
      }
    }
    return build_race(specs);
  }
  if (name == "ring") {
    return build_ring(static_cast<std::size_t>(p.integer("M", 2)), p.real("rate", false),
                      p.integer("tokens", 1));
  }
  if (name == "modulated") return build_modulated(static_cast<std::size_t>(p.integer("K", 1)));
  return build_random_walk(p.real("left", true), p.real("right", true));
}

Model build_sir(int n, const HazardSpec& infect, const HazardSpec& recover, int initial_infected) {
  if (n < 1) throw ConfigError("N", "must be at least 1");
  if (initial_infected < 0 || initial_infected > n) {
    throw ConfigError("initial_infected", "must lie in [0, N]");
  }
  std::vector<ClockSpec> clocks;
  for (int k = 0; k < n; ++k) {
    std::string infected = key("I:", k);
    clocks.push_back({clock_id(clocks.size()), "recover:" + std::to_string(k),
                      [infected, recover](const ClockContext& c) {
                        if (c.count(infected) == 0) return EnablingRule::disabled();
                        return EnablingRule::enabled(recover, c.last_change(infected));
                      },
                      JumpMark{{infected, -1}, {key("R:", k), 1}},
                      {infected}});
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (i == k) continue;
      std::string source = key("I:", i);
      std::string target = key("S:", k);
      clocks.push_back({clock_id(clocks.size()),
                        "infect:" + std::to_string(i) + "->" + std::to_string(k),
                        [source, target, infect](const ClockContext& c) {
                          return when(c.count(source) > 0 && c.count(target) > 0, infect);
                        },
                        JumpMark{{target, -1}, {key("I:", k), 1}},
                        {source, target}});
    }
  }
  SystemState initial;
  for (int k = 0; k < n; ++k) initial.set(key(k < initial_infected ? "I:" : "S:", k), 1);
  ParamMap params{{"N", number(std::int64_t{n})},
                  {"infect", format_hazard(infect)},
                  {"recover", format_hazard(recover)},
                  {"initial_infected", number(std::int64_t{initial_infected})}};
  return Model("sir", std::move(params), std::move(clocks), std::move(initial));
}

Model build_rabbits(const RabbitsConfig& config) {
  if (config.rabbits < 1) throw ConfigError("M", "must be at least 1");
  if (!(config.food_rate > 0.0)) throw ConfigError("l", "must be positive");
  if (config.portions.empty()) throw ConfigError("portions", "needs at least one portion");
  for (int d : config.portions) {
    if (d < 1) throw ConfigError("portions", "portion sizes must be positive integers");
  }
  if (!(config.scale_per_portion > 0.0)) throw ConfigError("scale_per_portion", "must be positive");
  if (!(config.first_scale > 0.0)) throw ConfigError("first_scale", "must be positive");
  if (config.initial_food < 0) throw ConfigError("initial_food", "must be non-negative");

  const HazardSpec production = HazardSpec::exponential(config.food_rate);
  std::vector<ClockSpec> clocks;
  clocks.push_back({clock_id(0), "produce",
                    [production](const ClockContext&) { return EnablingRule::enabled(production); },
                    JumpMark{{"food", 1}},
                    {}});
  const std::size_t kinds = config.portions.size();
  for (int m = 0; m < config.rabbits; ++m) {
    std::vector<std::string> meals;
    for (std::size_t k = 0; k < kinds; ++k) {
      meals.push_back("ate:" + std::to_string(m) + ':' + std::to_string(k));
    }
    std::vector<SubstateKey> reads{"food"};
    reads.insert(reads.end(), meals.begin(), meals.end());
    for (std::size_t k = 0; k < kinds; ++k) {
      const int portion = config.portions[k];
      clocks.push_back(
          {clock_id(clocks.size()), "eat:" + std::to_string(m) + ':' + std::to_string(k),
           [=, portions = config.portions](const ClockContext& c) {
             if (c.count("food") < portion) return EnablingRule::disabled();
             double last_meal = 0.0;
             double scale = config.first_scale;
             for (std::size_t j = 0; j < kinds; ++j) {
               if (c.count(meals[j]) == 0) continue;
               double t = c.last_change(meals[j]);
               if (t >= last_meal) {
                 last_meal = t;
                 scale = config.scale_per_portion * portions[j];
               }
             }
             return EnablingRule::enabled(HazardSpec::weibull(2.0, scale), last_meal);
           },
           JumpMark{{"food", -portion}, {meals[k], 1}},
           reads});
    }
  }
  SystemState initial;
  initial.set("food", config.initial_food);
  std::string portions;
  for (int d : config.portions) portions += (portions.empty() ? "" : ",") + std::to_string(d);
  ParamMap params{{"M", number(std::int64_t{config.rabbits})},
                  {"l", number(config.food_rate)},
                  {"portions", portions},
                  {"scale_per_portion", number(config.scale_per_portion)},
                  {"first_scale", number(config.first_scale)},
                  {"initial_food", number(config.initial_food)}};
  return Model("rabbits", std::move(params), std::move(clocks), std::move(initial));
}

Model build_birth_death(double birth, double death, std::int64_t initial, std::int64_t cap) {
  if (!(birth >= 0.0) || !std::isfinite(birth)) throw ConfigError("birth", "must be non-negative");
  if (!(death >= 0.0) || !std::isfinite(death)) throw ConfigError("death", "must be non-negative");
  if (cap < 1) throw ConfigError("cap", "must be at least 1");
  if (initial < 0 || initial > cap) throw ConfigError("initial", "must lie in [0, cap]");
  std::vector<ClockSpec> clocks;
  clocks.push_back({clock_id(0), "birth",
                    [birth, cap](const ClockContext& c) {
                      auto x = c.count("X");
                      if (x == 0 || x >= cap || birth == 0.0) return EnablingRule::disabled();
                      return EnablingRule::enabled(HazardSpec::exponential(birth * double(x)));
                    },
                    JumpMark{{"X", 1}},
                    {"X"}});
  clocks.push_back({clock_id(1), "death",
                    [death](const ClockContext& c) {
                      auto x = c.count("X");
                      if (x == 0 || death == 0.0) return EnablingRule::disabled();
                      return EnablingRule::enabled(HazardSpec::exponential(death * double(x)));
                    },
                    JumpMark{{"X", -1}},
                    {"X"}});
  SystemState state;
  state.set("X", initial);
  ParamMap params{{"birth", number(birth)},
                  {"death", number(death)},
                  {"initial", number(initial)},
                  {"cap", number(cap)}};
  return Model("birth-death", std::move(params), std::move(clocks), std::move(state));
}

Model build_atomic_showcase() {
  const HazardSpec a = HazardSpec::exponential(std::numbers::ln2);
  const HazardSpec b = HazardSpec::atoms_only({{1.0, 0.5}});
  std::vector<ClockSpec> clocks;
  clocks.push_back({clock_id(0), "A",
                    [a](const ClockContext& c) { return when(c.count("armed") > 0, a); },
                    JumpMark{{"armed", -1}, {"A", 1}},
                    {"armed"}});
  clocks.push_back({clock_id(1), "B",
                    [b](const ClockContext& c) { return when(c.count("armed") > 0, b); },
                    JumpMark{{"armed", -1}, {"B", 1}},
                    {"armed"}});
  return Model("atomic-showcase", {}, std::move(clocks), SystemState{{"armed", 1}});
}

Model build_poisson(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("rate", "must be positive");
  const HazardSpec spec = HazardSpec::exponential(rate);
  std::vector<ClockSpec> clocks;
  clocks.push_back({clock_id(0), "arrival",
                    [spec](const ClockContext&) { return EnablingRule::enabled(spec); },
                    JumpMark{{"n", 1}},
                    {}});
  return Model("poisson", {{"rate", number(rate)}}, std::move(clocks), SystemState{});
}

Model build_race(const std::vector<HazardSpec>& specs) {
  if (specs.empty()) throw ConfigError("specs", "needs at least one clock");
  std::vector<ClockSpec> clocks;
  std::string text;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const HazardSpec spec = specs[j];
    clocks.push_back({clock_id(j), "clock:" + std::to_string(j),
                      [spec](const ClockContext& c) { return when(c.count("armed") > 0, spec); },
                      JumpMark{{"armed", -1}, {key("won:", j), 1}},
                      {"armed"}});
    text += (text.empty() ? "" : " | ") + format_hazard(spec);
  }
  return Model("race", {{"specs", text}}, std::move(clocks), SystemState{{"armed", 1}});
}

Model build_ring(std::size_t m, double rate, std::int64_t tokens_per_site) {
  if (m < 2) throw ConfigError("M", "must be at least 2");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("rate", "must be positive");
  if (tokens_per_site < 1) throw ConfigError("tokens", "must be at least 1");
  std::vector<ClockSpec> clocks;
  clocks.reserve(m);
  SystemState initial;
  for (std::size_t i = 0; i < m; ++i) {
    std::string site = key("x:", i);
    clocks.push_back({clock_id(i), "hop:" + std::to_string(i),
                      [site, rate](const ClockContext& c) {
                        auto x = c.count(site);
                        if (x == 0) return EnablingRule::disabled();
                        return EnablingRule::enabled(HazardSpec::exponential(rate * double(x)));
                      },
                      JumpMark{{site, -1}, {key("x:", (i + 1) % m), 1}},
                      {site}});
    initial.set(site, tokens_per_site);
  }
  ParamMap params{{"M", number(static_cast<std::int64_t>(m))},
                  {"rate", number(rate)},
                  {"tokens", number(tokens_per_site)}};
  return Model("ring", std::move(params), std::move(clocks), std::move(initial));
}

Model build_modulated(std::size_t k) {
  if (k < 1) throw ConfigError("K", "must be at least 1");
  std::vector<ClockSpec> clocks;
  for (std::size_t j = 0; j < k; ++j) {
    // Offsets with no small rational relations, so absolute atom times of
    // different clocks do not coincide.
    const double offset = 0.25 * std::numbers::sqrt2 + 0.1 * std::sqrt(double(j) + 3.0);
    clocks.push_back({clock_id(j), "modulated:" + std::to_string(j),
                      [j, offset](const ClockContext& c) {
                        auto n = static_cast<std::size_t>(c.count("n"));
                        double scale = 0.5 * double(1 + (n + j) % 3);
                        std::vector<Atom> atoms;
                        if ((n + j) % 2 == 0) atoms.push_back({offset, 0.3});
                        return EnablingRule::enabled(HazardSpec(Weibull{1.5, scale}, std::move(atoms)));
                      },
                      JumpMark{{"n", 1}},
                      {"n"}});
  }
  return Model("modulated", {{"K", number(static_cast<std::int64_t>(k))}}, std::move(clocks),
               SystemState{});
}

Model build_random_walk(double left_rate, double right_rate) {
  if (!(left_rate >= 0.0) || !std::isfinite(left_rate)) throw ConfigError("left", "must be non-negative");
  if (!(right_rate >= 0.0) || !std::isfinite(right_rate)) {
    throw ConfigError("right", "must be non-negative");
  }
  ClockFamily steps;
  steps.key_prefix = "pos:";
  steps.instantiate = [left_rate, right_rate](const SubstateKey& at) {
    long long x = std::stoll(at.substr(4));
    std::vector<ClockSpec> out;
    for (int dir : {-1, 1}) {
      const double rate = dir < 0 ? left_rate : right_rate;
      if (rate == 0.0) continue;
      const HazardSpec spec = HazardSpec::exponential(rate);
      out.push_back({ClockId{}, (dir < 0 ? "left:" : "right:") + std::to_string(x),
                     [at, spec](const ClockContext& c) { return when(c.count(at) > 0, spec); },
                     JumpMark{{at, -1}, {"pos:" + std::to_string(x + dir), 1}},
                     {at}});
    }
    return out;
  };
  ParamMap params{{"left", number(left_rate)}, {"right", number(right_rate)}};
  return Model("random-walk", std::move(params), {}, SystemState{{"pos:0", 1}}, {steps});
}

}  // namespace ctde
