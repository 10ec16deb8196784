#include "ctde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <boost/math/special_functions/gamma.hpp>

namespace ctde {

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it == breakpoints.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

StepFunction nelson_aalen(std::span<const CensoredSample> samples) {
  if (samples.empty()) throw InsufficientData("Nelson-Aalen needs at least one sample");
  std::vector<CensoredSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const CensoredSample& a, const CensoredSample& b) { return a.duration < b.duration; });
  StepFunction out;
  double cumulative = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].duration;
    const double at_risk = double(sorted.size() - i);
    double events = 0.0;
    std::size_t j = i;
    for (; j < sorted.size() && sorted[j].duration == t; ++j) {
      if (sorted[j].observed) events += 1.0;
    }
    if (events > 0.0) {
      cumulative += events / at_risk;
      out.breakpoints.push_back(t);
      out.values.push_back(cumulative);
    }
    i = j;
  }
  return out;
}

CifResult cif_numeric(std::span<const std::pair<HazardSpec, double>> clocks, double grid_step,
                      double horizon) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be finite and non-negative");
  }
  struct AtomEvent {
    double time;
    std::size_t clock;
    double mass;
  };
  std::vector<AtomEvent> atoms;
  std::vector<double> grid;
  for (std::size_t j = 0; j < clocks.size(); ++j) {
    const auto& [spec, enabled_at] = clocks[j];
    if (enabled_at > 0.0) throw std::invalid_argument("clocks must be enabled at or before 0");
    for (const Atom& a : spec.atoms()) {
      double t = enabled_at + a.offset;
      if (t > 0.0 && t <= horizon) {
        atoms.push_back({t, j, a.mass});
        grid.push_back(t);
      }
    }
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const AtomEvent& a, const AtomEvent& b) { return a.time < b.time; });
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / grid_step));
  for (std::size_t i = 0; i <= steps; ++i) grid.push_back(std::min(double(i) * grid_step, horizon));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::size_t n = clocks.size();
  auto hazards = [&](double t, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = clocks[j].first.hazard(t - clocks[j].second);
  };

  CifResult result;
  result.survival.breakpoints = grid;
  result.survival.values.reserve(grid.size());
  result.incidence.assign(n, StepFunction{grid, {}});
  std::vector<double> incidence(n, 0.0);
  std::vector<double> h_lo(n), h_hi(n), integral(n);
  double survival = 1.0;
  std::size_t next_atom = 0;

  auto record = [&] {
    result.survival.values.push_back(survival);
    for (std::size_t j = 0; j < n; ++j) result.incidence[j].values.push_back(incidence[j]);
  };
  record();
  hazards(grid.front(), h_lo);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = grid[g - 1];
    const double b = grid[g];
    const double dt = b - a;
    hazards(b, h_hi);
    double total = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isfinite(h_lo[j]) && std::isfinite(h_hi[j])) {
        integral[j] = 0.5 * (h_lo[j] + h_hi[j]) * dt;
      } else {
        finite = false;
        integral[j] = clocks[j].first.continuous_integral(a - clocks[j].second, b - clocks[j].second);
      }
      total += integral[j];
    }
    const double before = survival * std::exp(-total);
    for (std::size_t j = 0; j < n; ++j) {
      if (finite) {
        incidence[j] += 0.5 * (survival * h_lo[j] + before * h_hi[j]) * dt;
      } else if (total > 0.0) {
        incidence[j] += (survival - before) * integral[j] / total;
      }
    }
    survival = before;
    while (next_atom < atoms.size() && atoms[next_atom].time <= b) {
      const AtomEvent& atom = atoms[next_atom++];
      incidence[atom.clock] += survival * atom.mass;
      survival *= 1.0 - atom.mass;
    }
    record();
    std::swap(h_lo, h_hi);
  }
  return result;
}

Occupancy ctmc_oracle(const Model& model, double horizon, std::size_t max_states) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be finite and non-negative");
  }
  struct Transition {
    std::size_t to;
    double rate;
  };
  ClockRegistry registry(model);
  std::map<SystemState, std::size_t> index;
  std::vector<SystemState> states;
  std::vector<std::vector<Transition>> out;
  std::deque<std::size_t> frontier;
  ChangeTimes never;

  auto intern = [&](const SystemState& s) {
    auto [it, inserted] = index.try_emplace(s, states.size());
    if (inserted) {
      if (states.size() >= max_states) {
        throw StateSpaceTooLarge("reachable state space exceeds " + std::to_string(max_states) +
                                 " states");
      }
      states.push_back(s);
      out.emplace_back();
      frontier.push_back(it->second);
    }
    return it->second;
  };
  intern(model.initial_state());
  while (!frontier.empty()) {
    const std::size_t from = frontier.front();
    frontier.pop_front();
    const SystemState state = states[from];
    registry.observe(state);
    ClockContext context{state, never, 0.0};
    std::vector<Transition> moves;
    for (std::size_t c = 0; c < registry.size(); ++c) {
      const ClockSpec& clock = registry.clock(clock_id(c));
      EnablingOutcome outcome = evaluate_enabling(clock, context, Disabled{});
      const auto* e = std::get_if<Enabled>(&outcome);
      if (!e) continue;
      const auto* exp = std::get_if<Exponential>(&e->spec.continuous());
      if (!exp || !e->spec.atoms().empty()) {
        throw NonExponentialClock("clock " + clock.name + " has hazard " + format_hazard(e->spec));
      }
      if (exp->rate <= 0.0) continue;
      SystemState next = apply_mark(state, clock.mark);
      moves.push_back({intern(next), exp->rate});
    }
    out[from] = std::move(moves);
  }

  double uniform_rate = 0.0;
  for (const auto& moves : out) {
    double exit = 0.0;
    for (const auto& m : moves) exit += m.rate;
    uniform_rate = std::max(uniform_rate, exit);
  }
  const std::size_t n = states.size();
  std::vector<double> p(n, 0.0), acc(n, 0.0), next(n);
  p[0] = 1.0;
  const double mean = uniform_rate * horizon;
  if (mean == 0.0) {
    acc = p;
  } else {
    // Poisson weights in log space; stop once the remaining mass is < 1e-9.
    double weight_sum = 0.0;
    const double limit = mean + 50.0 * std::sqrt(mean) + 100.0;
    for (std::size_t k = 0;; ++k) {
      const double w = std::exp(-mean + double(k) * std::log(mean) - std::lgamma(double(k) + 1.0));
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * p[i];
      weight_sum += w;
      if ((double(k) > mean && 1.0 - weight_sum < 1e-9) || double(k) > limit) break;
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (p[i] == 0.0) continue;
        double stay = 1.0;
        for (const auto& m : out[i]) {
          const double move = m.rate / uniform_rate;
          next[m.to] += p[i] * move;
          stay -= move;
        }
        next[i] += p[i] * stay;
      }
      p.swap(next);
    }
  }
  Occupancy occupancy;
  for (std::size_t i = 0; i < n; ++i) {
    if (acc[i] > 0.0) occupancy[states[i]] = acc[i];
  }
  return occupancy;
}

double total_variation(const Occupancy& a, const Occupancy& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      sum += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      sum += std::abs(ib->second);
      ++ib;
    } else {
      sum += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * sum;
}

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double effective_n) {
  const double root = std::sqrt(effective_n);
  return kolmogorov_tail((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

TestResult ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  const std::size_t n = sorted.size();
  if (n < 10) throw InsufficientData("Kolmogorov-Smirnov needs at least 10 samples");
  double d = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double x = sorted[i];
    std::size_t j = i;
    while (j < n && sorted[j] == x) ++j;
    const double below = double(i) / double(n);
    const double upto = double(j) / double(n);
    d = std::max(d, std::abs(upto - cdf(x)));
    d = std::max(d, std::abs(below - cdf(std::nextafter(x, -kInfinity))));
    i = j;
  }
  return {d, ks_p_value(d, double(n))};
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 10 || b.size() < 10) {
    throw InsufficientData("two-sample Kolmogorov-Smirnov needs at least 10 samples each");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size());
  const double nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double x = (j == b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

TestResult chi_square(std::span<const double> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size()) {
    throw std::invalid_argument("observed and probability vectors differ in length");
  }
  double n = 0.0;
  for (double o : observed) n += o;
  std::vector<std::pair<double, double>> cells;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += n * probabilities[i];
    if (e_acc >= 5.0) {
      cells.emplace_back(o_acc, e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (cells.empty()) {
      cells.emplace_back(o_acc, e_acc);
    } else {
      cells.back().first += o_acc;
      cells.back().second += e_acc;
    }
  }
  if (cells.size() < 2) throw InsufficientData("chi-square needs two cells with expected count >= 5");
  double stat = 0.0;
  for (const auto& [o, e] : cells) stat += (o - e) * (o - e) / e;
  const double df = double(cells.size() - 1);
  return {stat, boost::math::gamma_q(df / 2.0, stat / 2.0)};
}

TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("count vectors differ in length");
  std::vector<std::pair<double, double>> cells;
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
    if (ca + cb >= 10.0) {
      cells.emplace_back(ca, cb);
      ca = cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (cells.empty()) {
      cells.emplace_back(ca, cb);
    } else {
      cells.back().first += ca;
      cells.back().second += cb;
    }
  }
  if (cells.size() < 2) throw InsufficientData("homogeneity test needs two populated cells");
  double na = 0.0, nb = 0.0;
  for (const auto& [x, y] : cells) {
    na += x;
    nb += y;
  }
  const double total = na + nb;
  double stat = 0.0;
  for (const auto& [x, y] : cells) {
    const double col = x + y;
    const double ea = na * col / total;
    const double eb = nb * col / total;
    stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
  }
  const double df = double(cells.size() - 1);
  return {stat, boost::math::gamma_q(df / 2.0, stat / 2.0)};
}

}  // namespace ctde
