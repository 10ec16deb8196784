#include <algorithm>
#include <cmath>

#include "ctde/detail/inversion.hpp"
#include "ctde/sampler.hpp"
#include "detail_time.hpp"

namespace ctde {

void DirectSampler::place(ClockId clock, const Enabled& current) {
  auto i = index_of(clock);
  if (i >= tree_.size()) tree_.resize(i + 1);
  if (current.spec.is_constant_rate()) {
    tree_.set(i, current.spec.hazard(0.0));
  } else {
    tree_.set(i, 0.0);
    varying_.insert(std::lower_bound(varying_.begin(), varying_.end(), clock), clock);
  }
}

void DirectSampler::remove(ClockId clock) {
  tree_.set(index_of(clock), 0.0);
  auto it = std::lower_bound(varying_.begin(), varying_.end(), clock);
  if (it != varying_.end() && *it == clock) varying_.erase(it);
}

void DirectSampler::on_disable(ClockId clock, const Enabled&, double, bool) { remove(clock); }

void DirectSampler::on_modify(ClockId clock, const Enabled&, const Enabled& current, double,
                              Rng&) {
  remove(clock);
  place(clock, current);
}

void DirectSampler::on_enable(ClockId clock, const Enabled& current, double, bool, Rng&) {
  place(clock, current);
}

std::optional<SamplerEvent> DirectSampler::next(double now, Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  if (table().size() == 0) return std::nullopt;

  for (ClockId v : varying_) tree_.set(index_of(v), 0.0);
  const double base = tree_.total();

  auto continuous = [&](double a, double b) {
    double total = base > 0.0 ? base * (b - a) : 0.0;
    for (ClockId v : varying_) {
      const Enabled& e = table().at(v);
      total += e.spec.continuous_integral(a - e.enabling_time, b - e.enabling_time);
    }
    return total;
  };
  auto rate = [&](double t) {
    double total = base;
    for (ClockId v : varying_) {
      const Enabled& e = table().at(v);
      total += e.spec.hazard(t - e.enabling_time);
    }
    return total;
  };
  auto invert = [&](double start, double amount, double upper) {
    if (varying_.empty()) {
      if (!(base > 0.0)) return kInfinity;
      return std::min(start + amount / base, upper);
    }
    return detail::invert_increasing(
        start, amount, [&](double t) { return continuous(start, t); }, rate, upper);
  };

  double remaining = -std::log1p(-u1);
  double segment = now;
  double t = kInfinity;
  bool inverted = false;
  const auto& atoms = table().atoms();
  for (auto it = atoms.upper_bound(now); it != atoms.end(); ++it) {
    const double at = it->first;
    const double used = continuous(segment, at);
    if (used >= remaining) {
      t = invert(segment, remaining, at);
      inverted = true;
      break;
    }
    remaining -= used;
    const double jump = detail::log_complement(it->second.mass);
    if (jump >= remaining) return SamplerEvent{it->second.clock, at};
    remaining -= jump;
    segment = at;
  }
  if (!inverted) t = invert(segment, remaining, kInfinity);
  if (std::isinf(t)) return std::nullopt;
  t = detail::absolute_time(0.0, t, now);

  for (ClockId v : varying_) {
    const Enabled& e = table().at(v);
    tree_.set(index_of(v), e.spec.hazard(t - e.enabling_time));
  }
  const double total = tree_.total();
  if (std::isinf(total)) {
    for (std::size_t i = 0; i < tree_.size(); ++i) {
      if (std::isinf(tree_.value(i))) return SamplerEvent{clock_id(i), t};
    }
  }
  if (!(total > 0.0)) {
    throw SamplerError("direct method found zero total hazard at the sampled time " +
                       std::to_string(t));
  }
  return SamplerEvent{clock_id(tree_.find(u2 * total)), t};
}

}  // namespace ctde
