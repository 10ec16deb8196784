#include <cmath>

#include "ctde/sampler.hpp"
#include "detail_time.hpp"

namespace ctde {

void NextToFireSampler::redraw(ClockId clock, const Enabled& current, double now, Rng& rng) {
  double u = rng.uniform();
  double duration = invert_conditional(current.spec, now - current.enabling_time, std::log1p(-u));
  double t = detail::absolute_time(current.enabling_time, duration, now);
  if (queue_.contains(clock)) {
    queue_.update(clock, t);
  } else {
    queue_.push(clock, t);
  }
}

void NextToFireSampler::on_disable(ClockId clock, const Enabled&, double, bool) {
  queue_.erase(clock);
}

void NextToFireSampler::on_modify(ClockId clock, const Enabled&, const Enabled& current,
                                  double now, Rng& rng) {
  redraw(clock, current, now, rng);
}

void NextToFireSampler::on_enable(ClockId clock, const Enabled& current, double now, bool,
                                  Rng& rng) {
  redraw(clock, current, now, rng);
}

std::optional<SamplerEvent> NextToFireSampler::next(double, Rng&) {
  if (queue_.empty()) return std::nullopt;
  auto top = queue_.top();
  if (std::isinf(top.time)) return std::nullopt;
  return SamplerEvent{top.clock, top.time};
}

}  // namespace ctde
