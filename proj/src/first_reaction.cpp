#include <cmath>

#include "ctde/sampler.hpp"
#include "detail_time.hpp"

namespace ctde {

std::optional<SamplerEvent> FirstReactionSampler::next(double now, Rng& rng) {
  std::optional<SamplerEvent> best;
  for (std::size_t i = 0; i < table().capacity(); ++i) {
    ClockId clock = clock_id(i);
    const Enabled* e = table().find(clock);
    if (!e) continue;
    double u = rng.uniform();
    double duration = invert_conditional(e->spec, now - e->enabling_time, std::log1p(-u));
    SamplerEvent candidate{clock, detail::absolute_time(e->enabling_time, duration, now)};
    if (!best || sooner(candidate, *best)) best = candidate;
  }
  if (!best || std::isinf(best->time)) return std::nullopt;
  return best;
}

}  // namespace ctde
