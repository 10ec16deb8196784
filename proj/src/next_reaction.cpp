#include <cmath>

#include "ctde/sampler.hpp"
#include "detail_time.hpp"

namespace ctde {

namespace {

// Hazard consumed over (t1, t2) in time since enabling, excluding any atom
// at exactly t2.
double consumed_before(const HazardSpec& spec, double t1, double t2) {
  double total = spec.continuous_integral(t1, t2);
  for (const Atom& atom : spec.atoms()) {
    if (atom.offset > t1 && atom.offset < t2) total += detail::log_complement(atom.mass);
  }
  return total;
}

const Atom* atom_at(const HazardSpec& spec, double offset) {
  for (const Atom& atom : spec.atoms()) {
    if (atom.offset == offset) return &atom;
  }
  return nullptr;
}

}  // namespace

const NextReactionSampler::Ledger* NextReactionSampler::ledger(ClockId clock) const {
  auto i = index_of(clock);
  return i < ledgers_.size() && ledgers_[i] ? &*ledgers_[i] : nullptr;
}

void NextReactionSampler::schedule(ClockId clock, const Enabled& current, double now) {
  Ledger& slot = *ledgers_[index_of(clock)];
  double required = slot.drawn_log_survival + slot.consumed;
  double duration = invert_conditional(current.spec, now - current.enabling_time, required);
  slot.putative_duration = duration;
  slot.segment_start = now;
  double t = detail::absolute_time(current.enabling_time, duration, now);
  if (queue_.contains(clock)) {
    queue_.update(clock, t);
  } else {
    queue_.push(clock, t);
  }
}

void NextReactionSampler::on_enable(ClockId clock, const Enabled& current, double now, bool fired,
                                    Rng& rng) {
  auto i = index_of(clock);
  if (i >= ledgers_.size()) ledgers_.resize(i + 1);
  auto& slot = ledgers_[i];
  if (!slot || fired) {
    slot = Ledger{std::log1p(-rng.uniform()), 0.0, now, 0.0, false};
  } else {
    slot->suspended = false;
  }
  schedule(clock, current, now);
}

void NextReactionSampler::on_modify(ClockId clock, const Enabled& old, const Enabled& current,
                                    double now, Rng&) {
  Ledger& slot = *ledgers_[index_of(clock)];
  slot.consumed += time_process(old.spec, slot.segment_start - old.enabling_time,
                                now - old.enabling_time);
  schedule(clock, current, now);
}

void NextReactionSampler::on_disable(ClockId clock, const Enabled& old, double now, bool fired) {
  auto& slot = ledgers_[index_of(clock)];
  double start = slot->segment_start - old.enabling_time;
  if (fired) {
    if (audit_) {
      double end = slot->putative_duration;
      BudgetAudit audit;
      audit.clock = clock;
      audit.drawn_log_survival = slot->drawn_log_survival;
      audit.consumed_before_atom = slot->consumed + consumed_before(old.spec, start, end);
      audit.consumed = audit.consumed_before_atom;
      if (const Atom* atom = atom_at(old.spec, end)) {
        audit.at_atom = true;
        audit.consumed += detail::log_complement(atom->mass);
      }
      audit_(audit);
    }
    slot.reset();
  } else {
    slot->consumed += time_process(old.spec, start, now - old.enabling_time);
    slot->segment_start = now;
    slot->suspended = true;
  }
  queue_.erase(clock);
}

void NextReactionSampler::discard(ClockId clock) {
  auto i = index_of(clock);
  if (i < ledgers_.size()) ledgers_[i].reset();
  if (queue_.contains(clock)) queue_.erase(clock);
}

std::optional<SamplerEvent> NextReactionSampler::next(double, Rng&) {
  if (queue_.empty()) return std::nullopt;
  auto top = queue_.top();
  if (std::isinf(top.time)) return std::nullopt;
  return SamplerEvent{top.clock, top.time};
}

}  // namespace ctde
