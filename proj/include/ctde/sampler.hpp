#pragma once

// Sampler contract shared by the exact sampling methods.
//
// The kernel calls absorb() once at start and after every jump with the
// enabling changes, then next() to obtain the soonest event after `now`.
// Within a delta, entries are processed in the order newly_disabled,
// modified, newly_enabled, each list in ascending clock id. A clock that
// fired appears either in newly_disabled or in newly_enabled (it regenerates).

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctde/clock.hpp"
#include "ctde/hazard.hpp"
#include "ctde/prefix_sum_tree.hpp"
#include "ctde/putative_queue.hpp"
#include "ctde/rng.hpp"

namespace ctde {

struct SamplerEvent {
  ClockId clock{};
  double time = 0.0;
  friend bool operator==(const SamplerEvent&, const SamplerEvent&) = default;
};

// Ordering by time, then smallest clock id.
inline bool sooner(const SamplerEvent& a, const SamplerEvent& b) {
  return a.time < b.time || (a.time == b.time && a.clock < b.clock);
}

struct EnablingEntry {
  ClockId clock{};
  HazardSpec spec;
  double enabling_time = 0.0;
};

struct EnablingDelta {
  std::vector<EnablingEntry> newly_enabled;
  std::vector<ClockId> newly_disabled;
  std::vector<EnablingEntry> modified;
  std::optional<ClockId> fired;

  bool empty() const { return newly_enabled.empty() && newly_disabled.empty() && modified.empty(); }
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownClock : public SamplerError {
 public:
  explicit UnknownClock(ClockId clock)
      : SamplerError("delta references clock " + std::to_string(index_of(clock)) +
                     " which is not enabled in the sampler") {}
};

class DuplicateAtoms : public SamplerError {
 public:
  DuplicateAtoms(ClockId a, ClockId b, double time)
      : SamplerError("clocks " + std::to_string(index_of(a)) + " and " +
                     std::to_string(index_of(b)) + " both have an atom at time " +
                     std::to_string(time)) {}
};

class Sampler {
 public:
  virtual ~Sampler() = default;

  virtual std::string_view name() const = 0;
  virtual void absorb(const EnablingDelta& delta, double now, Rng& rng) = 0;
  // Soonest event strictly after `now`; nullopt when every clock's putative
  // time is infinite or nothing is enabled.
  virtual std::optional<SamplerEvent> next(double now, Rng& rng) = 0;
  virtual std::vector<ClockId> enabled_clocks() const = 0;
  // Forgets a clock that is not enabled here, including any saved budget.
  virtual void discard(ClockId) {}
};

// Enabled clocks and the registry of their future absolute atom times.
class ClockTable {
 public:
  struct FutureAtom {
    ClockId clock{};
    double mass = 0.0;
  };

  // Throws DuplicateAtoms if a future atom collides with another clock's.
  void enable(const EnablingEntry& entry, double now);
  // Throws UnknownClock if not enabled.
  Enabled disable(ClockId clock);

  const Enabled* find(ClockId clock) const {
    auto i = index_of(clock);
    return i < entries_.size() && entries_[i] ? &*entries_[i] : nullptr;
  }
  const Enabled& at(ClockId clock) const;
  std::size_t size() const { return count_; }
  std::vector<ClockId> ids() const;
  std::size_t capacity() const { return entries_.size(); }

  // Atoms at absolute times, ascending.
  const std::map<double, FutureAtom>& atoms() const { return atoms_; }

 private:
  std::vector<std::optional<Enabled>> entries_;
  std::vector<std::vector<double>> atom_times_;
  std::map<double, FutureAtom> atoms_;
  std::size_t count_ = 0;
};

// Skeleton that validates a delta against the table and dispatches hooks.
class TableSampler : public Sampler {
 public:
  void absorb(const EnablingDelta& delta, double now, Rng& rng) final;
  std::vector<ClockId> enabled_clocks() const override { return table_.ids(); }

 protected:
  virtual void on_disable(ClockId clock, const Enabled& old, double now, bool fired) = 0;
  virtual void on_modify(ClockId clock, const Enabled& old, const Enabled& current, double now,
                         Rng& rng) = 0;
  virtual void on_enable(ClockId clock, const Enabled& current, double now, bool fired,
                         Rng& rng) = 0;

  const ClockTable& table() const { return table_; }

 private:
  ClockTable table_;
};

// Draws one fresh uniform per enabled clock (ascending id) at every step and
// returns the minimum putative time.
class FirstReactionSampler final : public TableSampler {
 public:
  std::string_view name() const override { return "first-reaction"; }
  std::optional<SamplerEvent> next(double now, Rng& rng) override;

 protected:
  void on_disable(ClockId, const Enabled&, double, bool) override {}
  void on_modify(ClockId, const Enabled&, const Enabled&, double, Rng&) override {}
  void on_enable(ClockId, const Enabled&, double, bool, Rng&) override {}
};

// Checked when a clock fires under the Next Reaction bookkeeping.
struct BudgetAudit {
  ClockId clock{};
  double drawn_log_survival = 0.0;
  // Total hazard consumed since the draw, including the firing instant.
  double consumed = 0.0;
  // The clock fired on one of its atoms; consumption may then overshoot.
  bool at_atom = false;
  // Consumed hazard excluding the atom it fired on.
  double consumed_before_atom = 0.0;
};

// Saves ln S' per clock and consumes it with the time process across
// modifications and disabled periods. One uniform per fresh draw: clocks
// newly enabled that have no suspended budget, and every re-enabled fired
// clock.
class NextReactionSampler final : public TableSampler {
 public:
  struct Ledger {
    double drawn_log_survival = 0.0;
    double consumed = 0.0;
    double segment_start = 0.0;
    // Duration since enabling of the putative time (for atom detection).
    double putative_duration = 0.0;
    bool suspended = false;
  };

  std::string_view name() const override { return "next-reaction"; }
  std::optional<SamplerEvent> next(double now, Rng& rng) override;
  void discard(ClockId clock) override;

  void set_audit_sink(std::function<void(const BudgetAudit&)> sink) { audit_ = std::move(sink); }
  const Ledger* ledger(ClockId clock) const;
  double putative_time(ClockId clock) const { return queue_.time_of(clock); }
  const PutativeQueue& queue() const { return queue_; }

 protected:
  void on_disable(ClockId clock, const Enabled& old, double now, bool fired) override;
  void on_modify(ClockId clock, const Enabled& old, const Enabled& current, double now,
                 Rng& rng) override;
  void on_enable(ClockId clock, const Enabled& current, double now, bool fired, Rng& rng) override;

 private:
  void schedule(ClockId clock, const Enabled& current, double now);

  std::vector<std::optional<Ledger>> ledgers_;
  PutativeQueue queue_;
  std::function<void(const BudgetAudit&)> audit_;
};

// Redraws every modified or newly enabled clock with a fresh uniform from
// its distribution conditioned on survival to now; unaffected clocks keep
// their putative times. One uniform per (re)draw.
class NextToFireSampler final : public TableSampler {
 public:
  std::string_view name() const override { return "next-to-fire"; }
  std::optional<SamplerEvent> next(double now, Rng& rng) override;
  double putative_time(ClockId clock) const { return queue_.time_of(clock); }
  const PutativeQueue& queue() const { return queue_; }

 protected:
  void on_disable(ClockId clock, const Enabled& old, double now, bool fired) override;
  void on_modify(ClockId clock, const Enabled& old, const Enabled& current, double now,
                 Rng& rng) override;
  void on_enable(ClockId clock, const Enabled& current, double now, bool fired, Rng& rng) override;

 private:
  void redraw(ClockId clock, const Enabled& current, double now, Rng& rng);

  PutativeQueue queue_;
};

// Waiting-time factorization: inverts the total survival of all enabled
// clocks for the next time, then draws which clock by prefix sums of the
// hazards at that time. Consumes exactly two uniforms per step (u1 for the
// time, u2 for the clock), even when an atom decides the clock.
class DirectSampler final : public TableSampler {
 public:
  std::string_view name() const override { return "direct"; }
  std::optional<SamplerEvent> next(double now, Rng& rng) override;
  const PrefixSumTree& tree() const { return tree_; }

 protected:
  void on_disable(ClockId clock, const Enabled& old, double now, bool fired) override;
  void on_modify(ClockId clock, const Enabled& old, const Enabled& current, double now,
                 Rng& rng) override;
  void on_enable(ClockId clock, const Enabled& current, double now, bool fired, Rng& rng) override;

 private:
  void place(ClockId clock, const Enabled& current);
  void remove(ClockId clock);

  PrefixSumTree tree_;
  // Enabled clocks whose continuous hazard varies in time or carries atoms.
  std::vector<ClockId> varying_;
};

// Maps an enabled clock to a child sampler index.
using PartitionRule = std::function<std::size_t(ClockId, const HazardSpec&)>;

// Each child proposes its soonest event; the overall minimum wins. Children
// keep or discard losing proposals under their own contracts.
class HierarchicalSampler final : public Sampler {
 public:
  HierarchicalSampler(std::vector<std::unique_ptr<Sampler>> children, PartitionRule rule);

  std::string_view name() const override { return "hierarchical"; }
  void absorb(const EnablingDelta& delta, double now, Rng& rng) override;
  std::optional<SamplerEvent> next(double now, Rng& rng) override;
  std::vector<ClockId> enabled_clocks() const override { return table_.ids(); }
  void discard(ClockId clock) override;

  const Sampler& child(std::size_t i) const { return *children_.at(i); }
  std::size_t child_count() const { return children_.size(); }
  std::optional<std::size_t> owner(ClockId clock) const;

 private:
  std::vector<std::unique_ptr<Sampler>> children_;
  PartitionRule rule_;
  ClockTable table_;
  // Child that last held each clock, or -1.
  std::vector<int> owner_;
};

// Sampler selection by name, plus the hierarchical partition: keys are
// "Atomic" (specs with atoms), a continuous family name, or "default";
// values are leaf sampler names.
struct SamplerSpec {
  std::string name = "direct";
  std::map<std::string, std::string> partition;

  friend bool operator==(const SamplerSpec&, const SamplerSpec&) = default;
};

inline const std::vector<std::string>& sampler_names() {
  static const std::vector<std::string> names{"first-reaction", "next-reaction", "next-to-fire",
                                              "direct", "hierarchical"};
  return names;
}

// Throws std::invalid_argument for unknown names (message lists valid names).
std::unique_ptr<Sampler> make_sampler(const SamplerSpec& spec);

// "Exponential=direct,default=next-reaction" <-> map.
std::map<std::string, std::string> parse_partition(std::string_view text);
std::string format_partition(const std::map<std::string, std::string>& partition);

}  // namespace ctde
