#pragma once

// Hazard specifications: a continuous hazard family plus a finite list of
// atoms (point masses of the intensity). Durations are measured from the
// clock's enabling time. A consumed hazard of +infinity means survival is
// exhausted.

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ctde {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class InvalidHazard : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Atom {
  double offset = 0.0;
  double mass = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Exponential {
  double rate = 0.0;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct Weibull {
  double shape = 1.0;
  double scale = 1.0;
  friend bool operator==(const Weibull&, const Weibull&) = default;
};

struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
  friend bool operator==(const Gamma&, const Gamma&) = default;
};

// Uniformly distributed duration on [a, b]. The hazard diverges at b.
struct UniformInterval {
  double a = 0.0;
  double b = 1.0;
  friend bool operator==(const UniformInterval&, const UniformInterval&) = default;
};

// rates[i] applies on [breakpoints[i], breakpoints[i+1]); the last rate
// extends to infinity. breakpoints[0] must be 0.
struct PiecewiseConstant {
  std::vector<double> breakpoints;
  std::vector<double> rates;
  friend bool operator==(const PiecewiseConstant&, const PiecewiseConstant&) = default;
};

struct NoHazard {
  friend bool operator==(const NoHazard&, const NoHazard&) = default;
};

using ContinuousHazard =
    std::variant<NoHazard, Exponential, Weibull, Gamma, UniformInterval, PiecewiseConstant>;

// Result of a first draw: the putative duration and ln(S') consumed by it.
struct FirstDraw {
  double duration = 0.0;
  double log_survival = 0.0;
};

class HazardSpec {
 public:
  HazardSpec() = default;
  // Throws InvalidHazard when parameters or atoms violate the invariants.
  explicit HazardSpec(ContinuousHazard continuous, std::vector<Atom> atoms = {});

  static HazardSpec exponential(double rate) { return HazardSpec(Exponential{rate}); }
  static HazardSpec weibull(double shape, double scale) {
    return HazardSpec(Weibull{shape, scale});
  }
  static HazardSpec atoms_only(std::vector<Atom> atoms) {
    return HazardSpec(NoHazard{}, std::move(atoms));
  }

  const ContinuousHazard& continuous() const { return continuous_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  // Family name of the continuous part: Exponential, Weibull, Gamma,
  // UniformInterval, PiecewiseConstant or None.
  std::string_view family() const;

  // True when the continuous hazard is a constant in time and there are no
  // atoms, so that the hazard never changes between enabling events.
  bool is_constant_rate() const;

  // Continuous hazard value h(t), right-continuous at family breakpoints.
  double hazard(double t) const;

  // ∫_{t1}^{t2} h(s) ds for the continuous part only.
  double continuous_integral(double t1, double t2) const;

  // Smallest t ≥ start with continuous_integral(start, t) ≥ amount, or
  // +infinity if the continuous hazard never accumulates that much.
  double invert_continuous(double start, double amount) const;

  friend bool operator==(const HazardSpec&, const HazardSpec&) = default;

 private:
  ContinuousHazard continuous_;
  std::vector<Atom> atoms_;
};

// exp(−∫₀ᵗ h) · Π_{offset ≤ t} (1 − mass).
double survival(const HazardSpec& spec, double t);

// ∫_{t1}^{t2} h − Σ_{t1 < offset ≤ t2} ln(1 − mass). +infinity if a mass-one
// atom lies in (t1, t2].
double time_process(const HazardSpec& spec, double t1, double t2);

// Inversion of the survival at 1 − u. Returns the duration (possibly
// +infinity) and ln(1 − u).
FirstDraw sample_first(const HazardSpec& spec, double u);

// Smallest t' ≥ shift with time_process(spec, shift, t') ≥ −required_log_survival.
double invert_conditional(const HazardSpec& spec, double shift, double required_log_survival);

// Atoms with offset in (t1, t2], in order.
std::vector<Atom> next_atoms(const HazardSpec& spec, double t1, double t2);

// Text form used by the model config: `Family(p1, p2, ...)` optionally
// followed by `+ Atom(offset, mass)` terms. PiecewiseConstant parameters are
// `breakpoint:rate` pairs, e.g. `PiecewiseConstant(0:1, 2:0.5)`.
HazardSpec parse_hazard(std::string_view text);
std::string format_hazard(const HazardSpec& spec);

}  // namespace ctde
