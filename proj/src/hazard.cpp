#include "ctde/hazard.hpp"
#include "ctde/detail/inversion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ctde {
namespace {

using GammaPolicy = boost::math::policies::policy<
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::underflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::domain_error<boost::math::policies::ignore_error>>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Large-argument expansion of Q(k, x) = x^{k-1} e^{-x} / Γ(k) · Σ_n (k-1)…(k-n) / x^n.
double gamma_tail_series(double shape, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 40; ++n) {
    double next = term * (shape - n) / x;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Below this upper-tail probability the asymptotic series takes over.
constexpr double kTinyTail = 1e-280;

// −ln Q(shape, x): cumulative hazard of the standard gamma.
double gamma_cumulative_hazard(double shape, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return kInfinity;
  double p = boost::math::gamma_p(shape, x, GammaPolicy());
  if (p < 0.5) return -std::log1p(-p);
  double q = boost::math::gamma_q(shape, x, GammaPolicy());
  if (q > kTinyTail) return -std::log(q);
  return x - (shape - 1.0) * std::log(x) + std::lgamma(shape) -
         std::log(gamma_tail_series(shape, x));
}

double gamma_hazard(double shape, double x) {
  if (x <= 0.0) {
    if (shape < 1.0) return kInfinity;
    return shape == 1.0 ? 1.0 : 0.0;
  }
  double q = boost::math::gamma_q(shape, x, GammaPolicy());
  if (q > kTinyTail) return boost::math::gamma_p_derivative(shape, x, GammaPolicy()) / q;
  return 1.0 / gamma_tail_series(shape, x);
}

void validate_continuous(const ContinuousHazard& c) {
  std::visit(
      Overloaded{
          [](const NoHazard&) {},
          [](const Exponential& e) {
            if (!finite_nonneg(e.rate)) throw InvalidHazard("Exponential rate must be finite and >= 0");
          },
          [](const Weibull& w) {
            if (!(std::isfinite(w.shape) && w.shape > 0.0) || !(std::isfinite(w.scale) && w.scale > 0.0))
              throw InvalidHazard("Weibull shape and scale must be finite and > 0");
          },
          [](const Gamma& g) {
            if (!(std::isfinite(g.shape) && g.shape > 0.0) || !(std::isfinite(g.rate) && g.rate > 0.0))
              throw InvalidHazard("Gamma shape and rate must be finite and > 0");
          },
          [](const UniformInterval& u) {
            if (!finite_nonneg(u.a) || !std::isfinite(u.b) || !(u.a < u.b))
              throw InvalidHazard("UniformInterval requires 0 <= a < b");
          },
          [](const PiecewiseConstant& p) {
            if (p.breakpoints.empty() || p.breakpoints.size() != p.rates.size())
              throw InvalidHazard("PiecewiseConstant needs one rate per breakpoint");
            if (p.breakpoints.front() != 0.0)
              throw InvalidHazard("PiecewiseConstant first breakpoint must be 0");
            for (std::size_t i = 0; i < p.rates.size(); ++i) {
              if (!finite_nonneg(p.rates[i])) throw InvalidHazard("PiecewiseConstant rates must be finite and >= 0");
              if (!std::isfinite(p.breakpoints[i]))
                throw InvalidHazard("PiecewiseConstant breakpoints must be finite");
              if (i > 0 && !(p.breakpoints[i] > p.breakpoints[i - 1]))
                throw InvalidHazard("PiecewiseConstant breakpoints must be strictly increasing");
            }
          },
      },
      c);
}

void validate_atoms(const std::vector<Atom>& atoms) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    if (!std::isfinite(a.offset) || !(a.offset > 0.0))
      throw InvalidHazard("atom offset must be finite and > 0");
    if (!(a.mass > 0.0 && a.mass <= 1.0)) throw InvalidHazard("atom mass must lie in (0, 1]");
    if (i > 0 && !(a.offset > atoms[i - 1].offset))
      throw InvalidHazard("atom offsets must be strictly increasing");
    if (a.mass == 1.0 && i + 1 != atoms.size())
      throw InvalidHazard("an atom with mass 1 must be the last atom");
  }
}

// Index of the piecewise segment containing t.
std::size_t segment_of(const PiecewiseConstant& p, double t) {
  auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), t);
  return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - p.breakpoints.begin()) - 1));
}

double piecewise_integral(const PiecewiseConstant& p, double t1, double t2) {
  double total = 0.0;
  std::size_t i = segment_of(p, t1);
  double left = t1;
  while (left < t2) {
    double right = (i + 1 < p.breakpoints.size()) ? std::min(t2, p.breakpoints[i + 1]) : t2;
    if (p.rates[i] > 0.0) total += p.rates[i] * (right - left);
    left = right;
    ++i;
  }
  return total;
}

double piecewise_invert(const PiecewiseConstant& p, double start, double amount) {
  std::size_t i = segment_of(p, start);
  double left = start;
  double remaining = amount;
  for (;;) {
    bool last = i + 1 >= p.breakpoints.size();
    double right = last ? kInfinity : p.breakpoints[i + 1];
    double rate = p.rates[i];
    if (rate > 0.0) {
      double available = last ? kInfinity : rate * (right - left);
      if (available >= remaining) return std::min(right, left + remaining / rate);
      remaining -= available;
    }
    if (last) return kInfinity;
    left = right;
    ++i;
  }
}

double log1m(double mass) { return mass >= 1.0 ? kInfinity : -std::log1p(-mass); }

}  // namespace

HazardSpec::HazardSpec(ContinuousHazard continuous, std::vector<Atom> atoms)
    : continuous_(std::move(continuous)), atoms_(std::move(atoms)) {
  validate_continuous(continuous_);
  validate_atoms(atoms_);
}

std::string_view HazardSpec::family() const {
  return std::visit(Overloaded{
                        [](const NoHazard&) { return std::string_view("None"); },
                        [](const Exponential&) { return std::string_view("Exponential"); },
                        [](const Weibull&) { return std::string_view("Weibull"); },
                        [](const Gamma&) { return std::string_view("Gamma"); },
                        [](const UniformInterval&) { return std::string_view("UniformInterval"); },
                        [](const PiecewiseConstant&) { return std::string_view("PiecewiseConstant"); },
                    },
                    continuous_);
}

bool HazardSpec::is_constant_rate() const {
  if (!atoms_.empty()) return false;
  return std::visit(Overloaded{
                        [](const NoHazard&) { return true; },
                        [](const Exponential&) { return true; },
                        [](const Weibull& w) { return w.shape == 1.0; },
                        [](const Gamma& g) { return g.shape == 1.0; },
                        [](const UniformInterval&) { return false; },
                        [](const PiecewiseConstant& p) { return p.rates.size() == 1; },
                    },
                    continuous_);
}

double HazardSpec::hazard(double t) const {
  return std::visit(
      Overloaded{
          [](const NoHazard&) { return 0.0; },
          [](const Exponential& e) { return e.rate; },
          [t](const Weibull& w) {
            return (w.shape / w.scale) * std::pow(t / w.scale, w.shape - 1.0);
          },
          [t](const Gamma& g) { return g.rate * gamma_hazard(g.shape, g.rate * t); },
          [t](const UniformInterval& u) {
            if (t < u.a) return 0.0;
            if (t >= u.b) return kInfinity;
            return 1.0 / (u.b - t);
          },
          [t](const PiecewiseConstant& p) { return p.rates[segment_of(p, t)]; },
      },
      continuous_);
}

double HazardSpec::continuous_integral(double t1, double t2) const {
  if (!(t2 > t1)) return 0.0;
  return std::visit(
      Overloaded{
          [](const NoHazard&) { return 0.0; },
          [=](const Exponential& e) { return e.rate == 0.0 ? 0.0 : e.rate * (t2 - t1); },
          [=](const Weibull& w) {
            if (std::isinf(t2)) return kInfinity;
            return std::pow(t2 / w.scale, w.shape) - std::pow(t1 / w.scale, w.shape);
          },
          [=](const Gamma& g) {
            return gamma_cumulative_hazard(g.shape, g.rate * t2) -
                   gamma_cumulative_hazard(g.shape, g.rate * t1);
          },
          [=](const UniformInterval& u) {
            if (t2 >= u.b) return kInfinity;
            double lo = std::max(t1, u.a);
            double hi = std::max(t2, u.a);
            return std::log((u.b - lo) / (u.b - hi));
          },
          [=](const PiecewiseConstant& p) { return piecewise_integral(p, t1, t2); },
      },
      continuous_);
}

double HazardSpec::invert_continuous(double start, double amount) const {
  if (!(amount > 0.0)) return start;
  if (std::isinf(amount)) return kInfinity;
  return std::visit(
      Overloaded{
          [](const NoHazard&) { return kInfinity; },
          [=](const Exponential& e) { return e.rate > 0.0 ? start + amount / e.rate : kInfinity; },
          [=](const Weibull& w) {
            double base = std::pow(start / w.scale, w.shape);
            return std::max(start, w.scale * std::pow(base + amount, 1.0 / w.shape));
          },
          [=, this](const Gamma&) {
            return detail::invert_increasing(
                start, amount, [this, start](double t) { return continuous_integral(start, t); },
                [this](double t) { return hazard(t); });
          },
          [=](const UniformInterval& u) {
            if (start >= u.b) return start;
            double from = std::max(start, u.a);
            return u.b - (u.b - from) * std::exp(-amount);
          },
          [=](const PiecewiseConstant& p) { return piecewise_invert(p, start, amount); },
      },
      continuous_);
}

double survival(const HazardSpec& spec, double t) {
  double s = std::exp(-spec.continuous_integral(0.0, t));
  for (const Atom& a : spec.atoms()) {
    if (a.offset > t) break;
    s *= (1.0 - a.mass);
  }
  return s;
}

double time_process(const HazardSpec& spec, double t1, double t2) {
  double total = spec.continuous_integral(t1, t2);
  for (const Atom& a : spec.atoms()) {
    if (a.offset <= t1) continue;
    if (a.offset > t2) break;
    total += log1m(a.mass);
  }
  return total;
}

FirstDraw sample_first(const HazardSpec& spec, double u) {
  double log_survival = std::log1p(-u);
  // u = 0 takes the limit from above: the left edge of the support.
  double required = u > 0.0 ? log_survival : -std::numeric_limits<double>::min();
  return {invert_conditional(spec, 0.0, required), log_survival};
}

double invert_conditional(const HazardSpec& spec, double shift, double required_log_survival) {
  double remaining = -required_log_survival;
  if (!(remaining > 0.0)) return shift;
  double segment_start = shift;
  for (const Atom& a : spec.atoms()) {
    if (a.offset <= shift) continue;
    double continuous = spec.continuous_integral(segment_start, a.offset);
    if (continuous >= remaining) {
      return std::min(a.offset, spec.invert_continuous(segment_start, remaining));
    }
    remaining -= continuous;
    double jump = log1m(a.mass);
    if (jump >= remaining) return a.offset;
    remaining -= jump;
    segment_start = a.offset;
  }
  return spec.invert_continuous(segment_start, remaining);
}

std::vector<Atom> next_atoms(const HazardSpec& spec, double t1, double t2) {
  std::vector<Atom> out;
  for (const Atom& a : spec.atoms()) {
    if (a.offset > t1 && a.offset <= t2) out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text form

namespace {

class HazardParser {
 public:
  explicit HazardParser(std::string_view text) : text_(text) {}

  HazardSpec parse() {
    ContinuousHazard continuous = NoHazard{};
    std::vector<Atom> atoms;
    bool have_continuous = false;
    do {
      std::string name = identifier();
      expect('(');
      if (name == "Atom") {
        auto args = numbers(2, 2);
        atoms.push_back({args[0], args[1]});
      } else {
        if (have_continuous) fail("more than one continuous family");
        have_continuous = true;
        continuous = family(name);
      }
      expect(')');
    } while (accept('+'));
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters");
    return HazardSpec(std::move(continuous), std::move(atoms));
  }

 private:
  ContinuousHazard family(const std::string& name) {
    if (name == "None") {
      numbers(0, 0);
      return NoHazard{};
    }
    if (name == "Exponential") {
      auto a = numbers(1, 1);
      return Exponential{a[0]};
    }
    if (name == "Weibull") {
      auto a = numbers(2, 2);
      return Weibull{a[0], a[1]};
    }
    if (name == "Gamma") {
      auto a = numbers(2, 2);
      return Gamma{a[0], a[1]};
    }
    if (name == "UniformInterval") {
      auto a = numbers(2, 2);
      return UniformInterval{a[0], a[1]};
    }
    if (name == "PiecewiseConstant") {
      PiecewiseConstant p;
      do {
        p.breakpoints.push_back(number());
        expect(':');
        p.rates.push_back(number());
      } while (accept(','));
      return p;
    }
    fail("unknown hazard family '" + name + "'");
  }

  std::vector<double> numbers(std::size_t min, std::size_t max) {
    std::vector<double> out;
    skip_space();
    if (peek() != ')') {
      do {
        out.push_back(number());
      } while (accept(','));
    }
    if (out.size() < min || out.size() > max) fail("wrong number of parameters");
    return out;
  }

  double number() {
    skip_space();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  std::string identifier() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a family name");
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  bool accept(char c) {
    skip_space();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidHazard("hazard '" + std::string(text_) + "': " + what + " at column " +
                        std::to_string(pos_ + 1));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

HazardSpec parse_hazard(std::string_view text) { return HazardParser(text).parse(); }

std::string format_hazard(const HazardSpec& spec) {
  std::string out(spec.family());
  out += '(';
  std::visit(Overloaded{
                 [](const NoHazard&) {},
                 [&](const Exponential& e) { out += shortest(e.rate); },
                 [&](const Weibull& w) { out += shortest(w.shape) + ", " + shortest(w.scale); },
                 [&](const Gamma& g) { out += shortest(g.shape) + ", " + shortest(g.rate); },
                 [&](const UniformInterval& u) { out += shortest(u.a) + ", " + shortest(u.b); },
                 [&](const PiecewiseConstant& p) {
                   for (std::size_t i = 0; i < p.rates.size(); ++i) {
                     if (i) out += ", ";
                     out += shortest(p.breakpoints[i]) + ":" + shortest(p.rates[i]);
                   }
                 },
             },
             spec.continuous());
  out += ')';
  for (const Atom& a : spec.atoms()) {
    out += " + Atom(" + shortest(a.offset) + ", " + shortest(a.mass) + ")";
  }
  return out;
}

}  // namespace ctde
