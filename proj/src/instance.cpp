#include "bpoa/instance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bpoa/errors.hpp"

namespace bpoa {

Prior::Prior(std::vector<ValueAtom> atoms, ValueDomain domain)
    : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidInput("prior has no atoms");
  double total = 0.0;
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    const ValueAtom& a = atoms_[j];
    if (!std::isfinite(a.value) || !std::isfinite(a.mass)) {
      throw InvalidInput("prior atom is not finite");
    }
    if (domain == ValueDomain::UnitInterval && (a.value < 0.0 || a.value > 1.0)) {
      throw InvalidInput("prior value " + std::to_string(a.value) +
                         " outside [0, 1]");
    }
    if (!(a.mass > 0.0) || a.mass > 1.0 + kTol) {
      throw InvalidInput("prior mass must lie in (0, 1]");
    }
    if (j > 0 && !(a.value > atoms_[j - 1].value)) {
      throw InvalidInput("prior values must be strictly increasing");
    }
    total += a.mass;
  }
  if (std::abs(total - 1.0) > kTol) {
    throw InvalidInput("prior masses sum to " + std::to_string(total));
  }
  mean_ = 0.0;
  for (const ValueAtom& a : atoms_) mean_ += a.value * a.mass;
}

Prior Prior::normalized(std::vector<ValueAtom> atoms, ValueDomain domain) {
  std::sort(atoms.begin(), atoms.end(),
            [](const ValueAtom& a, const ValueAtom& b) { return a.value < b.value; });
  std::vector<ValueAtom> merged;
  for (const ValueAtom& a : atoms) {
    if (a.mass <= 0.0) continue;
    if (!merged.empty() && merged.back().value == a.value) {
      merged.back().mass += a.mass;
    } else {
      merged.push_back(a);
    }
  }
  return Prior(std::move(merged), domain);
}

Prior Prior::point(double value) { return Prior({{value, 1.0}}); }

Prior Prior::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("Bernoulli parameter outside [0, 1]");
  if (p == 0.0) return point(0.0);
  if (p == 1.0) return point(1.0);
  return Prior({{0.0, 1.0 - p}, {1.0, p}});
}

bool Prior::in_unit_interval() const {
  return atoms_.front().value >= 0.0 && atoms_.back().value <= 1.0;
}

double Prior::tail_integral(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  double remaining = x;
  double integral = 0.0;
  for (auto it = atoms_.rbegin(); it != atoms_.rend() && remaining > 0.0; ++it) {
    const double take = std::min(it->mass, remaining);
    integral += take * it->value;
    remaining -= take;
  }
  return integral;
}

double Prior::tail_mean(double x) const {
  if (x <= 0.0) return max_value();
  return tail_integral(x) / std::min(x, 1.0);
}

std::vector<double> Prior::top_quantile_masses(double x) const {
  std::vector<double> out(atoms_.size(), 0.0);
  double remaining = std::clamp(x, 0.0, 1.0);
  for (std::size_t j = atoms_.size(); j-- > 0 && remaining > 0.0;) {
    const double take = std::min(atoms_[j].mass, remaining);
    out[j] = take;
    remaining -= take;
  }
  // Rounding in the running difference must not leave a sliver of the
  // last straddled atom unassigned when x covers the whole distribution.
  if (x >= 1.0) {
    for (std::size_t j = 0; j < atoms_.size(); ++j) out[j] = atoms_[j].mass;
  }
  return out;
}

UtilityFn::UtilityFn(std::vector<std::pair<double, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.empty()) throw InvalidInput("utility needs at least one breakpoint");
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    const auto [v, u] = breakpoints_[j];
    if (!std::isfinite(v) || !std::isfinite(u)) throw InvalidInput("utility breakpoint not finite");
    if (u < 0.0) throw InvalidInput("utility must be nonnegative");
    if (j > 0) {
      if (!(v > breakpoints_[j - 1].first)) {
        throw InvalidInput("utility breakpoints must have increasing values");
      }
      if (u < breakpoints_[j - 1].second) {
        throw InvalidInput("utility must be weakly increasing");
      }
    }
    // Zero utility is only allowed at value 0 or below; otherwise u(v) = 0
    // for some v > 0.
    if (u == 0.0 && v > 0.0) {
      throw InvalidInput("utility must be positive for every positive value");
    }
  }
  if (breakpoints_.size() == 1 && breakpoints_.front().second == 0.0) {
    throw InvalidInput("utility must be positive for every positive value");
  }
}

UtilityFn UtilityFn::constant(double u) { return UtilityFn({{0.0, u}}); }

UtilityFn UtilityFn::linear() { return UtilityFn({{0.0, 0.0}, {1.0, 1.0}}); }

double UtilityFn::operator()(double v) const {
  if (v <= breakpoints_.front().first) return breakpoints_.front().second;
  if (v >= breakpoints_.back().first) return breakpoints_.back().second;
  auto hi = std::upper_bound(
      breakpoints_.begin(), breakpoints_.end(), v,
      [](double x, const std::pair<double, double>& b) { return x < b.first; });
  auto lo = std::prev(hi);
  const double t = (v - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

bool UtilityFn::is_constant() const {
  return breakpoints_.front().second == breakpoints_.back().second;
}

Instance::Instance(std::vector<Prior> priors, std::vector<UtilityFn> utilities, int k)
    : priors_(std::move(priors)), utilities_(std::move(utilities)), k_(k) {
  if (priors_.empty()) throw InvalidInput("instance needs at least one agent");
  if (priors_.size() != utilities_.size()) {
    throw InvalidInput("priors and utilities differ in length");
  }
  if (k_ < 1 || k_ > num_agents()) {
    throw BadK("k = " + std::to_string(k_) + " outside [1, " +
               std::to_string(num_agents()) + "]");
  }
}

bool Instance::in_unit_interval() const {
  return std::all_of(priors_.begin(), priors_.end(),
                     [](const Prior& p) { return p.in_unit_interval(); });
}

Instance bernoulli_instance(int n, double zeta, int k) {
  if (n < 1) throw InvalidInput("need at least one agent");
  std::vector<Prior> priors(static_cast<std::size_t>(n), Prior::bernoulli(zeta));
  std::vector<UtilityFn> utilities(static_cast<std::size_t>(n), UtilityFn::constant(1.0));
  return Instance(std::move(priors), std::move(utilities), k);
}

}  // namespace bpoa
