#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace bpoa {

// Absolute tolerance used for every equality test on masses and means.
inline constexpr double kTol = 1e-12;
// Signals lighter than this are dropped.
inline constexpr double kMinSignalMass = 1e-15;

struct ValueAtom {
  double value = 0.0;
  double mass = 0.0;

  friend bool operator==(const ValueAtom&, const ValueAtom&) = default;
};

// Whether atom values must lie in [0, 1]. Only the negative-shift
// demonstration instances use Unrestricted.
enum class ValueDomain { UnitInterval, Unrestricted };

// Finite-support value distribution of one agent. Atoms are sorted by
// strictly increasing value and their masses sum to one.
class Prior {
 public:
  Prior() = default;
  explicit Prior(std::vector<ValueAtom> atoms,
                 ValueDomain domain = ValueDomain::UnitInterval);

  // Sorts atoms and merges equal values before validating.
  static Prior normalized(std::vector<ValueAtom> atoms,
                          ValueDomain domain = ValueDomain::UnitInterval);
  static Prior point(double value);
  static Prior bernoulli(double p);

  std::span<const ValueAtom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  const ValueAtom& operator[](std::size_t j) const { return atoms_[j]; }

  double mean() const { return mean_; }
  double max_value() const { return atoms_.back().value; }
  double min_value() const { return atoms_.front().value; }
  bool in_unit_interval() const;

  // Integral of the value over the top `x` probability mass, x in [0, 1].
  // Atoms straddling the cut contribute proportionally.
  double tail_integral(double x) const;
  // Conditional mean of the top `x` quantile; max_value() at x = 0.
  double tail_mean(double x) const;
  // Mass of atom j that lies inside the top `x` quantile.
  std::vector<double> top_quantile_masses(double x) const;

  friend bool operator==(const Prior& a, const Prior& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<ValueAtom> atoms_;
  double mean_ = 0.0;
};

// Piecewise-linear, weakly increasing utility for being selected. Values
// outside the breakpoint range take the nearest endpoint utility.
class UtilityFn {
 public:
  UtilityFn() : UtilityFn(constant(1.0)) {}
  explicit UtilityFn(std::vector<std::pair<double, double>> breakpoints);

  static UtilityFn constant(double u);
  static UtilityFn linear();  // u(v) = v

  double operator()(double v) const;
  bool is_constant() const;
  std::span<const std::pair<double, double>> breakpoints() const {
    return breakpoints_;
  }

  friend bool operator==(const UtilityFn&, const UtilityFn&) = default;

 private:
  std::vector<std::pair<double, double>> breakpoints_;
};

class Instance {
 public:
  Instance(std::vector<Prior> priors, std::vector<UtilityFn> utilities, int k);

  int k() const { return k_; }
  int num_agents() const { return static_cast<int>(priors_.size()); }
  const Prior& prior(int i) const { return priors_[static_cast<std::size_t>(i)]; }
  const UtilityFn& utility(int i) const {
    return utilities_[static_cast<std::size_t>(i)];
  }
  std::span<const Prior> priors() const { return priors_; }
  std::span<const UtilityFn> utilities() const { return utilities_; }
  bool in_unit_interval() const;

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::vector<Prior> priors_;
  std::vector<UtilityFn> utilities_;
  int k_ = 1;
};

// N i.i.d. Bernoulli(zeta) agents with constant utility and k = 1.
Instance bernoulli_instance(int n, double zeta, int k = 1);

}  // namespace bpoa
