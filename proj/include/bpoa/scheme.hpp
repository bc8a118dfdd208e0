#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bpoa/instance.hpp"

namespace bpoa {

// Mass allocated from each prior atom to one signal (indexed like the prior).
using Composition = std::vector<double>;

double posterior_mean(const Prior& prior, std::span<const double> composition);

class Signal {
 public:
  Signal(const Prior& prior, Composition composition);

  std::span<const double> composition() const { return composition_; }
  double total_mass() const { return total_mass_; }
  double posterior_mean() const { return mean_; }
  // Conditional expectation of `u` over the values mapped to this signal.
  double conditional_utility(const Prior& prior, const UtilityFn& u) const;

 private:
  Composition composition_;
  double total_mass_ = 0.0;
  double mean_ = 0.0;
};

// A Bayes-plausible signaling scheme over a fixed prior. Signals are kept
// sorted by posterior mean; signals with coinciding means are merged and
// negligible signals dropped on construction.
class SignalingScheme {
 public:
  SignalingScheme() = default;
  SignalingScheme(const Prior& prior, std::vector<Composition> compositions);

  static SignalingScheme full_revelation(const Prior& prior);
  static SignalingScheme pooling(const Prior& prior);

  std::span<const Signal> signals() const { return signals_; }
  std::size_t size() const { return signals_.size(); }
  const Signal& operator[](std::size_t s) const { return signals_[s]; }
  std::vector<Composition> compositions() const;

 private:
  std::vector<Signal> signals_;
};

enum class ViolationKind {
  WrongArity,
  NegativeAllocation,
  AllocationExceedsPrior,
  ZeroMassSignal,
  PlausibilityMismatch,
};

struct Violation {
  ViolationKind kind;
  std::size_t signal = 0;  // unused for PlausibilityMismatch
  std::size_t atom = 0;    // unused for ZeroMassSignal
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

ValidationReport validate_scheme(const Prior& prior,
                                 std::span<const Composition> compositions);
ValidationReport validate_scheme(const Prior& prior, const SignalingScheme& scheme);

const char* to_string(ViolationKind kind);

}  // namespace bpoa
