#pragma once

#include <cstdint>
#include <vector>

#include "bpoa/profile.hpp"
#include "bpoa/selection.hpp"

namespace bpoa {

inline constexpr double kDefaultEnumerationCap = 1e7;

enum class EvalKind { Exact, MonteCarlo, Auto };

// How a number was actually produced.
enum class EvalMethod { Enumeration, MonteCarlo, Analytic };

const char* to_string(EvalKind kind);
const char* to_string(EvalMethod method);

// Exact enumerates joint outcomes and throws CapExceeded above `cap`. Auto
// enumerates up to `cap` and otherwise uses the per-agent win curves, which
// are also exact. MonteCarlo samples with the chunked seeded scheme.
struct EvalMode {
  EvalKind kind = EvalKind::Auto;
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 0;
  double cap = kDefaultEnumerationCap;
  unsigned workers = 0;

  static EvalMode exact(double cap = kDefaultEnumerationCap) {
    return {EvalKind::Exact, 0, 0, cap, 0};
  }
  static EvalMode monte_carlo(std::uint64_t samples, std::uint64_t seed, unsigned workers = 0) {
    return {EvalKind::MonteCarlo, samples, seed, kDefaultEnumerationCap, workers};
  }
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  EvalMethod method = EvalMethod::Enumeration;
};

struct WinProbabilities {
  // w[i][s]: probability that agent i is selected given she sends signal s
  // of her scheme (signals in scheme order).
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> w_std_error;
  // r[i]: overall selection probability of agent i.
  std::vector<double> r;
  std::vector<double> r_std_error;
  EvalMethod method = EvalMethod::Enumeration;
};

WinProbabilities win_probabilities(const StrategyProfile& profile, const EvalMode& mode = {});

Estimate expected_utility(const StrategyProfile& profile, int i, const EvalMode& mode = {});

// Expected sum of the k highest posterior means.
Estimate expected_welfare(const StrategyProfile& profile, const EvalMode& mode = {});

// c_i: expected posterior mean agent i delivers when selected. Sums to the
// expected welfare.
std::vector<double> contributions(const StrategyProfile& profile, const EvalMode& mode = {});

// Expected sum of the k highest realized values under full information.
Estimate first_best(const Instance& instance, const EvalMode& mode = {});

// Expected utility of an agent sending `scheme` against the opponents
// summarized by `curve`.
double utility_against(const WinCurve& curve, const Prior& prior, const UtilityFn& u,
                       const SignalingScheme& scheme);

// Sum of the k largest entries.
double top_k_sum(std::span<const double> values, int k);

}  // namespace bpoa
