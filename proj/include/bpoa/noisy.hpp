#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bpoa/evaluation.hpp"
#include "bpoa/profile.hpp"

namespace bpoa {

// The principal sees each posterior mean scaled by an independent
// Uniform[1 - eta, 1 + eta] factor.
struct NoiseSpec {
  double eta = 0.0;
  double v_lower = 0.0;  // lower end of every prior's support
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 0;
  unsigned workers = 0;

  // Throws InvalidInput unless 0 <= eta < 1, samples > 0, v_lower > 0 and
  // every atom of the instance is at least v_lower.
  void validate(const Instance& instance) const;
};

// Indices of the k agents with the highest noisy observations, ascending.
// Observations within kTol of the k-th are tied and broken uniformly.
std::vector<int> noisy_selection_sample(std::span<const double> means, int k, double eta,
                                        std::mt19937_64& rng);

Estimate noisy_expected_utility(const StrategyProfile& profile, int i, const NoiseSpec& noise);
Estimate noisy_expected_welfare(const StrategyProfile& profile, const NoiseSpec& noise);

struct NoisyEvaluation {
  std::vector<Estimate> utility;
  Estimate welfare;
};
NoisyEvaluation noisy_evaluate(const StrategyProfile& profile, const NoiseSpec& noise);

// (11 + 5 sqrt 5) ((1 + eta) / (1 - eta))^2.
double noisy_bound(double eta);

}  // namespace bpoa
