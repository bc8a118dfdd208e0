#pragma once

#include <span>
#include <vector>

#include "bpoa/profile.hpp"

namespace bpoa {

// Top-k selection with uniform tie-breaking at the k-th position. Means
// within kTol of each other count as equal.
std::vector<double> selection_probabilities(std::span<const double> means, int k);

// Selection probability of one agent given how many opponents sit strictly
// above her mean and how many are tied with it.
double selection_probability(int k, int above, int tied);

// Probability that agent i is selected when sending a signal with a given
// posterior mean, with every opponent's scheme held fixed. Exact.
class WinCurve {
 public:
  WinCurve(const StrategyProfile& profile, int agent);

  double operator()(double mean) const;

 private:
  struct Opponent {
    std::vector<double> means;       // ascending
    std::vector<double> cumulative;  // cumulative[j] = mass of means[0..j)
  };
  int k_;
  std::vector<Opponent> opponents_;
};

}  // namespace bpoa
