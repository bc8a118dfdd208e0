#include "bpoa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bpoa/errors.hpp"

namespace bpoa {

std::vector<double> selection_probabilities(std::span<const double> means, int k) {
  const int n = static_cast<int>(means.size());
  if (k < 1 || k > n) {
    throw BadK("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<double> sorted(means.begin(), means.end());
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(), std::greater<>());
  const double kth = sorted[static_cast<std::size_t>(k - 1)];

  int winners = 0;
  int tied = 0;
  for (double m : means) {
    if (m > kth + kTol) {
      ++winners;
    } else if (std::abs(m - kth) <= kTol) {
      ++tied;
    }
  }
  const double share = static_cast<double>(k - winners) / tied;
  std::vector<double> rho(means.size(), 0.0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (means[i] > kth + kTol) {
      rho[i] = 1.0;
    } else if (std::abs(means[i] - kth) <= kTol) {
      rho[i] = share;
    }
  }
  return rho;
}

double selection_probability(int k, int above, int tied) {
  if (above >= k) return 0.0;
  if (above + tied + 1 <= k) return 1.0;
  return static_cast<double>(k - above) / (tied + 1);
}

WinCurve::WinCurve(const StrategyProfile& profile, int agent) : k_(profile.k()) {
  for (int j = 0; j < profile.num_agents(); ++j) {
    if (j == agent) continue;
    Opponent opp;
    opp.cumulative.push_back(0.0);
    // Scheme signals are already sorted by mean.
    for (const Signal& s : profile.scheme(j).signals()) {
      opp.means.push_back(s.posterior_mean());
      opp.cumulative.push_back(opp.cumulative.back() + s.total_mass());
    }
    opponents_.push_back(std::move(opp));
  }
}

double WinCurve::operator()(double mean) const {
  const int n_opp = static_cast<int>(opponents_.size());
  if (n_opp < k_) return 1.0;

  // prob[a][b]: a opponents strictly above (capped at k), b tied.
  const int rows = k_ + 1;
  const int cols = n_opp + 1;
  std::vector<double> prob(static_cast<std::size_t>(rows * cols), 0.0);
  std::vector<double> next(prob.size());
  prob[0] = 1.0;
  int max_b = 0;
  for (const Opponent& opp : opponents_) {
    const auto lo = std::lower_bound(opp.means.begin(), opp.means.end(), mean - kTol);
    const auto hi = std::upper_bound(opp.means.begin(), opp.means.end(), mean + kTol);
    const double total = opp.cumulative.back();
    const double below = opp.cumulative[static_cast<std::size_t>(lo - opp.means.begin())];
    const double upto = opp.cumulative[static_cast<std::size_t>(hi - opp.means.begin())];
    const double p_above = (total - upto) / total;
    const double p_tie = (upto - below) / total;
    const double p_below = below / total;

    std::fill(next.begin(), next.end(), 0.0);
    for (int a = 0; a < rows; ++a) {
      for (int b = 0; b <= max_b; ++b) {
        const double p = prob[static_cast<std::size_t>(a * cols + b)];
        if (p == 0.0) continue;
        next[static_cast<std::size_t>(a * cols + b)] += p * p_below;
        next[static_cast<std::size_t>(std::min(a + 1, k_) * cols + b)] += p * p_above;
        next[static_cast<std::size_t>(a * cols + b + 1)] += p * p_tie;
      }
    }
    ++max_b;
    prob.swap(next);
  }

  double w = 0.0;
  for (int a = 0; a < k_; ++a) {
    for (int b = 0; b <= max_b; ++b) {
      const double p = prob[static_cast<std::size_t>(a * cols + b)];
      if (p != 0.0) w += p * selection_probability(k_, a, b);
    }
  }
  return std::clamp(w, 0.0, 1.0);
}

}  // namespace bpoa
