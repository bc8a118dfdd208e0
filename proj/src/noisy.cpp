#include "bpoa/noisy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bpoa/errors.hpp"
#include "bpoa/montecarlo.hpp"

namespace bpoa {

void NoiseSpec::validate(const Instance& instance) const {
  if (!(eta >= 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in [0, 1)");
  if (samples == 0) throw InvalidInput("noisy evaluation needs a positive sample count");
  if (!(v_lower > 0.0)) throw InvalidInput("v_lower must be positive");
  for (const Prior& p : instance.priors()) {
    if (p.min_value() < v_lower) {
      throw InvalidInput("prior atom " + std::to_string(p.min_value()) + " below v_lower " +
                         std::to_string(v_lower));
    }
  }
}

std::vector<int> noisy_selection_sample(std::span<const double> means, int k, double eta,
                                        std::mt19937_64& rng) {
  const int n = static_cast<int>(means.size());
  if (k < 1 || k > n) throw BadK("k outside [1, N]");
  std::vector<double> y(means.begin(), means.end());
  if (eta > 0.0) {
    for (double& v : y) v *= 1.0 - eta + 2.0 * eta * mc::uniform01(rng);
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return y[static_cast<std::size_t>(a)] > y[static_cast<std::size_t>(b)];
  });
  const double kth = y[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])];

  std::vector<int> chosen, tied;
  for (int i : order) {
    const double v = y[static_cast<std::size_t>(i)];
    if (v > kth + kTol) {
      chosen.push_back(i);
    } else if (std::abs(v - kth) <= kTol) {
      tied.push_back(i);
    }
  }
  std::sort(tied.begin(), tied.end());
  const std::size_t need = static_cast<std::size_t>(k) - chosen.size();
  if (need < tied.size()) {
    for (std::size_t a = 0; a < need; ++a) {
      std::uniform_int_distribution<std::size_t> pick(a, tied.size() - 1);
      std::swap(tied[a], tied[pick(rng)]);
    }
  }
  chosen.insert(chosen.end(), tied.begin(), tied.begin() + static_cast<std::ptrdiff_t>(need));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

NoisyEvaluation noisy_evaluate(const StrategyProfile& profile, const NoiseSpec& noise) {
  noise.validate(profile.instance());
  const int n = profile.num_agents();
  const int k = profile.k();

  if (k == n) {
    NoisyEvaluation res;
    double sw = 0.0;
    for (int i = 0; i < n; ++i) {
      const Prior& prior = profile.instance().prior(i);
      double u = 0.0;
      for (const ValueAtom& a : prior.atoms()) u += a.mass * profile.instance().utility(i)(a.value);
      res.utility.push_back({u, 0.0, EvalMethod::Analytic});
      sw += prior.mean();
    }
    res.welfare = {sw, 0.0, EvalMethod::Analytic};
    return res;
  }

  std::vector<mc::Categorical> draw;
  std::vector<std::vector<double>> ubar(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> masses;
    for (const Signal& s : profile.scheme(i).signals()) {
      masses.push_back(s.total_mass());
      ubar[static_cast<std::size_t>(i)].push_back(
          s.conditional_utility(profile.instance().prior(i), profile.instance().utility(i)));
    }
    draw.emplace_back(masses);
  }

  const std::size_t sw_col = static_cast<std::size_t>(n);
  const auto body = [&](std::mt19937_64& rng, std::uint64_t count, mc::Moments& out) {
    std::vector<double> means(static_cast<std::size_t>(n));
    std::vector<std::size_t> sig(static_cast<std::size_t>(n));
    std::vector<double> u(static_cast<std::size_t>(n));
    for (std::uint64_t t = 0; t < count; ++t) {
      for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        sig[ii] = draw[ii](rng);
        means[ii] = profile.scheme(i)[sig[ii]].posterior_mean();
      }
      std::fill(u.begin(), u.end(), 0.0);
      double sw = 0.0;
      for (int i : noisy_selection_sample(means, k, noise.eta, rng)) {
        const std::size_t ii = static_cast<std::size_t>(i);
        u[ii] = ubar[ii][sig[ii]];
        sw += means[ii];
      }
      for (std::size_t i = 0; i < u.size(); ++i) out.add(i, u[i]);
      out.add(sw_col, sw);
    }
  };
  const mc::Moments m = mc::run_chunked(noise.samples, noise.seed, noise.workers, sw_col + 1, body);

  NoisyEvaluation res;
  for (std::size_t i = 0; i < sw_col; ++i) {
    res.utility.push_back({m.mean(i), m.std_error(i), EvalMethod::MonteCarlo});
  }
  res.welfare = {m.mean(sw_col), m.std_error(sw_col), EvalMethod::MonteCarlo};
  return res;
}

Estimate noisy_expected_utility(const StrategyProfile& profile, int i, const NoiseSpec& noise) {
  if (i < 0 || i >= profile.num_agents()) throw InvalidInput("agent index out of range");
  return noisy_evaluate(profile, noise).utility[static_cast<std::size_t>(i)];
}

Estimate noisy_expected_welfare(const StrategyProfile& profile, const NoiseSpec& noise) {
  return noisy_evaluate(profile, noise).welfare;
}

double noisy_bound(double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in [0, 1)");
  const double f = (1.0 + eta) / (1.0 - eta);
  return (11.0 + 5.0 * std::sqrt(5.0)) * f * f;
}

}  // namespace bpoa
