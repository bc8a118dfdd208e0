#include "bpoa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bpoa/errors.hpp"
#include "bpoa/montecarlo.hpp"

namespace bpoa {

const char* to_string(EvalKind kind) {
  switch (kind) {
    case EvalKind::Exact: return "exact";
    case EvalKind::MonteCarlo: return "mc";
    case EvalKind::Auto: return "auto";
  }
  return "unknown";
}

const char* to_string(EvalMethod method) {
  switch (method) {
    case EvalMethod::Enumeration: return "enumeration";
    case EvalMethod::MonteCarlo: return "monte_carlo";
    case EvalMethod::Analytic: return "analytic";
  }
  return "unknown";
}

double top_k_sum(std::span<const double> values, int k) {
  std::vector<double> v(values.begin(), values.end());
  std::partial_sort(v.begin(), v.begin() + k, v.end(), std::greater<>());
  return std::accumulate(v.begin(), v.begin() + k, 0.0);
}

double utility_against(const WinCurve& curve, const Prior& prior, const UtilityFn& u,
                       const SignalingScheme& scheme) {
  double total = 0.0;
  for (const Signal& s : scheme.signals()) {
    total += s.total_mass() * curve(s.posterior_mean()) * s.conditional_utility(prior, u);
  }
  return total;
}

namespace {

struct Stats {
  std::vector<std::vector<double>> w, w_se;
  std::vector<double> r, r_se, utility, utility_se, contribution, contribution_se;
  double welfare = 0.0;
  double welfare_se = 0.0;
  EvalMethod method = EvalMethod::Enumeration;
};

std::vector<std::vector<double>> conditional_utilities(const StrategyProfile& profile) {
  std::vector<std::vector<double>> out;
  for (int i = 0; i < profile.num_agents(); ++i) {
    std::vector<double> row;
    for (const Signal& s : profile.scheme(i).signals()) {
      row.push_back(s.conditional_utility(profile.instance().prior(i),
                                          profile.instance().utility(i)));
    }
    out.push_back(std::move(row));
  }
  return out;
}

// Fills r, utility and contribution from exact per-signal win probabilities.
void derive_from_w(const StrategyProfile& profile, Stats& st) {
  const auto ubar = conditional_utilities(profile);
  const std::size_t n = static_cast<std::size_t>(profile.num_agents());
  st.r.assign(n, 0.0);
  st.utility.assign(n, 0.0);
  st.contribution.assign(n, 0.0);
  st.r_se.assign(n, 0.0);
  st.utility_se.assign(n, 0.0);
  st.contribution_se.assign(n, 0.0);
  st.w_se.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const SignalingScheme& scheme = profile.scheme(static_cast<int>(i));
    st.w_se.emplace_back(scheme.size(), 0.0);
    for (std::size_t s = 0; s < scheme.size(); ++s) {
      const double pw = scheme[s].total_mass() * st.w[i][s];
      st.r[i] += pw;
      st.utility[i] += pw * ubar[i][s];
      st.contribution[i] += pw * scheme[s].posterior_mean();
    }
  }
}

Stats enumerate(const StrategyProfile& profile) {
  const int n = profile.num_agents();
  const int k = profile.k();
  Stats st;
  st.method = EvalMethod::Enumeration;
  for (int i = 0; i < n; ++i) st.w.emplace_back(profile.scheme(i).size(), 0.0);

  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> means(static_cast<std::size_t>(n));
  double welfare = 0.0;
  while (true) {
    double prob = 1.0;
    for (int i = 0; i < n; ++i) {
      const Signal& s = profile.scheme(i)[idx[static_cast<std::size_t>(i)]];
      prob *= s.total_mass();
      means[static_cast<std::size_t>(i)] = s.posterior_mean();
    }
    const std::vector<double> rho = selection_probabilities(means, k);
    for (int i = 0; i < n; ++i) {
      const std::size_t s = idx[static_cast<std::size_t>(i)];
      st.w[static_cast<std::size_t>(i)][s] += prob * rho[static_cast<std::size_t>(i)];
    }
    welfare += prob * top_k_sum(means, k);

    int pos = n - 1;
    while (pos >= 0) {
      auto& d = idx[static_cast<std::size_t>(pos)];
      if (++d < profile.scheme(pos).size()) break;
      d = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  // w accumulated joint mass; condition on the agent's own signal.
  for (int i = 0; i < n; ++i) {
    const SignalingScheme& scheme = profile.scheme(i);
    for (std::size_t s = 0; s < scheme.size(); ++s) {
      st.w[static_cast<std::size_t>(i)][s] /= scheme[s].total_mass();
    }
  }
  derive_from_w(profile, st);
  st.welfare = welfare;
  return st;
}

Stats analytic(const StrategyProfile& profile) {
  Stats st;
  st.method = EvalMethod::Analytic;
  for (int i = 0; i < profile.num_agents(); ++i) {
    const WinCurve curve(profile, i);
    std::vector<double> row;
    for (const Signal& s : profile.scheme(i).signals()) row.push_back(curve(s.posterior_mean()));
    st.w.push_back(std::move(row));
  }
  derive_from_w(profile, st);
  st.welfare = std::accumulate(st.contribution.begin(), st.contribution.end(), 0.0);
  return st;
}

Stats sample(const StrategyProfile& profile, const EvalMode& mode) {
  const int n = profile.num_agents();
  const int k = profile.k();
  const auto ubar = conditional_utilities(profile);

  std::vector<mc::Categorical> draw;
  std::vector<std::size_t> offset;  // column of w[i][0]
  std::size_t width = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> masses;
    for (const Signal& s : profile.scheme(i).signals()) masses.push_back(s.total_mass());
    draw.emplace_back(masses);
    offset.push_back(width);
    width += masses.size();
  }
  const std::size_t r_col = width;
  const std::size_t u_col = r_col + static_cast<std::size_t>(n);
  const std::size_t c_col = u_col + static_cast<std::size_t>(n);
  const std::size_t sw_col = c_col + static_cast<std::size_t>(n);
  width = sw_col + 1;

  const auto body = [&](std::mt19937_64& rng, std::uint64_t count, mc::Moments& out) {
    std::vector<double> means(static_cast<std::size_t>(n));
    for (std::uint64_t t = 0; t < count; ++t) {
      for (int i = 0; i < n; ++i) {
        means[static_cast<std::size_t>(i)] =
            profile.scheme(i)[draw[static_cast<std::size_t>(i)](rng)].posterior_mean();
      }
      out.add(sw_col, top_k_sum(means, k));
      // For each agent, the selection probability of every one of her
      // signals against the sampled opponents.
      for (int i = 0; i < n; ++i) {
        const SignalingScheme& scheme = profile.scheme(i);
        double r = 0.0, u = 0.0, c = 0.0;
        for (std::size_t s = 0; s < scheme.size(); ++s) {
          const double m = scheme[s].posterior_mean();
          int above = 0, tied = 0;
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double mj = means[static_cast<std::size_t>(j)];
            if (mj > m + kTol) {
              ++above;
            } else if (std::abs(mj - m) <= kTol) {
              ++tied;
            }
          }
          const double rho = selection_probability(k, above, tied);
          out.add(offset[static_cast<std::size_t>(i)] + s, rho);
          const double pw = scheme[s].total_mass() * rho;
          r += pw;
          u += pw * ubar[static_cast<std::size_t>(i)][s];
          c += pw * m;
        }
        out.add(r_col + static_cast<std::size_t>(i), r);
        out.add(u_col + static_cast<std::size_t>(i), u);
        out.add(c_col + static_cast<std::size_t>(i), c);
      }
    }
  };
  const mc::Moments m = mc::run_chunked(mode.samples, mode.seed, mode.workers, width, body);

  Stats st;
  st.method = EvalMethod::MonteCarlo;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row, row_se;
    for (std::size_t s = 0; s < profile.scheme(i).size(); ++s) {
      row.push_back(m.mean(offset[static_cast<std::size_t>(i)] + s));
      row_se.push_back(m.std_error(offset[static_cast<std::size_t>(i)] + s));
    }
    st.w.push_back(std::move(row));
    st.w_se.push_back(std::move(row_se));
    const std::size_t ii = static_cast<std::size_t>(i);
    st.r.push_back(m.mean(r_col + ii));
    st.r_se.push_back(m.std_error(r_col + ii));
    st.utility.push_back(m.mean(u_col + ii));
    st.utility_se.push_back(m.std_error(u_col + ii));
    st.contribution.push_back(m.mean(c_col + ii));
    st.contribution_se.push_back(m.std_error(c_col + ii));
  }
  st.welfare = m.mean(sw_col);
  st.welfare_se = m.std_error(sw_col);
  return st;
}

Stats evaluate(const StrategyProfile& profile, const EvalMode& mode) {
  switch (mode.kind) {
    case EvalKind::MonteCarlo:
      if (mode.samples == 0) throw InvalidInput("Monte Carlo needs a positive sample count");
      return sample(profile, mode);
    case EvalKind::Exact:
      if (profile.outcome_count() > mode.cap) {
        throw CapExceeded("joint outcome count " + std::to_string(profile.outcome_count()) +
                          " exceeds enumeration cap " + std::to_string(mode.cap));
      }
      return enumerate(profile);
    case EvalKind::Auto:
      return profile.outcome_count() <= mode.cap ? enumerate(profile) : analytic(profile);
  }
  throw InternalInvariant("unknown evaluation mode");
}

}  // namespace

WinProbabilities win_probabilities(const StrategyProfile& profile, const EvalMode& mode) {
  Stats st = evaluate(profile, mode);
  return {std::move(st.w), std::move(st.w_se), std::move(st.r), std::move(st.r_se), st.method};
}

Estimate expected_utility(const StrategyProfile& profile, int i, const EvalMode& mode) {
  if (i < 0 || i >= profile.num_agents()) throw InvalidInput("agent index out of range");
  const Stats st = evaluate(profile, mode);
  const std::size_t ii = static_cast<std::size_t>(i);
  return {st.utility[ii], st.utility_se[ii], st.method};
}

Estimate expected_welfare(const StrategyProfile& profile, const EvalMode& mode) {
  const Stats st = evaluate(profile, mode);
  return {st.welfare, st.welfare_se, st.method};
}

std::vector<double> contributions(const StrategyProfile& profile, const EvalMode& mode) {
  return evaluate(profile, mode).contribution;
}

Estimate first_best(const Instance& instance, const EvalMode& mode) {
  const int n = instance.num_agents();
  const int k = instance.k();
  double outcomes = 1.0;
  for (const Prior& p : instance.priors()) outcomes *= static_cast<double>(p.size());

  if (mode.kind == EvalKind::MonteCarlo) {
    if (mode.samples == 0) throw InvalidInput("Monte Carlo needs a positive sample count");
    std::vector<mc::Categorical> draw;
    for (const Prior& p : instance.priors()) {
      std::vector<double> masses;
      for (const ValueAtom& a : p.atoms()) masses.push_back(a.mass);
      draw.emplace_back(masses);
    }
    const auto body = [&](std::mt19937_64& rng, std::uint64_t count, mc::Moments& out) {
      std::vector<double> values(static_cast<std::size_t>(n));
      for (std::uint64_t t = 0; t < count; ++t) {
        for (int i = 0; i < n; ++i) {
          values[static_cast<std::size_t>(i)] =
              instance.prior(i)[draw[static_cast<std::size_t>(i)](rng)].value;
        }
        out.add(0, top_k_sum(values, k));
      }
    };
    const mc::Moments m = mc::run_chunked(mode.samples, mode.seed, mode.workers, 1, body);
    return {m.mean(0), m.std_error(0), EvalMethod::MonteCarlo};
  }

  if (outcomes > mode.cap) {
    if (mode.kind == EvalKind::Exact) {
      throw CapExceeded("value outcome count " + std::to_string(outcomes) +
                        " exceeds enumeration cap " + std::to_string(mode.cap));
    }
    const StrategyProfile reveal = StrategyProfile::full_revelation(instance);
    return {analytic(reveal).welfare, 0.0, EvalMethod::Analytic};
  }

  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> values(static_cast<std::size_t>(n));
  double total = 0.0;
  while (true) {
    double prob = 1.0;
    for (int i = 0; i < n; ++i) {
      const ValueAtom& a = instance.prior(i)[idx[static_cast<std::size_t>(i)]];
      prob *= a.mass;
      values[static_cast<std::size_t>(i)] = a.value;
    }
    total += prob * top_k_sum(values, k);
    int pos = n - 1;
    while (pos >= 0) {
      auto& d = idx[static_cast<std::size_t>(pos)];
      if (++d < instance.prior(pos).size()) break;
      d = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return {total, 0.0, EvalMethod::Enumeration};
}

}  // namespace bpoa
