#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "bpoa/equilibria.hpp"
#include "bpoa/errors.hpp"
#include "bpoa/io.hpp"
#include "oracles.hpp"

namespace bpoa {
namespace {

// Labelled set partitions of `grains` items via restricted growth strings.
void for_each_set_partition(int grains, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> label(static_cast<std::size_t>(grains), 0);
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos == grains) {
      fn(label);
      return;
    }
    for (int b = 0; b <= used; ++b) {
      label[static_cast<std::size_t>(pos)] = b;
      rec(pos + 1, std::max(used, b + 1));
    }
  };
  if (grains == 0) return;
  label[0] = 0;
  rec(1, 1);
}

// Grain atom index for each labelled grain.
std::vector<std::size_t> grain_atoms(const std::vector<int>& t) {
  std::vector<std::size_t> atoms;
  for (std::size_t j = 0; j < t.size(); ++j) {
    for (int g = 0; g < t[j]; ++g) atoms.push_back(j);
  }
  return atoms;
}

std::vector<Composition> compositions_of(const Prior& prior, const std::vector<int>& t,
                                         const std::vector<int>& label) {
  const auto atoms = grain_atoms(t);
  const int blocks = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<Composition> comps(static_cast<std::size_t>(blocks), Composition(prior.size(), 0.0));
  for (std::size_t g = 0; g < label.size(); ++g) {
    comps[static_cast<std::size_t>(label[g])][atoms[g]] += prior[atoms[g]].mass / t[atoms[g]];
  }
  return comps;
}

// Best utility over all labelled partitions, each evaluated by brute-force
// joint enumeration.
double brute_force_best_response(const StrategyProfile& profile, int agent, const std::vector<int>& t) {
  const Prior& prior = profile.instance().prior(agent);
  const UtilityFn& u = profile.instance().utility(agent);
  double best = 0.0;
  for_each_set_partition(std::accumulate(t.begin(), t.end(), 0), [&](const std::vector<int>& label) {
    const SignalingScheme scheme(prior, compositions_of(prior, t, label));
    const StrategyProfile dev = profile.with_scheme(agent, scheme);
    const auto w = testing::brute_force_win(dev);
    double util = 0.0;
    for (std::size_t s = 0; s < scheme.size(); ++s) {
      util += scheme[s].total_mass() * w[static_cast<std::size_t>(agent)][s] *
              scheme[s].conditional_utility(prior, u);
    }
    best = std::max(best, util);
  });
  return best;
}

TEST(BernoulliEquilibrium, ClosedForms) {
  EXPECT_NEAR(bernoulli_equilibrium_welfare({2, 0.5}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(bernoulli_equilibrium_welfare({10, 0.1}), 10.0 / 19.0, 1e-15);
  EXPECT_NEAR(bernoulli_equilibrium_welfare({100000, 0.5 / 100000}), 0.25, 1e-5);

  const LowerBound lb = poa_lower_bound({2, 0.5});
  EXPECT_NEAR(lb.exact_ratio, 1.125, 1e-12);
  EXPECT_NEAR(lb.bound, 1.5 * (1.0 - std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(lb.bound, 0.9482, 1e-4);
  EXPECT_NEAR(poa_lower_bound({1, 0.3}).exact_ratio, 1.0, 1e-15);
  EXPECT_NEAR(poa_lower_bound({1000, 1e-7}).bound, 2.0 - 1.0 / 1000, 1e-3);

  for (int n = 1; n <= 30; ++n) {
    for (double p : {0.01, 0.2, 0.5, 0.9, 1.0}) {
      const LowerBound b = poa_lower_bound({n, p / n});
      EXPECT_GE(b.exact_ratio, b.bound - 1e-12) << n << " " << p;
    }
  }
  EXPECT_THROW(BernoulliEqSpec(3, 0.4), SpecViolation);
}

TEST(BernoulliEquilibrium, CdfAndScheme) {
  const BernoulliEqSpec two(2, 0.5);
  EXPECT_DOUBLE_EQ(bernoulli_equilibrium_cdf(two, 0.3), 0.3);
  const BernoulliEqSpec three(3, 0.2);
  EXPECT_NEAR(bernoulli_equilibrium_cdf(three, 0.6), 1.0, 1e-15);
  EXPECT_NEAR(bernoulli_equilibrium_cdf(three, 0.15), 0.5, 1e-15);

  for (const BernoulliEqSpec& spec : {two, three, BernoulliEqSpec(5, 0.1), BernoulliEqSpec(7, 0.13)}) {
    const int grid = 40;
    const SignalingScheme s = bernoulli_equilibrium_scheme(spec, grid);
    EXPECT_TRUE(validate_scheme(Prior::bernoulli(spec.zeta), s).valid());
    double mean = 0.0;
    for (const Signal& sig : s.signals()) mean += sig.total_mass() * sig.posterior_mean();
    EXPECT_NEAR(mean, spec.zeta, 1e-12);
    // Posterior-mean CDF at each boundary.
    for (int c = 1; c <= grid; ++c) {
      const double b = spec.p_hat() * c / grid;
      double mass = 0.0;
      for (const Signal& sig : s.signals()) {
        if (sig.posterior_mean() < b) mass += sig.total_mass();
      }
      EXPECT_NEAR(mass, bernoulli_equilibrium_cdf(spec, b), 1e-10);
    }
  }
  EXPECT_EQ(bernoulli_equilibrium_scheme({1, 0.4}, 10).size(), 1u);
}

TEST(BernoulliEquilibrium, EveryAgentGetsOneOverN) {
  for (const BernoulliEqSpec& spec : {BernoulliEqSpec(2, 0.5), BernoulliEqSpec(3, 0.2),
                                      BernoulliEqSpec(4, 0.25)}) {
    const SignalingScheme s = bernoulli_equilibrium_scheme(spec, 12);
    const StrategyProfile prof(bernoulli_instance(spec.n, spec.zeta),
                               std::vector<SignalingScheme>(static_cast<std::size_t>(spec.n), s));
    for (int i = 0; i < spec.n; ++i) {
      EXPECT_NEAR(expected_utility(prof, i, EvalMode::exact()).value, 1.0 / spec.n, 1e-9);
    }
  }
  const BernoulliEqSpec spec(2, 0.5);
  const StrategyProfile prof(bernoulli_instance(2, 0.5),
                             std::vector<SignalingScheme>(2, bernoulli_equilibrium_scheme(spec, 50)));
  // Cell midpoints lose 1/(3 grid^2)-order welfare against the continuum.
  EXPECT_NEAR(expected_welfare(prof).value, 2.0 / 3.0, 1e-3);
}

TEST(Discretization, GrainCountsAndAlignedBoundaries) {
  EXPECT_EQ(grain_counts(Prior::bernoulli(0.5), DiscretizationSpec(0.1)), (std::vector<int>{5, 5}));
  EXPECT_EQ(grain_counts(Prior::bernoulli(0.2), DiscretizationSpec(0.1)), (std::vector<int>{8, 2}));
  EXPECT_THROW(grain_counts(Prior::bernoulli(0.25), DiscretizationSpec(0.1)), SpecViolation);

  const auto b = grain_aligned_boundaries({3, 0.2}, DiscretizationSpec(0.1));
  EXPECT_DOUBLE_EQ(b.front(), 0.0);
  EXPECT_NEAR(b.back(), 0.6, 1e-15);
  EXPECT_TRUE(std::is_sorted(b.begin(), b.end()));
  EXPECT_NE(std::find(b.begin(), b.end(), 0.5), b.end());
  EXPECT_NE(std::find(b.begin(), b.end(), 1.0 / 9.0), b.end());
}

TEST(EnumerateDiscretizedSchemes, CountsMatchPartitionOracle) {
  auto count = [](const Prior& p, double eps, int max_signals = 0) {
    return enumerate_discretized_schemes(p, DiscretizationSpec(eps), max_signals,
                                         [](const SignalingScheme&) { return true; });
  };
  EXPECT_EQ(count(Prior::bernoulli(0.5), 0.5), 2u);
  EXPECT_EQ(count(Prior({{0.1, 1.0 / 3}, {0.5, 1.0 / 3}, {0.9, 1.0 / 3}}), 1.0 / 3), 5u);
  EXPECT_EQ(count(Prior::point(0.3), 1.0), 1u);

  // Distinct multiset partitions by deduplicating labelled set partitions.
  for (const auto& [prior, eps] : std::vector<std::pair<Prior, double>>{
           {Prior({{0.0, 0.25}, {0.3, 0.25}, {0.6, 0.25}, {1.0, 0.25}}), 0.25},
           {Prior({{0.0, 0.5}, {1.0, 0.5}}), 0.125},
           {Prior({{0.0, 0.5}, {0.5, 0.25}, {1.0, 0.25}}), 0.125}}) {
    const std::vector<int> t = grain_counts(prior, DiscretizationSpec(eps));
    const auto atoms = grain_atoms(t);
    std::set<std::vector<std::vector<int>>> distinct;
    for_each_set_partition(std::accumulate(t.begin(), t.end(), 0), [&](const std::vector<int>& label) {
      const int blocks = *std::max_element(label.begin(), label.end()) + 1;
      std::vector<std::vector<int>> sig(static_cast<std::size_t>(blocks), std::vector<int>(t.size(), 0));
      for (std::size_t g = 0; g < label.size(); ++g) ++sig[static_cast<std::size_t>(label[g])][atoms[g]];
      std::sort(sig.begin(), sig.end());
      distinct.insert(sig);
    });
    EXPECT_EQ(count(prior, eps), distinct.size());
  }

  std::size_t valid = 0;
  enumerate_discretized_schemes(Prior({{0.0, 0.5}, {0.5, 0.25}, {1.0, 0.25}}), DiscretizationSpec(0.125), 2,
                                [&](const SignalingScheme& s) {
                                  EXPECT_LE(s.size(), 2u);
                                  valid += validate_scheme(Prior({{0.0, 0.5}, {0.5, 0.25}, {1.0, 0.25}}), s).valid();
                                  return true;
                                });
  EXPECT_GT(valid, 0u);
  EXPECT_THROW(count(Prior::bernoulli(0.5), 0.05), CapExceeded);
}

TEST(BestResponse, GroupsFiveHighWithFourLowGrainsAgainstDeterministicOpponent) {
  const Instance inst({Prior::point(0.5), Prior::bernoulli(0.5)}, {UtilityFn(), UtilityFn()}, 1);
  const StrategyProfile prof = StrategyProfile::pooling(inst);
  const DiscretizationSpec spec(0.1);
  // Oracle over all 115975 labelled partitions of the ten grains.
  const double oracle = brute_force_best_response(prof, 1, grain_counts(inst.prior(1), spec));
  EXPECT_NEAR(oracle, 0.9, 1e-12);

  const BestResponse br = best_response(prof, 1, spec, {BestResponseMethod::Exhaustive});
  EXPECT_FALSE(br.heuristic);
  EXPECT_NEAR(br.utility, 0.9, 1e-12);
  ASSERT_EQ(br.scheme.size(), 2u);
  EXPECT_NEAR(br.scheme[1].posterior_mean(), 5.0 / 9.0, 1e-12);
  EXPECT_NEAR(br.scheme[1].total_mass(), 0.9, 1e-12);

  const BestResponse ls = best_response(prof, 1, spec, {BestResponseMethod::LocalSearch, 3});
  EXPECT_TRUE(ls.heuristic);
  EXPECT_LE(ls.utility, br.utility + 1e-12);
}

TEST(BestResponse, TrivialCases) {
  const DiscretizationSpec spec(0.25);
  const Prior p({{0.0, 0.25}, {0.5, 0.5}, {1.0, 0.25}});
  const Instance all({p, p}, {UtilityFn::linear(), UtilityFn::linear()}, 2);
  const BestResponse br = best_response(StrategyProfile::full_revelation(all), 0, spec);
  EXPECT_NEAR(br.utility, p.mean(), 1e-12);
  EXPECT_EQ(br.scheme.size(), 1u);

  const Instance single({p}, {UtilityFn::linear()}, 1);
  const BestResponse one = best_response(StrategyProfile::full_revelation(single), 0, spec);
  EXPECT_NEAR(one.utility, p.mean(), 1e-12);
  EXPECT_EQ(one.scheme.size(), 1u);
}

TEST(BestResponse, ExhaustiveMatchesBruteForceAndDominatesLocalSearch) {
  std::mt19937_64 rng(31);
  const DiscretizationSpec spec(1.0 / 6.0);
  for (int trial = 0; trial < 12; ++trial) {
    // Agent 0 has six grains spread over up to three atoms.
    std::vector<ValueAtom> atoms;
    const int m = 1 + static_cast<int>(rng() % 3);
    std::vector<int> grains(static_cast<std::size_t>(m), 1);
    for (int g = m; g < 6; ++g) ++grains[rng() % static_cast<std::size_t>(m)];
    std::vector<int> vals;
    while (static_cast<int>(vals.size()) < m) {
      const int v = static_cast<int>(rng() % 11);
      if (std::find(vals.begin(), vals.end(), v) == vals.end()) vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    for (int j = 0; j < m; ++j) {
      atoms.push_back({vals[static_cast<std::size_t>(j)] / 10.0, grains[static_cast<std::size_t>(j)] / 6.0});
    }
    const Prior mine(atoms);
    const Prior other = testing::random_prior(rng, 3);
    const int n = 2 + static_cast<int>(rng() % 2);
    std::vector<Prior> priors{mine};
    std::vector<UtilityFn> utils{testing::random_utility(rng)};
    for (int i = 1; i < n; ++i) {
      priors.push_back(i == 1 ? other : testing::random_prior(rng, 2));
      utils.push_back(UtilityFn());
    }
    const Instance inst(priors, utils, 1 + static_cast<int>(rng() % 2) % n);
    std::vector<SignalingScheme> schemes{SignalingScheme::pooling(mine)};
    for (int i = 1; i < n; ++i) schemes.push_back(testing::random_scheme(rng, inst.prior(i), 3));
    const StrategyProfile prof(inst, schemes);

    const BestResponse br = best_response(prof, 0, spec, {BestResponseMethod::Exhaustive});
    EXPECT_TRUE(validate_scheme(mine, br.scheme).valid());
    EXPECT_NEAR(br.utility, brute_force_best_response(prof, 0, grain_counts(mine, spec)), 1e-12);
    const BestResponse ls = best_response(prof, 0, spec, {BestResponseMethod::LocalSearch, 5, 6});
    EXPECT_TRUE(validate_scheme(mine, ls.scheme).valid());
    EXPECT_LE(ls.utility, br.utility + 1e-12);
  }
}

TEST(BestResponse, CapOnExhaustiveWork) {
  const Instance inst = bernoulli_instance(2, 0.5);
  const StrategyProfile prof = StrategyProfile::pooling(inst);
  BestResponseOptions opts{BestResponseMethod::Exhaustive};
  opts.state_cap = 100;
  EXPECT_THROW(best_response(prof, 0, DiscretizationSpec(0.05), opts), CapExceeded);
  opts.method = BestResponseMethod::Auto;
  EXPECT_TRUE(best_response(prof, 0, DiscretizationSpec(0.05), opts).heuristic);
}

TEST(VerifyEpsilonNe, AlignedBernoulliEquilibrium) {
  const BernoulliEqSpec spec(2, 0.5);
  const DiscretizationSpec disc(0.1);
  const StrategyProfile prof = bernoulli_equilibrium_profile(spec, grain_aligned_boundaries(spec, disc));
  const RegretReport report = verify_epsilon_ne(prof, disc, 1e-6);
  EXPECT_TRUE(report.is_epsilon_ne());
  EXPECT_LE(report.max_regret, 1e-6);
  for (double u : report.current_utility) EXPECT_NEAR(u, 0.5, 1e-9);
}

TEST(VerifyEpsilonNe, FullRevelationInRunningExampleIsNotAnEquilibrium) {
  for (int n : {2, 5}) {
    const Instance inst = bernoulli_instance(n, 1.0 / n);
    const RegretReport report =
        verify_epsilon_ne(StrategyProfile::full_revelation(inst), DiscretizationSpec(0.1), 1e-9);
    EXPECT_GT(report.regret[0], 1e-6) << n;
    EXPECT_FALSE(report.is_epsilon_ne());
  }
  const Instance all = bernoulli_instance(3, 0.2, 3);
  const RegretReport zero =
      verify_epsilon_ne(StrategyProfile::full_revelation(all), DiscretizationSpec(0.2), 0.0);
  EXPECT_EQ(zero.max_regret, 0.0);
}

TEST(Dynamics, EquilibriumConvergesAtRoundZero) {
  const BernoulliEqSpec spec(2, 0.5);
  const DiscretizationSpec disc(0.1);
  const StrategyProfile prof = bernoulli_equilibrium_profile(spec, grain_aligned_boundaries(spec, disc));
  DynamicsOptions opts;
  opts.regret_tol = 1e-6;
  const DynamicsResult res = best_response_dynamics(prof, disc, opts);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.rounds, 0);
  EXPECT_LE(res.report.max_regret, 1e-6);

  const Instance all = bernoulli_instance(2, 0.5, 2);
  EXPECT_TRUE(best_response_dynamics(StrategyProfile::full_revelation(all), disc).converged);
}

TEST(Dynamics, ConvergesFromRunningExampleRevelation) {
  const Instance inst = bernoulli_instance(2, 0.5);
  const DynamicsResult res =
      best_response_dynamics(StrategyProfile::full_revelation(inst), DiscretizationSpec(0.1));
  EXPECT_GT(res.rounds, 0);
  if (res.converged) {
    EXPECT_LE(res.report.max_regret, 1e-9);
    EXPECT_TRUE(verify_epsilon_ne(res.profile, DiscretizationSpec(0.1), 1e-9).is_epsilon_ne());
  } else {
    EXPECT_TRUE(res.cycle_length.has_value() || res.rounds == 100);
  }
}

}  // namespace
}  // namespace bpoa

namespace bpoa {
namespace {

TEST(Dynamics, DetectsTwoCycle) {
  const Instance inst = io::instance_from_json(io::read_json_file(BPOA_FIXTURE_DIR "/brd_cycle_instance.json"));
  DynamicsOptions opts;
  opts.max_rounds = 50;
  opts.best_response.method = BestResponseMethod::Exhaustive;
  const DynamicsResult res = best_response_dynamics(StrategyProfile::full_revelation(inst),
                                                    DiscretizationSpec(0.1), opts);
  EXPECT_FALSE(res.converged);
  ASSERT_TRUE(res.cycle_length.has_value());
  EXPECT_EQ(*res.cycle_length, 2);
  EXPECT_EQ(res.rounds, 3);
  EXPECT_GT(res.report.max_regret, 1e-3);
  EXPECT_FALSE(res.log.empty());
}

}  // namespace
}  // namespace bpoa
