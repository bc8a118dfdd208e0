#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bpoa/evaluation.hpp"
#include "bpoa/profile.hpp"

namespace bpoa {

// Symmetric Bernoulli family: N agents, value 1 with probability zeta,
// constant utility, k = 1.
struct BernoulliEqSpec {
  BernoulliEqSpec(int n, double zeta);

  int n;
  double zeta;
  double p_hat() const { return n * zeta; }
};

// Equilibrium CDF of each agent's posterior mean, (v / p_hat)^(1/(N-1)) on
// [0, p_hat]. A point mass at zeta when N = 1.
double bernoulli_equilibrium_cdf(const BernoulliEqSpec& spec, double v);

// Finite scheme whose posterior-mean distribution matches the equilibrium
// CDF at every cell boundary. `grid` equal cells over [0, p_hat].
SignalingScheme bernoulli_equilibrium_scheme(const BernoulliEqSpec& spec, int grid);
// Same with explicit ascending boundaries from 0 to p_hat.
SignalingScheme bernoulli_equilibrium_scheme(const BernoulliEqSpec& spec,
                                             std::span<const double> boundaries);

double bernoulli_equilibrium_welfare(const BernoulliEqSpec& spec);

struct LowerBound {
  double bound = 0.0;        // (2 - 1/N)(1 - e^{-N zeta}) / (N zeta)
  double exact_ratio = 0.0;  // (1 - (1 - zeta)^N) / equilibrium welfare
};
LowerBound poa_lower_bound(const BernoulliEqSpec& spec);

// Every prior atom mass is a multiple of epsilon; allocations come in
// whole grains of size epsilon.
struct DiscretizationSpec {
  explicit DiscretizationSpec(double epsilon);
  double epsilon;
};

inline constexpr int kDefaultGrainCap = 12;

// Grain count per atom. Throws SpecViolation when a mass is off the grid.
std::vector<int> grain_counts(const Prior& prior, const DiscretizationSpec& spec);

// Boundaries 0, every grain-achievable posterior mean in (0, p_hat), p_hat.
std::vector<double> grain_aligned_boundaries(const BernoulliEqSpec& spec,
                                             const DiscretizationSpec& disc);

// Streams every partition of the grains into blocks, one scheme per
// partition (blocks sharing a mean end up merged in the scheme). Grains of
// the same atom are interchangeable, so partitions are multiset partitions.
// `max_signals` of 0 means unbounded. The callback returns false to stop.
// Returns the number of schemes emitted.
std::uint64_t enumerate_discretized_schemes(
    const Prior& prior, const DiscretizationSpec& spec, int max_signals,
    const std::function<bool(const SignalingScheme&)>& visit, int grain_cap = kDefaultGrainCap);

enum class BestResponseMethod { Exhaustive, LocalSearch, Auto };

struct BestResponseOptions {
  BestResponseMethod method = BestResponseMethod::Auto;
  std::uint64_t seed = 0;
  int restarts = 20;
  // Bound on the exhaustive search's work (block transitions). Auto falls
  // back to local search above it.
  double state_cap = 5e7;
  unsigned workers = 0;
};

struct BestResponse {
  SignalingScheme scheme;
  double utility = 0.0;
  bool heuristic = false;
};

BestResponse best_response(const StrategyProfile& profile, int agent,
                           const DiscretizationSpec& spec, const BestResponseOptions& options = {});

struct RegretReport {
  std::vector<double> best_response_utility;
  std::vector<double> current_utility;
  std::vector<double> regret;
  std::vector<SignalingScheme> best_responses;
  double max_regret = 0.0;
  double tolerance = 0.0;
  bool heuristic = false;

  bool is_epsilon_ne() const { return max_regret <= tolerance; }
};

// Exact utility of every agent under the profile.
std::vector<double> agent_utilities(const StrategyProfile& profile);

// Best-responds for every agent against the profile. Opponents may play any
// scheme; deviations range over the discretized space.
RegretReport verify_epsilon_ne(const StrategyProfile& profile, const DiscretizationSpec& spec,
                               double regret_tol, const BestResponseOptions& options = {});

struct DynamicsOptions {
  int max_rounds = 100;
  double regret_tol = 1e-9;
  BestResponseOptions best_response;
};

struct DynamicsStep {
  int round = 0;
  int agent = 0;
  double utility_before = 0.0;
  double utility_after = 0.0;
  bool switched = false;
};

struct DynamicsResult {
  StrategyProfile profile;
  RegretReport report;
  bool converged = false;
  int rounds = 0;
  std::vector<DynamicsStep> steps;
  // Set when a profile seen after an earlier round reappears.
  std::optional<int> cycle_length;
  std::vector<std::string> log;
};

DynamicsResult best_response_dynamics(const StrategyProfile& init, const DiscretizationSpec& spec,
                                      const DynamicsOptions& options = {});

// Profile where every agent plays bernoulli_equilibrium_scheme.
StrategyProfile bernoulli_equilibrium_profile(const BernoulliEqSpec& spec,
                                              std::span<const double> boundaries);

}  // namespace bpoa
