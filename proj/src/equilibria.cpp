#include "bpoa/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "bpoa/errors.hpp"
#include "bpoa/montecarlo.hpp"

namespace bpoa {

BernoulliEqSpec::BernoulliEqSpec(int n_agents, double z) : n(n_agents), zeta(z) {
  if (n < 1) throw SpecViolation("need at least one agent");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw SpecViolation("zeta must lie in (0, 1]");
  if (n * zeta > 1.0 + kTol) {
    throw SpecViolation("N * zeta = " + std::to_string(n * zeta) + " exceeds 1");
  }
}

double bernoulli_equilibrium_cdf(const BernoulliEqSpec& spec, double v) {
  if (spec.n == 1) return v >= spec.zeta ? 1.0 : 0.0;
  if (v <= 0.0) return 0.0;
  if (v >= spec.p_hat()) return 1.0;
  return std::pow(v / spec.p_hat(), 1.0 / (spec.n - 1));
}

SignalingScheme bernoulli_equilibrium_scheme(const BernoulliEqSpec& spec, int grid) {
  if (grid < 2) throw InvalidInput("grid needs at least two cells");
  std::vector<double> boundaries;
  for (int c = 0; c <= grid; ++c) boundaries.push_back(spec.p_hat() * c / grid);
  return bernoulli_equilibrium_scheme(spec, boundaries);
}

SignalingScheme bernoulli_equilibrium_scheme(const BernoulliEqSpec& spec,
                                             std::span<const double> boundaries) {
  const Prior prior = Prior::bernoulli(spec.zeta);
  if (spec.n == 1 || prior.size() == 1) return SignalingScheme::pooling(prior);
  if (boundaries.size() < 2 || std::abs(boundaries.front()) > kTol ||
      std::abs(boundaries.back() - spec.p_hat()) > kTol) {
    throw InvalidInput("cell boundaries must run from 0 to p_hat");
  }

  const double e = 1.0 / (spec.n - 1);
  const double p_hat = spec.p_hat();
  std::vector<Composition> comps;
  double used0 = 0.0;
  double used1 = 0.0;
  for (std::size_t c = 0; c + 1 < boundaries.size(); ++c) {
    if (!(boundaries[c + 1] > boundaries[c])) {
      throw InvalidInput("cell boundaries must be strictly increasing");
    }
    const double xa = std::clamp(boundaries[c] / p_hat, 0.0, 1.0);
    const double xb = std::clamp(boundaries[c + 1] / p_hat, 0.0, 1.0);
    const double mass = std::pow(xb, e) - std::pow(xa, e);
    if (mass <= kMinSignalMass) continue;
    const double mean = p_hat * e / (e + 1.0) *
                        (std::pow(xb, e + 1.0) - std::pow(xa, e + 1.0)) / mass;
    comps.push_back({(1.0 - mean) * mass, mean * mass});
    used0 += comps.back()[0];
    used1 += comps.back()[1];
  }
  // Absorb rounding so the allocations exhaust the prior exactly.
  comps.back()[0] += prior[0].mass - used0;
  comps.back()[1] += prior[1].mass - used1;
  return SignalingScheme(prior, std::move(comps));
}

double bernoulli_equilibrium_welfare(const BernoulliEqSpec& spec) {
  return spec.n * spec.p_hat() / (2.0 * spec.n - 1.0);
}

LowerBound poa_lower_bound(const BernoulliEqSpec& spec) {
  const double n = spec.n;
  const double p = spec.p_hat();
  LowerBound out;
  out.bound = (2.0 - 1.0 / n) * (1.0 - std::exp(-p)) / p;
  out.exact_ratio = (1.0 - std::pow(1.0 - spec.zeta, n)) / bernoulli_equilibrium_welfare(spec);
  return out;
}

StrategyProfile bernoulli_equilibrium_profile(const BernoulliEqSpec& spec,
                                              std::span<const double> boundaries) {
  const SignalingScheme scheme = bernoulli_equilibrium_scheme(spec, boundaries);
  return StrategyProfile(bernoulli_instance(spec.n, spec.zeta),
                         std::vector<SignalingScheme>(static_cast<std::size_t>(spec.n), scheme));
}

DiscretizationSpec::DiscretizationSpec(double eps) : epsilon(eps) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw SpecViolation("epsilon must lie in (0, 1]");
}

std::vector<int> grain_counts(const Prior& prior, const DiscretizationSpec& spec) {
  std::vector<int> t;
  for (const ValueAtom& a : prior.atoms()) {
    const double grains = std::round(a.mass / spec.epsilon);
    if (grains < 1.0 || std::abs(grains * spec.epsilon - a.mass) > kTol) {
      throw SpecViolation("atom mass " + std::to_string(a.mass) +
                          " is not a multiple of epsilon " + std::to_string(spec.epsilon));
    }
    t.push_back(static_cast<int>(grains));
  }
  return t;
}

std::vector<double> grain_aligned_boundaries(const BernoulliEqSpec& spec,
                                             const DiscretizationSpec& disc) {
  const Prior prior = Prior::bernoulli(spec.zeta);
  std::vector<double> out{0.0, spec.p_hat()};
  if (prior.size() == 2) {
    const std::vector<int> t = grain_counts(prior, disc);
    for (int ones = 0; ones <= t[1]; ++ones) {
      for (int zeros = 0; zeros <= t[0]; ++zeros) {
        if (ones + zeros == 0) continue;
        const double m = static_cast<double>(ones) / (ones + zeros);
        if (m > kTol && m < spec.p_hat() - kTol) out.push_back(m);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= kTol; }),
            out.end());
  return out;
}

namespace {

using Block = std::vector<int>;

SignalingScheme scheme_from_blocks(const Prior& prior, const std::vector<int>& t,
                                   const std::vector<Block>& blocks) {
  std::vector<Composition> comps;
  for (const Block& b : blocks) {
    Composition c(prior.size(), 0.0);
    for (std::size_t j = 0; j < prior.size(); ++j) {
      c[j] = b[j] == t[j] ? prior[j].mass : prior[j].mass * b[j] / t[j];
    }
    comps.push_back(std::move(c));
  }
  // Grains of an atom are exact fractions of its mass; make the split exact.
  for (std::size_t j = 0; j < prior.size(); ++j) {
    double used = 0.0;
    std::size_t last = comps.size();
    for (std::size_t s = 0; s < comps.size(); ++s) {
      if (blocks[s][j] > 0) {
        used += comps[s][j];
        last = s;
      }
    }
    if (last < comps.size()) comps[last][j] += prior[j].mass - used;
  }
  return SignalingScheme(prior, std::move(comps));
}

// Lexicographic comparison on grain-count vectors.
bool lex_greater(const Block& a, const Block& b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

// Calls fn for every nonzero b <= r in mixed-radix order.
template <class F>
void for_each_subvector(const Block& r, F&& fn) {
  Block b(r.size(), 0);
  while (true) {
    std::size_t pos = 0;
    while (pos < b.size()) {
      if (b[pos] < r[pos]) {
        ++b[pos];
        break;
      }
      b[pos] = 0;
      ++pos;
    }
    if (pos == b.size()) return;
    fn(b);
  }
}

// Value of one block against a fixed win curve.
class BlockValue {
 public:
  BlockValue(const Prior& prior, const UtilityFn& u, const std::vector<int>& t,
             const WinCurve& curve)
      : prior_(prior), t_(t), curve_(curve) {
    for (const ValueAtom& a : prior.atoms()) util_.push_back(u(a.value));
  }

  double operator()(const Block& b) const {
    double mass = 0.0, weighted = 0.0, utility = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j] == 0) continue;
      const double a = prior_[j].mass * b[j] / t_[j];
      mass += a;
      weighted += a * prior_[j].value;
      utility += a * util_[j];
    }
    if (mass <= 0.0) return 0.0;
    return curve_(weighted / mass) * utility;
  }

 private:
  const Prior& prior_;
  const std::vector<int>& t_;
  const WinCurve& curve_;
  std::vector<double> util_;
};

double transition_estimate(const std::vector<int>& t) {
  double n = 1.0;
  for (int x : t) n *= (x + 1.0) * (x + 2.0) / 2.0;
  return n;
}

// Exact maximization over all partitions of the grains. V[r] is the best
// total value of a partition of the sub-multiset r; the block holding a
// grain of r's lowest nonzero atom is chosen first.
std::vector<Block> exhaustive_partition(const std::vector<int>& t, const BlockValue& value) {
  const std::size_t m = t.size();
  std::vector<std::size_t> stride(m);
  std::size_t states = 1;
  for (std::size_t j = 0; j < m; ++j) {
    stride[j] = states;
    states *= static_cast<std::size_t>(t[j] + 1);
  }
  auto index = [&](const Block& b) {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < m; ++j) idx += stride[j] * static_cast<std::size_t>(b[j]);
    return idx;
  };

  std::vector<double> f(states, 0.0);
  for_each_subvector(t, [&](const Block& b) { f[index(b)] = value(b); });

  std::vector<double> best(states, 0.0);
  std::vector<int> count(states, 0);
  std::vector<std::size_t> choice(states, 0);
  Block r(m, 0);
  for (std::size_t idx = 1; idx < states; ++idx) {
    std::size_t rem = idx;
    for (std::size_t j = m; j-- > 0;) {
      r[j] = static_cast<int>(rem / stride[j]);
      rem %= stride[j];
    }
    std::size_t low = 0;
    while (r[low] == 0) ++low;
    double v_best = -1.0;
    int c_best = 0;
    std::size_t pick = 0;
    for_each_subvector(r, [&](const Block& b) {
      if (b[low] == 0) return;
      const std::size_t bi = index(b);
      const std::size_t rest = idx - bi;
      const double v = f[bi] + best[rest];
      const int c = 1 + count[rest];
      if (v > v_best + kTol || (v >= v_best - kTol && c < c_best)) {
        v_best = v;
        c_best = c;
        pick = bi;
      }
    });
    best[idx] = v_best;
    count[idx] = c_best;
    choice[idx] = pick;
  }

  std::vector<Block> blocks;
  std::size_t idx = states - 1;
  while (idx != 0) {
    std::size_t bi = choice[idx];
    Block b(m);
    std::size_t rem = bi;
    for (std::size_t j = m; j-- > 0;) {
      b[j] = static_cast<int>(rem / stride[j]);
      rem %= stride[j];
    }
    blocks.push_back(std::move(b));
    idx -= bi;
  }
  return blocks;
}

struct SearchState {
  std::vector<Block> blocks;
  double value = 0.0;
};

bool is_zero(const Block& b) {
  return std::all_of(b.begin(), b.end(), [](int x) { return x == 0; });
}

// Steepest-ascent search over partitions with transfer, split and merge moves.
SearchState local_search(std::vector<Block> blocks, const BlockValue& value) {
  const std::size_t m = blocks.front().size();
  std::vector<double> vals;
  for (const Block& b : blocks) vals.push_back(value(b));
  double current = std::accumulate(vals.begin(), vals.end(), 0.0);

  constexpr std::size_t kMaxSplits = 4096;
  while (true) {
    double best_gain = kTol;
    std::vector<Block> best_blocks;

    const std::size_t nb = blocks.size();
    // Transfer one grain of atom j from block a to block b (b == nb: new block).
    for (std::size_t a = 0; a < nb; ++a) {
      for (std::size_t j = 0; j < m; ++j) {
        if (blocks[a][j] == 0) continue;
        Block from = blocks[a];
        --from[j];
        const double v_from = is_zero(from) ? 0.0 : value(from);
        for (std::size_t b = 0; b <= nb; ++b) {
          if (b == a) continue;
          if (b == nb && is_zero(from)) continue;
          Block to = b == nb ? Block(m, 0) : blocks[b];
          ++to[j];
          const double old_v = vals[a] + (b == nb ? 0.0 : vals[b]);
          const double gain = v_from + value(to) - old_v;
          if (gain > best_gain) {
            best_gain = gain;
            best_blocks = blocks;
            best_blocks[a] = from;
            if (b == nb) {
              best_blocks.push_back(to);
            } else {
              best_blocks[b] = to;
            }
          }
        }
      }
    }
    // Split a block in two.
    for (std::size_t a = 0; a < nb; ++a) {
      double subsets = 1.0;
      for (int x : blocks[a]) subsets *= x + 1.0;
      if (subsets > kMaxSplits) continue;
      for_each_subvector(blocks[a], [&](const Block& c) {
        Block rest = blocks[a];
        for (std::size_t j = 0; j < m; ++j) rest[j] -= c[j];
        if (is_zero(rest) || lex_greater(c, rest)) return;
        const double gain = value(c) + value(rest) - vals[a];
        if (gain > best_gain) {
          best_gain = gain;
          best_blocks = blocks;
          best_blocks[a] = rest;
          best_blocks.push_back(c);
        }
      });
    }
    // Merge two blocks.
    for (std::size_t a = 0; a < nb; ++a) {
      for (std::size_t b = a + 1; b < nb; ++b) {
        Block merged = blocks[a];
        for (std::size_t j = 0; j < m; ++j) merged[j] += blocks[b][j];
        const double gain = value(merged) - vals[a] - vals[b];
        if (gain > best_gain) {
          best_gain = gain;
          best_blocks = blocks;
          best_blocks[a] = merged;
          best_blocks.erase(best_blocks.begin() + static_cast<std::ptrdiff_t>(b));
        }
      }
    }

    if (best_blocks.empty()) break;
    std::erase_if(best_blocks, is_zero);
    blocks = std::move(best_blocks);
    vals.clear();
    for (const Block& b : blocks) vals.push_back(value(b));
    current = std::accumulate(vals.begin(), vals.end(), 0.0);
  }
  return {std::move(blocks), current};
}

std::vector<Block> initial_partition(const std::vector<int>& t, int restart, std::uint64_t seed) {
  const std::size_t m = t.size();
  if (restart == 0) return {Block(t)};
  if (restart == 1) {
    std::vector<Block> blocks;
    for (std::size_t j = 0; j < m; ++j) {
      Block b(m, 0);
      b[j] = t[j];
      blocks.push_back(std::move(b));
    }
    return blocks;
  }
  std::mt19937_64 rng(mc::chunk_seed(seed, static_cast<std::uint64_t>(restart)));
  const int grains = std::accumulate(t.begin(), t.end(), 0);
  const int nb = 1 + static_cast<int>(mc::uniform01(rng) * grains);
  std::vector<Block> blocks(static_cast<std::size_t>(nb), Block(m, 0));
  for (std::size_t j = 0; j < m; ++j) {
    for (int g = 0; g < t[j]; ++g) {
      const auto b = static_cast<std::size_t>(mc::uniform01(rng) * nb);
      ++blocks[std::min(b, blocks.size() - 1)][j];
    }
  }
  std::erase_if(blocks, is_zero);
  return blocks;
}

}  // namespace

std::uint64_t enumerate_discretized_schemes(
    const Prior& prior, const DiscretizationSpec& spec, int max_signals,
    const std::function<bool(const SignalingScheme&)>& visit, int grain_cap) {
  const std::vector<int> t = grain_counts(prior, spec);
  const int grains = std::accumulate(t.begin(), t.end(), 0);
  if (grains > grain_cap) {
    throw CapExceeded(std::to_string(grains) + " grains exceed the enumeration cap of " +
                      std::to_string(grain_cap));
  }
  const std::size_t m = t.size();
  std::uint64_t emitted = 0;
  bool stop = false;
  std::vector<Block> chosen;

  // Blocks are chosen in nonincreasing lexicographic order so each multiset
  // partition is produced once.
  std::function<void(const Block&)> rec = [&](const Block& remaining) {
    if (stop) return;
    if (is_zero(remaining)) {
      ++emitted;
      if (!visit(scheme_from_blocks(prior, t, chosen))) stop = true;
      return;
    }
    if (max_signals > 0 && static_cast<int>(chosen.size()) >= max_signals) return;
    for_each_subvector(remaining, [&](const Block& b) {
      if (stop) return;
      if (!chosen.empty() && lex_greater(b, chosen.back())) return;
      Block rest = remaining;
      for (std::size_t j = 0; j < m; ++j) rest[j] -= b[j];
      if (!is_zero(rest)) {
        std::size_t low = 0;
        while (rest[low] == 0) ++low;
        Block unit(m, 0);
        unit[low] = 1;
        if (lex_greater(unit, b)) return;
      }
      chosen.push_back(b);
      rec(rest);
      chosen.pop_back();
    });
  };
  rec(Block(t));
  return emitted;
}

BestResponse best_response(const StrategyProfile& profile, int agent,
                           const DiscretizationSpec& spec, const BestResponseOptions& options) {
  if (agent < 0 || agent >= profile.num_agents()) throw InvalidInput("agent index out of range");
  const Prior& prior = profile.instance().prior(agent);
  const UtilityFn& u = profile.instance().utility(agent);
  const std::vector<int> t = grain_counts(prior, spec);
  const WinCurve curve(profile, agent);
  const BlockValue value(prior, u, t, curve);

  const bool fits = transition_estimate(t) <= options.state_cap;
  BestResponseMethod method = options.method;
  if (method == BestResponseMethod::Auto) {
    method = fits ? BestResponseMethod::Exhaustive : BestResponseMethod::LocalSearch;
  }

  if (method == BestResponseMethod::Exhaustive) {
    if (!fits) {
      throw CapExceeded("exhaustive best response needs about " +
                        std::to_string(transition_estimate(t)) + " transitions, cap is " +
                        std::to_string(options.state_cap));
    }
    SignalingScheme scheme = scheme_from_blocks(prior, t, exhaustive_partition(t, value));
    const double utility = utility_against(curve, prior, u, scheme);
    return {std::move(scheme), utility, false};
  }

  const int restarts = std::max(1, options.restarts);
  std::vector<SearchState> results(static_cast<std::size_t>(restarts));
  mc::parallel_for(results.size(), options.workers, [&](std::size_t r) {
    results[r] = local_search(initial_partition(t, static_cast<int>(r), options.seed), value);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    const double d = results[r].value - results[best].value;
    if (d > kTol || (d >= -kTol && results[r].blocks.size() < results[best].blocks.size())) {
      best = r;
    }
  }
  SignalingScheme scheme = scheme_from_blocks(prior, t, results[best].blocks);
  const double utility = utility_against(curve, prior, u, scheme);
  return {std::move(scheme), utility, true};
}

std::vector<double> agent_utilities(const StrategyProfile& profile) {
  std::vector<double> out;
  for (int i = 0; i < profile.num_agents(); ++i) {
    const WinCurve curve(profile, i);
    out.push_back(utility_against(curve, profile.instance().prior(i),
                                  profile.instance().utility(i), profile.scheme(i)));
  }
  return out;
}

RegretReport verify_epsilon_ne(const StrategyProfile& profile, const DiscretizationSpec& spec,
                               double regret_tol, const BestResponseOptions& options) {
  const std::size_t n = static_cast<std::size_t>(profile.num_agents());
  std::vector<std::optional<BestResponse>> br(n);
  BestResponseOptions inner = options;
  inner.workers = 1;
  mc::parallel_for(n, options.workers, [&](std::size_t i) {
    br[i] = best_response(profile, static_cast<int>(i), spec, inner);
  });

  RegretReport report;
  report.tolerance = regret_tol;
  report.current_utility = agent_utilities(profile);
  for (std::size_t i = 0; i < n; ++i) {
    report.best_response_utility.push_back(br[i]->utility);
    report.regret.push_back(std::max(0.0, br[i]->utility - report.current_utility[i]));
    report.best_responses.push_back(std::move(br[i]->scheme));
    report.heuristic = report.heuristic || br[i]->heuristic;
  }
  report.max_regret = *std::max_element(report.regret.begin(), report.regret.end());
  return report;
}

namespace {

std::string profile_key(const StrategyProfile& profile) {
  std::ostringstream out;
  for (const SignalingScheme& s : profile.schemes()) {
    for (const Signal& sig : s.signals()) {
      for (double a : sig.composition()) out << std::llround(a * 1e12) << ',';
      out << ';';
    }
    out << '|';
  }
  return out.str();
}

}  // namespace

DynamicsResult best_response_dynamics(const StrategyProfile& init, const DiscretizationSpec& spec,
                                      const DynamicsOptions& options) {
  DynamicsResult result{init, {}, false, 0, {}, std::nullopt, {}};
  const double tol = options.regret_tol;

  result.report = verify_epsilon_ne(init, spec, tol, options.best_response);
  if (result.report.max_regret <= tol) {
    result.converged = true;
    result.log.push_back("round 0: max regret " + std::to_string(result.report.max_regret) +
                         " within tolerance");
    return result;
  }

  std::map<std::string, int> seen;
  seen.emplace(profile_key(result.profile), 0);
  BestResponseOptions br_options = options.best_response;
  const int n = init.num_agents();
  for (int round = 1; round <= options.max_rounds; ++round) {
    result.rounds = round;
    bool switched = false;
    RegretReport round_report;
    round_report.tolerance = tol;
    for (int i = 0; i < n; ++i) {
      br_options.seed = mc::chunk_seed(options.best_response.seed,
                                       static_cast<std::uint64_t>(round * n + i));
      BestResponse br = best_response(result.profile, i, spec, br_options);
      const WinCurve curve(result.profile, i);
      const double before = utility_against(curve, init.instance().prior(i),
                                            init.instance().utility(i), result.profile.scheme(i));
      const bool take = br.utility - before > tol;
      result.steps.push_back({round, i, before, take ? br.utility : before, take});
      round_report.current_utility.push_back(before);
      round_report.best_response_utility.push_back(br.utility);
      round_report.regret.push_back(std::max(0.0, br.utility - before));
      round_report.heuristic = round_report.heuristic || br.heuristic;
      if (take) {
        result.profile = result.profile.with_scheme(i, br.scheme);
        switched = true;
        result.log.push_back("round " + std::to_string(round) + ": agent " + std::to_string(i) +
                             " switches, utility " + std::to_string(before) + " -> " +
                             std::to_string(br.utility));
      }
      round_report.best_responses.push_back(std::move(br.scheme));
    }
    if (!switched) {
      round_report.max_regret =
          *std::max_element(round_report.regret.begin(), round_report.regret.end());
      result.report = std::move(round_report);
      result.converged = true;
      result.log.push_back("round " + std::to_string(round) + ": no agent switches");
      return result;
    }
    const auto [it, fresh] = seen.emplace(profile_key(result.profile), round);
    if (!fresh) {
      result.cycle_length = round - it->second;
      result.log.push_back("round " + std::to_string(round) + ": profile of round " +
                           std::to_string(it->second) + " repeats, cycle length " +
                           std::to_string(*result.cycle_length));
      break;
    }
  }
  if (!result.cycle_length) {
    result.log.push_back("stopped after " + std::to_string(result.rounds) + " rounds");
  }
  result.report = verify_epsilon_ne(result.profile, spec, tol, options.best_response);
  return result;
}

}  // namespace bpoa
