#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bpoa/equilibria.hpp"
#include "bpoa/evaluation.hpp"
#include "bpoa/profile.hpp"

namespace bpoa {

struct CertParams {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double phi = 0.0;

  // Throws InvalidInput unless alpha > 1, beta < tau < 1 and phi * tau >= alpha.
  void validate() const;

  // 1/phi - beta/(tau phi): lower bound on the deviation signal's mean as a
  // fraction of the small contributor's tail mean.
  double mean_factor() const;
  double case1_bound() const;
  double case2_bound() const;
  double bound() const;
};

CertParams golden_parameters();
CertParams integer_phi_parameters();

// Larger of the two case bounds when quantiles are truncated to multiples
// of epsilon; the first case degrades to 2 / (beta (1 - 1/alpha - eps N)).
double discretized_bound(const CertParams& params, double epsilon, int num_agents);

struct QuantileCutResult {
  int k = 1;
  double e_cut = 0.0;
  std::vector<double> q;
  std::vector<double> e;
  double sw_prime = 0.0;
  // True when point masses at the cut forced a reduction of some q_i.
  bool repaired = false;
};

// Largest x in [0, 1] whose top-x tail mean is at least `threshold`.
double quantile_at(const Prior& prior, double threshold);

QuantileCutResult quantile_cuts(const Instance& instance);
double sw_prime_upper(const QuantileCutResult& cuts);

struct Classification {
  std::vector<int> n1;
  std::vector<int> n2;
  std::vector<double> r;
};

// n1 = {r_i >= alpha q_i}, n2 the rest. Throws InternalInvariant if n2 is
// empty.
Classification classify_agents(std::span<const double> r, std::span<const double> q,
                               const CertParams& params);
Classification classify_agents(const StrategyProfile& profile, const QuantileCutResult& cuts,
                               const CertParams& params, const EvalMode& mode = {});

struct DeviationSignal {
  int agent = 0;
  SignalingScheme scheme;
  Composition s_star;
  double s_star_mean = 0.0;
  double s_star_mass = 0.0;
  // Win probability of each original signal against the fixed opponents,
  // and whether it cleared tau.
  std::vector<double> w;
  std::vector<bool> high;
  double phi_i = 0.0;
  // No low-win signal carried any mass in the top quantile.
  bool degenerate = false;
};

// `q` and `tail_mean` are the agent's quantile cut and its tail mean; the
// contribution `c` must be below tail_mean * beta * q.
DeviationSignal construct_deviation_signal(const StrategyProfile& profile, int agent, double q,
                                           double tail_mean, double c, const CertParams& params);
DeviationSignal construct_deviation_signal(const StrategyProfile& profile, int agent,
                                           const QuantileCutResult& cuts, const CertParams& params);

struct DeviationAnalysis {
  double s_star_win = 0.0;
  double utility_before = 0.0;
  double utility_after = 0.0;
  double gain = 0.0;
  bool profitable = false;
};

DeviationAnalysis deviation_analysis(const StrategyProfile& profile, const DeviationSignal& dev,
                                     double gain_tol = 1e-9);

struct DeviationWitness {
  int agent = 0;
  SignalingScheme scheme;
  double utility_before = 0.0;
  double utility_after = 0.0;
  double gain = 0.0;
  std::string construction;
};

enum class CertificateKind { Case1, Case2, DeviationWitness, InapplicableProfileNotNE };
const char* to_string(CertificateKind kind);

struct PoACertificate {
  CertificateKind kind = CertificateKind::Case1;
  // Absent for witnesses, inapplicable profiles and degenerate case 2.
  std::optional<double> bound;
  CertParams params;
  QuantileCutResult cuts;
  // Truncated quantiles and their tail means; only for the discretized
  // variant.
  std::optional<double> epsilon;
  std::vector<double> q_hat;
  std::vector<double> e_hat;

  std::vector<double> r;
  std::vector<double> c;
  std::vector<int> n1;
  std::vector<int> n2;
  double welfare = 0.0;
  double first_best = 0.0;
  EvalMethod method = EvalMethod::Enumeration;
  // sw_prime / welfare and first_best / welfare.
  double sw_prime_ratio = 0.0;
  double welfare_ratio = 0.0;

  std::optional<int> i_star;
  std::optional<DeviationSignal> deviation;
  std::optional<DeviationAnalysis> analysis;
  bool degenerate = false;
  // s* mean against mean_factor() * tail mean of i*.
  std::optional<double> s_star_lower_bound;
  std::vector<int> n_large;
  std::vector<int> n_small;
  std::optional<double> tail_probability;
  std::optional<DeviationWitness> witness;
  std::string reason;
};

struct CertifyOptions {
  EvalMode mode;
  // Deviation gains at or below this are not reported as witnesses.
  double gain_tol = 1e-9;
};

PoACertificate certify_poa(const StrategyProfile& profile, const CertParams& params,
                           const CertifyOptions& options = {});

// Truncates quantiles to multiples of epsilon. Requires an integer phi and a
// profile whose allocations are whole grains.
PoACertificate discretized_certify(const StrategyProfile& profile, const CertParams& params,
                                   const DiscretizationSpec& spec, const CertifyOptions& options = {});

// Pr[the m-th largest posterior mean among `agents` is >= x].
double order_statistic_tail(const StrategyProfile& profile, std::span<const int> agents, int m,
                            double x);

struct WarmupCertificate {
  double e_top1 = 0.0;  // tail mean of the top 1/N quantile
  double e_top2 = 0.0;  // tail mean of the top 2/N quantile
  double prob_max_at_least_e_top2 = 0.0;
  bool tail_condition = false;
  std::vector<double> r;
  int i_star = 0;
  double welfare = 0.0;
  double first_best = 0.0;
  double welfare_ratio = 0.0;  // first_best / welfare
  double bound_ratio = 0.0;    // e_top1 / welfare
  std::optional<DeviationWitness> witness;
  // Pr[s1] * Pr[win | s1] minus the current utility, s1 being the witness's
  // highest signal. Matches witness->gain when the other signal never wins.
  std::optional<double> gain_by_chain;
  bool inapplicable = false;
  std::string reason;
};

// Identical priors, constant utilities, k = 1; throws WrongRegime otherwise.
WarmupCertificate warmup_certify(const StrategyProfile& profile, const EvalMode& mode = {},
                                 double gain_tol = 1e-9);

}  // namespace bpoa
