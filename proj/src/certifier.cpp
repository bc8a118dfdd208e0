#include "bpoa/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bpoa/errors.hpp"

namespace bpoa {

void CertParams::validate() const {
  if (!(alpha > 1.0)) throw InvalidInput("alpha must exceed 1");
  if (!(tau < 1.0) || !(tau > 0.0)) throw InvalidInput("tau must lie in (0, 1)");
  if (!(beta > 0.0) || !(beta < tau)) throw InvalidInput("beta must lie in (0, tau)");
  if (!(phi * tau >= alpha)) throw InvalidInput("phi * tau must be at least alpha");
}

double CertParams::mean_factor() const { return 1.0 / phi - beta / (tau * phi); }

double CertParams::case1_bound() const { return 2.0 / (beta * (1.0 - 1.0 / alpha)); }

double CertParams::case2_bound() const { return 2.0 / ((1.0 - tau) * mean_factor()); }

double CertParams::bound() const { return std::max(case1_bound(), case2_bound()); }

CertParams golden_parameters() {
  const double s5 = std::sqrt(5.0);
  return {(s5 + 1.0) / 2.0, s5 - 2.0, (s5 - 1.0) / 2.0, (s5 + 3.0) / 2.0 * (1.0 + 1e-9)};
}

CertParams integer_phi_parameters() { return {1.7264, 0.21164, 0.57883, 3.0}; }

double discretized_bound(const CertParams& params, double epsilon, int num_agents) {
  const double slack = 1.0 - 1.0 / params.alpha - epsilon * num_agents;
  if (!(slack > 0.0)) throw SpecViolation("epsilon * N leaves no room in the first-case bound");
  return std::max(2.0 / (params.beta * slack), params.case2_bound());
}

double quantile_at(const Prior& prior, double threshold) {
  if (prior.mean() >= threshold) return 1.0;
  double integral = 0.0;
  double taken = 0.0;
  for (std::size_t j = prior.size(); j-- > 0;) {
    const double v = prior[j].value;
    const double m = prior[j].mass;
    if (v < threshold) {
      // integral + v (x - taken) = threshold x
      const double x = (integral - v * taken) / (threshold - v);
      if (x < taken + m) return std::max(x, taken);
    }
    integral += v * m;
    taken += m;
  }
  return 1.0;
}

namespace {

double sum_quantiles(const Instance& inst, double threshold, std::vector<double>& q) {
  q.resize(static_cast<std::size_t>(inst.num_agents()));
  double total = 0.0;
  for (int i = 0; i < inst.num_agents(); ++i) {
    q[static_cast<std::size_t>(i)] = quantile_at(inst.prior(i), threshold);
    total += q[static_cast<std::size_t>(i)];
  }
  return total;
}

void require_unit_interval(const Instance& inst) {
  if (!inst.in_unit_interval()) throw WrongRegime("certification needs values in [0, 1]");
}

}  // namespace

QuantileCutResult quantile_cuts(const Instance& inst) {
  const int k = inst.k();
  double top = -std::numeric_limits<double>::infinity();
  double bottom = std::numeric_limits<double>::infinity();
  for (const Prior& p : inst.priors()) {
    top = std::max(top, p.max_value());
    bottom = std::min(bottom, p.min_value());
  }

  QuantileCutResult out;
  out.k = k;
  std::vector<double> q_lo;
  std::vector<double> q_hi(static_cast<std::size_t>(inst.num_agents()), 0.0);
  if (sum_quantiles(inst, top, q_lo) >= k) {
    out.e_cut = top;
  } else {
    double lo = bottom;
    double hi = top;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      std::vector<double> scratch;
      if (sum_quantiles(inst, mid, scratch) >= k) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.e_cut = lo;
    sum_quantiles(inst, lo, q_lo);
    sum_quantiles(inst, hi, q_hi);
  }

  // Point masses at the cut make the sum jump past k; take the excess off
  // the jumping agents, lowest index first.
  out.q = q_lo;
  double excess = std::accumulate(out.q.begin(), out.q.end(), 0.0) - k;
  for (std::size_t i = 0; i < out.q.size() && excess > 0.0; ++i) {
    const double drop = q_lo[i] - q_hi[i];
    if (drop <= 0.0) continue;
    const double cut = std::min(drop, excess);
    out.q[i] -= cut;
    excess -= cut;
    if (cut > kTol) out.repaired = true;
  }

  out.e.resize(out.q.size());
  for (std::size_t i = 0; i < out.q.size(); ++i) {
    out.e[i] = out.q[i] > 0.0 ? inst.prior(static_cast<int>(i)).tail_mean(out.q[i]) : out.e_cut;
  }
  out.sw_prime = sw_prime_upper(out);
  return out;
}

double sw_prime_upper(const QuantileCutResult& cuts) {
  double total = cuts.e_cut * cuts.k;
  for (std::size_t i = 0; i < cuts.q.size(); ++i) total += cuts.e[i] * cuts.q[i];
  return total;
}

Classification classify_agents(std::span<const double> r, std::span<const double> q,
                               const CertParams& params) {
  Classification out;
  out.r.assign(r.begin(), r.end());
  for (std::size_t i = 0; i < r.size(); ++i) {
    (r[i] >= params.alpha * q[i] ? out.n1 : out.n2).push_back(static_cast<int>(i));
  }
  if (out.n2.empty()) throw InternalInvariant("every agent is selected at least alpha q_i often");
  return out;
}

Classification classify_agents(const StrategyProfile& profile, const QuantileCutResult& cuts,
                               const CertParams& params, const EvalMode& mode) {
  const WinProbabilities wp = win_probabilities(profile, mode);
  return classify_agents(wp.r, cuts.q, params);
}

DeviationSignal construct_deviation_signal(const StrategyProfile& profile, int agent, double q,
                                           double tail_mean, double c, const CertParams& params) {
  if (!(c < tail_mean * params.beta * q)) {
    throw NotSmallContributor("agent " + std::to_string(agent) + " contributes at least E beta q");
  }
  const Prior& prior = profile.instance().prior(agent);
  const SignalingScheme& scheme = profile.scheme(agent);
  const WinCurve curve(profile, agent);

  DeviationSignal out;
  out.agent = agent;
  out.phi_i = std::min(params.phi * q, 1.0);
  std::vector<double> top = prior.top_quantile_masses(out.phi_i);
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (std::abs(top[j] - prior[j].mass) <= kTol) top[j] = prior[j].mass;
    if (top[j] <= kTol) top[j] = 0.0;
  }

  std::vector<Composition> comps = scheme.compositions();
  out.s_star.assign(prior.size(), 0.0);
  for (std::size_t s = 0; s < scheme.size(); ++s) {
    out.w.push_back(curve(scheme[s].posterior_mean()));
    out.high.push_back(out.w.back() >= params.tau);
    if (out.high.back()) continue;
    for (std::size_t j = 0; j < prior.size(); ++j) {
      if (top[j] == 0.0 || comps[s][j] == 0.0) continue;
      // A straddled atom gives up the same fraction from every signal.
      const double take = top[j] == prior[j].mass ? comps[s][j] : comps[s][j] * top[j] / prior[j].mass;
      comps[s][j] = top[j] == prior[j].mass ? 0.0 : std::max(comps[s][j] - take, 0.0);
      out.s_star[j] += take;
    }
  }
  out.s_star_mass = std::accumulate(out.s_star.begin(), out.s_star.end(), 0.0);
  if (out.s_star_mass <= kMinSignalMass) {
    out.degenerate = true;
    out.scheme = scheme;
    return out;
  }
  out.s_star_mean = posterior_mean(prior, out.s_star);
  comps.push_back(out.s_star);
  out.scheme = SignalingScheme(prior, std::move(comps));
  return out;
}

DeviationSignal construct_deviation_signal(const StrategyProfile& profile, int agent,
                                           const QuantileCutResult& cuts, const CertParams& params) {
  const auto c = contributions(profile);
  const auto a = static_cast<std::size_t>(agent);
  return construct_deviation_signal(profile, agent, cuts.q[a], cuts.e[a], c[a], params);
}

DeviationAnalysis deviation_analysis(const StrategyProfile& profile, const DeviationSignal& dev,
                                     double gain_tol) {
  const Prior& prior = profile.instance().prior(dev.agent);
  const UtilityFn& u = profile.instance().utility(dev.agent);
  const WinCurve curve(profile, dev.agent);
  DeviationAnalysis out;
  out.utility_before = utility_against(curve, prior, u, profile.scheme(dev.agent));
  if (dev.degenerate) {
    out.utility_after = out.utility_before;
    return out;
  }
  out.s_star_win = curve(dev.s_star_mean);
  out.utility_after = utility_against(curve, prior, u, dev.scheme);
  out.gain = out.utility_after - out.utility_before;
  out.profitable = out.gain > gain_tol;
  return out;
}

const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::Case1: return "case1";
    case CertificateKind::Case2: return "case2";
    case CertificateKind::DeviationWitness: return "deviation_witness";
    case CertificateKind::InapplicableProfileNotNE: return "inapplicable_profile_not_ne";
  }
  return "unknown";
}

double order_statistic_tail(const StrategyProfile& profile, std::span<const int> agents, int m,
                            double x) {
  if (m <= 0) return 1.0;
  if (m > static_cast<int>(agents.size())) return 0.0;
  // dist[c]: probability that exactly c of the agents seen so far are >= x.
  std::vector<double> dist(agents.size() + 1, 0.0);
  dist[0] = 1.0;
  std::size_t seen = 0;
  for (int i : agents) {
    double p = 0.0;
    for (const Signal& s : profile.scheme(i).signals()) {
      if (s.posterior_mean() >= x - kTol) p += s.total_mass();
    }
    p = std::min(p, 1.0);
    ++seen;
    for (std::size_t c = seen; c > 0; --c) dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
    dist[0] *= 1.0 - p;
  }
  double tail = 0.0;
  for (std::size_t c = static_cast<std::size_t>(m); c < dist.size(); ++c) tail += dist[c];
  return std::min(tail, 1.0);
}

namespace {

struct Truncation {
  double epsilon = 0.0;
  std::vector<double> q;
  std::vector<double> e;
  double case1_bound = 0.0;
};

PoACertificate certify(const StrategyProfile& profile, const CertParams& params,
                       const CertifyOptions& options, const std::optional<Truncation>& trunc) {
  params.validate();
  const Instance& inst = profile.instance();
  require_unit_interval(inst);

  PoACertificate cert;
  cert.params = params;
  cert.cuts = quantile_cuts(inst);
  const std::vector<double>& q = trunc ? trunc->q : cert.cuts.q;
  const std::vector<double>& e = trunc ? trunc->e : cert.cuts.e;
  if (trunc) {
    cert.epsilon = trunc->epsilon;
    cert.q_hat = trunc->q;
    cert.e_hat = trunc->e;
  }

  const WinProbabilities wp = win_probabilities(profile, options.mode);
  cert.r = wp.r;
  cert.c = contributions(profile, options.mode);
  const Estimate welfare = expected_welfare(profile, options.mode);
  const Estimate fb = first_best(inst, options.mode);
  cert.welfare = welfare.value;
  cert.first_best = fb.value;
  cert.method = welfare.method;
  const double inf = std::numeric_limits<double>::infinity();
  cert.sw_prime_ratio = cert.welfare > 0.0 ? cert.cuts.sw_prime / cert.welfare : inf;
  cert.welfare_ratio = cert.welfare > 0.0 ? cert.first_best / cert.welfare : inf;

  const Classification cls = classify_agents(cert.r, q, params);
  cert.n1 = cls.n1;
  cert.n2 = cls.n2;

  std::optional<int> i_star;
  double best_ratio = inf;
  for (int i : cls.n2) {
    const auto ii = static_cast<std::size_t>(i);
    const double floor = e[ii] * params.beta * q[ii];
    if (!(cert.c[ii] < floor - kTol)) continue;
    const double ratio = cert.c[ii] / (e[ii] * q[ii]);
    if (ratio < best_ratio) {
      best_ratio = ratio;
      i_star = i;
    }
  }
  if (!i_star) {
    cert.kind = CertificateKind::Case1;
    cert.bound = trunc ? trunc->case1_bound : params.case1_bound();
    return cert;
  }

  const auto is = static_cast<std::size_t>(*i_star);
  cert.i_star = i_star;
  cert.kind = CertificateKind::Case2;
  cert.deviation = construct_deviation_signal(profile, *i_star, q[is], e[is], cert.c[is], params);
  cert.analysis = deviation_analysis(profile, *cert.deviation, options.gain_tol);
  if (cert.deviation->degenerate) {
    cert.degenerate = true;
    cert.reason = "no low-win signal carries mass in the top quantile";
    return cert;
  }
  cert.s_star_lower_bound = params.mean_factor() * e[is];

  if (cert.analysis->profitable) {
    cert.kind = CertificateKind::DeviationWitness;
    cert.witness = DeviationWitness{*i_star, cert.deviation->scheme, cert.analysis->utility_before,
                                    cert.analysis->utility_after, cert.analysis->gain, "s_star"};
    return cert;
  }

  // Large agents are those whose (untruncated) tail mean beats i*'s.
  const double e_star = cert.cuts.e[is];
  for (int i = 0; i < inst.num_agents(); ++i) {
    (cert.cuts.e[static_cast<std::size_t>(i)] > e_star + kTol ? cert.n_large : cert.n_small).push_back(i);
  }
  const int large = static_cast<int>(cert.n_large.size());
  if (large >= inst.k()) {
    throw InternalInvariant("agents with tail mean above i*'s fill all k slots");
  }
  cert.tail_probability = order_statistic_tail(profile, cert.n_small, inst.k() - large,
                                               cert.deviation->s_star_mean);
  if (*cert.tail_probability >= 1.0 - params.tau - kTol) {
    cert.bound = params.case2_bound();
  } else {
    cert.kind = CertificateKind::InapplicableProfileNotNE;
    cert.reason = "order statistic reaches the s* mean with probability below 1 - tau";
  }
  return cert;
}

}  // namespace

PoACertificate certify_poa(const StrategyProfile& profile, const CertParams& params,
                           const CertifyOptions& options) {
  return certify(profile, params, options, std::nullopt);
}

PoACertificate discretized_certify(const StrategyProfile& profile, const CertParams& params,
                                   const DiscretizationSpec& spec, const CertifyOptions& options) {
  if (std::abs(params.phi - std::round(params.phi)) > 1e-12) {
    throw SpecViolation("phi must be an integer in the discretized game");
  }
  const Instance& inst = profile.instance();
  const double eps = spec.epsilon;
  for (int i = 0; i < inst.num_agents(); ++i) {
    grain_counts(inst.prior(i), spec);
    for (const Signal& s : profile.scheme(i).signals()) {
      for (double a : s.composition()) {
        if (std::abs(a / eps - std::round(a / eps)) > 1e-6) {
          throw SpecViolation("agent " + std::to_string(i) + " allocates a fraction of a grain");
        }
      }
    }
  }

  Truncation trunc;
  trunc.epsilon = eps;
  const double slack = 1.0 - 1.0 / params.alpha - eps * inst.num_agents();
  if (!(slack > 0.0)) throw SpecViolation("epsilon * N leaves no room in the first-case bound");
  trunc.case1_bound = 2.0 / (params.beta * slack);
  require_unit_interval(inst);
  const QuantileCutResult cuts = quantile_cuts(inst);
  for (std::size_t i = 0; i < cuts.q.size(); ++i) {
    const double qh = std::min(std::floor(cuts.q[i] / eps + 1e-9) * eps, 1.0);
    trunc.q.push_back(qh);
    trunc.e.push_back(qh > 0.0 ? inst.prior(static_cast<int>(i)).tail_mean(qh) : cuts.e_cut);
  }
  return certify(profile, params, options, trunc);
}

namespace {

double constant_utility(const Instance& inst) { return inst.utility(0)(0.0); }

}  // namespace

WarmupCertificate warmup_certify(const StrategyProfile& profile, const EvalMode& mode,
                                 double gain_tol) {
  const Instance& inst = profile.instance();
  if (inst.k() != 1) throw WrongRegime("warm-up certificate needs k = 1");
  require_unit_interval(inst);
  for (int i = 0; i < inst.num_agents(); ++i) {
    if (!(inst.prior(i) == inst.prior(0))) throw WrongRegime("warm-up certificate needs identical priors");
    if (!inst.utility(i).is_constant() || !(inst.utility(i) == inst.utility(0))) {
      throw WrongRegime("warm-up certificate needs one constant utility");
    }
  }
  const int n = inst.num_agents();
  const Prior& prior = inst.prior(0);
  const double u = constant_utility(inst);

  WarmupCertificate out;
  out.e_top1 = prior.tail_mean(1.0 / n);
  const double x2 = std::min(2.0 / n, 1.0);
  out.e_top2 = prior.tail_mean(x2);
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  out.prob_max_at_least_e_top2 = order_statistic_tail(profile, all, 1, out.e_top2);
  out.tail_condition = out.prob_max_at_least_e_top2 >= 0.5 - kTol;

  out.r = win_probabilities(profile, mode).r;
  out.i_star = static_cast<int>(std::min_element(out.r.begin(), out.r.end()) - out.r.begin());
  const Estimate welfare = expected_welfare(profile, mode);
  out.welfare = welfare.value;
  out.first_best = first_best(inst, mode).value;
  const double inf = std::numeric_limits<double>::infinity();
  out.welfare_ratio = out.welfare > 0.0 ? out.first_best / out.welfare : inf;
  out.bound_ratio = out.welfare > 0.0 ? out.e_top1 / out.welfare : inf;

  const double before = expected_utility(profile, out.i_star, mode).value;
  const WinCurve curve(profile, out.i_star);
  auto try_scheme = [&](const std::vector<Composition>& comps, const char* name) {
    const SignalingScheme scheme(prior, comps);
    const double after = expected_utility(profile.with_scheme(out.i_star, scheme), out.i_star, mode).value;
    if (!(after - before > gain_tol)) return false;
    out.witness = DeviationWitness{out.i_star, scheme, before, after, after - before, name};
    const Signal& high = scheme[scheme.size() - 1];
    out.gain_by_chain = u * (high.total_mass() * curve(high.posterior_mean()) - out.r[static_cast<std::size_t>(out.i_star)]);
    return true;
  };

  if (!out.tail_condition) {
    const std::vector<double> top = prior.top_quantile_masses(x2);
    Composition low(prior.size());
    for (std::size_t j = 0; j < prior.size(); ++j) low[j] = std::max(prior[j].mass - top[j], 0.0);
    if (try_scheme({top, low}, "binary_top_quantile")) return out;
  }
  if (prior.size() > 1) {
    // Peel half of the lowest atom into its own signal and pool the rest.
    Composition low(prior.size(), 0.0);
    Composition rest(prior.size());
    for (std::size_t j = 0; j < prior.size(); ++j) rest[j] = prior[j].mass;
    low[0] = rest[0] / 2.0;
    rest[0] -= low[0];
    if (try_scheme({rest, low}, "split_lowest_atom")) return out;
  }
  if (!out.tail_condition) {
    out.inapplicable = true;
    out.reason = "maximum mean stays below the top-2/N tail mean too often, yet no deviation gains";
  }
  return out;
}

}  // namespace bpoa
