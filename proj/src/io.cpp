#include "bpoa/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "bpoa/errors.hpp"

namespace bpoa::io {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw InvalidInput("expected a number or decimal string, got " + j.dump());
  const std::string s = j.get<std::string>();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidInput("malformed decimal string \"" + s + "\"");
  }
  return x;
}

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidInput(std::string("missing field \"") + key + "\"");
  }
  return j.at(key);
}

const json& array_field(const json& j, const char* key) {
  const json& a = field(j, key);
  if (!a.is_array()) throw InvalidInput(std::string("field \"") + key + "\" must be an array");
  return a;
}

std::pair<double, double> pair_of(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a pair, got " + j.dump());
  return {parse_double(j[0]), parse_double(j[1])};
}

}  // namespace

json to_json(const Instance& instance) {
  json agents = json::array();
  for (int i = 0; i < instance.num_agents(); ++i) {
    json prior = json::array();
    for (const ValueAtom& a : instance.prior(i).atoms()) {
      prior.push_back({format_double(a.value), format_double(a.mass)});
    }
    json util = json::array();
    for (const auto& [v, u] : instance.utility(i).breakpoints()) {
      util.push_back({format_double(v), format_double(u)});
    }
    agents.push_back({{"prior", prior}, {"utility", util}});
  }
  json out = {{"k", instance.k()}, {"agents", agents}};
  if (!instance.in_unit_interval()) out["value_domain"] = "unrestricted";
  return out;
}

Instance instance_from_json(const json& j) {
  const json& k = field(j, "k");
  if (!k.is_number_integer()) throw InvalidInput("field \"k\" must be an integer");
  ValueDomain domain = ValueDomain::UnitInterval;
  if (j.contains("value_domain")) {
    const std::string d = j.at("value_domain").get<std::string>();
    if (d == "unrestricted") {
      domain = ValueDomain::Unrestricted;
    } else if (d != "unit") {
      throw InvalidInput("unknown value_domain \"" + d + "\"");
    }
  }
  std::vector<Prior> priors;
  std::vector<UtilityFn> utils;
  for (const json& agent : array_field(j, "agents")) {
    std::vector<ValueAtom> atoms;
    for (const json& a : array_field(agent, "prior")) {
      const auto [v, m] = pair_of(a);
      atoms.push_back({v, m});
    }
    priors.emplace_back(std::move(atoms), domain);
    if (agent.contains("utility")) {
      std::vector<std::pair<double, double>> bps;
      for (const json& b : array_field(agent, "utility")) bps.push_back(pair_of(b));
      utils.emplace_back(std::move(bps));
    } else {
      utils.emplace_back();
    }
  }
  return Instance(std::move(priors), std::move(utils), k.get<int>());
}

json to_json(const Prior& prior, const SignalingScheme& scheme) {
  json signals = json::array();
  for (const Signal& s : scheme.signals()) {
    json sig = json::array();
    const auto comp = s.composition();
    for (std::size_t j = 0; j < prior.size(); ++j) {
      if (comp[j] > 0.0) sig.push_back({j, format_double(comp[j])});
    }
    signals.push_back(std::move(sig));
  }
  return {{"signals", signals}};
}

SignalingScheme scheme_from_json(const json& j, const Prior& prior) {
  std::vector<Composition> comps;
  for (const json& sig : array_field(j, "signals")) {
    if (!sig.is_array()) throw InvalidInput("signal must be an array of [atom_index, mass] pairs");
    Composition c(prior.size(), 0.0);
    for (const json& entry : sig) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer()) {
        throw InvalidInput("expected [atom_index, mass], got " + entry.dump());
      }
      const auto idx = entry[0].get<long long>();
      if (idx < 0 || static_cast<std::size_t>(idx) >= prior.size()) {
        throw InvalidInput("atom index " + std::to_string(idx) + " out of range");
      }
      c[static_cast<std::size_t>(idx)] += parse_double(entry[1]);
    }
    comps.push_back(std::move(c));
  }
  return SignalingScheme(prior, std::move(comps));
}

json to_json(const StrategyProfile& profile) {
  json agents = json::array();
  for (int i = 0; i < profile.num_agents(); ++i) {
    agents.push_back(to_json(profile.instance().prior(i), profile.scheme(i)));
  }
  return {{"agents", agents}};
}

StrategyProfile profile_from_json(const json& j, const Instance& instance) {
  const json& agents = array_field(j, "agents");
  if (static_cast<int>(agents.size()) != instance.num_agents()) {
    throw InvalidInput("profile has " + std::to_string(agents.size()) + " agents, instance has " +
                       std::to_string(instance.num_agents()));
  }
  std::vector<SignalingScheme> schemes;
  for (int i = 0; i < instance.num_agents(); ++i) {
    schemes.push_back(scheme_from_json(agents[static_cast<std::size_t>(i)], instance.prior(i)));
  }
  return StrategyProfile(instance, std::move(schemes));
}

json to_json(const RegretReport& report) {
  json agents = json::array();
  for (std::size_t i = 0; i < report.regret.size(); ++i) {
    agents.push_back({{"current_utility", report.current_utility[i]},
                      {"best_response_utility", report.best_response_utility[i]},
                      {"regret", report.regret[i]}});
  }
  return {{"agents", agents},
          {"max_regret", report.max_regret},
          {"tolerance", report.tolerance},
          {"heuristic", report.heuristic},
          {"is_epsilon_ne", report.is_epsilon_ne()}};
}

json to_json(const Estimate& estimate) {
  return {{"value", estimate.value},
          {"std_error", estimate.std_error},
          {"method", to_string(estimate.method)}};
}

json to_json(const CertParams& params) {
  return {{"alpha", params.alpha}, {"beta", params.beta}, {"tau", params.tau}, {"phi", params.phi}};
}

CertParams params_from_json(const json& j) {
  CertParams p;
  p.alpha = parse_double(field(j, "alpha"));
  p.beta = parse_double(field(j, "beta"));
  p.tau = parse_double(field(j, "tau"));
  p.phi = parse_double(field(j, "phi"));
  p.validate();
  return p;
}

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const DeviationWitness& witness, const StrategyProfile& profile) {
  return {{"agent", witness.agent},
          {"construction", witness.construction},
          {"utility_before", witness.utility_before},
          {"utility_after", witness.utility_after},
          {"gain", witness.gain},
          {"scheme", to_json(profile.instance().prior(witness.agent), witness.scheme)}};
}

json to_json(const PoACertificate& cert, const StrategyProfile& profile) {
  json j = {{"kind", to_string(cert.kind)},
            {"bound", optional_json(cert.bound)},
            {"params", to_json(cert.params)},
            {"welfare", cert.welfare},
            {"first_best", cert.first_best},
            {"method", to_string(cert.method)},
            {"welfare_ratio", cert.welfare_ratio},
            {"sw_prime", cert.cuts.sw_prime},
            {"sw_prime_ratio", cert.sw_prime_ratio},
            {"e_cut", cert.cuts.e_cut},
            {"q", cert.cuts.q},
            {"tail_means", cert.cuts.e},
            {"cuts_repaired", cert.cuts.repaired},
            {"r", cert.r},
            {"c", cert.c},
            {"n1", cert.n1},
            {"n2", cert.n2},
            {"reason", cert.reason}};
  if (cert.epsilon) {
    j["epsilon"] = *cert.epsilon;
    j["q_hat"] = cert.q_hat;
    j["e_hat"] = cert.e_hat;
  }
  if (cert.i_star) {
    j["i_star"] = *cert.i_star;
    j["degenerate"] = cert.degenerate;
    j["s_star_lower_bound"] = optional_json(cert.s_star_lower_bound);
    if (cert.deviation) {
      const DeviationSignal& d = *cert.deviation;
      j["deviation"] = {{"s_star_mean", d.s_star_mean},
                        {"s_star_mass", d.s_star_mass},
                        {"phi_i", d.phi_i},
                        {"w", d.w},
                        {"scheme", to_json(profile.instance().prior(d.agent), d.scheme)}};
    }
    if (cert.analysis) {
      j["deviation_analysis"] = {{"s_star_win", cert.analysis->s_star_win},
                                 {"utility_before", cert.analysis->utility_before},
                                 {"utility_after", cert.analysis->utility_after},
                                 {"gain", cert.analysis->gain},
                                 {"profitable", cert.analysis->profitable}};
    }
    j["n_large"] = cert.n_large;
    j["n_small"] = cert.n_small;
    j["tail_probability"] = optional_json(cert.tail_probability);
  }
  if (cert.witness) j["witness"] = to_json(*cert.witness, profile);
  return j;
}

json to_json(const WarmupCertificate& cert, const StrategyProfile& profile) {
  json j = {{"inapplicable", cert.inapplicable},
            {"e_top1", cert.e_top1},
            {"e_top2", cert.e_top2},
            {"prob_max_at_least_e_top2", cert.prob_max_at_least_e_top2},
            {"tail_condition", cert.tail_condition},
            {"r", cert.r},
            {"i_star", cert.i_star},
            {"welfare", cert.welfare},
            {"first_best", cert.first_best},
            {"welfare_ratio", cert.welfare_ratio},
            {"bound_ratio", cert.bound_ratio},
            {"gain_by_chain", optional_json(cert.gain_by_chain)},
            {"reason", cert.reason}};
  if (cert.witness) j["witness"] = to_json(*cert.witness, profile);
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << dump(j);
}

}  // namespace bpoa::io
