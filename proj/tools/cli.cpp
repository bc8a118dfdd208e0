#include "bpoa/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bpoa/certifier.hpp"
#include "bpoa/equilibria.hpp"
#include "bpoa/errors.hpp"
#include "bpoa/io.hpp"
#include "bpoa/montecarlo.hpp"
#include "bpoa/noisy.hpp"

namespace bpoa {
namespace {

using io::format_double;
using io::json;

struct Options {
  std::string instance;
  std::string profile = "full-revelation";
  std::string out;
  std::string csv;
  std::string config;
  std::string profile_out;
  std::string params = "golden";
  std::string mode = "auto";
  std::string preset = "random";
  std::string utility = "constant";
  std::string br_method = "auto";
  std::string ns = "2,3,5,10";
  std::string zetas = "0.01,0.05,0.1";
  std::uint64_t seed = 0;
  std::uint64_t samples = 100'000;
  int n = 2;
  int k = 1;
  int support = 3;
  int grid = 400;
  int max_rounds = 100;
  int restarts = 20;
  double zeta = 0.5;
  double epsilon = 0.0;
  double eta = 0.0;
  double v_lower = 0.0;
  double regret_tol = 1e-6;
  double gain_tol = 1e-9;
  double shift_eps = 1e-3;
  double cap = kDefaultEnumerationCap;
  unsigned workers = 0;
};

struct Command {
  std::string name;     // e.g. "certify"
  std::string variant;  // e.g. "general", empty for flat commands
  CLI::App* app = nullptr;
  // Options that make up the run's configuration, in registration order.
  std::vector<std::pair<std::string, std::function<json()>>> keys;
  std::function<int(const json& config)> run;

  bool records(const std::string& key) const {
    return std::any_of(keys.begin(), keys.end(), [&](const auto& kv) { return kv.first == key; });
  }
};

template <class T>
void add_key(Command& cmd, const std::string& name, T& field, const std::string& desc) {
  cmd.app->add_option("--" + name, field, desc)->capture_default_str();
  cmd.keys.emplace_back(name, [&field] { return json(field); });
}

// Output plumbing shared by every command; not part of the configuration.
void add_plumbing(Command& cmd, Options& o, bool with_workers) {
  cmd.app->add_option("--out", o.out, "JSON result path (stdout when absent)");
  cmd.app->add_option("--csv", o.csv, "append a CSV row to this file");
  cmd.app->add_option("--config", o.config, "JSON file of option values");
  if (with_workers) cmd.app->add_option("--workers", o.workers, "threads, 0 = all cores");
}

// ---- loading -------------------------------------------------------------

Instance load_instance(const std::string& path) {
  json j = io::read_json_file(path);
  if (j.contains("instance") && j.at("instance").is_object()) j = j.at("instance");
  return io::instance_from_json(j);
}

StrategyProfile load_profile(const std::string& spec, const Instance& inst) {
  if (spec == "full-revelation") return StrategyProfile::full_revelation(inst);
  if (spec == "pooling") return StrategyProfile::pooling(inst);
  json j = io::read_json_file(spec);
  if (j.contains("profile") && j.at("profile").is_object()) j = j.at("profile");
  return io::profile_from_json(j, inst);
}

CertParams load_params(const std::string& spec) {
  if (spec == "golden") return golden_parameters();
  if (spec == "appendix-a") return integer_phi_parameters();
  return io::params_from_json(io::read_json_file(spec));
}

EvalMode eval_mode(const Options& o) {
  if (o.mode == "exact") return EvalMode::exact(o.cap);
  if (o.mode == "mc") return EvalMode::monte_carlo(o.samples, o.seed, o.workers);
  return {EvalKind::Auto, o.samples, o.seed, o.cap, o.workers};
}

BestResponseOptions br_options(const Options& o) {
  BestResponseOptions b;
  if (o.br_method == "exhaustive") {
    b.method = BestResponseMethod::Exhaustive;
  } else if (o.br_method == "local") {
    b.method = BestResponseMethod::LocalSearch;
  }
  b.seed = o.seed;
  b.restarts = o.restarts;
  b.workers = o.workers;
  return b;
}

DiscretizationSpec discretization(const Options& o) {
  if (!(o.epsilon > 0.0)) throw InvalidInput("--epsilon must be set to a positive grain size");
  return DiscretizationSpec(o.epsilon);
}

json estimate_json(const Estimate& e, std::uint64_t samples, std::uint64_t seed) {
  json j = io::to_json(e);
  if (e.method == EvalMethod::MonteCarlo) {
    j["samples"] = samples;
    j["seed"] = seed;
  }
  return j;
}

double ratio(double num, double den) { return num / den; }

// ---- output --------------------------------------------------------------

struct Sink {
  const Options& opts;
  std::ostream& out;

  void json_result(json result, const json& config) const {
    result["config"] = config;
    if (opts.out.empty()) {
      out << io::dump(result);
    } else {
      io::write_json_file(opts.out, result);
    }
  }

  void csv_rows(const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) const {
    if (opts.csv.empty()) return;
    const bool fresh = !std::filesystem::exists(opts.csv) || std::filesystem::file_size(opts.csv) == 0;
    std::ofstream f(opts.csv, std::ios::app | std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + opts.csv);
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) f << (c ? "," : "") << cells[c];
      f << "\n";
    };
    if (fresh) line(header);
    for (const auto& r : rows) line(r);
  }
};

std::string num(double x) { return format_double(x); }

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(io::parse_double(json(item)));
    } catch (const InvalidInput&) {
      throw InvalidInput(std::string("malformed ") + what + " list \"" + s + "\"");
    }
  }
  if (out.empty()) throw InvalidInput(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> uniform_cells(const BernoulliEqSpec& spec, int grid) {
  if (grid < 1) throw InvalidInput("--grid must be positive");
  std::vector<double> b;
  for (int c = 0; c <= grid; ++c) b.push_back(spec.p_hat() * c / grid);
  return b;
}

// ---- gen -----------------------------------------------------------------

UtilityFn utility_family(const std::string& family, std::mt19937_64& rng) {
  if (family == "constant") return UtilityFn::constant(1.0);
  if (family == "linear") return UtilityFn::linear();
  const double a = 0.1 + 0.9 * mc::uniform01(rng);
  const double b = a + 0.1 + 0.9 * mc::uniform01(rng);
  const double c = b + 0.1 + 0.9 * mc::uniform01(rng);
  return UtilityFn({{0.0, a}, {0.5, b}, {1.0, c}});
}

Instance random_instance(const Options& o) {
  if (o.n < 1) throw InvalidInput("--n must be at least 1");
  constexpr int kValueGrid = 20;
  if (o.support < 1 || o.support > kValueGrid + 1) {
    throw InvalidInput("--support must lie in [1, " + std::to_string(kValueGrid + 1) + "]");
  }
  int grains = 0;
  if (o.epsilon > 0.0) {
    grains = static_cast<int>(std::lround(1.0 / o.epsilon));
    if (std::abs(grains * o.epsilon - 1.0) > 1e-9) throw InvalidInput("1 / epsilon must be an integer");
    if (grains < o.support) throw InvalidInput("fewer grains than support points");
  }
  std::mt19937_64 rng(o.seed);
  std::vector<Prior> priors;
  std::vector<UtilityFn> utils;
  for (int i = 0; i < o.n; ++i) {
    std::uniform_int_distribution<int> size_dist(1, o.support);
    const int m = size_dist(rng);
    std::vector<int> pool;
    for (int v = 0; v <= kValueGrid; ++v) {
      if (v >= o.v_lower * kValueGrid - 1e-9) pool.push_back(v);
    }
    if (static_cast<int>(pool.size()) < o.support) throw InvalidInput("--v-lower leaves too few values");
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> vals(pool.begin(), pool.begin() + m);
    std::sort(vals.begin(), vals.end());

    std::vector<double> masses(static_cast<std::size_t>(m));
    if (grains > 0) {
      std::vector<int> count(static_cast<std::size_t>(m), 1);
      std::uniform_int_distribution<int> pick(0, m - 1);
      for (int g = m; g < grains; ++g) ++count[static_cast<std::size_t>(pick(rng))];
      for (int j = 0; j < m; ++j) {
        masses[static_cast<std::size_t>(j)] = static_cast<double>(count[static_cast<std::size_t>(j)]) / grains;
      }
    } else {
      double total = 0.0;
      for (double& w : masses) total += (w = 0.1 + 0.9 * mc::uniform01(rng));
      double used = 0.0;
      for (int j = 0; j + 1 < m; ++j) used += (masses[static_cast<std::size_t>(j)] /= total);
      masses.back() = 1.0 - used;
    }
    std::vector<ValueAtom> atoms;
    for (int j = 0; j < m; ++j) {
      atoms.push_back({static_cast<double>(vals[static_cast<std::size_t>(j)]) / kValueGrid,
                       masses[static_cast<std::size_t>(j)]});
    }
    priors.emplace_back(std::move(atoms));
    utils.push_back(utility_family(o.utility, rng));
  }
  return Instance(std::move(priors), std::move(utils), o.k);
}

int cmd_gen(const Options& o, const Sink& sink, std::ostream& err, const json& config) {
  if (o.preset == "random") {
    sink.json_result(io::to_json(random_instance(o)), config);
    return kExitOk;
  }
  if (o.preset == "bernoulli") {
    if (!(o.zeta > 0.0 && o.zeta <= 1.0)) throw InvalidInput("--zeta must lie in (0, 1]");
    sink.json_result(io::to_json(bernoulli_instance(o.n, o.zeta, o.k)), config);
    return kExitOk;
  }

  // negative-shift: move every value down so the equilibrium welfare becomes shift_eps.
  if (!(o.shift_eps > 0.0)) throw InvalidInput("--shift-eps must be positive");
  const BernoulliEqSpec spec(o.n, o.zeta);
  const auto cells = uniform_cells(spec, o.grid);
  const StrategyProfile eq = bernoulli_equilibrium_profile(spec, cells);
  const double sw = expected_welfare(eq, EvalMode{}).value;
  const double shift = sw - o.shift_eps;

  std::vector<Prior> priors;
  for (const Prior& p : eq.instance().priors()) {
    std::vector<ValueAtom> atoms(p.atoms().begin(), p.atoms().end());
    for (ValueAtom& a : atoms) a.value -= shift;
    priors.emplace_back(std::move(atoms), ValueDomain::Unrestricted);
  }
  const Instance shifted(priors, std::vector<UtilityFn>(eq.instance().utilities().begin(),
                                                        eq.instance().utilities().end()),
                         eq.k());
  std::vector<SignalingScheme> schemes;
  for (int i = 0; i < shifted.num_agents(); ++i) {
    schemes.emplace_back(shifted.prior(i), eq.scheme(i).compositions());
  }
  const StrategyProfile moved(shifted, std::move(schemes));
  const double sw_moved = expected_welfare(moved, EvalMode{}).value;
  const double fb_moved = first_best(shifted, EvalMode{}).value;

  const std::string warning =
      "values lie outside [0, 1]; only welfare evaluation supports this instance, not certification";
  err << "warning: " << warning << "\n";
  json j = io::to_json(shifted);
  j["warning"] = warning;
  j["profile"] = io::to_json(moved);
  j["demo"] = {{"shift", shift},
               {"unshifted_welfare", sw},
               {"welfare", sw_moved},
               {"first_best", fb_moved},
               {"ratio", ratio(fb_moved, sw_moved)}};
  sink.json_result(j, config);
  return kExitOk;
}

// ---- evaluation commands ---------------------------------------------------

int cmd_first_best(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const Estimate fb = first_best(inst, eval_mode(o));
  sink.json_result({{"num_agents", inst.num_agents()},
                    {"k", inst.k()},
                    {"first_best", estimate_json(fb, o.samples, o.seed)}},
                   config);
  sink.csv_rows({"command", "num_agents", "k", "first_best", "std_error", "method"},
                {{"first-best", std::to_string(inst.num_agents()), std::to_string(inst.k()),
                  num(fb.value), num(fb.std_error), to_string(fb.method)}});
  return kExitOk;
}

int cmd_welfare(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile prof = load_profile(o.profile, inst);
  const EvalMode mode = eval_mode(o);
  const Estimate sw = expected_welfare(prof, mode);
  const Estimate fb = first_best(inst, mode);
  const WinProbabilities wp = win_probabilities(prof, mode);
  json utilities = json::array();
  for (int i = 0; i < inst.num_agents(); ++i) {
    utilities.push_back(estimate_json(expected_utility(prof, i, mode), o.samples, o.seed));
  }
  const double r = ratio(fb.value, sw.value);
  sink.json_result({{"num_agents", inst.num_agents()},
                    {"k", inst.k()},
                    {"welfare", estimate_json(sw, o.samples, o.seed)},
                    {"first_best", estimate_json(fb, o.samples, o.seed)},
                    {"ratio", r},
                    {"selection_probability", wp.r},
                    {"contributions", contributions(prof, mode)},
                    {"utilities", utilities}},
                   config);
  sink.csv_rows({"command", "num_agents", "k", "welfare", "std_error", "first_best", "ratio", "method"},
                {{"welfare", std::to_string(inst.num_agents()), std::to_string(inst.k()),
                  num(sw.value), num(sw.std_error), num(fb.value), num(r), to_string(sw.method)}});
  return kExitOk;
}

int cmd_equilibrium_bernoulli(const Options& o, const Sink& sink, const json& config) {
  const BernoulliEqSpec spec(o.n, o.zeta);
  const std::vector<double> bounds = o.epsilon > 0.0
                                         ? grain_aligned_boundaries(spec, DiscretizationSpec(o.epsilon))
                                         : uniform_cells(spec, o.grid);
  const StrategyProfile prof = bernoulli_equilibrium_profile(spec, bounds);
  const EvalMode mode = eval_mode(o);
  const Estimate sw = expected_welfare(prof, mode);
  const Estimate fb = first_best(prof.instance(), mode);
  const LowerBound lb = poa_lower_bound(spec);
  const double r = ratio(fb.value, sw.value);
  sink.json_result({{"instance", io::to_json(prof.instance())},
                    {"profile", io::to_json(prof)},
                    {"closed_form",
                     {{"welfare", bernoulli_equilibrium_welfare(spec)},
                      {"exact_ratio", lb.exact_ratio},
                      {"bound", lb.bound}}},
                    {"measured",
                     {{"welfare", estimate_json(sw, o.samples, o.seed)},
                      {"first_best", estimate_json(fb, o.samples, o.seed)},
                      {"ratio", r}}}},
                   config);
  sink.csv_rows({"command", "num_agents", "zeta", "bound", "exact_ratio", "measured_ratio"},
                {{"equilibrium-bernoulli", std::to_string(o.n), num(o.zeta), num(lb.bound),
                  num(lb.exact_ratio), num(r)}});
  return kExitOk;
}

int cmd_equilibrium_brd(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile init = load_profile(o.profile, inst);
  DynamicsOptions dyn;
  dyn.max_rounds = o.max_rounds;
  dyn.regret_tol = o.regret_tol;
  dyn.best_response = br_options(o);
  const DynamicsResult res = best_response_dynamics(init, discretization(o), dyn);
  json steps = json::array();
  for (const DynamicsStep& s : res.steps) {
    steps.push_back({{"round", s.round},
                     {"agent", s.agent},
                     {"utility_before", s.utility_before},
                     {"utility_after", s.utility_after},
                     {"switched", s.switched}});
  }
  sink.json_result({{"instance", io::to_json(inst)},
                    {"profile", io::to_json(res.profile)},
                    {"converged", res.converged},
                    {"rounds", res.rounds},
                    {"cycle_length", res.cycle_length ? json(*res.cycle_length) : json(nullptr)},
                    {"steps", steps},
                    {"log", res.log},
                    {"report", io::to_json(res.report)}},
                   config);
  sink.csv_rows({"command", "num_agents", "k", "converged", "rounds", "max_regret"},
                {{"equilibrium-brd", std::to_string(inst.num_agents()), std::to_string(inst.k()),
                  res.converged ? "true" : "false", std::to_string(res.rounds),
                  num(res.report.max_regret)}});
  return res.converged ? kExitOk : kExitNotConverged;
}

int cmd_verify_ne(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile prof = load_profile(o.profile, inst);
  const RegretReport rep = verify_epsilon_ne(prof, discretization(o), o.regret_tol, br_options(o));
  json j = {{"report", io::to_json(rep)}, {"is_epsilon_ne", rep.is_epsilon_ne()}};
  if (!rep.is_epsilon_ne()) {
    const auto worst = std::max_element(rep.regret.begin(), rep.regret.end()) - rep.regret.begin();
    const std::size_t a = static_cast<std::size_t>(worst);
    DeviationWitness w;
    w.agent = static_cast<int>(a);
    w.scheme = rep.best_responses[a];
    w.utility_before = rep.current_utility[a];
    w.utility_after = rep.best_response_utility[a];
    w.gain = rep.regret[a];
    w.construction = rep.heuristic ? "local_search_best_response" : "best_response";
    j["witness"] = io::to_json(w, prof);
  }
  sink.json_result(j, config);
  sink.csv_rows({"command", "num_agents", "k", "max_regret", "is_epsilon_ne"},
                {{"verify-ne", std::to_string(inst.num_agents()), std::to_string(inst.k()),
                  num(rep.max_regret), rep.is_epsilon_ne() ? "true" : "false"}});
  return rep.is_epsilon_ne() ? kExitOk : kExitNotEquilibrium;
}

const std::vector<std::string> kCertifyHeader{
    "command", "num_agents", "k",           "kind", "welfare", "first_best",
    "ratio",   "sw_prime",   "sw_prime_ratio", "bound"};

int finish_certificate(const PoACertificate& cert, const StrategyProfile& prof, const char* label,
                       json extra, const Sink& sink, const json& config) {
  json j = io::to_json(cert, prof);
  for (auto& [key, value] : extra.items()) j[key] = value;
  sink.json_result(j, config);
  sink.csv_rows(kCertifyHeader,
                {{label, std::to_string(prof.num_agents()), std::to_string(prof.k()),
                  to_string(cert.kind), num(cert.welfare), num(cert.first_best),
                  num(cert.welfare_ratio), num(cert.cuts.sw_prime), num(cert.sw_prime_ratio),
                  cert.bound ? num(*cert.bound) : ""}});
  const bool not_ne = cert.kind == CertificateKind::DeviationWitness ||
                      cert.kind == CertificateKind::InapplicableProfileNotNE;
  return not_ne ? kExitNotEquilibrium : kExitOk;
}

int cmd_certify_general(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile prof = load_profile(o.profile, inst);
  const PoACertificate cert = certify_poa(prof, load_params(o.params), {eval_mode(o), o.gain_tol});
  return finish_certificate(cert, prof, "certify-general", json::object(), sink, config);
}

int cmd_certify_discretized(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile prof = load_profile(o.profile, inst);
  const CertParams params = load_params(o.params);
  const DiscretizationSpec disc = discretization(o);
  const PoACertificate cert = discretized_certify(prof, params, disc, {eval_mode(o), o.gain_tol});
  return finish_certificate(
      cert, prof, "certify-discretized",
      {{"discretized_bound", discretized_bound(params, disc.epsilon, prof.num_agents())}}, sink,
      config);
}

int cmd_certify_warmup(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile prof = load_profile(o.profile, inst);
  const WarmupCertificate cert = warmup_certify(prof, eval_mode(o), o.gain_tol);
  sink.json_result(io::to_json(cert, prof), config);
  sink.csv_rows({"command", "num_agents", "welfare", "first_best", "ratio", "bound_ratio",
                 "tail_condition", "witness_gain"},
                {{"certify-warmup", std::to_string(prof.num_agents()), num(cert.welfare),
                  num(cert.first_best), num(cert.welfare_ratio), num(cert.bound_ratio),
                  cert.tail_condition ? "true" : "false",
                  cert.witness ? num(cert.witness->gain) : ""}});
  return cert.witness ? kExitNotEquilibrium : kExitOk;
}

int cmd_noisy(const Options& o, const Sink& sink, const json& config) {
  const Instance inst = load_instance(o.instance);
  const StrategyProfile prof = load_profile(o.profile, inst);
  NoiseSpec noise;
  noise.eta = o.eta;
  noise.samples = o.samples;
  noise.seed = o.seed;
  noise.workers = o.workers;
  noise.v_lower = o.v_lower;
  if (noise.v_lower <= 0.0) {
    noise.v_lower = 1.0;
    for (const Prior& p : inst.priors()) noise.v_lower = std::min(noise.v_lower, p.min_value());
  }
  const NoisyEvaluation ev = noisy_evaluate(prof, noise);
  const double clear = expected_welfare(prof, EvalMode{}).value;
  const double fb = first_best(inst, EvalMode{}).value;
  json utilities = json::array();
  for (const Estimate& u : ev.utility) utilities.push_back(estimate_json(u, o.samples, o.seed));
  const double r = ratio(fb, ev.welfare.value);
  const double bound = noisy_bound(o.eta);
  sink.json_result({{"eta", o.eta},
                    {"v_lower", noise.v_lower},
                    {"welfare", estimate_json(ev.welfare, o.samples, o.seed)},
                    {"utilities", utilities},
                    {"clear_welfare", clear},
                    {"degraded_clear_welfare", (1.0 - o.eta) / (1.0 + o.eta) * clear},
                    {"first_best", fb},
                    {"ratio", r},
                    {"bound", bound}},
                   config);
  sink.csv_rows({"command", "num_agents", "k", "eta", "welfare", "std_error", "clear_welfare",
                 "ratio", "bound"},
                {{"noisy", std::to_string(inst.num_agents()), std::to_string(inst.k()), num(o.eta),
                  num(ev.welfare.value), num(ev.welfare.std_error), num(clear), num(r),
                  num(bound)}});
  return kExitOk;
}

int cmd_sweep(const Options& o, const Sink& sink, const json& config) {
  const auto ns = parse_list(o.ns, "N");
  const auto zetas = parse_list(o.zetas, "zeta");
  std::vector<BernoulliEqSpec> points;
  for (double nd : ns) {
    if (nd < 1 || nd != std::floor(nd)) throw InvalidInput("N values must be positive integers");
    for (double z : zetas) points.emplace_back(static_cast<int>(nd), z);
  }
  json rows = json::array();
  std::vector<std::vector<std::string>> csv;
  for (const BernoulliEqSpec& spec : points) {
    const LowerBound lb = poa_lower_bound(spec);
    json row = {{"num_agents", spec.n},
                {"zeta", spec.zeta},
                {"p_hat", spec.p_hat()},
                {"bound", lb.bound},
                {"exact_ratio", lb.exact_ratio}};
    std::string measured;
    if (o.grid > 0) {
      const StrategyProfile prof = bernoulli_equilibrium_profile(spec, uniform_cells(spec, o.grid));
      const double r = ratio(first_best(prof.instance(), EvalMode{}).value,
                             expected_welfare(prof, EvalMode{}).value);
      row["measured_ratio"] = r;
      measured = num(r);
    }
    csv.push_back({std::to_string(spec.n), num(spec.zeta), num(spec.p_hat()), num(lb.bound),
                   num(lb.exact_ratio), measured});
    rows.push_back(std::move(row));
  }
  sink.json_result({{"rows", rows}}, config);
  sink.csv_rows({"num_agents", "zeta", "p_hat", "bound", "exact_ratio", "measured_ratio"}, csv);
  return kExitOk;
}

// ---- configuration files ---------------------------------------------------

std::string config_value(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  if (v.is_number()) return format_double(v.get<double>());
  throw InvalidInput("config value for \"" + key + "\" must be a string or number");
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Appends "--key value" for every config entry not given on the command
// line. A result file is accepted too; its embedded config is used.
void inject_config(std::vector<std::string>& args, const std::vector<Command>& commands) {
  std::string path;
  for (std::size_t a = 0; a < args.size(); ++a) {
    if (args[a] == "--config" && a + 1 < args.size()) path = args[a + 1];
    if (args[a].rfind("--config=", 0) == 0) path = args[a].substr(9);
  }
  if (path.empty()) return;
  json cfg = io::read_json_file(path);
  if (cfg.contains("config") && cfg.at("config").is_object()) cfg = cfg.at("config");
  if (!cfg.is_object()) throw InvalidInput("config must be a JSON object");

  const std::string name = !args.empty() ? args[0] : "";
  const std::string variant = args.size() > 1 ? args[1] : "";
  const Command* cmd = nullptr;
  for (const Command& c : commands) {
    if (c.name == name && (c.variant.empty() || c.variant == variant)) cmd = &c;
  }
  if (cmd == nullptr) return;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command" || key == "variant") continue;
    if (!cmd->records(key)) throw InvalidInput("config key \"" + key + "\" is not an option of " + name);
    if (has_flag(args, "--" + key)) continue;
    args.push_back("--" + key);
    args.push_back(config_value(value, key));
  }
}

// ---- wiring ----------------------------------------------------------------

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Price-of-anarchy experiments for competitive information disclosure", "bpoa"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  const Sink sink{o, out};
  std::vector<Command> commands;
  commands.reserve(16);

  const auto make = [&](CLI::App* parent, const std::string& name, const std::string& variant,
                        const std::string& desc) -> Command& {
    Command c;
    c.name = name;
    c.variant = variant;
    c.app = parent->add_subcommand(variant.empty() ? name : variant, desc);
    commands.push_back(std::move(c));
    return commands.back();
  };
  const auto instance_opts = [&](Command& c, bool with_profile) {
    c.app->add_option("--instance", o.instance, "instance JSON")->required();
    c.keys.emplace_back("instance", [&o] { return json(o.instance); });
    if (with_profile) add_key(c, "profile", o.profile, "profile JSON, full-revelation or pooling");
  };
  const auto eval_opts = [&](Command& c) {
    add_key(c, "mode", o.mode, "exact, mc or auto");
    c.app->get_option("--mode")->check(CLI::IsMember({"exact", "mc", "auto"}));
    add_key(c, "samples", o.samples, "Monte Carlo samples");
    add_key(c, "seed", o.seed, "random seed");
    add_key(c, "cap", o.cap, "enumeration cap");
  };
  const auto br_opts = [&](Command& c) {
    add_key(c, "epsilon", o.epsilon, "grain size");
    add_key(c, "regret-tol", o.regret_tol, "regret tolerance");
    add_key(c, "br-method", o.br_method, "exhaustive, local or auto");
    c.app->get_option("--br-method")->check(CLI::IsMember({"exhaustive", "local", "auto"}));
    add_key(c, "restarts", o.restarts, "local search restarts");
    add_key(c, "seed", o.seed, "random seed");
  };

  {
    Command& c = make(&app, "gen", "", "generate an instance");
    add_key(c, "preset", o.preset, "random, bernoulli or negative-shift");
    c.app->get_option("--preset")->check(CLI::IsMember({"random", "bernoulli", "negative-shift"}));
    add_key(c, "n", o.n, "number of agents");
    add_key(c, "k", o.k, "number selected");
    add_key(c, "zeta", o.zeta, "Bernoulli success probability");
    add_key(c, "support", o.support, "maximum support size");
    add_key(c, "utility", o.utility, "constant, linear or random-monotone");
    c.app->get_option("--utility")->check(CLI::IsMember({"constant", "linear", "random-monotone"}));
    add_key(c, "epsilon", o.epsilon, "put prior masses on this grain grid");
    add_key(c, "v-lower", o.v_lower, "smallest value a random prior may use");
    add_key(c, "seed", o.seed, "random seed");
    add_key(c, "shift-eps", o.shift_eps, "equilibrium welfare after the negative shift");
    add_key(c, "grid", o.grid, "equilibrium cells for the negative shift");
    add_plumbing(c, o, false);
    c.run = [&](const json& cfg) { return cmd_gen(o, sink, err, cfg); };
  }
  {
    Command& c = make(&app, "first-best", "", "full-information welfare");
    instance_opts(c, false);
    eval_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_first_best(o, sink, cfg); };
  }
  {
    Command& c = make(&app, "welfare", "", "welfare and utilities of a profile");
    instance_opts(c, true);
    eval_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_welfare(o, sink, cfg); };
  }
  CLI::App* eq = app.add_subcommand("equilibrium", "compute equilibria");
  eq->require_subcommand(1);
  {
    Command& c = make(eq, "equilibrium", "bernoulli", "closed-form symmetric Bernoulli equilibrium");
    add_key(c, "n", o.n, "number of agents");
    add_key(c, "zeta", o.zeta, "success probability");
    add_key(c, "grid", o.grid, "equal cells over [0, N zeta]");
    add_key(c, "epsilon", o.epsilon, "grain-aligned cells instead of --grid");
    eval_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_equilibrium_bernoulli(o, sink, cfg); };
  }
  {
    Command& c = make(eq, "equilibrium", "brd", "best-response dynamics on the grain game");
    instance_opts(c, true);
    br_opts(c);
    add_key(c, "max-rounds", o.max_rounds, "round limit");
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_equilibrium_brd(o, sink, cfg); };
  }
  {
    Command& c = make(&app, "verify-ne", "", "regret of every agent");
    instance_opts(c, true);
    br_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_verify_ne(o, sink, cfg); };
  }
  CLI::App* cert = app.add_subcommand("certify", "price-of-anarchy certificates");
  cert->require_subcommand(1);
  {
    Command& c = make(cert, "certify", "general", "case analysis certificate");
    instance_opts(c, true);
    add_key(c, "params", o.params, "golden, appendix-a or a JSON file");
    add_key(c, "gain-tol", o.gain_tol, "smallest deviation gain reported");
    eval_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_certify_general(o, sink, cfg); };
  }
  {
    Command& c = make(cert, "certify", "discretized", "certificate with truncated quantiles");
    instance_opts(c, true);
    add_key(c, "params", o.params, "golden, appendix-a or a JSON file");
    add_key(c, "gain-tol", o.gain_tol, "smallest deviation gain reported");
    add_key(c, "epsilon", o.epsilon, "grain size");
    eval_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_certify_discretized(o, sink, cfg); };
  }
  {
    Command& c = make(cert, "certify", "warmup", "single-winner identical-prior certificate");
    instance_opts(c, true);
    add_key(c, "gain-tol", o.gain_tol, "smallest deviation gain reported");
    eval_opts(c);
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_certify_warmup(o, sink, cfg); };
  }
  {
    Command& c = make(&app, "noisy", "", "welfare under multiplicative observation noise");
    instance_opts(c, true);
    add_key(c, "eta", o.eta, "noise half-width");
    add_key(c, "v-lower", o.v_lower, "support lower bound, 0 = smallest atom");
    add_key(c, "samples", o.samples, "Monte Carlo samples");
    add_key(c, "seed", o.seed, "random seed");
    add_plumbing(c, o, true);
    c.run = [&](const json& cfg) { return cmd_noisy(o, sink, cfg); };
  }
  {
    Command& c = make(&app, "sweep", "", "bound surface over (N, zeta)");
    add_key(c, "ns", o.ns, "comma-separated N values");
    add_key(c, "zetas", o.zetas, "comma-separated zeta values");
    add_key(c, "grid", o.grid, "cells for the measured ratio, 0 to skip");
    add_plumbing(c, o, false);
    c.run = [&](const json& cfg) { return cmd_sweep(o, sink, cfg); };
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    inject_config(args, commands);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  for (const Command& c : commands) {
    if (!c.app->parsed()) continue;
    json cfg = {{"command", c.name}};
    if (!c.variant.empty()) cfg["variant"] = c.variant;
    for (const auto& [key, get] : c.keys) cfg[key] = get();
    return c.run(cfg);
  }
  throw InternalInvariant("no command parsed");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(argc, argv, out, err);
  } catch (const CapExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitCapExceeded;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace bpoa
