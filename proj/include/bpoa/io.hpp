#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bpoa/certifier.hpp"
#include "bpoa/equilibria.hpp"
#include "bpoa/profile.hpp"

namespace bpoa::io {

using nlohmann::json;

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);
// Accepts a decimal string or a JSON number.
double parse_double(const json& j);

json to_json(const Instance& instance);
Instance instance_from_json(const json& j);

json to_json(const StrategyProfile& profile);
StrategyProfile profile_from_json(const json& j, const Instance& instance);

json to_json(const Prior& prior, const SignalingScheme& scheme);
SignalingScheme scheme_from_json(const json& j, const Prior& prior);

json to_json(const RegretReport& report);
json to_json(const Estimate& estimate);

json to_json(const CertParams& params);
// {"alpha", "beta", "tau", "phi"}; validated.
CertParams params_from_json(const json& j);

// Schemes inside the certificates are written against the profile's priors.
json to_json(const DeviationWitness& witness, const StrategyProfile& profile);
json to_json(const PoACertificate& cert, const StrategyProfile& profile);
json to_json(const WarmupCertificate& cert, const StrategyProfile& profile);

json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& j);
std::string dump(const json& j);

}  // namespace bpoa::io
