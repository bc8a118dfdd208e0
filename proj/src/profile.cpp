#include "bpoa/profile.hpp"

#include "bpoa/errors.hpp"

namespace bpoa {

StrategyProfile::StrategyProfile(Instance instance, std::vector<SignalingScheme> schemes)
    : instance_(std::move(instance)), schemes_(std::move(schemes)) {
  if (schemes_.size() != static_cast<std::size_t>(instance_.num_agents())) {
    throw InvalidInput("profile has " + std::to_string(schemes_.size()) + " schemes for " +
                       std::to_string(instance_.num_agents()) + " agents");
  }
  for (int i = 0; i < instance_.num_agents(); ++i) {
    const ValidationReport report = validate_scheme(instance_.prior(i), scheme(i));
    if (!report.valid()) {
      throw InvalidInput("scheme of agent " + std::to_string(i) +
                         " is invalid: " + report.violations.front().message);
    }
  }
}

StrategyProfile StrategyProfile::full_revelation(const Instance& instance) {
  std::vector<SignalingScheme> schemes;
  for (const Prior& p : instance.priors()) schemes.push_back(SignalingScheme::full_revelation(p));
  return StrategyProfile(instance, std::move(schemes));
}

StrategyProfile StrategyProfile::pooling(const Instance& instance) {
  std::vector<SignalingScheme> schemes;
  for (const Prior& p : instance.priors()) schemes.push_back(SignalingScheme::pooling(p));
  return StrategyProfile(instance, std::move(schemes));
}

StrategyProfile StrategyProfile::with_scheme(int i, SignalingScheme scheme) const {
  std::vector<SignalingScheme> schemes = schemes_;
  schemes.at(static_cast<std::size_t>(i)) = std::move(scheme);
  return StrategyProfile(instance_, std::move(schemes));
}

double StrategyProfile::outcome_count() const {
  double count = 1.0;
  for (const SignalingScheme& s : schemes_) count *= static_cast<double>(s.size());
  return count;
}

}  // namespace bpoa
