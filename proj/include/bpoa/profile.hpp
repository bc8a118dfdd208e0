#pragma once

#include <vector>

#include "bpoa/instance.hpp"
#include "bpoa/scheme.hpp"

namespace bpoa {

// One signaling scheme per agent, each Bayes-plausible for that agent's
// prior. Holds its own copy of the instance.
class StrategyProfile {
 public:
  StrategyProfile(Instance instance, std::vector<SignalingScheme> schemes);

  static StrategyProfile full_revelation(const Instance& instance);
  static StrategyProfile pooling(const Instance& instance);

  const Instance& instance() const { return instance_; }
  int num_agents() const { return instance_.num_agents(); }
  int k() const { return instance_.k(); }
  const SignalingScheme& scheme(int i) const {
    return schemes_[static_cast<std::size_t>(i)];
  }
  std::span<const SignalingScheme> schemes() const { return schemes_; }

  // Copy with agent i's scheme replaced.
  StrategyProfile with_scheme(int i, SignalingScheme scheme) const;

  // Number of joint signal outcomes, as a double to survive overflow.
  double outcome_count() const;

 private:
  Instance instance_;
  std::vector<SignalingScheme> schemes_;
};

}  // namespace bpoa
