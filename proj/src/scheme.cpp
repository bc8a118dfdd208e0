#include "bpoa/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bpoa/errors.hpp"

namespace bpoa {

double posterior_mean(const Prior& prior, std::span<const double> composition) {
  if (composition.size() != prior.size()) {
    throw InvalidInput("composition does not match prior support");
  }
  double mass = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < composition.size(); ++j) {
    const double a = composition[j];
    if (a < 0.0) throw InvalidInput("negative allocation");
    if (a > prior[j].mass + kTol) {
      throw AllocationExceedsPrior("allocation " + std::to_string(a) + " exceeds atom mass " +
                                   std::to_string(prior[j].mass));
    }
    mass += a;
    weighted += a * prior[j].value;
  }
  if (mass <= kMinSignalMass) throw ZeroMass("signal has no mass");
  return weighted / mass;
}

Signal::Signal(const Prior& prior, Composition composition)
    : composition_(std::move(composition)) {
  mean_ = bpoa::posterior_mean(prior, composition_);
  total_mass_ = std::accumulate(composition_.begin(), composition_.end(), 0.0);
}

double Signal::conditional_utility(const Prior& prior, const UtilityFn& u) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < composition_.size(); ++j) {
    if (composition_[j] > 0.0) acc += composition_[j] * u(prior[j].value);
  }
  return acc / total_mass_;
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::WrongArity: return "WrongArity";
    case ViolationKind::NegativeAllocation: return "NegativeAllocation";
    case ViolationKind::AllocationExceedsPrior: return "AllocationExceedsPrior";
    case ViolationKind::ZeroMassSignal: return "ZeroMassSignal";
    case ViolationKind::PlausibilityMismatch: return "PlausibilityMismatch";
  }
  return "Unknown";
}

ValidationReport validate_scheme(const Prior& prior,
                                 std::span<const Composition> compositions) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::size_t s, std::size_t j, std::string msg) {
    report.violations.push_back({kind, s, j, std::move(msg)});
  };
  std::vector<double> per_atom(prior.size(), 0.0);
  for (std::size_t s = 0; s < compositions.size(); ++s) {
    const Composition& c = compositions[s];
    if (c.size() != prior.size()) {
      add(ViolationKind::WrongArity, s, 0,
          "signal " + std::to_string(s) + " has " + std::to_string(c.size()) +
              " entries for " + std::to_string(prior.size()) + " atoms");
      continue;
    }
    double mass = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (!(c[j] >= 0.0)) {
        add(ViolationKind::NegativeAllocation, s, j, "negative allocation");
        continue;
      }
      if (c[j] > prior[j].mass + kTol) {
        add(ViolationKind::AllocationExceedsPrior, s, j,
            "allocation " + std::to_string(c[j]) + " exceeds atom mass " +
                std::to_string(prior[j].mass));
      }
      mass += c[j];
      per_atom[j] += c[j];
    }
    if (mass <= kMinSignalMass) {
      add(ViolationKind::ZeroMassSignal, s, 0, "signal has zero total mass");
    }
  }
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (std::abs(per_atom[j] - prior[j].mass) > kTol) {
      add(ViolationKind::PlausibilityMismatch, 0, j,
          "atom " + std::to_string(j) + " allocated " + std::to_string(per_atom[j]) +
              " of " + std::to_string(prior[j].mass));
    }
  }
  return report;
}

ValidationReport validate_scheme(const Prior& prior, const SignalingScheme& scheme) {
  const auto compositions = scheme.compositions();
  return validate_scheme(prior, compositions);
}

SignalingScheme::SignalingScheme(const Prior& prior, std::vector<Composition> compositions) {
  std::erase_if(compositions, [&](const Composition& c) {
    return c.size() == prior.size() &&
           std::accumulate(c.begin(), c.end(), 0.0) < kMinSignalMass;
  });
  const ValidationReport report = validate_scheme(prior, compositions);
  if (!report.valid()) {
    const Violation& first = report.violations.front();
    if (first.kind == ViolationKind::AllocationExceedsPrior) {
      throw AllocationExceedsPrior(first.message);
    }
    throw InvalidInput("invalid signaling scheme: " + first.message);
  }

  std::vector<Signal> raw;
  raw.reserve(compositions.size());
  for (Composition& c : compositions) raw.emplace_back(prior, std::move(c));
  std::stable_sort(raw.begin(), raw.end(), [](const Signal& a, const Signal& b) {
    return a.posterior_mean() < b.posterior_mean();
  });

  // Merge runs of signals whose means agree with the run's first mean.
  std::size_t s = 0;
  while (s < raw.size()) {
    std::size_t e = s + 1;
    while (e < raw.size() &&
           raw[e].posterior_mean() - raw[s].posterior_mean() <= kTol) {
      ++e;
    }
    if (e == s + 1) {
      signals_.push_back(std::move(raw[s]));
    } else {
      Composition merged(prior.size(), 0.0);
      for (std::size_t t = s; t < e; ++t) {
        for (std::size_t j = 0; j < prior.size(); ++j) merged[j] += raw[t].composition()[j];
      }
      signals_.emplace_back(prior, std::move(merged));
    }
    s = e;
  }
}

SignalingScheme SignalingScheme::full_revelation(const Prior& prior) {
  std::vector<Composition> comps;
  for (std::size_t j = 0; j < prior.size(); ++j) {
    Composition c(prior.size(), 0.0);
    c[j] = prior[j].mass;
    comps.push_back(std::move(c));
  }
  return SignalingScheme(prior, std::move(comps));
}

SignalingScheme SignalingScheme::pooling(const Prior& prior) {
  Composition c(prior.size());
  for (std::size_t j = 0; j < prior.size(); ++j) c[j] = prior[j].mass;
  return SignalingScheme(prior, {std::move(c)});
}

std::vector<Composition> SignalingScheme::compositions() const {
  std::vector<Composition> out;
  out.reserve(signals_.size());
  for (const Signal& s : signals_) {
    out.emplace_back(s.composition().begin(), s.composition().end());
  }
  return out;
}

}  // namespace bpoa
