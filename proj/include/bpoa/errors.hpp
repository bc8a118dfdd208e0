#pragma once

#include <stdexcept>
#include <string>

namespace bpoa {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed instance, scheme, profile or parameter set.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ZeroMass : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class AllocationExceedsPrior : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class BadK : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class SpecViolation : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Operation outside the regime it is defined for (e.g. warm-up certificate on
// heterogeneous priors, certification of an instance with negative values).
class WrongRegime : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NotSmallContributor : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// An exact enumeration was requested whose size exceeds the configured cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

// A mathematical invariant that must hold for valid inputs failed; indicates
// a numerical problem upstream.
class InternalInvariant : public Error {
 public:
  using Error::Error;
};

}  // namespace bpoa
