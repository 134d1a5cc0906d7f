#pragma once

#include <stdexcept>
#include <string>

namespace fauno {

// Error taxonomy. Every throwing path in the library uses one of these so
// callers can distinguish bad inputs from broken invariants.

struct InvalidArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fauno
