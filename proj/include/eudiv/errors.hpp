#pragma once

#include <stdexcept>
#include <string>

namespace eudiv {

// Invalid experiment configuration or alphabet-mode mismatch.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A rollout was requested for an environment that does not reproduce the history.
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The history refutes or exhausts every enumerated program.
struct EmptySupport : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoHaltingWitness : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A capped search ran out of cells; not evidence of anything.
struct Exhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eudiv
