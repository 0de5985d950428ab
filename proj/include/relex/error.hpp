#ifndef RELEX_ERROR_HPP_
#define RELEX_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace relex {

/// Why an extraction or generation run gave up. Maps onto CLI exit codes.
enum class FailureKind {
  kGeneralPosition,  // the instance violates the general position conditions
  kAssumption,       // a structural network assumption does not hold
  kBudget,           // a query/piece/neuron budget was exhausted
};

inline const char *to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kGeneralPosition:
      return "general position";
    case FailureKind::kAssumption:
      return "assumption";
    case FailureKind::kBudget:
      return "budget";
  }
  return "unknown";
}

class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(FailureKind kind, std::string phase, const std::string &what)
      : std::runtime_error(phase.empty() ? what : phase + ": " + what),
        kind_(kind),
        phase_(std::move(phase)) {}

  FailureKind kind() const { return kind_; }
  const std::string &phase() const { return phase_; }

 private:
  FailureKind kind_;
  std::string phase_;
};

/// Raised when a generator cannot produce an instance satisfying its
/// conditions within the rejection budget. `condition()` names the last
/// condition that was violated.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string &condition)
      : std::runtime_error("rejection budget exhausted; violated: " +
                           condition),
        condition_(condition) {}

  const std::string &condition() const { return condition_; }

 private:
  std::string condition_;
};

}  // namespace relex

#endif  // RELEX_ERROR_HPP_
