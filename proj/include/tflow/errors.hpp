#pragma once

#include <stdexcept>
#include <string>

namespace tflow {

/// Malformed or inconsistent input. `subject` names the offending entity
/// (arc, node, movement or phase id) when there is one.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, std::string subject = {})
      : std::runtime_error(what), subject_(std::move(subject)) {}
  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

/// A simulation invariant broke (negative density, mass leak). Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace tflow
