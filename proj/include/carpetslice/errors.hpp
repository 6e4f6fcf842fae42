#pragma once

#include <stdexcept>
#include <string>

namespace carpetslice {

/// A certified comparison stayed undecided at the configured precision cap.
class PrecisionExhausted : public std::runtime_error {
 public:
  explicit PrecisionExhausted(const std::string& what) : std::runtime_error(what) {}
};

/// A least-squares fit had nothing usable to fit.
class UndefinedEstimate : public std::runtime_error {
 public:
  explicit UndefinedEstimate(const std::string& what) : std::runtime_error(what) {}
};

/// An experiment precondition that is checked on the data rather than the arguments.
class PreconditionViolated : public std::runtime_error {
 public:
  explicit PreconditionViolated(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace carpetslice
