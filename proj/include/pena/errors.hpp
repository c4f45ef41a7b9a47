#pragma once

#include <stdexcept>
#include <string>

namespace pena {

// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive quadrature ran out of subdivisions before reaching the tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : Error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
        achieved_tolerance(achieved) {}
  double achieved_tolerance;
};

// Observed intensity above the declared majorant during thinning.
class MajorantViolationError : public Error {
 public:
  MajorantViolationError(double t, double intensity, double majorant)
      : Error("majorant violated at t=" + std::to_string(t) + ": intensity " +
              std::to_string(intensity) + " > majorant " + std::to_string(majorant)),
        time(t) {}
  double time;
};

// A martingale jump fell below the asserted floor (e.g. the dM >= -1 hypothesis).
class JumpFloorViolationError : public Error {
 public:
  JumpFloorViolationError(double t, double jump, double floor)
      : Error("jump floor violated at t=" + std::to_string(t) + ": dM=" +
              std::to_string(jump) + " < floor " + std::to_string(floor)),
        time(t),
        jump(jump) {}
  double time;
  double jump;
};

// Doleans-Dade exponential hit zero or went negative (some dS <= -1).
class DoleansError : public Error {
 public:
  DoleansError(double t, double jump)
      : Error("exponential hits zero or negative at t=" + std::to_string(t) +
              ": dS=" + std::to_string(jump) + " <= -1"),
        time(t),
        jump(jump) {}
  double time;
  double jump;
};

// A theorem hypothesis failed its pre-check (reported with its own exit code).
class HypothesisError : public Error {
 public:
  HypothesisError(const std::string& which, const std::string& detail)
      : Error("hypothesis check failed [" + which + "]: " + detail), which(which) {}
  std::string which;
};

// Exhaustive enumeration would exceed the configured path budget.
class PathBudgetError : public Error {
 public:
  PathBudgetError(std::uint64_t required, std::uint64_t budget)
      : Error("enumeration budget exceeded: " + std::to_string(required) + " paths > budget " +
              std::to_string(budget)) {}
};

// Configuration file / CLI usage problems.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace pena
