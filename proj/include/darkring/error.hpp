#ifndef DARKRING_ERROR_HPP
#define DARKRING_ERROR_HPP

#include <stdexcept>
#include <string>

namespace darkring {

/// Broad failure class. The CLI maps each class onto a process exit code.
enum class ErrorClass {
  input,      ///< bad configuration, malformed files, violated preconditions
  physics,    ///< trap topology or physical-domain problems
  numerical,  ///< solver or fit non-convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  [[nodiscard]] ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

/// A grid cannot represent the requested field without truncation or aliasing.
class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what) : Error(ErrorClass::input, "sampling: " + what) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ErrorClass::input, "parameter: " + what) {}
};

/// Two grids or arrays that must agree do not.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorClass::input, "shape: " + what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what) : Error(ErrorClass::physics, "singularity: " + what) {}
};

/// The intensity landscape lacks a bounded dark minimum.
class TopologyError : public Error {
 public:
  explicit TopologyError(const std::string& what) : Error(ErrorClass::physics, "topology: " + what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorClass::physics, "out of domain: " + what) {}
};

class OptimizationError : public Error {
 public:
  explicit OptimizationError(const std::string& what) : Error(ErrorClass::numerical, "optimization: " + what) {}
};

class StabilityError : public Error {
 public:
  explicit StabilityError(const std::string& what) : Error(ErrorClass::numerical, "stability: " + what) {}
};

class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& what) : Error(ErrorClass::input, "degenerate fit: " + what) {}
};

class NoOscillationError : public Error {
 public:
  explicit NoOscillationError(const std::string& what) : Error(ErrorClass::numerical, "no oscillation: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::input, what) {}
};

inline int exit_code(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::input: return 2;
    case ErrorClass::physics: return 3;
    case ErrorClass::numerical: return 4;
  }
  return 1;
}

}  // namespace darkring

#endif  // DARKRING_ERROR_HPP
