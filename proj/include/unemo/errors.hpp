#pragma once

#include <stdexcept>
#include <string>

namespace unemo {

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

struct GenerationError : std::runtime_error {
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace unemo
