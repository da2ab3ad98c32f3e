#pragma once

#include <stdexcept>
#include <string>

namespace mavf {

/// Configuration problem; `path()` names the offending field (e.g. "nodes[3].noise_std").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Singular or non-PD matrices where the algorithm requires invertibility.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mavf
