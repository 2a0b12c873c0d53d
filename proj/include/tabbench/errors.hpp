#pragma once

#include <stdexcept>
#include <string>

namespace tabbench {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FetchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateTargetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tabbench
