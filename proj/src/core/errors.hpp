#pragma once

#include <stdexcept>
#include <string>

namespace mxai {

// Error taxonomy mirrors the process exit codes: 1 usage, 2 data, 3 numeric.

class usage_error : public std::runtime_error {
 public:
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mxai
