#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tiered {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// bad input values: non-hermitian matrices, negative couplings, ...
class ValidationError : public Error {
 public:
  using Error::Error;
};

// settings that are individually fine but do not fit together
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// a routine asked to handle a model outside its domain
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class DegenerateKernelError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// requested order beyond what is configured
class CapabilityError : public Error {
 public:
  using Error::Error;
};

using WarningHandler = std::function<void(std::string_view)>;

// returns the previous handler; an empty handler restores the stderr default
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace tiered
