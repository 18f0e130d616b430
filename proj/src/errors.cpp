#include "tiered/errors.hpp"

#include <iostream>
#include <mutex>

namespace tiered {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& current_handler() {
  static WarningHandler h;
  return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(handler_mutex());
  WarningHandler old = std::move(current_handler());
  current_handler() = std::move(handler);
  return old;
}

void warn(std::string_view message) {
  WarningHandler h;
  {
    std::lock_guard<std::mutex> lock(handler_mutex());
    h = current_handler();
  }
  if (h) {
    h(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace tiered
