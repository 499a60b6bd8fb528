#pragma once

// Library logger on stderr. Verbosity comes from ORCHARD_LOG
// (trace, debug, info, warn, error, off); default warn.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace orchard {

inline spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::get("orchard");
    if (!l) l = spdlog::stderr_logger_mt("orchard");
    const char* env = std::getenv("ORCHARD_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    l->set_pattern("[%l] %v");
    return l;
  }();
  return *instance;
}

}  // namespace orchard
