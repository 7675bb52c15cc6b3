#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace romgait {

// Verbosity from the ROMGAIT_LOG environment variable: quiet | info | debug.
enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* env = std::getenv("ROMGAIT_LOG");
    if (!env) return LogLevel::info;
    const std::string s(env);
    if (s == "quiet" || s == "0") return LogLevel::quiet;
    if (s == "debug" || s == "2") return LogLevel::debug;
    return LogLevel::info;
  }();
  return lvl;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::cerr << "[romgait] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::cerr << "[romgait:debug] " << msg << "\n";
}

}  // namespace romgait
