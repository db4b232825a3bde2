#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace ipca {

enum class LogLevel { Off = 0, Error = 1, Info = 2, Debug = 3 };

// Level comes from the IPCA_LOG environment variable (off|error|info|debug),
// read once per process.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("IPCA_LOG");
    if (env == nullptr) return LogLevel::Off;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Off;
  }();
  return level;
}

inline void log_msg(LogLevel at, const std::string& msg) {
  if (static_cast<int>(at) <= static_cast<int>(log_level())) {
    std::fprintf(stderr, "[ipca] %s\n", msg.c_str());
  }
}

inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }

}  // namespace ipca
